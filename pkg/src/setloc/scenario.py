"""Synthetic-world runner: configs, truth simulation, metrics and sweeps.

The world integrates the vehicle pose with bounded uniform noise and keeps
the markers rigidly attached to the body, generates per-sensor measurement
batches (shuffled, so correspondence is genuinely latent), feeds the chosen
estimators and scores them per step.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import io
import math
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Sequence

import numpy as np

from . import estimator as est
from . import fastslam as fs
from . import geom2d
from .correspondence import CapExceeded, InconsistentBatch
from .geom2d import AngleInterval, ConvexPolygon, wrap_angle
from .kinematics import Control, MarkerOffset, RobotModel, RobotPose, bicycle_step, place_marker
from .sensing import ANGLE_RANGE, Measurement, SensorModel, SensorPose, measure

MODE_BICYCLE = "bicycle"
MODE_OMNI = "omnidirectional"

SWEEP_PARAMETERS = ("eps_wa", "eps_wr", "V_Pi0", "eps_v", "eps_delta")

CSV_COLUMNS = (
    "k",
    "set_m1", "set_m2", "set_contained_body", "set_contained_heading",
    "set_contained_markers", "set_contained_sensors",
    "set_body_area", "set_heading_width", "set_wall_ms",
    "fs_m1", "fs_m2", "fs_contained_body", "fs_contained_heading",
    "fs_body_area", "fs_heading_width", "fs_wall_ms",
)


class ConfigError(Exception):
    """Configuration file problem; message names the offending section/key."""


class ScenarioFault(Exception):
    """Estimator fault raised during a run, annotated with the step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class SensorSite:
    pose: SensorPose
    model: SensorModel


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    seed: int
    estimators: str                      # "set", "fastslam" or "both"
    assignment_cap: int
    robot: RobotModel
    start: RobotPose
    offsets: tuple[MarkerOffset, ...]
    sensors: tuple[SensorSite, ...]
    trajectory: tuple[tuple[float, float], ...]   # (v, delta) or (speed, heading)
    initial_marker_area: float           # m^2, square box per marker
    initial_sensor_area: float           # m^2
    initial_sensor_theta: float          # rad, full interval width
    marker_center_offset: tuple[float, float] = (0.0, 0.0)
    fastslam_particles: int = fs.DEFAULT_PARTICLES
    omni_v_max: float = 0.0
    omni_radius: float = 0.0

    @property
    def n_markers(self) -> int:
        return len(self.offsets)

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    def sensor_models(self) -> tuple[SensorModel, ...]:
        return tuple(s.model for s in self.sensors)

    def wants(self, which: str) -> bool:
        return self.estimators in (which, "both")


def corner_marker_offsets(robot: RobotModel) -> tuple[MarkerOffset, ...]:
    """Markers at the four body corners, symmetric overhangs over the axle."""
    rear = -(robot.body_length - robot.wheelbase) / 2.0
    front = rear + robot.body_length
    half_w = robot.body_width / 2.0
    corners = [(rear, -half_w), (front, -half_w), (front, half_w), (rear, half_w)]
    return tuple(MarkerOffset(math.hypot(x, y), math.atan2(y, x))
                 for x, y in corners)


def body_polygon(pose: RobotPose, robot: RobotModel) -> ConvexPolygon:
    """True body rectangle in world coordinates."""
    rear = -(robot.body_length - robot.wheelbase) / 2.0
    front = rear + robot.body_length
    half_w = robot.body_width / 2.0
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    pts = [(pose.x + c * bx - s * by, pose.y + s * bx + c * by)
           for bx, by in ((rear, -half_w), (front, -half_w),
                          (front, half_w), (rear, half_w))]
    return ConvexPolygon.from_points(pts)


def disk_outer_polygon(center: tuple[float, float], radius: float,
                       k: int = 32) -> ConvexPolygon:
    ball = geom2d.ball_outer_polygon(radius, "l2", k)
    return geom2d.translate(ball, center[0], center[1])


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    m1: float
    m2: float
    contained_body: bool
    contained_heading: bool


def compute_metrics(body_est: ConvexPolygon, heading_est: AngleInterval,
                    truth_region: ConvexPolygon, truth_theta: float) -> Metrics:
    """Body-overlap ratio and heading-interval deviation against the truth."""
    est_area = geom2d.area(body_est)
    overlap = geom2d.intersect(body_est, truth_region)
    if overlap is None or est_area <= 0.0:
        m1 = 0.0
    else:
        m1 = geom2d.area(overlap) / est_area
    hi_dev = abs(wrap_angle(heading_est.hi - truth_theta))
    lo_dev = abs(wrap_angle(heading_est.lo - truth_theta))
    m2 = hi_dev + lo_dev if not heading_est.is_full else 2.0 * math.pi
    contained_body = geom2d.contains_polygon(body_est, truth_region)
    contained_heading = heading_est.contains(truth_theta)
    return Metrics(m1, m2, contained_body, contained_heading)


@dataclass
class StepRecord:
    k: int
    set_metrics: Metrics | None = None
    set_contained_markers: bool | None = None
    set_contained_sensors: bool | None = None
    set_body_area: float | None = None
    set_heading_width: float | None = None
    set_wall_ms: float | None = None
    fs_metrics: Metrics | None = None
    fs_body_area: float | None = None
    fs_heading_width: float | None = None
    fs_wall_ms: float | None = None


@dataclass
class RunRecord:
    mode: str
    seed: int
    rows: list[StepRecord] = field(default_factory=list)
    geometry: list[str] = field(default_factory=list)
    fs_degenerate_resets: int = 0
    set_fallbacks: int = 0
    # populated when track_sensor_sets is requested: per step, the area of
    # every sensor position set, the width of every orientation interval and
    # the number of measurements each sensor delivered
    sensor_track: list[tuple[tuple[float, ...], tuple[float, ...],
                             tuple[int, ...]]] = field(default_factory=list)
    # recorded measurement stream (one serialized record per measurement),
    # replayable through replay_run
    measurements: list[str] = field(default_factory=list)

    def set_m1(self) -> list[float]:
        return [r.set_metrics.m1 for r in self.rows if r.set_metrics]

    def set_m2(self) -> list[float]:
        return [r.set_metrics.m2 for r in self.rows if r.set_metrics]

    def fs_m1(self) -> list[float]:
        return [r.fs_metrics.m1 for r in self.rows if r.fs_metrics]

    def fs_m2(self) -> list[float]:
        return [r.fs_metrics.m2 for r in self.rows if r.fs_metrics]

    def set_containment_ok(self) -> bool:
        return all(r.set_metrics.contained_body and r.set_metrics.contained_heading
                   and r.set_contained_markers and r.set_contained_sensors
                   for r in self.rows if r.set_metrics)

    def containment_rate(self) -> float:
        rows = [r for r in self.rows if r.set_metrics]
        if not rows:
            return math.nan
        good = sum(
            1 for r in rows
            if r.set_metrics.contained_body and r.set_metrics.contained_heading
            and r.set_contained_markers and r.set_contained_sensors)
        return good / len(rows)

    def to_csv(self, include_timings: bool = False) -> str:
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            cells = [str(r.k)]
            if r.set_metrics:
                cells += [repr(r.set_metrics.m1), repr(r.set_metrics.m2),
                          str(int(r.set_metrics.contained_body)),
                          str(int(r.set_metrics.contained_heading)),
                          str(int(r.set_contained_markers)),
                          str(int(r.set_contained_sensors)),
                          repr(r.set_body_area), repr(r.set_heading_width),
                          repr(r.set_wall_ms) if include_timings else "0"]
            else:
                cells += [""] * 9
            if r.fs_metrics:
                cells += [repr(r.fs_metrics.m1), repr(r.fs_metrics.m2),
                          str(int(r.fs_metrics.contained_body)),
                          str(int(r.fs_metrics.contained_heading)),
                          repr(r.fs_body_area), repr(r.fs_heading_width),
                          repr(r.fs_wall_ms) if include_timings else "0"]
            else:
                cells += [""] * 7
            out.write(",".join(cells) + "\n")
        return out.getvalue()


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def measurement_to_line(step: int, m: Measurement) -> str:
    rng = "null" if m.range is None else _fmt(m.range)
    return (f'{{"step": {step}, "sensor": {m.sensor_id}, "slot": {m.slot}, '
            f'"bearing": {_fmt(m.bearing)}, "range": {rng}}}')


def measurement_from_line(line: str) -> tuple[int, Measurement]:
    import json
    try:
        obj = json.loads(line)
        m = Measurement(float(obj["bearing"]),
                        None if obj["range"] is None else float(obj["range"]),
                        int(obj["sensor"]), int(obj["slot"]))
        return int(obj["step"]), m
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad measurement record {line!r}: {exc}") from exc


def batches_from_lines(lines: Sequence[str], n_steps: int,
                       n_sensors: int) -> list[list[list[Measurement]]]:
    """Group serialized measurement records into per-step, per-sensor batches."""
    out: list[list[list[Measurement]]] = \
        [[[] for _ in range(n_sensors)] for _ in range(n_steps)]
    for line in lines:
        if not line.strip():
            continue
        step, m = measurement_from_line(line)
        if not (1 <= step <= n_steps and 0 <= m.sensor_id < n_sensors):
            raise ConfigError(f"measurement record out of range: {line!r}")
        out[step - 1][m.sensor_id].append(m)
    for step_batches in out:
        for batch in step_batches:
            batch.sort(key=lambda m: m.slot)
    return out


def _geometry_line(step: int, obj_id: str, poly: ConvexPolygon | None = None,
                   interval: AngleInterval | None = None,
                   pose: tuple[float, ...] | None = None) -> str:
    parts = [f'"step": {step}', f'"id": "{obj_id}"']
    if poly is not None:
        vs = ", ".join(f"[{_fmt(v.x)}, {_fmt(v.y)}]" for v in poly.vertices)
        parts.append(f'"vertices": [{vs}]')
    if interval is not None:
        parts.append(f'"interval": [{_fmt(interval.lo)}, {_fmt(interval.hi)}]')
    if pose is not None:
        parts.append(f'"pose": [{", ".join(_fmt(x) for x in pose)}]')
    return "{" + ", ".join(parts) + "}"


# ---------------------------------------------------------------------------
# initial sets
# ---------------------------------------------------------------------------

def _centered_box(center: tuple[float, float], area: float) -> ConvexPolygon:
    h = 0.5 * math.sqrt(max(area, 0.0))
    if h <= 0.0:
        return ConvexPolygon.point(*center)
    return ConvexPolygon.box(center[0] - h, center[0] + h,
                             center[1] - h, center[1] + h)


def initial_sets(cfg: ScenarioConfig) -> tuple[list[ConvexPolygon],
                                               list[ConvexPolygon],
                                               list[AngleInterval]]:
    markers = []
    odx, ody = cfg.marker_center_offset
    for off in cfg.offsets:
        true_pt = place_marker(cfg.start, off)
        markers.append(_centered_box((true_pt[0] + odx, true_pt[1] + ody),
                                     cfg.initial_marker_area))
    sensor_xy = [_centered_box(s.pose.xy, cfg.initial_sensor_area)
                 for s in cfg.sensors]
    sensor_theta = [AngleInterval(s.pose.theta, 0.5 * cfg.initial_sensor_theta)
                    for s in cfg.sensors]
    return markers, sensor_xy, sensor_theta


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """All violated invariants of a scenario, empty when runnable."""
    problems: list[str] = []
    if cfg.mode not in (MODE_BICYCLE, MODE_OMNI):
        problems.append(f"unknown mode {cfg.mode!r}")
    if not cfg.trajectory:
        problems.append("trajectory is empty")
    if not cfg.sensors:
        problems.append("no sensors configured")
    if cfg.estimators not in ("set", "fastslam", "both"):
        problems.append(f"unknown estimators selection {cfg.estimators!r}")
    if cfg.mode == MODE_OMNI:
        if cfg.omni_v_max < 0.0:
            problems.append("omni v_max must be >= 0")
        if cfg.wants("fastslam"):
            problems.append("fastslam estimator supports bicycle mode only")
        for i, (speed, _) in enumerate(cfg.trajectory):
            if speed > cfg.omni_v_max + 1e-12:
                problems.append(f"trajectory leg {i + 1} exceeds v_max")
                break
    if cfg.mode == MODE_BICYCLE:
        for i, (_, delta) in enumerate(cfg.trajectory):
            if abs(delta) + cfg.robot.eps_delta >= math.pi / 2.0:
                problems.append(f"trajectory leg {i + 1}: |delta|+eps_delta "
                                f"reaches pi/2")
                break
    # the containment hypothesis: every true state inside its initial set
    markers, sensor_xy, sensor_theta = initial_sets(cfg)
    for j, off in enumerate(cfg.offsets):
        if not geom2d.contains(markers[j], place_marker(cfg.start, off)):
            problems.append(f"initial containment violated: true marker {j + 1} "
                            f"outside its initial set")
    for i, site in enumerate(cfg.sensors):
        if not geom2d.contains(sensor_xy[i], site.pose.xy):
            problems.append(f"initial containment violated: true sensor {i + 1} "
                            f"position outside its initial set")
        if not sensor_theta[i].contains(site.pose.theta):
            problems.append(f"initial containment violated: true sensor {i + 1} "
                            f"orientation outside its initial interval")
    return problems


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _measurement_batches(markers: Sequence[tuple[float, float]],
                         sensors: Sequence[SensorSite],
                         rng_meas: np.random.Generator,
                         rng_shuffle: np.random.Generator
                         ) -> list[list[Measurement]]:
    batches: list[list[Measurement]] = []
    for i, site in enumerate(sensors):
        model = site.model
        found = []
        for pt in markers:
            w_a = rng_meas.uniform(-model.eps_bearing, model.eps_bearing)
            w_r = rng_meas.uniform(-model.eps_range, model.eps_range)
            m = measure(site.pose, model, pt, w_a, w_r, sensor_id=i)
            if m is not None:
                found.append(m)
        order = rng_shuffle.permutation(len(found))
        batch = [replace(found[q], slot=slot) for slot, q in enumerate(order)]
        batches.append(batch)
    return batches


def simulate_run(cfg: ScenarioConfig, steps: int | None = None,
                 fallback_predict: bool = False,
                 record_geometry: bool = False,
                 track_sensor_sets: bool = False,
                 record_measurements: bool = False) -> RunRecord:
    """Run the world and the selected estimators; raises ScenarioFault on an
    estimator abort under the default fault policy."""
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    if cfg.mode == MODE_OMNI:
        return _simulate_omni(cfg, steps, record_geometry, record_measurements)

    ss = np.random.SeedSequence(cfg.seed)
    rng_proc, rng_meas, rng_shuf, rng_fs = \
        (np.random.default_rng(c) for c in ss.spawn(4))

    robot = cfg.robot
    offsets = cfg.offsets
    spec = est.RigidBodySpec.from_offsets(offsets)
    models = est.EstimatorModels(robot, offsets, cfg.sensor_models(),
                                 assignment_cap=cfg.assignment_cap)

    pose = cfg.start
    marker0, sensor_xy0, sensor_theta0 = initial_sets(cfg)
    state = est.make_state(marker0, sensor_xy0, sensor_theta0, spec)
    ps = None
    if cfg.wants("fastslam"):
        ps = fs.init_particles(marker0, sensor_xy0, sensor_theta0,
                               cfg.fastslam_particles, rng_fs)

    rec = RunRecord(cfg.mode, cfg.seed)
    if record_geometry:
        _dump_state(rec, 0, state, pose, robot, cfg, None)

    trajectory = cfg.trajectory if steps is None else cfg.trajectory[:steps]
    for k, (v, delta) in enumerate(trajectory, start=1):
        u = Control(v, delta)
        w_v = rng_proc.uniform(-robot.eps_v, robot.eps_v)
        w_d = rng_proc.uniform(-robot.eps_delta, robot.eps_delta)
        assert abs(w_v) <= robot.eps_v and abs(w_d) <= robot.eps_delta
        pose = bicycle_step(pose, u, w_v, w_d, robot)
        true_markers = [place_marker(pose, off) for off in offsets]
        truth_region = body_polygon(pose, robot)
        batches = _measurement_batches(true_markers, cfg.sensors,
                                       rng_meas, rng_shuf)
        if record_measurements:
            rec.measurements.extend(measurement_to_line(k, m)
                                    for b in batches for m in b)
        row = StepRecord(k)

        if cfg.wants("set"):
            t0 = time.perf_counter()
            try:
                state = est.step(state, u, batches, models, spec)
            except (est.EmptySetFault, InconsistentBatch, CapExceeded) as exc:
                if not fallback_predict:
                    raise ScenarioFault(k, exc) from exc
                predicted = est.propagate(state, u, models)
                state = replace(predicted, body=est.estimate_body(predicted),
                                k=state.k + 1)
                rec.set_fallbacks += 1
            row.set_wall_ms = 1e3 * (time.perf_counter() - t0)
            row.set_metrics = compute_metrics(state.body, state.heading,
                                              truth_region, pose.theta)
            row.set_contained_markers = all(
                geom2d.contains(state.markers[j], true_markers[j])
                for j in range(len(offsets)))
            row.set_contained_sensors = all(
                geom2d.contains(state.sensor_xy[i], site.pose.xy)
                and state.sensor_theta[i].contains(site.pose.theta)
                for i, site in enumerate(cfg.sensors))
            row.set_body_area = geom2d.area(state.body)
            row.set_heading_width = state.heading.width
            if track_sensor_sets:
                rec.sensor_track.append(
                    (tuple(geom2d.area(p) for p in state.sensor_xy),
                     tuple(t.width for t in state.sensor_theta),
                     tuple(len(b) for b in batches)))

        if ps is not None:
            t0 = time.perf_counter()
            ps = fs.predict(ps, u, robot, offsets, spec, rng_fs)
            ps = fs.weight_update(ps, batches, cfg.sensor_models())
            ps = fs.resample(ps, rng_fs)
            body = fs.estimate_body_particles(ps)
            heading = fs.heading_interval_particles(ps, spec)
            row.fs_wall_ms = 1e3 * (time.perf_counter() - t0)
            row.fs_metrics = compute_metrics(body, heading,
                                             truth_region, pose.theta)
            row.fs_body_area = geom2d.area(body)
            row.fs_heading_width = heading.width
            rec.fs_degenerate_resets = ps.degenerate_resets

        rec.rows.append(row)
        if record_geometry:
            fs_dump = None
            if ps is not None:
                fs_dump = (fs.estimate_body_particles(ps),
                           fs.heading_interval_particles(ps, spec))
            _dump_state(rec, k, state if cfg.wants("set") else None,
                        pose, robot, cfg, fs_dump)
    return rec


def _dump_state(rec: RunRecord, k: int, state: est.EstimatorState | None,
                pose: RobotPose, robot: RobotModel, cfg: ScenarioConfig,
                fs_dump: tuple[ConvexPolygon, AngleInterval] | None) -> None:
    rec.geometry.append(_geometry_line(k, "truth/pose",
                                       pose=(pose.x, pose.y, pose.theta)))
    rec.geometry.append(_geometry_line(k, "truth/body",
                                       poly=body_polygon(pose, robot)))
    if state is not None:
        for j, p in enumerate(state.markers):
            rec.geometry.append(_geometry_line(k, f"set/marker{j + 1}", poly=p))
        for i, p in enumerate(state.sensor_xy):
            rec.geometry.append(_geometry_line(k, f"set/sensor{i + 1}/xy", poly=p))
            rec.geometry.append(_geometry_line(k, f"set/sensor{i + 1}/theta",
                                               interval=state.sensor_theta[i]))
        rec.geometry.append(_geometry_line(k, "set/body", poly=state.body))
        rec.geometry.append(_geometry_line(k, "set/heading",
                                           interval=state.heading))
    if fs_dump is not None:
        rec.geometry.append(_geometry_line(k, "fs/body", poly=fs_dump[0]))
        rec.geometry.append(_geometry_line(k, "fs/heading",
                                           interval=fs_dump[1]))


def _simulate_omni(cfg: ScenarioConfig, steps: int | None,
                   record_geometry: bool,
                   record_measurements: bool = False) -> RunRecord:
    ss = np.random.SeedSequence(cfg.seed)
    rng_proc, rng_meas, rng_shuf, _ = \
        (np.random.default_rng(c) for c in ss.spawn(4))

    dt = cfg.robot.dt
    v_max = cfg.omni_v_max
    models = est.EstimatorModels(cfg.robot, cfg.offsets, cfg.sensor_models(),
                                 assignment_cap=cfg.assignment_cap)
    center = (cfg.start.x, cfg.start.y)
    marker0, sensor_xy0, sensor_theta0 = initial_sets(cfg)
    state = est.make_state(marker0, sensor_xy0, sensor_theta0)
    body_ball = geom2d.ball_outer_polygon(cfg.omni_radius, "l2") \
        if cfg.omni_radius > 0.0 else None

    rec = RunRecord(cfg.mode, cfg.seed)
    trajectory = cfg.trajectory if steps is None else cfg.trajectory[:steps]
    for k, (speed, heading) in enumerate(trajectory, start=1):
        # speed wanders within its bound; the direction follows the leg
        sp = rng_proc.uniform(0.0, min(speed, v_max)) if v_max > 0.0 else 0.0
        center = (center[0] + sp * dt * math.cos(heading),
                  center[1] + sp * dt * math.sin(heading))
        batches = _measurement_batches([center], cfg.sensors, rng_meas, rng_shuf)
        if record_measurements:
            rec.measurements.extend(measurement_to_line(k, m)
                                    for b in batches for m in b)
        t0 = time.perf_counter()
        try:
            predicted = est.propagate_omnidirectional(state, v_max, dt,
                                                      models.max_vertices)
            state = replace(est.update(predicted, batches, models), k=k)
        except (est.EmptySetFault, InconsistentBatch, CapExceeded) as exc:
            raise ScenarioFault(k, exc) from exc
        wall = 1e3 * (time.perf_counter() - t0)
        body = state.markers[0]
        if body_ball is not None:
            body = geom2d.minkowski_sum(state.markers[0], body_ball)
        truth_region = disk_outer_polygon(center, cfg.omni_radius) \
            if cfg.omni_radius > 0.0 else ConvexPolygon.point(*center)
        contained = (geom2d.contains(state.markers[0], center)
                     and geom2d.contains_polygon(body, truth_region))
        overlap = geom2d.intersect(body, truth_region)
        m1 = 0.0
        if overlap is not None and geom2d.area(body) > 0.0:
            m1 = geom2d.area(overlap) / geom2d.area(body)
        row = StepRecord(k)
        row.set_metrics = Metrics(m1, 0.0, contained, True)
        row.set_contained_markers = geom2d.contains(state.markers[0], center)
        row.set_contained_sensors = all(
            geom2d.contains(state.sensor_xy[i], site.pose.xy)
            and state.sensor_theta[i].contains(site.pose.theta)
            for i, site in enumerate(cfg.sensors))
        row.set_body_area = geom2d.area(body)
        row.set_heading_width = 2.0 * math.pi
        row.set_wall_ms = wall
        rec.rows.append(row)
        if record_geometry:
            rec.geometry.append(_geometry_line(k, "truth/center", pose=center))
            rec.geometry.append(_geometry_line(k, "set/marker1",
                                               poly=state.markers[0]))
            rec.geometry.append(_geometry_line(k, "set/body", poly=body))
    return rec


def replay_run(cfg: ScenarioConfig, measurement_lines: Sequence[str],
               steps: int | None = None) -> list[est.EstimatorState]:
    """Drive the guaranteed estimator from a recorded measurement stream.

    This is the stand-in for live sensor ingestion: controls come from the
    config's trajectory, measurements from the serialized records.  The
    returned per-step states match a simulate_run that produced the stream.
    """
    trajectory = cfg.trajectory if steps is None else cfg.trajectory[:steps]
    batches_per_step = batches_from_lines(measurement_lines, len(trajectory),
                                          cfg.n_sensors)
    models = est.EstimatorModels(cfg.robot, cfg.offsets, cfg.sensor_models(),
                                 assignment_cap=cfg.assignment_cap)
    marker0, sensor_xy0, sensor_theta0 = initial_sets(cfg)
    states: list[est.EstimatorState] = []
    if cfg.mode == MODE_OMNI:
        state = est.make_state(marker0, sensor_xy0, sensor_theta0)
        for k, _ in enumerate(trajectory, start=1):
            predicted = est.propagate_omnidirectional(
                state, cfg.omni_v_max, cfg.robot.dt, models.max_vertices)
            state = replace(est.update(predicted, batches_per_step[k - 1],
                                       models), k=k)
            states.append(state)
        return states
    spec = est.RigidBodySpec.from_offsets(cfg.offsets)
    state = est.make_state(marker0, sensor_xy0, sensor_theta0, spec)
    for k, (v, delta) in enumerate(trajectory, start=1):
        state = est.step(state, Control(v, delta), batches_per_step[k - 1],
                         models, spec)
        states.append(state)
    return states


# ---------------------------------------------------------------------------
# sensitivity sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    seed: int
    estimator: str
    mean_m1: float
    std_m1: float
    mean_m2: float
    std_m2: float
    steps: int
    faulted: bool


def apply_parameter(cfg: ScenarioConfig, parameter: str,
                    value: float) -> ScenarioConfig:
    """Deriva a config with one swept quantity replaced everywhere it acts."""
    if parameter == "eps_wa":
        sensors = tuple(SensorSite(s.pose, replace(s.model,
                        eps_bearing=math.radians(value))) for s in cfg.sensors)
        return replace(cfg, sensors=sensors)
    if parameter == "eps_wr":
        sensors = tuple(SensorSite(s.pose, replace(s.model, eps_range=value))
                        for s in cfg.sensors)
        return replace(cfg, sensors=sensors)
    if parameter == "V_Pi0":
        return replace(cfg, initial_marker_area=value)
    if parameter == "eps_v":
        return replace(cfg, robot=replace(cfg.robot, eps_v=value))
    if parameter == "eps_delta":
        return replace(cfg, robot=replace(cfg.robot,
                                          eps_delta=math.radians(value)))
    raise ConfigError(f"unknown sweep parameter {parameter!r}; "
                      f"expected one of {SWEEP_PARAMETERS}")


def _sweep_cell(args: tuple[ScenarioConfig, str, float, int, int | None]
                ) -> list[SweepRow]:
    cfg, parameter, value, seed, steps = args
    cell_cfg = replace(apply_parameter(cfg, parameter, value), seed=seed)
    rows: list[SweepRow] = []
    try:
        rec = simulate_run(cell_cfg, steps=steps, fallback_predict=True)
        faulted = False
    except ScenarioFault:
        rec = None
        faulted = True
    for name, m1s, m2s in (("set", rec.set_m1() if rec else [],
                            rec.set_m2() if rec else []),
                           ("fastslam", rec.fs_m1() if rec else [],
                            rec.fs_m2() if rec else [])):
        if not cell_cfg.wants(name):
            continue
        if m1s:
            rows.append(SweepRow(parameter, value, seed, name,
                                 float(np.mean(m1s)), float(np.std(m1s)),
                                 float(np.mean(m2s)), float(np.std(m2s)),
                                 len(m1s), faulted))
        else:
            rows.append(SweepRow(parameter, value, seed, name,
                                 math.nan, math.nan, math.nan, math.nan,
                                 0, True))
    return rows


def sensitivity_sweep(cfg: ScenarioConfig, parameter: str,
                      values: Sequence[float], n_seeds: int,
                      steps: int | None = None, jobs: int = 1
                      ) -> list[SweepRow]:
    """Run every value x seed cell for the selected estimators.

    Cells are independent; per-cell faults are recorded and the sweep
    continues.  Row order is deterministic regardless of execution order.
    """
    if not values:
        raise ConfigError("sweep needs at least one value")
    cells = [(cfg, parameter, float(v), cfg.seed + s, steps)
             for v in values for s in range(n_seeds)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_cell, cells))
    else:
        chunks = [_sweep_cell(c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.value, r.seed, r.estimator))
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    out = ["parameter,value,seed,estimator,mean_m1,std_m1,mean_m2,std_m2,steps,faulted"]
    for r in rows:
        out.append(f"{r.parameter},{repr(r.value)},{r.seed},{r.estimator},"
                   f"{repr(r.mean_m1)},{repr(r.std_m1)},{repr(r.mean_m2)},"
                   f"{repr(r.std_m2)},{r.steps},{int(r.faulted)}")
    return "\n".join(out) + "\n"


def pooled_stats(rows: Sequence[SweepRow], value: float,
                 estimator: str) -> tuple[float, float, float]:
    """Pooled (mean_m1, std_m1, mean_m2) across seeds via total variance."""
    sel = [r for r in rows if r.estimator == estimator
           and math.isclose(r.value, value) and r.steps > 0]
    if not sel:
        return math.nan, math.nan, math.nan
    weights = np.array([r.steps for r in sel], dtype=float)
    means = np.array([r.mean_m1 for r in sel])
    stds = np.array([r.std_m1 for r in sel])
    w = weights / weights.sum()
    mean = float((w * means).sum())
    var = float((w * (stds ** 2)).sum() + (w * (means - mean) ** 2).sum())
    mean_m2 = float((w * np.array([r.mean_m2 for r in sel])).sum())
    return mean, math.sqrt(max(var, 0.0)), mean_m2


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def _get(parser: configparser.ConfigParser, section: str, key: str,
         cast, default=None):
    if not parser.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"[{section}] missing required key '{key}'")
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    for required in ("scenario", "robot", "initial_sets", "trajectory"):
        if not parser.has_section(required):
            raise ConfigError(f"missing section [{required}]")

    mode = _get(parser, "scenario", "mode", str, MODE_BICYCLE)
    if mode not in (MODE_BICYCLE, MODE_OMNI):
        raise ConfigError(f"[scenario] mode: unknown mode {mode!r}")
    seed = _get(parser, "scenario", "seed", int, 0)
    estimators = _get(parser, "scenario", "estimators", str, "both")
    cap = _get(parser, "scenario", "assignment_cap", int, 1000)

    try:
        robot = RobotModel(
            wheelbase=_get(parser, "robot", "wheelbase", float, 1.0),
            dt=_get(parser, "robot", "dt", float),
            body_length=_get(parser, "robot", "body_length", float, 0.0),
            body_width=_get(parser, "robot", "body_width", float, 0.0),
            eps_v=_get(parser, "robot", "eps_v", float, 0.0),
            eps_delta=math.radians(_get(parser, "robot", "eps_delta_deg",
                                        float, 0.0)),
            eps_f=_get(parser, "robot", "eps_f", float, 0.0))
    except ValueError as exc:
        raise ConfigError(f"[robot] {exc}") from exc
    start = RobotPose(_get(parser, "robot", "x0", float),
                      _get(parser, "robot", "y0", float),
                      math.radians(_get(parser, "robot", "theta0_deg",
                                        float, 0.0)))

    v_max = 0.0
    radius = 0.0
    if mode == MODE_OMNI:
        v_max = _get(parser, "omni", "v_max", float)
        radius = _get(parser, "omni", "body_radius", float, 0.0)
        offsets: tuple[MarkerOffset, ...] = (MarkerOffset(0.0, 0.0),)
    else:
        offsets = corner_marker_offsets(robot)

    init_marker = _get(parser, "initial_sets", "marker_area", float)
    init_sensor = _get(parser, "initial_sets", "sensor_area", float)
    init_theta = math.radians(_get(parser, "initial_sets",
                                   "sensor_theta_deg", float))
    center_dx = _get(parser, "initial_sets", "marker_center_dx", float, 0.0)
    center_dy = _get(parser, "initial_sets", "marker_center_dy", float, 0.0)

    defaults = {
        "kind": ANGLE_RANGE,
        "eps_bearing_deg": 1.0,
        "eps_range": 0.1,
        "fov_deg": 360.0,
        "max_range": 20.0,
    }
    if parser.has_section("sensor_defaults"):
        for key in defaults:
            if parser.has_option("sensor_defaults", key):
                cast = str if key == "kind" else float
                defaults[key] = _get(parser, "sensor_defaults", key, cast)

    sensors = []
    idx = 1
    while parser.has_section(f"sensor.{idx}"):
        sec = f"sensor.{idx}"
        kind = _get(parser, sec, "kind", str, defaults["kind"])
        try:
            model = SensorModel(
                kind=kind,
                eps_bearing=math.radians(_get(parser, sec, "eps_bearing_deg",
                                              float, defaults["eps_bearing_deg"])),
                eps_range=_get(parser, sec, "eps_range", float,
                               defaults["eps_range"]),
                fov=math.radians(_get(parser, sec, "fov_deg", float,
                                      defaults["fov_deg"])),
                max_range=_get(parser, sec, "max_range", float,
                               defaults["max_range"]))
            pose = SensorPose(_get(parser, sec, "x", float),
                              _get(parser, sec, "y", float),
                              math.radians(_get(parser, sec, "theta_deg",
                                                float, 0.0)))
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {exc}") from exc
        sensors.append(SensorSite(pose, model))
        idx += 1
    if not sensors:
        raise ConfigError("no [sensor.N] sections found")

    legs: list[tuple[float, float]] = []
    for key in sorted(parser.options("trajectory"),
                      key=lambda s: (len(s), s)):
        raw = parser.get("trajectory", key).split()
        if len(raw) != 3:
            raise ConfigError(f"[trajectory] {key}: expected 'count v angle_deg'")
        try:
            count = int(raw[0])
            v = float(raw[1])
            ang = math.radians(float(raw[2]))
        except ValueError as exc:
            raise ConfigError(f"[trajectory] {key}: {exc}") from exc
        if count < 1:
            raise ConfigError(f"[trajectory] {key}: count must be >= 1")
        legs.extend([(v, ang)] * count)
    steps = _get(parser, "scenario", "steps", int, 0)
    if steps:
        legs = legs[:steps]

    particles = fs.DEFAULT_PARTICLES
    if parser.has_section("fastslam"):
        particles = _get(parser, "fastslam", "particles", int,
                         fs.DEFAULT_PARTICLES)

    return ScenarioConfig(
        mode=mode, seed=seed, estimators=estimators, assignment_cap=cap,
        robot=robot, start=start, offsets=offsets, sensors=tuple(sensors),
        trajectory=tuple(legs), initial_marker_area=init_marker,
        initial_sensor_area=init_sensor, initial_sensor_theta=init_theta,
        marker_center_offset=(center_dx, center_dy),
        fastslam_particles=particles, omni_v_max=v_max, omni_radius=radius)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def builtin_config_text(name: str) -> str:
    """Raw text of a bundled scenario config ('parking' or 'omni')."""
    fname = f"{name}.cfg"
    ref = resources.files("setloc.data").joinpath(fname)
    if not ref.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return ref.read_text(encoding="utf-8")


def load_builtin(name: str) -> ScenarioConfig:
    return parse_config(builtin_config_text(name))


def shrink_demo_config(seed: int = 0) -> ScenarioConfig:
    """Sensor-calibration demonstration: poorly known sensors, well-known robot.

    Eight wide-angle sensors ring a short straight drive at close range; their
    position sets start at 25 m^2 and orientation intervals at 20 degrees
    while the marker sets start tiny, so every measurement batch pays down
    sensor uncertainty.
    """
    base = load_builtin("parking")
    model = SensorModel(ANGLE_RANGE, math.radians(0.5), 0.05,
                        math.radians(140.0), 20.0)
    ring = []
    for i in range(8):
        ang = 2.0 * math.pi * i / 8.0
        x = 10.0 + 4.2 * math.cos(ang)
        y = 6.0 + 4.2 * math.sin(ang)
        ring.append(SensorSite(SensorPose(x, y, math.atan2(6.0 - y, 10.0 - x)),
                               model))
    return replace(base, sensors=tuple(ring), initial_sensor_area=25.0,
                   initial_sensor_theta=math.radians(20.0),
                   initial_marker_area=0.0025, estimators="set", seed=seed,
                   trajectory=tuple([(0.4, 0.0)] * 15))
