"""Set-theoretic localization filter.

Maintains convex uncertainty sets for every marker position, sensor position
and sensor orientation, and derives body and heading sets from them.  All
set operations either are exact or over-approximate, so if the true states
start inside their sets and all noise stays within its bounds, they remain
inside after every propagate / update / refine cycle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence

from . import correspondence, geom2d, sensing
from .correspondence import Assignment
from .geom2d import AngleInterval, ConvexPolygon, Interval
from .kinematics import Control, MarkerOffset, RobotModel, displacement_bounds
from .sensing import Measurement, SensorModel


class EmptySetFault(Exception):
    """An intersection came up empty: a noise or containment bound is broken."""

    def __init__(self, what: str, sensor: int | None = None,
                 marker: int | None = None):
        parts = [what]
        if sensor is not None:
            parts.append(f"sensor={sensor}")
        if marker is not None:
            parts.append(f"marker={marker}")
        super().__init__(", ".join(parts))
        self.what = what
        self.sensor = sensor
        self.marker = marker


@dataclass(frozen=True)
class RigidBodySpec:
    """Pairwise marker distances and the heading offset of each marker pair."""

    distances: tuple[tuple[float, ...], ...]   # [i][j] = |p_i - p_j|
    bearings: tuple[tuple[float, ...], ...]    # [i][j] = body-frame angle of p_j - p_i

    @classmethod
    def from_offsets(cls, offsets: Sequence[MarkerOffset]) -> "RigidBodySpec":
        pts = [o.body_xy() for o in offsets]
        n = len(pts)
        dist = [[0.0] * n for _ in range(n)]
        bear = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                dx = pts[j][0] - pts[i][0]
                dy = pts[j][1] - pts[i][1]
                dist[i][j] = math.hypot(dx, dy)
                bear[i][j] = math.atan2(dy, dx)
        return cls(tuple(tuple(r) for r in dist), tuple(tuple(r) for r in bear))

    @property
    def n(self) -> int:
        return len(self.distances)


@dataclass(frozen=True)
class EstimatorModels:
    """Static models and numeric policy shared by all estimator operations."""

    robot: RobotModel
    offsets: tuple[MarkerOffset, ...]
    sensors: tuple[SensorModel, ...]
    max_vertices: int = geom2d.V_MAX
    ball_segments: int = geom2d.DEFAULT_BALL_SEGMENTS
    assignment_cap: int = correspondence.DEFAULT_ASSIGNMENT_CAP


@dataclass(frozen=True)
class EstimatorState:
    markers: tuple[ConvexPolygon, ...]
    sensor_xy: tuple[ConvexPolygon, ...]
    sensor_theta: tuple[AngleInterval, ...]
    body: ConvexPolygon
    heading: AngleInterval
    k: int = 0


def make_state(markers: Sequence[ConvexPolygon],
               sensor_xy: Sequence[ConvexPolygon],
               sensor_theta: Sequence[AngleInterval],
               spec: RigidBodySpec | None = None,
               k: int = 0) -> EstimatorState:
    """Assemble a state, deriving the body hull and (if possible) heading."""
    body = geom2d.convex_hull(list(markers))
    heading = AngleInterval.full()
    state = EstimatorState(tuple(markers), tuple(sensor_xy),
                           tuple(sensor_theta), body, heading, k)
    if spec is not None and len(markers) >= 2:
        heading = estimate_heading(state, spec)
        state = replace(state, heading=heading)
    return state


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def propagate(state: EstimatorState, u: Control,
              models: EstimatorModels) -> EstimatorState:
    """Predict all sets one step ahead; sensors are stationary.

    Each marker set grows by the interval box bounding its displacement over
    the admissible controls and the current heading set, plus the inf-norm
    disturbance ball.  The heading set is widened by the turn-rate interval
    so it stays a valid bound even if no measurements arrive.
    """
    robot = models.robot
    new_markers = []
    for poly, offset in zip(state.markers, models.offsets):
        dx, dy = displacement_bounds(u, state.heading, offset, robot,
                                     cover_rigid_step=True)
        box = ConvexPolygon.box(dx.lo, dx.hi, dy.lo, dy.hi)
        grown = geom2d.minkowski_sum(poly, box)
        if robot.eps_f > 0.0:
            grown = geom2d.minkowski_sum(
                grown, geom2d.ball_outer_polygon(robot.eps_f, "linf"))
        new_markers.append(geom2d.simplify_outer(grown, models.max_vertices))
    v_lo, v_hi = u.v - robot.eps_v, u.v + robot.eps_v
    rates = [(v * robot.dt / robot.wheelbase) * math.sin(d)
             for v in (v_lo, v_hi)
             for d in (u.delta - robot.eps_delta, u.delta + robot.eps_delta)]
    turn = Interval(min(rates), max(rates))
    heading = state.heading.shift(turn.mid).widen(0.5 * turn.width)
    body = geom2d.convex_hull(new_markers)
    return EstimatorState(tuple(new_markers), state.sensor_xy,
                          state.sensor_theta, body, heading, state.k)


def propagate_omnidirectional(state: EstimatorState, v_max: float,
                              dt: float, max_vertices: int = geom2d.V_MAX
                              ) -> EstimatorState:
    """Prediction for a robot only known to move slower than v_max."""
    if v_max < 0.0:
        raise ValueError("v_max must be >= 0")
    r = v_max * dt
    if r <= 0.0:
        return state
    ball = geom2d.ball_outer_polygon(r, "linf")
    new_markers = tuple(
        geom2d.simplify_outer(geom2d.minkowski_sum(p, ball), max_vertices)
        for p in state.markers)
    return replace(state, markers=new_markers,
                   body=geom2d.convex_hull(list(new_markers)))


# ---------------------------------------------------------------------------
# measurement update
# ---------------------------------------------------------------------------

def _bearing_span(marker_set: ConvexPolygon,
                  sensor_set: ConvexPolygon) -> AngleInterval:
    """Arc of directions from any sensor position to any marker position."""
    diff = geom2d.minkowski_sum(marker_set, geom2d.negate(sensor_set))
    return geom2d.angular_hull(diff)


def update(predicted: EstimatorState, batches: Sequence[Sequence[Measurement]],
           models: EstimatorModels) -> EstimatorState:
    """Condition all sets on one round of per-sensor measurement batches.

    Per sensor: enumerate the correspondence hypotheses, then narrow the
    orientation interval, then the position set (unions across hypotheses are
    over-approximated by enclosing arcs / convex hulls, which keeps every
    update a superset of the exact one).  Marker sets are narrowed last,
    using only sensors that measured a marker under every hypothesis.
    """
    n_markers = len(predicted.markers)
    sensor_theta = list(predicted.sensor_theta)
    sensor_xy = list(predicted.sensor_xy)
    per_sensor: list[tuple[int, Sequence[Measurement], list[Assignment]]] = []

    for i, batch in enumerate(batches):
        if not batch:
            continue
        model = models.sensors[i]
        cmat = correspondence.build_candidate_matrix(
            batch, predicted.markers, predicted.sensor_xy[i],
            predicted.sensor_theta[i], model, sensor_id=i)
        assigns = correspondence.enumerate_assignments(cmat, models.assignment_cap)
        if not assigns:
            raise EmptySetFault("no consistent correspondence", sensor=i)

        spans = {}
        for j in {j for a in assigns for j in a}:
            spans[j] = _bearing_span(predicted.markers[j], predicted.sensor_xy[i])

        # orientation: each hypothesis intersects one interval per matched
        # measurement; the union over hypotheses must still cover the truth
        theta_options = []
        for a in assigns:
            itv: AngleInterval | None = None
            for q, j in enumerate(a):
                span = spans[j]
                if span.is_full:
                    continue
                cand = AngleInterval(span.center - batch[q].bearing,
                                     min(math.pi, span.half_width + model.eps_bearing))
                itv = cand if itv is None else geom2d.intersect_angles(itv, cand)
                if itv is None:
                    break
            else:
                theta_options.append(itv if itv is not None else AngleInterval.full())
        if not theta_options:
            raise EmptySetFault("orientation update", sensor=i)
        new_theta = geom2d.intersect_angles(
            predicted.sensor_theta[i], geom2d.enclose_angles(theta_options))
        if new_theta is None:
            raise EmptySetFault("orientation update", sensor=i)
        sensor_theta[i] = new_theta

        # position: intersect per-hypothesis back-projected regions, hull the
        # union, then intersect with the prediction
        xy_options = []
        for a in assigns:
            region: ConvexPolygon | None = None
            alive = True
            for q, j in enumerate(a):
                back = sensing.feasible_sensor_region(
                    batch[q].bearing, batch[q].range, model,
                    new_theta.center, new_theta.half_width)
                cand = geom2d.minkowski_sum(predicted.markers[j], back)
                region = cand if region is None else geom2d.intersect(region, cand)
                if region is None:
                    alive = False
                    break
            if alive and region is not None:
                xy_options.append(region)
        if not xy_options:
            raise EmptySetFault("position update", sensor=i)
        new_xy = geom2d.intersect(predicted.sensor_xy[i],
                                  geom2d.convex_hull(xy_options))
        if new_xy is None:
            raise EmptySetFault("position update", sensor=i)
        sensor_xy[i] = geom2d.simplify_outer(new_xy, models.max_vertices)

        per_sensor.append((i, batch, assigns))

    # markers: only sensors certain to have measured marker j may narrow it
    markers = list(predicted.markers)
    for i, batch, assigns in per_sensor:
        model = models.sensors[i]
        certain = correspondence.markers_with_certain_measurement(assigns, n_markers)
        theta = sensor_theta[i]
        for j in certain:
            slots = sorted({q for a in assigns for q, jj in enumerate(a) if jj == j})
            cones = [sensing.feasible_marker_region(
                batch[q].bearing, batch[q].range, model,
                theta.center, theta.half_width) for q in slots]
            region = geom2d.minkowski_sum(sensor_xy[i], geom2d.convex_hull(cones))
            narrowed = geom2d.intersect(markers[j], region)
            if narrowed is None:
                raise EmptySetFault("marker update", sensor=i, marker=j)
            markers[j] = geom2d.simplify_outer(narrowed, models.max_vertices)

    body = geom2d.convex_hull(markers)
    return EstimatorState(tuple(markers), tuple(sensor_xy), tuple(sensor_theta),
                          body, predicted.heading, predicted.k)


# ---------------------------------------------------------------------------
# rigid-body refinement and reconstruction
# ---------------------------------------------------------------------------

def refine_rigid_body(state: EstimatorState, spec: RigidBodySpec,
                      max_vertices: int = geom2d.V_MAX,
                      ball_segments: int = geom2d.DEFAULT_BALL_SEGMENTS
                      ) -> EstimatorState:
    """One sweep of pairwise distance constraints over the marker sets.

    Marker i must lie within distance r_ij of marker j, so intersecting with
    the other set grown by a circumscribed disk polygon never cuts the truth.
    """
    markers = list(state.markers)
    n = len(markers)
    balls: dict[float, ConvexPolygon] = {}
    for i, j in itertools.permutations(range(n), 2):
        r = spec.distances[i][j]
        ball = balls.get(r)
        if ball is None:
            ball = geom2d.ball_outer_polygon(r, "l2", ball_segments)
            balls[r] = ball
        allowed = geom2d.minkowski_sum(markers[j], ball)
        narrowed = geom2d.intersect(markers[i], allowed)
        if narrowed is None:
            raise EmptySetFault("rigid-body refinement", marker=i)
        markers[i] = geom2d.simplify_outer(narrowed, max_vertices)
    return replace(state, markers=tuple(markers),
                   body=geom2d.convex_hull(markers))


def estimate_body(state: EstimatorState) -> ConvexPolygon:
    """Convex envelope of the marker sets: the guaranteed body bound."""
    return geom2d.convex_hull(list(state.markers))


def estimate_heading(state: EstimatorState, spec: RigidBodySpec) -> AngleInterval:
    """Heading interval from the direction spans of marker-set differences.

    The vector from marker i to marker j points along heading + bearing_ij,
    so each unordered pair constrains the heading; reversed pairs give the
    same constraint shifted by pi and are skipped.
    """
    acc = AngleInterval.full()
    n = len(state.markers)
    for i in range(n):
        for j in range(i + 1, n):
            span = _bearing_span(state.markers[j], state.markers[i])
            if span.is_full:
                continue
            cand = span.shift(-spec.bearings[i][j])
            nxt = geom2d.intersect_angles(acc, cand)
            if nxt is None:
                raise EmptySetFault("heading estimate", marker=j)
            acc = nxt
    return acc


def step(state: EstimatorState, u: Control,
         batches: Sequence[Sequence[Measurement]], models: EstimatorModels,
         spec: RigidBodySpec, fallback_predict: bool = False) -> EstimatorState:
    """Full cycle: propagate, update, refine, reconstruct body and heading.

    With fallback_predict an empty-set fault is swallowed and the predicted
    state is returned instead of aborting; the prediction alone is still a
    valid (if loose) bound.
    """
    predicted = propagate(state, u, models)
    try:
        updated = update(predicted, batches, models)
        refined = refine_rigid_body(updated, spec, models.max_vertices,
                                    models.ball_segments)
        heading = estimate_heading(refined, spec)
    except (EmptySetFault, correspondence.InconsistentBatch):
        if not fallback_predict:
            raise
        return replace(predicted, body=estimate_body(predicted), k=state.k + 1)
    return replace(refined, body=estimate_body(refined), heading=heading,
                   k=state.k + 1)
