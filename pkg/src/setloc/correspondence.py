"""Measurement-to-marker data association under set-valued uncertainty.

Each received measurement could have originated from any marker whose
predicted set intersects the measurement's feasible region; the boolean
candidate matrix records those possibilities and the consistent injective
assignments are enumerated exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import geom2d, sensing
from .geom2d import AngleInterval, ConvexPolygon
from .sensing import Measurement, SensorModel

DEFAULT_ASSIGNMENT_CAP = 1000

# an assignment maps measurement slot q -> marker index, one entry per row
Assignment = tuple[int, ...]


class InconsistentBatch(Exception):
    """A measurement matched no marker: some noise or containment bound is broken."""

    def __init__(self, sensor_id: int, row: int):
        super().__init__(f"measurement {row} of sensor {sensor_id} "
                         f"is feasible for no marker")
        self.sensor_id = sensor_id
        self.row = row


class CapExceeded(Exception):
    """More consistent assignments than the enumeration cap allows."""


@dataclass(frozen=True)
class CandidateMatrix:
    rows: tuple[tuple[bool, ...], ...]   # |measurements| x n_markers
    sensor_id: int = -1

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0


def build_candidate_matrix(measurements: Sequence[Measurement],
                           predicted_markers: Sequence[ConvexPolygon],
                           predicted_sensor_xy: ConvexPolygon,
                           predicted_sensor_theta: AngleInterval,
                           model: SensorModel,
                           sensor_id: int = -1) -> CandidateMatrix:
    """Feasibility of each (measurement, marker) pair.

    Entry (q, j) is true iff marker j's predicted set meets the region the
    sensor's predicted position plus the measurement cone allows.  A row with
    no feasible marker means the batch violates the modeling assumptions.
    """
    if len(measurements) > len(predicted_markers):
        raise ValueError("more measurements than markers in one batch")
    theta0 = predicted_sensor_theta.center
    d_theta = predicted_sensor_theta.half_width
    rows = []
    for q, meas in enumerate(measurements):
        region = sensing.feasible_marker_region(meas.bearing, meas.range,
                                                model, theta0, d_theta)
        reachable = geom2d.minkowski_sum(predicted_sensor_xy, region)
        row = tuple(geom2d.intersect(pj, reachable) is not None
                    for pj in predicted_markers)
        if not any(row):
            raise InconsistentBatch(sensor_id, q)
        rows.append(row)
    return CandidateMatrix(tuple(rows), sensor_id)


def enumerate_assignments(c: CandidateMatrix,
                          cap: int = DEFAULT_ASSIGNMENT_CAP) -> list[Assignment]:
    """All injective row->column selections consistent with the matrix.

    Search visits rows in ascending candidate count to keep branching low;
    raising on cap overflow (rather than truncating) preserves the guarantee
    that the true assignment is among the results.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    n_rows = c.n_rows
    if n_rows == 0:
        return [()]
    order = sorted(range(n_rows), key=lambda q: sum(c.rows[q]))
    results: list[Assignment] = []
    chosen = [-1] * n_rows
    used = [False] * c.n_cols

    def descend(depth: int) -> None:
        if depth == n_rows:
            if len(results) >= cap:
                raise CapExceeded(f"more than {cap} correspondence solutions")
            results.append(tuple(chosen))
            return
        q = order[depth]
        for j, ok in enumerate(c.rows[q]):
            if ok and not used[j]:
                used[j] = True
                chosen[q] = j
                descend(depth + 1)
                used[j] = False
        chosen[q] = -1

    descend(0)
    results.sort()
    return results


def markers_with_certain_measurement(assignments: Sequence[Assignment],
                                     n_markers: int) -> frozenset[int]:
    """Markers that received a measurement under *every* assignment."""
    if not assignments:
        raise ValueError("assignments must be non-empty")
    certain = set(range(n_markers))
    for a in assignments:
        certain &= set(a)
    return frozenset(certain)
