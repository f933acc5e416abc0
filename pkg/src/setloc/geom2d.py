"""Sound 2D convex-set algebra.

Convex polygons in vertex form plus wrap-aware angle intervals.  Every
operation that cannot be computed exactly returns a *superset* of the exact
result, so containment guarantees survive arbitrary composition.  All values
are immutable; all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

EPS_GEOM = 1e-9          # absolute tolerance (meters) for geometric predicates
V_MAX = 32               # default vertex budget after simplification
DEFAULT_BALL_SEGMENTS = 16
_SECTOR_MAX_STEP = math.pi / 16.0

TWO_PI = 2.0 * math.pi


class SectorTooWide(ValueError):
    """Sector half-width is >= pi/2, so no bounded convex superset exists."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


class Point2(NamedTuple):
    x: float
    y: float


ORIGIN = Point2(0.0, 0.0)


# ---------------------------------------------------------------------------
# intervals on the real line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"interval lo {self.lo} > hi {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v: float, tol: float = EPS_GEOM) -> bool:
        return self.lo - tol <= v <= self.hi + tol

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


# ---------------------------------------------------------------------------
# angle intervals (arcs on the circle)
# ---------------------------------------------------------------------------

_degenerate_intersections = 0


def degenerate_intersection_count() -> int:
    """How many angle intersections had to enclose a disconnected result."""
    return _degenerate_intersections


def reset_degenerate_intersection_count() -> None:
    global _degenerate_intersections
    _degenerate_intersections = 0


@dataclass(frozen=True)
class AngleInterval:
    """Arc {center - half_width .. center + half_width} on the circle.

    half_width == pi represents the full circle.  Membership and all algebra
    wrap modulo 2*pi.
    """

    center: float
    half_width: float

    def __post_init__(self):
        if not (0.0 <= self.half_width <= math.pi + 1e-12):
            raise ValueError(f"bad half width {self.half_width}")
        object.__setattr__(self, "center", wrap_angle(self.center))
        object.__setattr__(self, "half_width", min(self.half_width, math.pi))

    @classmethod
    def from_endpoints(cls, lo: float, hi: float) -> "AngleInterval":
        """Arc running counter-clockwise from lo to hi."""
        span = hi - lo
        if span < 0.0:
            raise ValueError("endpoints must satisfy lo <= hi before wrapping")
        span = min(span, TWO_PI)
        return cls(lo + 0.5 * span, 0.5 * span)

    @classmethod
    def full(cls) -> "AngleInterval":
        return cls(0.0, math.pi)

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    @property
    def width(self) -> float:
        return 2.0 * self.half_width

    @property
    def is_full(self) -> bool:
        return self.half_width >= math.pi - 1e-12

    def contains(self, angle: float, tol: float = EPS_GEOM) -> bool:
        if self.is_full:
            return True
        return abs(wrap_angle(angle - self.center)) <= self.half_width + tol

    def shift(self, delta: float) -> "AngleInterval":
        return AngleInterval(self.center + delta, self.half_width)

    def widen(self, delta: float) -> "AngleInterval":
        return AngleInterval(self.center, min(math.pi, self.half_width + delta))

    def sum(self, other: "AngleInterval") -> "AngleInterval":
        """Interval of a + b over both arcs (widths add, capped at full)."""
        return AngleInterval(self.center + other.center,
                             min(math.pi, self.half_width + other.half_width))


FULL_CIRCLE = AngleInterval.full()


def intersect_angles(a: AngleInterval, b: AngleInterval) -> AngleInterval | None:
    """Intersection of two arcs, or None when disjoint.

    When the exact intersection is two disconnected arcs the smallest arc
    enclosing both is returned (a sound over-approximation); the module-level
    degenerate counter is incremented so callers can audit how often.
    """
    global _degenerate_intersections
    if a.is_full:
        return b
    if b.is_full:
        return a
    # work in a's frame: a spans [-ha, ha], b spans [s-hb, s+hb] + 2*pi*k
    s = wrap_angle(b.center - a.center)
    pieces: list[tuple[float, float]] = []
    for k in (-1, 0, 1):
        lo = max(-a.half_width, s - b.half_width + k * TWO_PI)
        hi = min(a.half_width, s + b.half_width + k * TWO_PI)
        if hi >= lo - 1e-15:
            pieces.append((lo, hi))
    # dedupe pieces identical modulo 2*pi
    uniq: list[tuple[float, float]] = []
    for p in pieces:
        if not any(abs(math.remainder(p[0] - q[0], TWO_PI)) < 1e-12
                   and abs((p[1] - p[0]) - (q[1] - q[0])) < 1e-12 for q in uniq):
            uniq.append(p)
    if not uniq:
        return None
    if len(uniq) == 1:
        lo, hi = uniq[0]
        return AngleInterval(a.center + 0.5 * (lo + hi), max(0.0, 0.5 * (hi - lo)))
    _degenerate_intersections += 1
    arcs = [AngleInterval(a.center + 0.5 * (lo + hi), max(0.0, 0.5 * (hi - lo)))
            for lo, hi in uniq]
    return enclose_angles(arcs)


def enclose_angles(arcs: Sequence[AngleInterval]) -> AngleInterval:
    """Smallest arc covering the union of the given arcs."""
    if not arcs:
        raise ValueError("enclose_angles needs at least one interval")
    if any(a.is_full for a in arcs):
        return FULL_CIRCLE
    los = [wrap_angle(a.lo) for a in arcs]
    widths = [a.width for a in arcs]
    best_width = math.inf
    best_start = 0.0
    for i, start in enumerate(los):
        need = 0.0
        ok = True
        for j, lo_j in enumerate(los):
            d = lo_j - start
            d -= TWO_PI * math.floor(d / TWO_PI)  # into [0, 2*pi)
            reach = d + widths[j]
            if reach >= TWO_PI - 1e-12:
                ok = False
                break
            need = max(need, reach)
        if ok and need < best_width:
            best_width = need
            best_start = start
    if not math.isfinite(best_width):
        return FULL_CIRCLE
    return AngleInterval(best_start + 0.5 * best_width, 0.5 * best_width)


# ---------------------------------------------------------------------------
# convex polygons
# ---------------------------------------------------------------------------

def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _hull_chain(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2][0], lower[-2][1],
                                         lower[-1][0], lower[-1][1],
                                         p[0], p[1]) <= 0.0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2][0], upper[-2][1],
                                         upper[-1][0], upper[-1][1],
                                         p[0], p[1]) <= 0.0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _prune(verts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Merge near-duplicate vertices and drop near-collinear ones (EPS_GEOM)."""
    n = len(verts)
    if n <= 1:
        return verts
    out = [verts[0]]
    for p in verts[1:]:
        q = out[-1]
        if math.hypot(p[0] - q[0], p[1] - q[1]) > EPS_GEOM:
            out.append(p)
    if len(out) >= 2 and math.hypot(out[0][0] - out[-1][0],
                                    out[0][1] - out[-1][1]) <= EPS_GEOM:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for i in range(len(out)):
            a = out[i - 1]
            b = out[i]
            c = out[(i + 1) % len(out)]
            base = math.hypot(c[0] - a[0], c[1] - a[1])
            if base <= EPS_GEOM:
                dev = math.hypot(b[0] - a[0], b[1] - a[1])
            else:
                dev = abs(_cross(a[0], a[1], b[0], b[1], c[0], c[1])) / base
            if dev <= EPS_GEOM:
                out.pop(i)
                changed = True
                break
    return out


def _canonical(verts: list[tuple[float, float]]) -> tuple[Point2, ...]:
    if not verts:
        return ()
    k = min(range(len(verts)), key=lambda i: verts[i])
    ordered = verts[k:] + verts[:k]
    return tuple(Point2(x, y) for x, y in ordered)


@dataclass(frozen=True)
class ConvexPolygon:
    """Bounded convex region as a CCW vertex tuple.

    Degenerate regions are first-class: one vertex is a point, two vertices a
    segment.  Construct through :meth:`from_points` unless the vertices are
    already canonical (strictly convex, CCW, starting at the lexicographic
    minimum).
    """

    vertices: tuple[Point2, ...]

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "ConvexPolygon":
        pts = [(float(x), float(y)) for x, y in points]
        if not pts:
            raise ValueError("a polygon needs at least one point")
        hull = _hull_chain(pts)
        hull = _prune(hull)
        if not hull:                      # everything collapsed to one point
            hull = [min(pts)]
        return cls(_canonical(hull))

    @classmethod
    def point(cls, x: float, y: float) -> "ConvexPolygon":
        return cls((Point2(float(x), float(y)),))

    @classmethod
    def box(cls, x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> "ConvexPolygon":
        return cls.from_points([(x_lo, y_lo), (x_hi, y_lo), (x_hi, y_hi), (x_lo, y_hi)])

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def is_point(self) -> bool:
        return len(self.vertices) == 1

    @property
    def is_segment(self) -> bool:
        return len(self.vertices) == 2

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def validate(self, v_max: int | None = None) -> None:
        """Raise if the vertex list is not strictly convex CCW."""
        v = self.vertices
        if len(v) == 0:
            raise ValueError("empty polygon")
        if v_max is not None and len(v) > v_max:
            raise ValueError(f"{len(v)} vertices exceeds budget {v_max}")
        for p in v:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ValueError("non-finite vertex")
        n = len(v)
        if n <= 2:
            return
        for i in range(n):
            a, b, c = v[i - 1], v[i], v[(i + 1) % n]
            if _cross(a.x, a.y, b.x, b.y, c.x, c.y) <= 0.0:
                raise ValueError(f"vertices not in strictly convex CCW position at {i}")


def area(p: ConvexPolygon) -> float:
    """Shoelace area; zero for points and segments."""
    v = p.vertices
    if len(v) <= 2:
        return 0.0
    s = 0.0
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


def _dist_point_segment(px: float, py: float, ax: float, ay: float,
                        bx: float, by: float) -> float:
    dx, dy = bx - ax, by - ay
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / d2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def contains(p: ConvexPolygon, q: tuple[float, float], tol: float = EPS_GEOM) -> bool:
    """Point membership within absolute tolerance tol (meters)."""
    v = p.vertices
    qx, qy = q[0], q[1]
    if len(v) == 1:
        return math.hypot(qx - v[0].x, qy - v[0].y) <= tol
    if len(v) == 2:
        return _dist_point_segment(qx, qy, v[0].x, v[0].y, v[1].x, v[1].y) <= tol
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        elen = math.hypot(b.x - a.x, b.y - a.y)
        if _cross(a.x, a.y, b.x, b.y, qx, qy) < -tol * elen:
            return False
    return True


def contains_polygon(outer: ConvexPolygon, inner: ConvexPolygon,
                     tol: float = EPS_GEOM) -> bool:
    return all(contains(outer, v, tol) for v in inner.vertices)


def translate(p: ConvexPolygon, dx: float, dy: float) -> ConvexPolygon:
    return ConvexPolygon(tuple(Point2(v.x + dx, v.y + dy) for v in p.vertices))


def negate(p: ConvexPolygon) -> ConvexPolygon:
    """Point reflection through the origin: {-q : q in p}."""
    return ConvexPolygon.from_points([(-v.x, -v.y) for v in p.vertices])


def minkowski_sum(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    """Exact Minkowski sum {p + q : p in a, q in b} (no vertex cap applied)."""
    if b.is_point:
        return translate(a, b.vertices[0].x, b.vertices[0].y)
    if a.is_point:
        return translate(b, a.vertices[0].x, a.vertices[0].y)
    sums = [(va.x + vb.x, va.y + vb.y) for va in a.vertices for vb in b.vertices]
    return ConvexPolygon.from_points(sums)


def convex_hull(sets: Sequence[ConvexPolygon]) -> ConvexPolygon:
    """Smallest convex set containing every input set."""
    if not sets:
        raise ValueError("convex_hull needs at least one set")
    pts: list[tuple[float, float]] = []
    for s in sets:
        pts.extend(s.vertices)
    return ConvexPolygon.from_points(pts)


# --- intersection ----------------------------------------------------------

def _clip_poly_halfplane(pts: list[tuple[float, float]], ax: float, ay: float,
                         bx: float, by: float) -> list[tuple[float, float]]:
    # keep the closed left side of the directed line a->b
    ex, ey = bx - ax, by - ay
    elen = math.hypot(ex, ey)
    if elen <= EPS_GEOM:
        return pts
    slack = -EPS_GEOM * elen
    out: list[tuple[float, float]] = []
    n = len(pts)
    for i in range(n):
        cx, cy = pts[i]
        nx, ny = pts[(i + 1) % n]
        sc = ex * (cy - ay) - ey * (cx - ax)
        sn = ex * (ny - ay) - ey * (nx - ax)
        cin = sc >= slack
        nin = sn >= slack
        if cin:
            out.append((cx, cy))
        if cin != nin:
            t = sc / (sc - sn)
            out.append((cx + t * (nx - cx), cy + t * (ny - cy)))
    return out


def _clip_segment(seg: ConvexPolygon, poly: ConvexPolygon) -> ConvexPolygon | None:
    (ax, ay), (bx, by) = seg.vertices
    t0, t1 = 0.0, 1.0
    v = poly.vertices
    for i in range(len(v)):
        p = v[i]
        q = v[(i + 1) % len(v)]
        ex, ey = q.x - p.x, q.y - p.y
        elen = math.hypot(ex, ey)
        sa = ex * (ay - p.y) - ey * (ax - p.x)
        sb = ex * (by - p.y) - ey * (bx - p.x)
        slack = -EPS_GEOM * elen
        da = sa - slack
        db = sb - slack
        if da < 0.0 and db < 0.0:
            return None
        if da < 0.0:
            t0 = max(t0, da / (da - db))
        elif db < 0.0:
            t1 = min(t1, da / (da - db))
        if t0 > t1:
            return None
    pa = (ax + t0 * (bx - ax), ay + t0 * (by - ay))
    pb = (ax + t1 * (bx - ax), ay + t1 * (by - ay))
    return ConvexPolygon.from_points([pa, pb])


def _seg_seg(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon | None:
    (p1, p2) = a.vertices
    (q1, q2) = b.vertices
    rx, ry = p2.x - p1.x, p2.y - p1.y
    sx, sy = q2.x - q1.x, q2.y - q1.y
    den = rx * sy - ry * sx
    if abs(den) <= EPS_GEOM * max(math.hypot(rx, ry), math.hypot(sx, sy)):
        # parallel: overlap only if collinear
        if _dist_point_segment(q1.x, q1.y, p1.x, p1.y, p2.x, p2.y) > EPS_GEOM \
           and _dist_point_segment(q2.x, q2.y, p1.x, p1.y, p2.x, p2.y) > EPS_GEOM \
           and _dist_point_segment(p1.x, p1.y, q1.x, q1.y, q2.x, q2.y) > EPS_GEOM:
            return None
        r2 = rx * rx + ry * ry
        if r2 == 0.0:
            return _intersect_point(a.vertices[0], b)
        ts = []
        for q in (q1, q2):
            t = ((q.x - p1.x) * rx + (q.y - p1.y) * ry) / r2
            ts.append(t)
        t0 = max(0.0, min(ts))
        t1 = min(1.0, max(ts))
        if t0 > t1:
            return None
        pa = (p1.x + t0 * rx, p1.y + t0 * ry)
        pb = (p1.x + t1 * rx, p1.y + t1 * ry)
        if _dist_point_segment(pa[0], pa[1], q1.x, q1.y, q2.x, q2.y) > EPS_GEOM:
            return None
        return ConvexPolygon.from_points([pa, pb])
    t = ((q1.x - p1.x) * sy - (q1.y - p1.y) * sx) / den
    pt = (p1.x + t * rx, p1.y + t * ry)
    if _dist_point_segment(pt[0], pt[1], p1.x, p1.y, p2.x, p2.y) <= EPS_GEOM \
       and _dist_point_segment(pt[0], pt[1], q1.x, q1.y, q2.x, q2.y) <= EPS_GEOM:
        return ConvexPolygon.point(*pt)
    return None


def _intersect_point(pt: Point2, other: ConvexPolygon) -> ConvexPolygon | None:
    if contains(other, pt):
        return ConvexPolygon((pt,))
    return None


def intersect(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon | None:
    """Exact intersection; None signals disjoint sets (a value, not an error)."""
    if a.is_point:
        return _intersect_point(a.vertices[0], b)
    if b.is_point:
        return _intersect_point(b.vertices[0], a)
    if a.is_segment and b.is_segment:
        return _seg_seg(a, b)
    if a.is_segment:
        return _clip_segment(a, b)
    if b.is_segment:
        return _clip_segment(b, a)
    pts = [(v.x, v.y) for v in a.vertices]
    for i in range(b.n):
        p = b.vertices[i]
        q = b.vertices[(i + 1) % b.n]
        pts = _clip_poly_halfplane(pts, p.x, p.y, q.x, q.y)
        if not pts:
            return None
    return ConvexPolygon.from_points(pts)


# --- outer approximations --------------------------------------------------

def ball_outer_polygon(radius: float, norm: str = "l2",
                       k: int = DEFAULT_BALL_SEGMENTS) -> ConvexPolygon:
    """Convex polygon containing the origin-centered norm ball.

    linf gives the exact square of half-width radius.  l2 gives a regular
    k-gon circumscribed about the disk (apothem == radius), so the polygon
    always covers the disk at the cost of a sec(pi/k)**2 area factor.
    """
    if radius < 0.0:
        raise ValueError("radius must be >= 0")
    if radius <= EPS_GEOM:
        return ConvexPolygon.point(0.0, 0.0)
    if norm == "linf":
        return ConvexPolygon.box(-radius, radius, -radius, radius)
    if norm != "l2":
        raise ValueError(f"unknown norm {norm!r}")
    if k < 4:
        raise ValueError("l2 ball polygon needs k >= 4")
    rc = radius / math.cos(math.pi / k)
    pts = []
    for j in range(k):
        ang = (2 * j + 1) * math.pi / k
        pts.append((rc * math.cos(ang), rc * math.sin(ang)))
    return ConvexPolygon.from_points(pts)


def sector_outer_polygon(angle: AngleInterval, rng: Interval) -> ConvexPolygon:
    """Convex polygon containing the annular sector spanned by angle and rng.

    The outer arc is over-bounded by vertices on the circumscribed arc at
    radius hi / cos(step / 2); the inner arc is bounded by its chord, which
    only adds points of smaller radius.  Requires half_width < pi/2 so the
    sector has a bounded convex superset.
    """
    if angle.half_width >= math.pi / 2.0:
        raise SectorTooWide(f"sector half-width {angle.half_width:.4f} >= pi/2")
    if rng.lo < 0.0:
        raise ValueError("range lower bound must be >= 0")
    r_lo, r_hi = rng.lo, rng.hi
    c = angle.center
    w = angle.half_width
    if r_hi <= EPS_GEOM:
        return ConvexPolygon.point(0.0, 0.0)
    if w <= 1e-15:
        u = (math.cos(c), math.sin(c))
        return ConvexPolygon.from_points([(r_lo * u[0], r_lo * u[1]),
                                          (r_hi * u[0], r_hi * u[1])])
    m = max(2, math.ceil(2.0 * w / _SECTOR_MAX_STEP))
    step = 2.0 * w / m
    rc = r_hi / math.cos(0.5 * step)
    pts: list[tuple[float, float]] = []
    if r_lo > EPS_GEOM:
        pts.append((r_lo * math.cos(c - w), r_lo * math.sin(c - w)))
        pts.append((r_lo * math.cos(c + w), r_lo * math.sin(c + w)))
    else:
        pts.append((0.0, 0.0))
    for j in range(m + 1):
        a = c - w + j * step
        pts.append((rc * math.cos(a), rc * math.sin(a)))
    return ConvexPolygon.from_points(pts)


def angular_hull(p: ConvexPolygon) -> AngleInterval:
    """Smallest arc containing atan2(q.y, q.x) over all q in p.

    Returns the full circle when the origin lies in p (within EPS_GEOM), in
    which case every direction is attainable.
    """
    if contains(p, (0.0, 0.0), EPS_GEOM):
        return FULL_CIRCLE
    angles = [math.atan2(v.y, v.x) for v in p.vertices
              if math.hypot(v.x, v.y) > EPS_GEOM]
    if not angles:
        return FULL_CIRCLE
    if len(angles) == 1:
        return AngleInterval(angles[0], 0.0)
    # origin is outside a convex set: all member angles fit in a half circle,
    # so the complement of the largest gap between vertex angles encloses them
    angles.sort()
    best_gap = TWO_PI - (angles[-1] - angles[0])
    gap_at = len(angles) - 1
    for i in range(len(angles) - 1):
        g = angles[i + 1] - angles[i]
        if g > best_gap:
            best_gap = g
            gap_at = i
    if gap_at == len(angles) - 1:
        lo, hi = angles[0], angles[-1]
    else:
        lo, hi = angles[gap_at + 1], angles[gap_at] + TWO_PI
    return AngleInterval(0.5 * (lo + hi), 0.5 * (hi - lo))


def simplify_outer(p: ConvexPolygon, v_max: int = V_MAX) -> ConvexPolygon:
    """Outer simplification to at most v_max vertices (result contains p).

    Repeatedly removes the edge whose deletion (extending its neighbours to
    their intersection) adds the least area.
    """
    if v_max < 3:
        raise ValueError("v_max must be >= 3")
    verts = [(v.x, v.y) for v in p.vertices]
    while len(verts) > v_max:
        n = len(verts)
        best_cost = math.inf
        best = None
        for i in range(n):
            a = verts[i - 1]
            b = verts[i]
            c = verts[(i + 1) % n]
            d = verts[(i + 2) % n]
            ux, uy = b[0] - a[0], b[1] - a[1]
            vx, vy = d[0] - c[0], d[1] - c[1]
            den = ux * vy - uy * vx
            if den <= 1e-15 * max(math.hypot(ux, uy) * math.hypot(vx, vy), 1e-300):
                continue  # edges parallel or diverging: no finite outer point
            t = ((c[0] - b[0]) * vy - (c[1] - b[1]) * vx) / den
            if t < 0.0:
                continue
            w = (b[0] + t * ux, b[1] + t * uy)
            cost = 0.5 * abs((c[0] - b[0]) * (w[1] - b[1])
                             - (w[0] - b[0]) * (c[1] - b[1]))
            if cost < best_cost:
                best_cost = cost
                best = (i, w)
        if best is None:
            # degenerate fallback: the bounding box is always a superset
            x0, x1, y0, y1 = p.bbox()
            return ConvexPolygon.box(x0, x1, y0, y1)
        i, w = best
        j = (i + 1) % len(verts)
        verts[i] = w
        verts.pop(j)
    return ConvexPolygon.from_points(verts)


# --- sampling (tests, particle initialization) ------------------------------

def sample_uniform(p: ConvexPolygon, rng: np.random.Generator,
                   size: int = 1) -> np.ndarray:
    """Uniform samples from a polygon as an (size, 2) array.

    Points and segments are sampled along their support.
    """
    v = np.asarray(p.vertices, dtype=float)
    if len(v) == 1:
        return np.repeat(v, size, axis=0)
    if len(v) == 2:
        t = rng.random(size)[:, None]
        return v[0] + t * (v[1] - v[0])
    anchor = v[0]
    tri_a = v[1:-1] - anchor
    tri_b = v[2:] - anchor
    areas = 0.5 * np.abs(tri_a[:, 0] * tri_b[:, 1] - tri_a[:, 1] * tri_b[:, 0])
    total = areas.sum()
    if total <= 0.0:
        idx = rng.integers(0, len(v), size)
        return v[idx]
    which = rng.choice(len(areas), size=size, p=areas / total)
    r1 = rng.random(size)
    r2 = rng.random(size)
    flip = r1 + r2 > 1.0
    r1[flip] = 1.0 - r1[flip]
    r2[flip] = 1.0 - r2[flip]
    return anchor + r1[:, None] * tri_a[which] + r2[:, None] * tri_b[which]
