"""Exact planar geometry: points, isometries, ray casting and dual line regions.

Conventions used throughout the package:

* Points and vectors are pairs of exact scalars (see :mod:`spybilliard.numbers`).
  Directions are always vectors, never angles.
* An :class:`Isometry` is a 2x2 matrix with determinant +-1 plus a translation.
  Reflections across arbitrary rational lines stay rational because the matrix
  is scaled by 1/(dx^2+dy^2).
* Dual line space: a non-vertical-ish line is written ``y = u x + v`` in the
  X-major chart and ``x = u y + v`` in the Y-major chart; together with a
  travel sense (+1 along the increasing major axis) four chart cones cover
  every direction with |u| <= 1.  "The line crosses segment AB" is the pair of
  linear constraints ``res(A) >= 0 >= res(B)`` (or the mirrored pattern) on the
  residual ``res(P) = P_y - u P_x - v`` (X chart; coordinates swapped in the
  Y chart).  A :class:`DualRegion` is a convex polygon of (u, v) pairs carrying
  the half-plane list that produced it.
* Isometries act on dual coordinates as homographies; this is used to move
  regions between unfolding frames and to re-chart by an exact quarter turn.

Everything here is pure and kernel-generic: the same code path runs over exact
rationals and over certified interval scalars.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .numbers import Q, sgn

__all__ = [
    "Point",
    "Vec",
    "Segment",
    "Isometry",
    "RayHit",
    "VertexHit",
    "NoHit",
    "ray_cast",
    "DualRegion",
    "HalfPlane",
    "region_from_box",
    "region_from_verts",
    "clip_region",
    "split_region_by_line",
    "restrict_to_portal",
    "region_nonempty_interior",
    "region_area2",
    "region_centroid",
    "region_contains",
    "transform_region",
    "rechart_quarter_turn",
    "swap_chart_pieces",
    "region_subtract",
    "cross2",
    "dot2",
    "reflect_across",
    "polygon_area2",
    "point_on_segment",
    "point_in_polygon",
    "segment_meeting",
]


class Point(NamedTuple):
    x: object
    y: object


class Vec(NamedTuple):
    x: object
    y: object


class Segment(NamedTuple):
    a: Point
    b: Point


def cross2(p: Sequence, q: Sequence):
    return p[0] * q[1] - p[1] * q[0]


def dot2(p: Sequence, q: Sequence):
    return p[0] * q[0] + p[1] * q[1]


def sub(p: Sequence, q: Sequence) -> Vec:
    return Vec(p[0] - q[0], p[1] - q[1])


# ---------------------------------------------------------------------------
# Isometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Isometry:
    """Affine isometry ``p -> M p + t`` with ``M`` of determinant +-1."""

    m00: object
    m01: object
    m10: object
    m11: object
    tx: object
    ty: object

    @staticmethod
    def identity() -> "Isometry":
        one, zero = Q(1), Q(0)
        return Isometry(one, zero, zero, one, zero, zero)

    @staticmethod
    def reflection(anchor: Sequence, direction: Sequence) -> "Isometry":
        """Reflection across the line through ``anchor`` with ``direction``."""
        dx, dy = direction[0], direction[1]
        n2 = dx * dx + dy * dy
        m00 = (dx * dx - dy * dy) / n2
        m01 = (2 * dx * dy) / n2
        m10 = m01
        m11 = -m00
        ax, ay = anchor[0], anchor[1]
        tx = ax - (m00 * ax + m01 * ay)
        ty = ay - (m10 * ax + m11 * ay)
        return Isometry(m00, m01, m10, m11, tx, ty)

    @staticmethod
    def quarter_turn() -> "Isometry":
        """Exact rotation by a quarter turn: (x, y) -> (-y, x)."""
        one, zero = Q(1), Q(0)
        return Isometry(zero, -one, one, zero, zero, zero)

    def apply(self, p: Sequence) -> Point:
        x, y = p[0], p[1]
        return Point(self.m00 * x + self.m01 * y + self.tx, self.m10 * x + self.m11 * y + self.ty)

    def apply_vec(self, v: Sequence) -> Vec:
        x, y = v[0], v[1]
        return Vec(self.m00 * x + self.m01 * y, self.m10 * x + self.m11 * y)

    def apply_segment(self, s: Segment) -> Segment:
        return Segment(self.apply(s.a), self.apply(s.b))

    def compose(self, other: "Isometry") -> "Isometry":
        """Return self o other (apply ``other`` first)."""
        a = self
        b = other
        return Isometry(
            a.m00 * b.m00 + a.m01 * b.m10,
            a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10,
            a.m10 * b.m01 + a.m11 * b.m11,
            a.m00 * b.tx + a.m01 * b.ty + a.tx,
            a.m10 * b.tx + a.m11 * b.ty + a.ty,
        )

    def det(self):
        return self.m00 * self.m11 - self.m01 * self.m10

    def inverse(self) -> "Isometry":
        d = self.det()
        i00 = self.m11 / d
        i01 = -self.m01 / d
        i10 = -self.m10 / d
        i11 = self.m00 / d
        return Isometry(
            i00, i01, i10, i11,
            -(i00 * self.tx + i01 * self.ty),
            -(i10 * self.tx + i11 * self.ty),
        )

    def key(self):
        return (self.m00, self.m01, self.m10, self.m11, self.tx, self.ty)


# ---------------------------------------------------------------------------
# Ray casting
# ---------------------------------------------------------------------------


class RayHit(NamedTuple):
    """First transversal hit: payload of the segment, hit point, ray and segment parameters."""

    payload: object
    point: Point
    t: object
    s: object


class VertexHit(NamedTuple):
    """The ray meets a segment endpoint (or other singular point) first."""

    point: Point
    t: object


class NoHit(NamedTuple):
    """The ray escapes every obstacle (geometry bug inside a closed table)."""


def ray_cast(
    obstacles: Iterable[tuple[Segment, object]],
    origin: Sequence,
    direction: Sequence,
    vertices: Optional[Iterable[Point]] = None,
):
    """Cast a ray and classify the first event.

    ``obstacles`` yields ``(segment, payload)`` pairs.  Returns the first
    strictly-forward transversal interior hit as a :class:`RayHit`, unless a
    singular point (any obstacle endpoint, or an extra point from
    ``vertices``) lies on the ray at or before that hit, in which case a
    :class:`VertexHit` wins.  Returns :class:`NoHit` when nothing is met.
    Exact tangencies and collinear overlaps surface as vertex hits because the
    ray then passes through segment endpoints.
    """
    ox, oy = origin[0], origin[1]
    dx, dy = direction[0], direction[1]
    best: Optional[RayHit] = None
    singular_pts: dict = {}

    def note_vertex(p):
        rx, ry = p[0] - ox, p[1] - oy
        if sgn(dy * rx - dx * ry) == 0:
            t_num = rx * dx + ry * dy
            if sgn(t_num) > 0:
                t = t_num / (dx * dx + dy * dy)
                key = (p[0], p[1])
                if key not in singular_pts or t < singular_pts[key][1]:
                    singular_pts[key] = (Point(p[0], p[1]), t)

    for seg, payload in obstacles:
        c, d = seg.a, seg.b
        ex, ey = d[0] - c[0], d[1] - c[1]
        denom = dx * ey - dy * ex
        note_vertex(c)
        note_vertex(d)
        if sgn(denom) == 0:
            continue  # parallel (collinear overlap handled via endpoints)
        rx, ry = c[0] - ox, c[1] - oy
        t = (rx * ey - ry * ex) / denom
        if sgn(t) <= 0:
            continue
        s = (rx * dy - ry * dx) / denom
        if sgn(s) <= 0 or sgn(s - 1) >= 0:
            continue
        if best is None or t < best.t:
            hit_pt = Point(c[0] + s * ex, c[1] + s * ey)
            best = RayHit(payload, hit_pt, t, s)

    if vertices is not None:
        for p in vertices:
            note_vertex(p)

    first_vertex = None
    for point, t in singular_pts.values():
        if first_vertex is None or t < first_vertex.t:
            first_vertex = VertexHit(point, t)

    if first_vertex is not None and (best is None or first_vertex.t <= best.t):
        return first_vertex
    if best is not None:
        return best
    return NoHit()


# ---------------------------------------------------------------------------
# Dual regions
# ---------------------------------------------------------------------------


class HalfPlane(NamedTuple):
    """Constraint ``a*u + b*v <= c`` on dual coordinates."""

    a: object
    b: object
    c: object


CHART_X = "x"
CHART_Y = "y"


@dataclass(frozen=True)
class DualRegion:
    """Convex region of lines in one chart, as polygon plus constraint trail.

    ``verts`` realises the intersection of ``halfplanes`` (plus the initial
    box); operations keep both in sync.  ``sense`` is the travel direction
    along the major axis (+1 increasing).  Regions with empty interior are
    representable (``verts`` shrinks to <3 points or zero area); callers test
    with :func:`region_nonempty_interior`.
    """

    chart: str
    sense: int
    halfplanes: tuple
    verts: tuple

    def with_verts(self, verts) -> "DualRegion":
        return DualRegion(self.chart, self.sense, self.halfplanes, tuple(verts))


def region_from_box(chart: str, sense: int, u0, u1, v0, v1) -> DualRegion:
    verts = ((u0, v0), (u1, v0), (u1, v1), (u0, v1))
    return DualRegion(chart, sense, (), verts)


def _clip_verts(verts, a, b, c):
    """Sutherland-Hodgman clip of a convex polygon by a*u + b*v <= c."""
    if not verts:
        return ()
    out = []
    n = len(verts)
    f = [a * p[0] + b * p[1] - c for p in verts]
    fs = [sgn(x) for x in f]
    for i in range(n):
        j = (i + 1) % n
        pi, pj = verts[i], verts[j]
        if fs[i] <= 0:
            out.append(pi)
        if fs[i] * fs[j] < 0:
            w = f[i] / (f[i] - f[j])
            out.append((pi[0] + w * (pj[0] - pi[0]), pi[1] + w * (pj[1] - pi[1])))
    dedup = []
    for p in out:
        if not dedup or p[0] != dedup[-1][0] or p[1] != dedup[-1][1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0][0] == dedup[-1][0] and dedup[0][1] == dedup[-1][1]:
        dedup.pop()
    return tuple(dedup)


def clip_region(region: DualRegion, hp: HalfPlane) -> DualRegion:
    verts = _clip_verts(region.verts, hp.a, hp.b, hp.c)
    return DualRegion(region.chart, region.sense, region.halfplanes + (hp,), verts)


def split_region_by_line(region: DualRegion, a, b, c) -> tuple[DualRegion, DualRegion]:
    """Split by the line a*u + b*v = c into the <= and >= parts."""
    lo = clip_region(region, HalfPlane(a, b, c))
    hi = clip_region(region, HalfPlane(-a, -b, -c))
    return lo, hi


def line_properly_crosses(region: DualRegion, a, b, c) -> bool:
    """True when the line a*u+b*v=c has region vertices strictly on both sides."""
    saw_pos = saw_neg = False
    for p in region.verts:
        s = sgn(a * p[0] + b * p[1] - c)
        if s > 0:
            saw_pos = True
        elif s < 0:
            saw_neg = True
        if saw_pos and saw_neg:
            return True
    return False


def residual_halfplanes(point: Sequence, nonnegative: bool) -> HalfPlane:
    """Half-plane for ``res(point) >= 0`` (or <= 0) with res = P_y - u P_x - v.

    In chart coordinates the scene is already chart-normalised, so the same
    formula serves both charts.
    """
    px, py = point[0], point[1]
    if nonnegative:
        return HalfPlane(px, Q(1), py)
    return HalfPlane(-px, Q(-1), -py)


def restrict_to_portal(region: DualRegion, portal: Segment, a_side_nonneg: bool) -> DualRegion:
    """Require lines to cross ``portal`` strictly between its endpoints.

    Exactly two half-planes are added; ``a_side_nonneg`` picks the sign
    pattern (residual of the first endpoint nonnegative when True).  An empty
    result is not an error - it means no line in the region crosses the
    portal with the requested pattern.
    """
    region = clip_region(region, residual_halfplanes(portal.a, a_side_nonneg))
    region = clip_region(region, residual_halfplanes(portal.b, not a_side_nonneg))
    return region


def region_area2(region: DualRegion):
    verts = region.verts
    if len(verts) < 3:
        return Q(0)
    acc = None
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        term = verts[i][0] * verts[j][1] - verts[j][0] * verts[i][1]
        acc = term if acc is None else acc + term
    return acc


def region_nonempty_interior(region: DualRegion) -> bool:
    """Exact test for a 2-dimensional interior (nonzero polygon area)."""
    return sgn(region_area2(region)) != 0


def region_centroid(region: DualRegion):
    verts = region.verts
    n = len(verts)
    if n == 0:
        raise ValueError("empty region has no centroid")
    su = sv = None
    for p in verts:
        su = p[0] if su is None else su + p[0]
        sv = p[1] if sv is None else sv + p[1]
    return (su / n, sv / n)


def region_contains(region: DualRegion, uv: Sequence, strict: bool = True) -> bool:
    u, v = uv[0], uv[1]
    for a, b, c in region.halfplanes:
        s = sgn(a * u + b * v - c)
        if s > 0 or (strict and s == 0):
            return False
    return True


def region_from_verts(chart: str, sense: int, verts) -> DualRegion:
    """Convex region from its vertex cycle; halfplanes rebuilt from the edges.

    The cycle is oriented counterclockwise first so the halfplane list and the
    vertex list stay consistent (``region_contains`` trusts the halfplanes).
    """
    pts = []
    for p in verts:
        if not pts or sgn(p[0] - pts[-1][0]) != 0 or sgn(p[1] - pts[-1][1]) != 0:
            pts.append((p[0], p[1]))
    if len(pts) > 1 and sgn(pts[0][0] - pts[-1][0]) == 0 and sgn(pts[0][1] - pts[-1][1]) == 0:
        pts.pop()
    probe = DualRegion(chart, sense, (), tuple(pts))
    if len(pts) < 3:
        return probe
    if sgn(region_area2(probe)) < 0:
        pts.reverse()
    hps = []
    n = len(pts)
    for i in range(n):
        p, q = pts[i], pts[(i + 1) % n]
        a = q[1] - p[1]
        b = -(q[0] - p[0])
        c = a * p[0] + b * p[1]
        hps.append(HalfPlane(a, b, c))
    return DualRegion(chart, sense, tuple(hps), tuple(pts))


# ---------------------------------------------------------------------------
# Homography action of isometries on dual coordinates
# ---------------------------------------------------------------------------


def _homography_coeffs(iso: Isometry):
    """Projective action of an isometry on X-chart dual coordinates.

    [u : v : 1] -> [m10 + m11 u : det*v + (m00 ty - m10 tx) + (m01 ty - m11 tx) u
                    : m00 + m01 u].
    """
    det = iso.det()
    c0 = iso.m00 * iso.ty - iso.m10 * iso.tx
    c1 = iso.m01 * iso.ty - iso.m11 * iso.tx
    return det, c0, c1


def _map_uv(iso: Isometry, det, c0, c1, p):
    u, v = p[0], p[1]
    denom = iso.m00 + iso.m01 * u
    nu = iso.m10 + iso.m11 * u
    nv = det * v + c0 + c1 * u
    return (nu / denom, nv / denom)


_SWAP = Isometry(Q(0), Q(1), Q(1), Q(0), Q(0), Q(0))


def transform_region(region: DualRegion, iso: Isometry) -> list[DualRegion]:
    """Image of a region under an isometry acting on the lines it contains.

    The homography coefficients encode the X-chart action, so for a Y-chart
    region the isometry is conjugated by the coordinate swap first (Y-chart
    coordinates of a line are the X-chart coordinates of the swapped line).
    The projective denominator ``m00 + m01 u`` may change sign across the
    region; when it does the region is split at the critical slope first so
    each returned piece maps to a genuine convex polygon.  The sense of each
    piece is recomputed from a mapped sample direction.
    """
    eff = iso if region.chart == "x" else _SWAP.compose(iso).compose(_SWAP)
    det, c0, c1 = _homography_coeffs(eff)
    pieces = [region]
    if sgn(eff.m01) != 0:
        u_crit = -eff.m00 / eff.m01
        if line_properly_crosses(region, Q(1), Q(0), u_crit):
            lo, hi = split_region_by_line(region, Q(1), Q(0), u_crit)
            pieces = [lo, hi]
    out = []
    for piece in pieces:
        if len(piece.verts) < 3 or sgn(region_area2(piece)) == 0:
            continue
        denom_sign = 0
        for p in piece.verts:
            denom_sign = sgn(eff.m00 + eff.m01 * p[0])
            if denom_sign != 0:
                break
        if denom_sign == 0:
            continue
        mapped = tuple(_map_uv(eff, det, c0, c1, p) for p in piece.verts)
        uc, _ = region_centroid(piece)
        # Chart-coordinate direction (major, minor) of a sample line, pushed
        # through the conjugated map; the major component gives the new sense.
        d_old = (Q(1) * piece.sense, uc * piece.sense)
        d_new = eff.apply_vec(d_old)
        new_sense = sgn(d_new[0])
        if new_sense == 0:
            # Mapped direction is purely minor-axis; the caller is expected
            # to re-chart.  Report with sense from the minor component.
            new_sense = sgn(d_new[1])
        out.append(region_from_verts(piece.chart, new_sense, mapped))
    return out


def rechart_quarter_turn(region: DualRegion) -> list[DualRegion]:
    """Rotate the unfolded scene a quarter turn (exact) and re-express lines.

    Slope u maps to -1/u, so slopes outside the chart bound come back inside.
    The travel sense is recomputed per piece.
    """
    return transform_region(region, Isometry.quarter_turn())


def swap_chart_pieces(region: DualRegion) -> list[DualRegion]:
    """Re-express a region in the other chart: (u, v) -> (1/u, -v/u).

    The map blows up at u = 0 (lines parallel to the other chart's major
    axis), so the region is split there first; pieces lying on u = 0 exactly
    are dropped (they have no representation in the other chart).  The sense
    flips with the sign of u: a chart-X line with direction (s, s*u) travels
    with y-major sense sgn(s*u).
    """
    pieces = [region]
    if line_properly_crosses(region, Q(1), Q(0), Q(0)):
        pieces = list(split_region_by_line(region, Q(1), Q(0), Q(0)))
    other = "y" if region.chart == "x" else "x"
    out = []
    for piece in pieces:
        if len(piece.verts) < 3 or sgn(region_area2(piece)) == 0:
            continue
        uc, _ = region_centroid(piece)
        su = sgn(uc)
        if su == 0:
            continue
        mapped = tuple((1 / u, -v / u) for (u, v) in piece.verts)
        out.append(region_from_verts(other, piece.sense * su, mapped))
    return out


def region_subtract(piece: DualRegion, covers: Sequence) -> list[DualRegion]:
    """Convex parts of ``piece`` not covered by the union of ``covers``.

    All regions must share a chart (callers convert with
    :func:`swap_chart_pieces` first).  Standard convex-difference sweep: for
    each cover, the current remainders are split along the cover's halfplanes,
    keeping the outside parts; the inside intersection is discarded as
    covered.  Exact; returns full-dimensional remainders only.
    """
    work = [piece] if region_nonempty_interior(piece) else []
    for cov in covers:
        if not work:
            break
        if cov.chart != piece.chart:
            raise ValueError("region_subtract needs same-chart regions")
        nxt = []
        for w in work:
            rest = w
            consumed = False
            for a, b, c in cov.halfplanes:
                outside = clip_region(rest, HalfPlane(-a, -b, -c))
                if region_nonempty_interior(outside):
                    nxt.append(outside)
                rest = clip_region(rest, HalfPlane(a, b, c))
                if not region_nonempty_interior(rest):
                    consumed = True
                    break
            # When the sweep exhausts all halfplanes, ``rest`` lies inside the
            # cover and is dropped.
            del consumed
        work = nxt
    return work


# ---------------------------------------------------------------------------
# Polygon primitives
# ---------------------------------------------------------------------------


def reflect_across(line: Segment, p: Sequence) -> Point:
    """Mirror image of ``p`` across the supporting line of ``line``."""
    return Isometry.reflection(line.a, sub(line.b, line.a)).apply(p)


def polygon_area2(verts: Sequence):
    """Twice the signed area (positive for counterclockwise order)."""
    acc = None
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        term = verts[i][0] * verts[j][1] - verts[j][0] * verts[i][1]
        acc = term if acc is None else acc + term
    return acc if acc is not None else Q(0)


def point_on_segment(p: Sequence, seg: Segment) -> bool:
    """True when ``p`` lies on the closed segment (collinear and between)."""
    a, b = seg.a, seg.b
    if sgn(cross2(sub(b, a), sub(p, a))) != 0:
        return False
    d = dot2(sub(b, a), sub(p, a))
    if sgn(d) < 0:
        return False
    return sgn(d - dot2(sub(b, a), sub(b, a))) <= 0


def point_in_polygon(verts: Sequence, p: Sequence) -> int:
    """Exact location of a point: +1 inside, 0 on the boundary, -1 outside.

    Crossing-number walk with the half-open edge rule, so vertices on the
    scan line are counted once.
    """
    n = len(verts)
    for i in range(n):
        if point_on_segment(p, Segment(Point(*verts[i]), Point(*verts[(i + 1) % n]))):
            return 0
    inside = False
    px, py = p[0], p[1]
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        a_above = sgn(a[1] - py) > 0
        b_above = sgn(b[1] - py) > 0
        if a_above == b_above:
            continue
        # Edge straddles the horizontal line through p: x of the crossing.
        t = (py - a[1]) / (b[1] - a[1])
        xc = a[0] + t * (b[0] - a[0])
        if sgn(xc - px) > 0:
            inside = not inside
    return 1 if inside else -1


def segment_meeting(s1: Segment, s2: Segment):
    """Classify how two closed segments meet.

    Returns one of:
      ("disjoint",)
      ("point", t, s)   single common point at parameters t on s1, s on s2
      ("overlap",)      collinear with a common sub-segment of positive length
    """
    a, b = s1.a, s1.b
    c, d = s2.a, s2.b
    e1 = sub(b, a)
    e2 = sub(d, c)
    denom = cross2(e1, e2)
    r = sub(c, a)
    if sgn(denom) != 0:
        t = cross2(r, e2) / denom
        s = cross2(r, e1) / denom
        if sgn(t) < 0 or sgn(t - 1) > 0 or sgn(s) < 0 or sgn(s - 1) > 0:
            return ("disjoint",)
        return ("point", t, s)
    # Parallel.
    if sgn(cross2(e1, r)) != 0:
        return ("disjoint",)
    # Collinear: project s2's endpoints on s1.
    ee = dot2(e1, e1)
    tc = dot2(e1, sub(c, a)) / ee
    td = dot2(e1, sub(d, a)) / ee
    lo, hi = (tc, td) if sgn(td - tc) >= 0 else (td, tc)
    lo2 = lo if sgn(lo) > 0 else Q(0)
    hi2 = hi if sgn(hi - 1) < 0 else Q(1)
    cmp = sgn(hi2 - lo2)
    if cmp < 0:
        return ("disjoint",)
    if cmp == 0:
        s_param = (lo2 - tc) / (td - tc) if sgn(td - tc) != 0 else Q(0)
        return ("point", lo2, s_param)
    return ("overlap",)
