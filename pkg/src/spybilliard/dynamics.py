"""Pointwise dynamics: the section map, orbit tracing, preimages, attractor.

State convention (one-sided mirrors make this worth spelling out):

* A :class:`PhasePoint` is the state *after* the interaction at its side: the
  stored direction is outgoing.  On a wall it points into the polygon.  On a
  mirror face - either label - it points into the reflective half-plane (the
  side the stored normal points to): a reflective bounce turns the arriving
  direction into that half-plane, and a transparent pass already travels into
  it.  The two faces of one mirror therefore carry geometrically identical
  outgoing states distinguished only by the label, which is exactly why a
  backward walk through a mirror can branch two ways.
* ``position`` is the affine fraction in (0, 1) along the side's segment from
  its first endpoint (exact; arc length would leave the rational field on
  slanted sides).
* Hitting any wall vertex or mirror endpoint, or meeting a mirror tangentially,
  is a singular event: the map is undefined there and tracing stops with a
  ``vertex`` termination.

The attractor layer machinery approximates the nested forward images of the
full phase space: a state survives ``n`` backward steps exactly when it is in
the image of the n-th iterate.  Cells are computed exactly (via the beam
tracer) in dual line coordinates; measures are estimated by Monte Carlo under
the product measure uniform in (position fraction, squashed direction ratio)
per side, with one shared sample set across depths so the estimates are
monotone by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .numbers import Q, as_float, sgn
from .geometry import (
    HalfPlane,
    Isometry,
    NoHit,
    Point,
    RayHit,
    Segment,
    Vec,
    VertexHit,
    clip_region,
    cross2,
    dot2,
    region_nonempty_interior,
    region_subtract,
    sub,
    swap_chart_pieces,
    ray_cast,
)
from .table import (
    MIRROR_REFLECTIVE,
    MIRROR_TRANSPARENT,
    WALL,
    SideLabel,
    Table,
)
from . import svg as _svg

__all__ = [
    "PhasePoint",
    "OrbitSegment",
    "PreimageSet",
    "phase_point",
    "billiard_map",
    "trace_orbit",
    "orbit_word",
    "preimages",
    "survives_backward",
    "AttractorLayer",
    "attractor_layers",
    "cells_nested",
    "orbit_to_csv",
    "orbit_to_svg",
    "unfolded_orbit_svg",
    "random_phase_point",
]

TERM_OK = "ok"
TERM_VERTEX = "vertex"


@dataclass(frozen=True)
class PhasePoint:
    """Outgoing state on a side: label, affine position in (0,1), direction."""

    label: SideLabel
    position: object
    direction: Vec


@dataclass(frozen=True)
class OrbitSegment:
    """A traced orbit: visited states, code of sides hit, termination status.

    ``code`` lists the labels of the sides *hit after leaving the start*, so
    ``len(code) == len(points) - 1``; the word of the orbit in the symbolic
    language additionally includes the starting side (see :func:`orbit_word`).
    """

    points: tuple
    code: tuple
    termination: str
    stop_point: Optional[Point] = None


@dataclass(frozen=True)
class PreimageSet:
    """Result of a backward step: 0, 1 or 2 states, or a singular backward ray."""

    points: tuple
    backward_vertex: Optional[Point] = None

    @property
    def singular(self) -> bool:
        return self.backward_vertex is not None


def _wall_inward_normal(table: Table, wall_id: int) -> Vec:
    seg = table.walls[wall_id]
    d = sub(seg.b, seg.a)
    return Vec(-d[1], d[0])  # polygon is counterclockwise: interior on the left


def phase_point(table: Table, label_name: str, position, direction) -> PhasePoint:
    """Validated PhasePoint constructor (raises ValueError on bad states)."""
    label = table.label_by_name.get(label_name)
    if label is None:
        raise ValueError(f"unknown side label {label_name!r}")
    position = Q(position) if not hasattr(position, "certified_sign") else position
    d = Vec(direction[0], direction[1])
    if sgn(d[0]) == 0 and sgn(d[1]) == 0:
        raise ValueError("direction must be nonzero")
    if sgn(position) <= 0 or sgn(position - 1) >= 0:
        raise ValueError("position must lie strictly inside (0, 1)")
    if label.kind == WALL:
        inward = _wall_inward_normal(table, label.wall_id)
        side_sign = sgn(dot2(d, inward))
        if side_sign <= 0:
            raise ValueError("wall state must point strictly into the polygon")
    else:
        normal = table.mirrors[label.mirror_id].normal
        if sgn(dot2(d, normal)) <= 0:
            raise ValueError(
                "mirror state must point strictly into the reflective half-plane"
            )
    return PhasePoint(label, position, d)


def _reflect_vec(seg: Segment, v: Vec) -> Vec:
    d = sub(seg.b, seg.a)
    n2 = dot2(d, d)
    m00 = (d[0] * d[0] - d[1] * d[1]) / n2
    m01 = (2 * d[0] * d[1]) / n2
    return Vec(m00 * v[0] + m01 * v[1], m01 * v[0] - m00 * v[1])


def billiard_map(table: Table, x: PhasePoint):
    """One forward step: next outgoing state, or a :class:`VertexHit`."""
    origin = table.point_at(x.label, x.position)
    result = ray_cast(table.obstacles, origin, x.direction, table.singular_points)
    if isinstance(result, VertexHit):
        return result
    if isinstance(result, NoHit):
        raise RuntimeError(
            "ray escaped the table: geometry inconsistency "
            f"(from {x.label.name} at {x.position})"
        )
    kind, idx = result.payload
    if kind == "wall":
        seg = table.walls[idx]
        out = _reflect_vec(seg, x.direction)
        return PhasePoint(table.wall_label(idx), result.s, out)
    mirror = table.mirrors[idx]
    refl_label, trans_label = table.mirror_labels(idx)
    arrival = sgn(dot2(x.direction, mirror.normal))
    # arrival == 0 cannot happen: a direction parallel to the mirror never
    # crosses it transversally (ray_cast skips parallels).
    if arrival < 0:
        out = _reflect_vec(mirror.seg, x.direction)
        return PhasePoint(refl_label, result.s, out)
    return PhasePoint(trans_label, result.s, x.direction)


def trace_orbit(table: Table, x: PhasePoint, n: int) -> OrbitSegment:
    """Iterate the section map up to ``n`` steps, accumulating the code."""
    points = [x]
    code = []
    stop = None
    termination = TERM_OK
    for _ in range(n):
        step = billiard_map(table, points[-1])
        if isinstance(step, VertexHit):
            termination = TERM_VERTEX
            stop = step.point
            break
        points.append(step)
        code.append(step.label.name)
    return OrbitSegment(tuple(points), tuple(code), termination, stop)


def orbit_word(orbit: OrbitSegment) -> tuple:
    """The orbit's word in the symbolic language: starting side + sides hit."""
    return (orbit.points[0].label.name, *orbit.code)


def _arrival_direction(table: Table, y: PhasePoint) -> Vec:
    """Flight direction along the segment that arrives at y's interaction."""
    if y.label.kind == WALL:
        return _reflect_vec(table.walls[y.label.wall_id], y.direction)
    mirror = table.mirrors[y.label.mirror_id]
    if y.label.kind == MIRROR_REFLECTIVE:
        return _reflect_vec(mirror.seg, y.direction)
    return y.direction


def preimages(table: Table, y: PhasePoint) -> PreimageSet:
    """All states x with billiard_map(x) == y (0, 1, or 2 of them).

    The backward ray from y travels against the arrival direction.  Ending on
    a wall gives one preimage.  Ending on a mirror gives two when the arrival
    direction points into the reflective half-plane (the flight could have
    been emitted there by a reflective bounce *or* a transparent pass - the
    two labels), and none otherwise (no legal interaction emits a flight into
    the transparent half-plane, so y is simply not in the forward image).
    """
    d_in = _arrival_direction(table, y)
    origin = table.point_at(y.label, y.position)
    back = Vec(-d_in[0], -d_in[1])
    result = ray_cast(table.obstacles, origin, back, table.singular_points)
    if isinstance(result, VertexHit):
        return PreimageSet((), backward_vertex=result.point)
    if isinstance(result, NoHit):
        raise RuntimeError("backward ray escaped the table: geometry inconsistency")
    kind, idx = result.payload
    if kind == "wall":
        seg = table.walls[idx]
        inward = _wall_inward_normal(table, idx)
        if sgn(dot2(d_in, inward)) <= 0:
            return PreimageSet(())
        return PreimageSet((PhasePoint(table.wall_label(idx), result.s, d_in),))
    mirror = table.mirrors[idx]
    if sgn(dot2(d_in, mirror.normal)) <= 0:
        return PreimageSet(())
    refl_label, trans_label = table.mirror_labels(idx)
    return PreimageSet(
        (
            PhasePoint(refl_label, result.s, d_in),
            PhasePoint(trans_label, result.s, d_in),
        )
    )


def survives_backward(table: Table, y: PhasePoint, n: int) -> Optional[bool]:
    """Whether y lies in the n-th forward image of the phase space.

    True/False when decidable; None when the answer would require continuing
    through a singular (vertex-hitting) backward ray, which happens only on a
    measure-zero set of states.
    """
    depth, singular = max_backward_depth(table, y, n)
    if depth >= n:
        return True
    return None if singular else False


def max_backward_depth(table: Table, y: PhasePoint, n_cap: int) -> tuple:
    """Deepest backward chain from y, capped at n_cap; also whether any branch
    ended in a singular backward ray before reaching the cap."""
    best = 0
    singular = False
    stack = [(y, 0)]
    while stack:
        state, depth = stack.pop()
        pre = preimages(table, state)
        if pre.singular:
            singular = True
        for p in pre.points:
            nd = depth + 1
            if nd > best:
                best = nd
                if best >= n_cap:
                    return best, singular
            stack.append((p, nd))
    return best, singular


# ---------------------------------------------------------------------------
# Attractor layers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttractorLayer:
    """Depth-n snapshot: per-label exact cells plus a Monte Carlo measure.

    ``cells`` maps label name -> tuple of DualRegion (cells in the canonical
    table frame of the arrival side; empty tuple when nothing survives).
    ``measure`` maps label name -> surviving sample fraction; ``surviving``
    maps label name -> count; ``sample_count`` is the per-label sample budget.
    Depth 0 has every cell full and measure 1.
    """

    depth: int
    cells: dict
    measure: dict
    surviving: dict
    sample_count: int
    standard_error: dict


def random_phase_point(table: Table, rng: random.Random) -> PhasePoint:
    """Sample under the per-side product measure used for attractor areas.

    position ~ uniform(0,1); direction from z ~ uniform(-1,1) mapped to the
    slope ratio zeta = z/(1-|z|) of the tangential to normal component, so the
    whole inward half-circle is covered by a fixed smooth reparameterization.
    Rational kernel only (samples are exact rationals).
    """
    label = table.labels[rng.randrange(len(table.labels))]
    position = Q(rng.randrange(1, 2**40)) / Q(2**40)
    z = Q(rng.randrange(-(2**40) + 1, 2**40)) / Q(2**40)
    zeta = z / (1 - abs(z))
    seg = table.segment_of(label)
    tangent = sub(seg.b, seg.a)
    if label.kind == WALL:
        normal = _wall_inward_normal(table, label.wall_id)
    else:
        normal = table.mirrors[label.mirror_id].normal
    d = Vec(normal[0] + zeta * tangent[0], normal[1] + zeta * tangent[1])
    return PhasePoint(label, position, d)


def attractor_layers(
    table: Table,
    n_max: int,
    samples: int = 2000,
    seed: int = 0,
    exact_depth: Optional[int] = None,
) -> list:
    """Layers 0..n_max of the nested forward images.

    Monte Carlo membership uses one shared sample set for all depths (so the
    per-label measures are non-increasing by construction); exact cells are
    computed through the beam tracer up to ``exact_depth`` (default: min(n_max,
    3)) in the rational kernel.
    """
    from . import tracing  # deferred: heavy machinery only when needed

    rng = random.Random(seed)
    pts = [random_phase_point(table, rng) for _ in range(samples)]
    # Largest depth each sample survives to (one backward tree per sample,
    # shared by every layer: per-sample membership is monotone by construction).
    horizons = [max_backward_depth(table, p, n_max)[0] for p in pts]

    if exact_depth is None:
        exact_depth = min(n_max, 4)

    exact_cells: dict = {0: {lab.name: None for lab in table.labels}}
    if table.kernel == "rational":
        for n in range(1, exact_depth + 1):
            exact_cells[n] = tracing.terminal_cells(table, n)

    layers = []
    label_names = [lab.name for lab in table.labels]
    per_label_samples: dict = {name: 0 for name in label_names}
    for p in pts:
        per_label_samples[p.label.name] += 1
    for n in range(n_max + 1):
        surviving = {name: 0 for name in label_names}
        for p, horizon in zip(pts, horizons):
            if horizon >= n:
                surviving[p.label.name] += 1
        measure = {}
        stderr = {}
        for name in label_names:
            total = per_label_samples[name]
            k = surviving[name]
            frac = k / total if total else 0.0
            measure[name] = frac
            stderr[name] = (frac * (1 - frac) / total) ** 0.5 if total else 0.0
        cells = exact_cells.get(n)
        if cells is None and n == 0:
            cells = {name: None for name in label_names}
        layers.append(
            AttractorLayer(
                depth=n,
                cells=cells if cells is not None else {},
                measure=measure,
                surviving=surviving,
                sample_count=samples,
                standard_error=stderr,
            )
        )
    return layers


def _covers_in_chart(cells: Sequence, chart: str, sense: int, u_bound) -> list:
    """Re-express ``cells`` so each usable cover matches (chart, sense).

    Same-chart same-sense cells pass through.  Other cells are offered via
    their other-chart pieces, but only the part with ``|u| >= 1/u_bound``:
    the coordinate swap sends u to 1/u, so that is exactly the part landing
    within ``|u| <= u_bound`` — the slope range of the piece being covered —
    and clipping first keeps the swap away from the u = 0 seam (where a
    touching cover would otherwise map to an unbounded set).
    """
    out = []
    for c in cells:
        if c.chart == chart and c.sense == sense:
            out.append(c)
        if u_bound is None:
            continue
        for axis_sign in (1, -1):
            # axis_sign * u >= 1/u_bound  <=>  -axis_sign * u <= -1/u_bound
            clipped = clip_region(
                c, HalfPlane(Q(-axis_sign), Q(0), -1 / u_bound)
            )
            if not region_nonempty_interior(clipped):
                continue
            for piece in swap_chart_pieces(clipped):
                if piece.chart == chart and piece.sense == sense:
                    out.append(piece)
    return out


def cells_nested(inner: dict, outer: dict) -> list:
    """Exact containment check between two per-label cell dictionaries.

    ``inner`` and ``outer`` map label name -> tuple of DualRegion, or ``None``
    for the full state space (depth-0 convention).  Returns a list of
    violation descriptions; an empty list certifies that every inner cell is
    covered by the union of the outer cells of the same label.
    """
    violations = []
    for name, pieces in inner.items():
        if pieces is None:
            continue
        cover_cells = outer.get(name)
        if cover_cells is None:
            continue  # full state space covers everything
        for i, piece in enumerate(pieces):
            u_bound = None
            for (u, _v) in piece.verts:
                mag = abs(u)
                if sgn(mag) > 0 and (u_bound is None or mag > u_bound):
                    u_bound = mag
            covers = _covers_in_chart(cover_cells, piece.chart, piece.sense, u_bound)
            rest = region_subtract(piece, covers)
            if rest:
                violations.append(
                    f"{name}[{i}] ({piece.chart}{piece.sense:+d}): "
                    f"{len(rest)} uncovered piece(s)"
                )
    return violations


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def orbit_to_csv(table: Table, orbit: OrbitSegment) -> str:
    """CSV rows: step, side label, position fraction, point x/y, direction."""
    lines = ["step,side,position,x,y,dx,dy"]
    for i, p in enumerate(orbit.points):
        pt = table.point_at(p.label, p.position)
        lines.append(
            f"{i},{p.label.name},{_csv_num(p.position)},{_csv_num(pt[0])},"
            f"{_csv_num(pt[1])},{_csv_num(p.direction[0])},{_csv_num(p.direction[1])}"
        )
    lines.append(f"# termination,{orbit.termination}")
    return "\n".join(lines) + "\n"


def _csv_num(x) -> str:
    return repr(as_float(x))


def orbit_points(table: Table, orbit: OrbitSegment) -> list:
    pts = [table.point_at(p.label, p.position) for p in orbit.points]
    if orbit.stop_point is not None:
        pts.append(orbit.stop_point)
    return pts


def orbit_to_svg(table: Table, orbit: OrbitSegment) -> str:
    return _svg.orbit_svg(table, orbit_points(table, orbit))


def unfolded_orbit_svg(table: Table, orbit: OrbitSegment) -> str:
    """Render the orbit straightened by unfolding: reflections unfold the
    polygon copy, transparent passes keep it."""
    frames = [Isometry.identity()]
    scenes = [tuple(table.vertices)]
    pts = [table.point_at(orbit.points[0].label, orbit.points[0].position)]
    for p in orbit.points[1:]:
        seg = table.segment_of(p.label)
        if p.label.kind in (WALL, MIRROR_REFLECTIVE):
            # Unfold: compose with the reflection across the side's line as
            # seen in the current unfolded frame (conjugated table reflection).
            a = frames[-1].apply(seg.a)
            b = frames[-1].apply(seg.b)
            refl = Isometry.reflection(a, sub(b, a))
            frame = refl.compose(frames[-1])
            frames.append(frame)
            scenes.append(tuple(frame.apply(v) for v in table.vertices))
        else:
            frames.append(frames[-1])
        pts.append(frames[-1].apply(table.point_at(p.label, p.position)))
    if orbit.stop_point is not None:
        pts.append(frames[-1].apply(orbit.stop_point))
    return _svg.unfolded_svg(scenes, pts)
