"""Exact beam and fan tracing in the unfolded table's dual line space.

Unfolding turns a billiard orbit into a straight line: instead of reflecting
the orbit at a wall (or at a mirror's reflective face) the table copy is
reflected, and transparent crossings keep the copy.  A *beam* is a convex set
of unfolded lines sharing a code prefix; tracing advances a beam one event at
a time by asking which scene segment its lines hit next.

Chart conventions (see :mod:`spybilliard.geometry`): lines are (u, v) pairs in
the X-major chart (y = ux + v) or Y-major chart (x = uy + v); a travel sense
gives the direction along the major axis.  All chart-level computations below
work on *chart coordinates*: points swapped to (major, minor) so the X-chart
formulas apply verbatim in both charts.  Four root cones (two charts, two
senses, |u| <= 1 each) cover every direction; constraints only shrink a cone,
so a beam never leaves its chart.

The first-hit subdivision rule: within a convex region of lines whose
residual signs at every scene-segment endpoint are constant, the set of
crossed segments is constant and their crossing order along the travel
direction cannot change (a swap would force two scene segments to share the
crossing point, i.e. a scene vertex, and lines through scene vertices bound
the region).  So a region is split by the *shadow lines* of scene vertices
(lines through a vertex are a line in (u, v)), and the first hit of each open
cell is read off one exact sample line at the cell's centroid.

The same rule drives the one-parameter *fan* tracer (lines through a fixed
vertex, or with a fixed slope), used for generalized-diagonal detection,
directional complexity, and - run on the time-reversed table, where a mirror
met from its reflective half-plane branches both ways and one met from the
transparent half-plane terminates - for spy-diagonal families.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from .numbers import Q, sgn
from .geometry import (
    DualRegion,
    HalfPlane,
    Isometry,
    NoHit,
    Point,
    Segment,
    Vec,
    VertexHit,
    clip_region,
    cross2,
    dot2,
    line_properly_crosses,
    point_on_segment,
    ray_cast,
    region_centroid,
    region_from_box,
    region_nonempty_interior,
    restrict_to_portal,
    split_region_by_line,
    sub,
)
from .dynamics import _reflect_vec
from .table import MIRROR_REFLECTIVE, WALL, Table

__all__ = [
    "TraceError",
    "BudgetExceeded",
    "Beam",
    "BeamTracer",
    "terminal_cells",
    "Fan",
    "FanEvent",
    "vertex_root_fans",
    "fan_step",
    "guided_backward_walk",
    "ray_walk",
]

CONES = (("x", 1), ("x", -1), ("y", 1), ("y", -1))


class TraceError(RuntimeError):
    """Exact tracing hit an inconsistency (should never happen on valid input)."""


class BudgetExceeded(RuntimeError):
    """The combinatorial budget was exhausted; carries the complete depth."""

    def __init__(self, message: str, complete_depth: int):
        super().__init__(message)
        self.complete_depth = complete_depth


def chart_point(chart: str, p: Sequence) -> Point:
    """Chart coordinates (major, minor) of a real point."""
    return Point(p[0], p[1]) if chart == "x" else Point(p[1], p[0])


def real_direction(chart: str, sense: int, u):
    """Real direction vector of the chart line with slope u and given sense."""
    if chart == "x":
        return Vec(Q(sense) * 1, sense * u)
    return Vec(sense * u, Q(sense) * 1)


@dataclass(frozen=True)
class SceneEntry:
    """One unfolded obstacle segment in chart coordinates."""

    kind: str  # "wall" | "mirror"
    idx: int
    a: Point  # chart coords
    b: Point
    normal: Vec  # chart coords; walls: inward normal, mirrors: reflective normal


@dataclass(frozen=True)
class Scene:
    entries: tuple
    vertices: tuple  # deduplicated entry endpoints, chart coords


def _residual(p: Point, u, v):
    return p[1] - u * p[0] - v


def _crossing_major(a: Point, b: Point, ra, rb):
    s = ra / (ra - rb)
    return a[0] + s * (b[0] - a[0]), s


@dataclass(frozen=True)
class FirstHit:
    entry: SceneEntry
    tau: object
    s: object  # parameter along the entry segment


def _portal_tau(portal, sense, u, v):
    a, b = portal
    ra = _residual(a, u, v)
    rb = _residual(b, u, v)
    if sgn(ra) == sgn(rb):
        raise TraceError("sample line does not cross its own portal")
    major, _ = _crossing_major(a, b, ra, rb)
    return sense * major


def _collinear_with(portal, p: Point) -> bool:
    a, b = portal
    return sgn(cross2(sub(b, a), sub(p, a))) == 0


def first_hit(scene: Scene, portal, sense: int, u, v, tau_floor=None) -> Optional[FirstHit]:
    """First scene segment crossed strictly after the portal (or tau floor).

    ``portal`` is a chart-coordinate (a, b) pair or None (then ``tau_floor``
    gives the starting travel parameter).  Exact; ties mean the sample line
    passes through a scene vertex and raise :class:`TraceError` (samples are
    taken at cell interiors, where that is impossible).
    """
    if portal is not None:
        tau_floor = _portal_tau(portal, sense, u, v)
    best: Optional[FirstHit] = None
    for entry in scene.entries:
        if portal is not None and _collinear_with(portal, entry.a) and _collinear_with(portal, entry.b):
            continue
        ra = _residual(entry.a, u, v)
        rb = _residual(entry.b, u, v)
        sa, sb = sgn(ra), sgn(rb)
        if sa == 0 or sb == 0 or sa == sb:
            continue
        major, s = _crossing_major(entry.a, entry.b, ra, rb)
        tau = sense * major
        if sgn(tau - tau_floor) <= 0:
            continue
        if best is None:
            best = FirstHit(entry, tau, s)
        else:
            c = sgn(tau - best.tau)
            if c == 0:
                raise TraceError("tie in first-hit ordering (sample through a scene vertex)")
            if c < 0:
                best = FirstHit(entry, tau, s)
    return best


# ---------------------------------------------------------------------------
# Scenes and frames
# ---------------------------------------------------------------------------


class BeamTracer:
    """Shared caches for tracing over one table: scenes per (frame, chart)."""

    def __init__(self, table: Table):
        self.table = table
        self._scenes: dict = {}
        self._reflections: dict = {}
        self._wall_normals = tuple(
            self._inward(i) for i in range(table.q)
        )

    def _inward(self, wall_id: int) -> Vec:
        seg = self.table.walls[wall_id]
        d = sub(seg.b, seg.a)
        return Vec(-d[1], d[0])

    def reflection(self, kind: str, idx: int) -> Isometry:
        key = (kind, idx)
        iso = self._reflections.get(key)
        if iso is None:
            seg = self.table.walls[idx] if kind == "wall" else self.table.mirrors[idx].seg
            iso = Isometry.reflection(seg.a, sub(seg.b, seg.a))
            self._reflections[key] = iso
        return iso

    def scene(self, frame: Isometry, chart: str) -> Scene:
        key = (frame.key(), chart)
        scene = self._scenes.get(key)
        if scene is not None:
            return scene
        entries = []
        for i in range(self.table.q):
            seg = self.table.walls[i]
            entries.append(
                SceneEntry(
                    "wall",
                    i,
                    chart_point(chart, frame.apply(seg.a)),
                    chart_point(chart, frame.apply(seg.b)),
                    chart_point(chart, frame.apply_vec(self._wall_normals[i])),
                )
            )
        for j in range(self.table.r):
            m = self.table.mirrors[j]
            entries.append(
                SceneEntry(
                    "mirror",
                    j,
                    chart_point(chart, frame.apply(m.seg.a)),
                    chart_point(chart, frame.apply(m.seg.b)),
                    chart_point(chart, frame.apply_vec(m.normal)),
                )
            )
        verts = []
        seen = set()
        for e in entries:
            for p in (e.a, e.b):
                k = (p[0], p[1])
                if k not in seen:
                    seen.add(k)
                    verts.append(p)
        scene = Scene(tuple(entries), tuple(verts))
        self._scenes[key] = scene
        return scene


# ---------------------------------------------------------------------------
# 2D beams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Beam:
    """A convex family of unfolded lines sharing a code prefix.

    ``code`` starts with the root side's label name; ``frame`` maps table
    coordinates to the current leg's unfolded coordinates; ``portal`` is the
    chart-coordinate unfolded segment of the last event's side.
    """

    code: tuple
    frame: Isometry
    chart: str
    sense: int
    region: DualRegion
    portal: tuple


def _direction_legal_halfplane(sense: int, normal_c: Vec) -> HalfPlane:
    """dot(direction, normal) >= 0 as a half-plane on (u, v)."""
    # dot = sense * (n_major + u * n_minor) >= 0
    return HalfPlane(Q(-sense) * normal_c[1], Q(0), Q(sense) * normal_c[0])


def _split_by_shadows(region: DualRegion, scene: Scene) -> list:
    cells = [region]
    for p in scene.vertices:
        a, b, c = p[0], Q(1), p[1]
        out = []
        for cell in cells:
            if line_properly_crosses(cell, a, b, c):
                lo, hi = split_region_by_line(cell, a, b, c)
                for piece in (lo, hi):
                    if region_nonempty_interior(piece):
                        out.append(piece)
            else:
                out.append(cell)
        cells = out
    return cells


def root_region_box(table: Table, chart: str, sense: int) -> DualRegion:
    # The v-box only has to contain every line that meets the table (portal
    # constraints then cut it down), so a float overestimate is fine.
    m = 1.0
    for p in table.vertices:
        for c in (p[0], p[1]):
            m = max(m, abs(float(c)))
    v_span = Q(2 * int(m) + 4)
    return region_from_box(chart, sense, Q(-1), Q(1), -v_span, v_span)


def root_beams(tracer: BeamTracer, label) -> list:
    """Root beams for one side label: all outgoing lines from that side."""
    table = tracer.table
    seg = table.segment_of(label)
    if label.kind == WALL:
        normal = tracer._wall_normals[label.wall_id]
    else:
        normal = table.mirrors[label.mirror_id].normal
    frame = Isometry.identity()
    beams = []
    for chart, sense in CONES:
        scene = tracer.scene(frame, chart)
        a_c = chart_point(chart, seg.a)
        b_c = chart_point(chart, seg.b)
        n_c = chart_point(chart, normal)
        box = root_region_box(table, chart, sense)
        box = clip_region(box, _direction_legal_halfplane(sense, n_c))
        if not region_nonempty_interior(box):
            continue
        for cell in _split_by_shadows(box, scene):
            u, v = region_centroid(cell)
            ra = _residual(a_c, u, v)
            rb = _residual(b_c, u, v)
            if sgn(ra) == 0 or sgn(rb) == 0 or sgn(ra) == sgn(rb):
                continue  # sample line misses the open root segment
            region = restrict_to_portal(cell, Segment(a_c, b_c), sgn(ra) > 0)
            if region_nonempty_interior(region):
                beams.append(
                    Beam((label.name,), frame, chart, sense, region, (a_c, b_c))
                )
    return beams


def beam_children(tracer: BeamTracer, beam: Beam) -> list:
    """All one-event continuations of a beam (full-dimensional only)."""
    table = tracer.table
    scene = tracer.scene(beam.frame, beam.chart)
    out = []
    for cell in _split_by_shadows(beam.region, scene):
        u, v = region_centroid(cell)
        hit = first_hit(scene, beam.portal, beam.sense, u, v)
        if hit is None:
            raise TraceError(
                f"beam line escaped the scene (code {'.'.join(beam.code)})"
            )
        entry = hit.entry
        ra = _residual(entry.a, u, v)
        region = restrict_to_portal(cell, Segment(entry.a, entry.b), sgn(ra) > 0)
        if not region_nonempty_interior(region):
            continue
        portal = (entry.a, entry.b)
        if entry.kind == "wall":
            letter = table.wall_label(entry.idx).name
            frame = beam.frame.compose(tracer.reflection("wall", entry.idx))
            out.append(
                Beam(beam.code + (letter,), frame, beam.chart, beam.sense, region, portal)
            )
        else:
            refl_label, trans_label = table.mirror_labels(entry.idx)
            dsign = sgn(beam.sense * (entry.normal[0] + u * entry.normal[1]))
            if dsign == 0:
                raise TraceError("tangential mirror crossing inside an open cell")
            if dsign < 0:
                frame = beam.frame.compose(tracer.reflection("mirror", entry.idx))
                out.append(
                    Beam(
                        beam.code + (refl_label.name,),
                        frame,
                        beam.chart,
                        beam.sense,
                        region,
                        portal,
                    )
                )
            else:
                out.append(
                    Beam(
                        beam.code + (trans_label.name,),
                        beam.frame,
                        beam.chart,
                        beam.sense,
                        region,
                        portal,
                    )
                )
    return out


def trace_beams(
    table: Table,
    n_letters: int,
    root_labels: Optional[Iterable] = None,
    budget: int = 10_000_000,
) -> list:
    """Breadth-first beam levels: level k holds beams with k+1 code letters.

    Returns a list of beam lists.  Raises :class:`BudgetExceeded` (carrying
    the deepest complete level) when the total beam count passes ``budget``.
    """
    tracer = BeamTracer(table)
    if root_labels is None:
        root_labels = [
            lab for lab in table.labels if lab.kind in (WALL, MIRROR_REFLECTIVE)
        ]
    level = []
    for lab in root_labels:
        level.extend(root_beams(tracer, lab))
    levels = [level]
    total = len(level)
    for depth in range(1, n_letters):
        nxt = []
        for beam in levels[-1]:
            nxt.extend(beam_children(tracer, beam))
        total += len(nxt)
        if total > budget:
            raise BudgetExceeded(
                f"beam budget {budget} exceeded at level {depth}", depth - 1
            )
        levels.append(nxt)
    return levels


def terminal_cells(table: Table, n_events: int, budget: int = 10_000_000) -> dict:
    """Exact per-label cells of the n-th forward image of the phase space.

    Each beam with ``n_events`` events is mapped back through the inverse of
    its final frame, giving the outgoing-line footprint on its last side in
    canonical table coordinates.  Returns label name -> tuple of DualRegion.
    The two faces of a mirror are distinct layers: a state labeled with the
    transparent face needs a history whose last event was a transparent
    crossing, which is a strictly smaller set than for the reflective twin.
    """
    root_labels = None
    if n_events == 0:
        root_labels = list(table.labels)  # level 0 is the full state space
    levels = trace_beams(table, n_events + 1, root_labels=root_labels, budget=budget)
    from .geometry import transform_region

    cells: dict = {lab.name: [] for lab in table.labels}
    for beam in levels[-1]:
        inv = beam.frame.inverse()
        pieces = transform_region(beam.region, inv)
        last = beam.code[-1]
        for piece in pieces:
            if region_nonempty_interior(piece):
                cells[last].append(piece)
    return {k: tuple(v) for k, v in cells.items()}


# ---------------------------------------------------------------------------
# 1D fans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fan:
    """A one-parameter family of unfolded lines: (u, v) affine in p in [lo, hi].

    ``portal`` as in beams; for vertex-rooted fans it is None and
    ``tau_floor`` holds the travel parameter of the source vertex.
    """

    code: tuple
    frame: Isometry
    chart: str
    sense: int
    u0: object
    du: object
    v0: object
    dv: object
    lo: object
    hi: object
    portal: Optional[tuple]
    tau_floor: Optional[object]

    def uv(self, p):
        return (self.u0 + self.du * p, self.v0 + self.dv * p)


@dataclass(frozen=True)
class FanEvent:
    """What one fan cell does next: continue, die, branch, or meet vertices."""

    kind: str  # "children" | "dead"
    children: tuple
    mirror_branch: Optional[tuple]  # (mirror_id, lo, hi) when a reversed-table
    # cell meets a mirror from its reflective half-plane (spy-family site)
    vertex_params: tuple  # (p, chart vertex) incidences inside [lo, hi]


def _fan_residual_root(fan: Fan, p_point: Point):
    """Parameter where the fan line passes through the given chart point."""
    # res(p) = P_y - u(p) P_x - v(p) = (P_y - u0 P_x - v0) - p (du P_x + dv)
    c0 = p_point[1] - fan.u0 * p_point[0] - fan.v0
    c1 = fan.du * p_point[0] + fan.dv
    if sgn(c1) == 0:
        return None  # constant residual: either every line passes (c0=0) or none
    return c0 / c1


def _fan_cells(fan: Fan, scene: Scene) -> list:
    cuts = [fan.lo, fan.hi]
    for p_point in scene.vertices:
        root = _fan_residual_root(fan, p_point)
        if root is not None and sgn(root - fan.lo) > 0 and sgn(fan.hi - root) > 0:
            cuts.append(root)
    uniq = []
    for c in sorted(cuts):
        if not uniq or sgn(c - uniq[-1]) != 0:
            uniq.append(c)
    return [(uniq[i], uniq[i + 1]) for i in range(len(uniq) - 1)]


def fan_step(
    tracer: BeamTracer,
    fan: Fan,
    reversed_mirrors: bool = False,
) -> list:
    """Advance a fan one event; returns (cell_fan, FirstHit or None) pairs
    wrapped as FanEvent-producing tuples.

    Returns a list of ``(sub_fan, event)`` where ``event`` captures the next
    interaction of the sub-interval and the vertex incidences on its closed
    boundary (used for diagonal detection).  ``reversed_mirrors`` switches to
    the time-reversed mirror policy: a mirror met from its reflective
    half-plane branches into both face letters, one met from the transparent
    half-plane kills the branch.
    """
    table = tracer.table
    scene = tracer.scene(fan.frame, fan.chart)
    results = []
    for lo, hi in _fan_cells(fan, scene):
        mid = (lo + hi) / 2
        u, v = fan.uv(mid)
        hit = first_hit(scene, fan.portal, fan.sense, u, v, fan.tau_floor)
        cell = replace(fan, lo=lo, hi=hi)
        vertex_params = []
        if hit is not None:
            # Vertex incidences: fan lines through a scene vertex at a
            # parameter inside the closed cell, with the vertex genuinely
            # ahead of the portal (validated later by an exact ray walk).
            for p_point in scene.vertices:
                root = _fan_residual_root(cell, p_point)
                if root is None:
                    continue
                if sgn(root - lo) < 0 or sgn(hi - root) < 0:
                    continue
                vertex_params.append((root, p_point))
        if hit is None:
            results.append((cell, None, tuple(vertex_params)))
        else:
            results.append((cell, hit, tuple(vertex_params)))
    out = []
    for cell, hit, vparams in results:
        if hit is None:
            out.append((cell, FanEvent("dead", (), None, vparams)))
            continue
        entry = hit.entry
        mid = (cell.lo + cell.hi) / 2
        u, v = cell.uv(mid)
        ra = _residual(entry.a, u, v)
        rb = _residual(entry.b, u, v)
        lo2, hi2 = _clip_fan_to_crossing(cell, entry, sgn(ra) > 0)
        if lo2 is None:
            out.append((cell, FanEvent("dead", (), None, vparams)))
            continue
        portal = (entry.a, entry.b)
        base = replace(cell, lo=lo2, hi=hi2, portal=portal, tau_floor=None)
        if entry.kind == "wall":
            letter = table.wall_label(entry.idx).name
            frame = cell.frame.compose(tracer.reflection("wall", entry.idx))
            child = replace(base, code=cell.code + (letter,), frame=frame)
            out.append((cell, FanEvent("children", (child,), None, vparams)))
            continue
        refl_label, trans_label = table.mirror_labels(entry.idx)
        dsign = sgn(cell.sense * (entry.normal[0] + u * entry.normal[1]))
        if dsign == 0:
            raise TraceError("tangential mirror crossing inside an open fan cell")
        if not reversed_mirrors:
            if dsign < 0:
                frame = cell.frame.compose(tracer.reflection("mirror", entry.idx))
                child = replace(base, code=cell.code + (refl_label.name,), frame=frame)
            else:
                child = replace(base, code=cell.code + (trans_label.name,))
            out.append((cell, FanEvent("children", (child,), None, vparams)))
        else:
            if dsign > 0:
                # Reversed time: the flight emerges from the transparent side,
                # which no legal interaction produces - the branch dies.
                out.append((cell, FanEvent("dead", (), None, vparams)))
            else:
                frame_r = cell.frame.compose(tracer.reflection("mirror", entry.idx))
                child_r = replace(base, code=cell.code + (refl_label.name,), frame=frame_r)
                child_t = replace(base, code=cell.code + (trans_label.name,))
                out.append(
                    (
                        cell,
                        FanEvent(
                            "children",
                            (child_r, child_t),
                            (entry.idx, lo2, hi2),
                            vparams,
                        ),
                    )
                )
    return out


def _clip_fan_to_crossing(fan: Fan, entry: SceneEntry, a_side_positive: bool):
    """Restrict the fan interval to lines crossing the entry's open segment."""
    lo, hi = fan.lo, fan.hi
    for p_point, want_positive in ((entry.a, a_side_positive), (entry.b, not a_side_positive)):
        c0 = p_point[1] - fan.u0 * p_point[0] - fan.v0
        c1 = fan.du * p_point[0] + fan.dv
        # res(p) = c0 - c1 p ; want sign(res) == want_positive throughout
        if sgn(c1) == 0:
            s = sgn(c0)
            if (s > 0) != want_positive or s == 0:
                return None, None
            continue
        root = c0 / c1
        # res > 0 for p < root when c1 > 0, for p > root when c1 < 0.
        res_positive_below = sgn(c1) > 0
        if want_positive == res_positive_below:
            if sgn(root - hi) < 0:
                hi = root if sgn(root - lo) > 0 else lo
        else:
            if sgn(root - lo) > 0:
                lo = root if sgn(hi - root) > 0 else hi
        if sgn(hi - lo) <= 0:
            return None, None
    return lo, hi


# ---------------------------------------------------------------------------
# Vertex fans (diagonal discovery) and exact walks
# ---------------------------------------------------------------------------


def _corner_direction_constraints(table: Table, vertex_index: int):
    """Direction legality at a polygon corner: strictly interior directions."""
    verts = table.vertices
    n = len(verts)
    v = verts[vertex_index]
    e_next = sub(verts[(vertex_index + 1) % n], v)
    e_prev = sub(verts[(vertex_index - 1) % n], v)
    convex = sgn(cross2(e_next, e_prev)) > 0
    return e_next, e_prev, convex


def vertex_direction_ok(table: Table, source: Point, d: Vec) -> bool:
    """Is d a legal outgoing direction from the given singular point?"""
    for i, p in enumerate(table.vertices):
        if sgn(p[0] - source[0]) == 0 and sgn(p[1] - source[1]) == 0:
            e_next, e_prev, convex = _corner_direction_constraints(table, i)
            c1 = sgn(cross2(e_next, d))
            c2 = sgn(cross2(e_prev, d))
            if convex:
                return c1 > 0 and c2 < 0
            return c1 > 0 or c2 < 0
    # Mirror endpoints in the interior (or on a wall's relative interior):
    # all directions into the open table are legal; wall-incident endpoints
    # are constrained by the wall they sit on.
    for i in range(table.q):
        seg = table.walls[i]
        if point_on_segment(source, seg):
            d_wall = sub(seg.b, seg.a)
            return sgn(cross2(d_wall, d)) > 0  # strictly into the polygon (left side)
    return True


def vertex_root_fans(table: Table, source: Point) -> list:
    """Root fans from a singular point: all lines through it, by cone."""
    fans = []
    for chart, sense in CONES:
        s_c = chart_point(chart, source)
        # Lines through the point: v = s_y - u s_x, parameterized by p = u.
        fans.append(
            Fan(
                code=(),
                frame=Isometry.identity(),
                chart=chart,
                sense=sense,
                u0=Q(0),
                du=Q(1),
                v0=s_c[1],
                dv=-s_c[0],
                lo=Q(-1),
                hi=Q(1),
                portal=None,
                tau_floor=sense * s_c[0],
            )
        )
    return fans


def _legal_subintervals(table: Table, source: Point, fan: Fan) -> list:
    """Clip a root fan to directions legally leaving the source point."""
    # Directions are d(p) = sense * (1, u0+du*p) in chart coords; legality is
    # a sign condition on one or two cross products, each affine in p.  We
    # sample on a fixed subdivision refined at the constraint roots.
    cuts = [fan.lo, fan.hi]
    checks = []
    for i, p in enumerate(table.vertices):
        if sgn(p[0] - source[0]) == 0 and sgn(p[1] - source[1]) == 0:
            e_next, e_prev, _ = _corner_direction_constraints(table, i)
            checks.extend([e_next, e_prev])
    for i in range(table.q):
        seg = table.walls[i]
        if point_on_segment(source, seg) and not any(
            sgn(p[0] - source[0]) == 0 and sgn(p[1] - source[1]) == 0 for p in table.vertices
        ):
            checks.append(sub(seg.b, seg.a))
    for e in checks:
        e_c = chart_point(fan.chart, e)
        # cross(e, d) with d = sense*(1, u): in chart coords the cross product
        # swaps sign between charts; affine root in p either way.
        c0 = fan.sense * (e_c[0] * (fan.u0) - e_c[1])
        c1 = fan.sense * (e_c[0] * fan.du)
        if sgn(c1) != 0:
            root = -c0 / c1
            if sgn(root - fan.lo) > 0 and sgn(fan.hi - root) > 0:
                cuts.append(root)
    uniq = []
    for c in sorted(cuts):
        if not uniq or sgn(c - uniq[-1]) != 0:
            uniq.append(c)
    out = []
    for lo, hi in zip(uniq, uniq[1:]):
        mid = (lo + hi) / 2
        u, _v = fan.uv(mid)
        d_real = real_direction(fan.chart, fan.sense, u)
        if vertex_direction_ok(table, source, d_real):
            out.append(replace(fan, lo=lo, hi=hi))
    return out


def ray_walk(table: Table, origin: Point, direction: Vec, max_events: int):
    """Exact forward walk of a single ray through the table dynamics.

    Returns (letters, endpoint, status) where status is "vertex" (ended at a
    singular point - ``endpoint`` is that point), "alive" (survived
    ``max_events`` events) or "escaped" (geometry bug).  The walk applies the
    standard interaction rules and stops at the first singular incidence.
    """
    letters = []
    pos = Point(origin[0], origin[1])
    d = Vec(direction[0], direction[1])
    while len(letters) <= max_events:
        res = ray_cast(table.obstacles, pos, d, table.singular_points)
        if isinstance(res, VertexHit):
            return tuple(letters), res.point, "vertex"
        if isinstance(res, NoHit):
            return tuple(letters), pos, "escaped"
        kind, idx = res.payload
        if kind == "wall":
            letters.append(table.wall_label(idx).name)
            d = _reflect_vec(table.walls[idx], d)
        else:
            mirror = table.mirrors[idx]
            refl_label, trans_label = table.mirror_labels(idx)
            ds = sgn(dot2(d, mirror.normal))
            if ds == 0:
                return tuple(letters), res.point, "vertex"
            if ds < 0:
                letters.append(refl_label.name)
                d = _reflect_vec(mirror.seg, d)
            else:
                letters.append(trans_label.name)
        pos = res.point
    return tuple(letters), pos, "alive"


def guided_backward_walk(table: Table, origin: Point, direction: Vec, code: Sequence, max_extra: int = 2):
    """Walk a single ray under time-reversed rules, following ``code`` at
    branch points, until a singular incidence.

    Returns (letters, endpoint, status) like :func:`ray_walk`; at a mirror met
    from the reflective half-plane the branch taken is the one whose letter
    matches the next code letter (reflect for the reflective-face letter,
    straight for the transparent-face letter).  After the code is exhausted
    the walk continues up to ``max_extra`` further events.
    """
    letters = []
    pos = Point(origin[0], origin[1])
    d = Vec(direction[0], direction[1])
    budget = len(code) + max_extra
    while len(letters) <= budget:
        res = ray_cast(table.obstacles, pos, d, table.singular_points)
        if isinstance(res, VertexHit):
            return tuple(letters), res.point, "vertex"
        if isinstance(res, NoHit):
            return tuple(letters), pos, "escaped"
        kind, idx = res.payload
        if kind == "wall":
            letters.append(table.wall_label(idx).name)
            d = _reflect_vec(table.walls[idx], d)
        else:
            mirror = table.mirrors[idx]
            refl_label, trans_label = table.mirror_labels(idx)
            ds = sgn(dot2(d, mirror.normal))
            if ds == 0:
                return tuple(letters), res.point, "vertex"
            if ds > 0:
                # Reversed rules: emerging from the transparent side has no
                # legal past; the walk is stuck.
                return tuple(letters), res.point, "stuck"
            want = code[len(letters)] if len(letters) < len(code) else refl_label.name
            if want == refl_label.name:
                letters.append(refl_label.name)
                d = _reflect_vec(mirror.seg, d)
            else:
                letters.append(trans_label.name)
        pos = res.point
    return tuple(letters), pos, "alive"
