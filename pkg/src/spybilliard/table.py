"""Billiard tables with one-sided mirrors: model, validation, builders, file I/O.

A table is a simple polygon (counterclockwise vertices) plus a list of interior
one-sided mirrors.  Each mirror contributes two side labels - one per face - so
a table with q polygon walls and r mirrors has q + 2r labels.  The reflective
face is the one whose outward normal is the stored ``normal`` vector: an orbit
arriving with direction d interacts with the reflective face when
``dot(d, normal) < 0`` (it bounces) and with the transparent face when
``dot(d, normal) > 0`` (it passes through unchanged).  Exact tangency is a
singular event.

Canonical label order: walls ``w1..wq`` in vertex order, then per mirror the
reflective face ``m<i>r`` followed by the transparent face ``m<i>t``.

Config format (line oriented, ``#`` comments)::

    [meta]
    kernel rational            # or: interval
    name   my_table           # optional
    [polygon]
    0 0
    1 0
    1 1
    0 1
    [mirror]
    from 1/3 0
    to   1/3 1
    reflective right           # side of the from->to direction
    [cover]                    # optional: symmetric-unfolding provenance
    degree 2
    base 0 0
    ...
    copy m00 m01 m10 m11 tx ty

Numbers are exact: integers, fractions ``p/q``, finite decimals, and (in the
interval kernel) closed-form expressions such as ``sqrt(2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from .numbers import Q, scalar_from_string, scalar_to_string, sgn
from .geometry import (
    Isometry,
    Point,
    Segment,
    Vec,
    cross2,
    dot2,
    point_in_polygon,
    point_on_segment,
    polygon_area2,
    segment_meeting,
    sub,
)

__all__ = [
    "WALL",
    "MIRROR_REFLECTIVE",
    "MIRROR_TRANSPARENT",
    "SideLabel",
    "Mirror",
    "CoveringData",
    "Table",
    "ValidationReport",
    "TableFormatError",
    "validate",
    "build_square_with_vertical_mirrors",
    "build_symmetric_unfolding",
    "load_table",
    "dump_table",
]

WALL = "wall"
MIRROR_REFLECTIVE = "mirror-reflective"
MIRROR_TRANSPARENT = "mirror-transparent"


@dataclass(frozen=True)
class SideLabel:
    """One of the q + 2r side labels of a table."""

    index: int  # 1-based position in canonical order
    name: str  # "w3", "m1r", "m1t"
    kind: str  # WALL | MIRROR_REFLECTIVE | MIRROR_TRANSPARENT
    wall_id: Optional[int] = None  # 0-based wall index for walls
    mirror_id: Optional[int] = None  # 0-based mirror index for mirror faces


@dataclass(frozen=True)
class Mirror:
    """An interior one-sided mirror: segment plus reflective-face normal."""

    seg: Segment
    normal: Vec


@dataclass(frozen=True)
class CoveringData:
    """Provenance of a table built by unfolding a base polygon."""

    base: tuple
    copies: tuple  # Isometry per copy (copy 0 is the identity)

    @property
    def degree(self) -> int:
        return len(self.copies)


@dataclass(frozen=True)
class Table:
    """Immutable billiard table: polygon + one-sided mirrors."""

    vertices: tuple
    mirrors: tuple
    kernel: str = "rational"
    name: Optional[str] = None
    mirror_line_count: Optional[int] = None
    covering: Optional[CoveringData] = None

    @property
    def q(self) -> int:
        return len(self.vertices)

    @property
    def r(self) -> int:
        return len(self.mirrors)

    @cached_property
    def walls(self) -> tuple:
        n = len(self.vertices)
        return tuple(
            Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)
        )

    @cached_property
    def labels(self) -> tuple:
        out = []
        for i in range(self.q):
            out.append(SideLabel(len(out) + 1, f"w{i + 1}", WALL, wall_id=i))
        for j in range(self.r):
            out.append(SideLabel(len(out) + 1, f"m{j + 1}r", MIRROR_REFLECTIVE, mirror_id=j))
            out.append(SideLabel(len(out) + 1, f"m{j + 1}t", MIRROR_TRANSPARENT, mirror_id=j))
        return tuple(out)

    @cached_property
    def label_by_name(self) -> dict:
        return {lab.name: lab for lab in self.labels}

    def wall_label(self, wall_id: int) -> SideLabel:
        return self.labels[wall_id]

    def mirror_labels(self, mirror_id: int) -> tuple:
        base = self.q + 2 * mirror_id
        return (self.labels[base], self.labels[base + 1])

    def segment_of(self, label: SideLabel) -> Segment:
        if label.kind == WALL:
            return self.walls[label.wall_id]
        return self.mirrors[label.mirror_id].seg

    @cached_property
    def obstacles(self) -> tuple:
        """(segment, payload) pairs for ray casting; one entry per mirror."""
        out = [(self.walls[i], ("wall", i)) for i in range(self.q)]
        out.extend((self.mirrors[j].seg, ("mirror", j)) for j in range(self.r))
        return tuple(out)

    @cached_property
    def singular_points(self) -> tuple:
        """All points where the dynamics is undefined: wall and mirror endpoints."""
        seen = {}
        for p in self.vertices:
            seen[(p[0], p[1])] = Point(p[0], p[1])
        for m in self.mirrors:
            for p in (m.seg.a, m.seg.b):
                seen[(p[0], p[1])] = Point(p[0], p[1])
        return tuple(seen.values())

    def point_at(self, label: SideLabel, t) -> Point:
        """Point at affine fraction ``t`` along the side's segment."""
        seg = self.segment_of(label)
        return Point(
            seg.a[0] + t * (seg.b[0] - seg.a[0]),
            seg.a[1] + t * (seg.b[1] - seg.a[1]),
        )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`: counts plus a list of violations."""

    q: int
    r: int
    label_count: int
    issues: tuple

    @property
    def ok(self) -> bool:
        return not self.issues


def _mirror_wall_issue(m: Mirror, wall: Segment) -> Optional[str]:
    kind = segment_meeting(m.seg, wall)
    if kind[0] == "disjoint":
        return None
    if kind[0] == "overlap":
        return "mirror lies along a wall"
    _, t, _s = kind
    if sgn(t) == 0 or sgn(t - 1) == 0:
        return None  # mirror endpoint touching the boundary is allowed
    return "mirror crosses boundary"


def validate(table: Table) -> ValidationReport:
    """Check every structural invariant; report violations, never raise."""
    issues = []
    verts = table.vertices
    n = len(verts)
    if n < 3:
        issues.append("polygon needs at least 3 vertices")
        return ValidationReport(table.q, table.r, len(table.labels), tuple(issues))

    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if sgn(a[0] - b[0]) == 0 and sgn(a[1] - b[1]) == 0:
            issues.append(f"duplicate consecutive vertices at index {i}")
    if not issues:
        for i in range(n):
            a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
            if sgn(cross2(sub(b, a), sub(c, b))) == 0:
                issues.append(f"collinear-redundant vertex at index {i}")
    if sgn(polygon_area2(verts)) <= 0:
        issues.append("polygon is not counterclockwise")
    # Simplicity: non-adjacent edges must not meet; adjacent only at the shared vertex.
    walls = table.walls
    for i in range(n):
        for j in range(i + 1, n):
            kind = segment_meeting(walls[i], walls[j])
            if kind[0] == "disjoint":
                continue
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if kind[0] == "overlap":
                issues.append(f"edges {i} and {j} overlap")
            elif not adjacent:
                issues.append(f"non-adjacent edges {i} and {j} intersect")
            # Adjacent distinct non-collinear edges can only meet at the
            # shared vertex, which is fine; collinear cases land in "overlap"
            # or the collinear-redundant check above.

    for j, m in enumerate(table.mirrors):
        d = sub(m.seg.b, m.seg.a)
        if sgn(d[0]) == 0 and sgn(d[1]) == 0:
            issues.append(f"mirror {j + 1} is degenerate")
            continue
        if sgn(m.normal[0]) == 0 and sgn(m.normal[1]) == 0:
            issues.append(f"mirror {j + 1} has zero reflective normal")
        elif sgn(dot2(m.normal, d)) != 0:
            issues.append(f"mirror {j + 1} normal is not perpendicular to the mirror")
        for w in walls:
            issue = _mirror_wall_issue(m, w)
            if issue:
                issues.append(f"mirror {j + 1}: {issue}")
                break
        else:
            for p in (m.seg.a, m.seg.b):
                if point_in_polygon(verts, p) < 0:
                    issues.append(f"mirror {j + 1} endpoint outside the polygon")
                    break
            else:
                mid = Point(
                    (m.seg.a[0] + m.seg.b[0]) / 2, (m.seg.a[1] + m.seg.b[1]) / 2
                )
                if point_in_polygon(verts, mid) < 0:
                    issues.append(f"mirror {j + 1} leaves the polygon")
        for p in verts:
            if point_on_segment(p, m.seg) and not (
                (sgn(p[0] - m.seg.a[0]) == 0 and sgn(p[1] - m.seg.a[1]) == 0)
                or (sgn(p[0] - m.seg.b[0]) == 0 and sgn(p[1] - m.seg.b[1]) == 0)
            ):
                issues.append(f"mirror {j + 1} passes through a polygon vertex")

    for i in range(table.r):
        for j in range(i + 1, table.r):
            kind = segment_meeting(table.mirrors[i].seg, table.mirrors[j].seg)
            if kind[0] == "overlap":
                issues.append(f"mirrors {i + 1} and {j + 1} overlap")
            elif kind[0] == "point":
                _, t, s = kind
                t_end = sgn(t) == 0 or sgn(t - 1) == 0
                s_end = sgn(s) == 0 or sgn(s - 1) == 0
                if not (t_end and s_end):
                    issues.append(f"mirrors {i + 1} and {j + 1} cross")

    return ValidationReport(table.q, table.r, len(table.labels), tuple(issues))


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _left_normal(direction: Sequence) -> Vec:
    return Vec(-direction[1], direction[0])


def build_square_with_vertical_mirrors(specs: Sequence, kernel: str = "rational") -> Table:
    """Unit square with vertical one-sided mirrors.

    ``specs`` entries are ``(a, (y0, y1), reflective_side)`` with ``a`` the
    mirror's x coordinate strictly inside (0, 1), the y-span within [0, 1],
    and ``reflective_side`` 'left' or 'right' relative to the upward
    (from->to) direction of the mirror.  The number of distinct x coordinates
    is recorded on the table for growth-bound reporting.
    """
    one, zero = Q(1), Q(0)
    verts = (Point(zero, zero), Point(one, zero), Point(one, one), Point(zero, one))
    mirrors = []
    xs = set()
    for a, (y0, y1), side in specs:
        a, y0, y1 = Q(a), Q(y0), Q(y1)
        if sgn(a) <= 0 or sgn(a - 1) >= 0:
            raise ValueError(f"mirror x coordinate {a} must lie strictly inside (0, 1)")
        if sgn(y0) < 0 or sgn(y1 - 1) > 0 or sgn(y1 - y0) <= 0:
            raise ValueError(f"mirror y-span ({y0}, {y1}) must be increasing within [0, 1]")
        if side not in ("left", "right"):
            raise ValueError(f"reflective side must be 'left' or 'right', got {side!r}")
        seg = Segment(Point(a, y0), Point(a, y1))
        direction = sub(seg.b, seg.a)
        normal = _left_normal(direction) if side == "left" else Vec(*(-c for c in _left_normal(direction)))
        # Normalize to a primitive direction for clean serialization.
        normal = _primitive(normal)
        mirrors.append(Mirror(seg, normal))
        xs.add(a)
    return Table(
        vertices=verts,
        mirrors=tuple(mirrors),
        kernel=kernel,
        mirror_line_count=len(xs),
    )


def _primitive(v: Sequence) -> Vec:
    """Scale a rational vector to a primitive integer vector (same direction)."""
    from math import gcd, lcm

    x, y = Q(v[0]), Q(v[1])
    den = lcm(int(x.denominator), int(y.denominator))
    xi, yi = int(x * den), int(y * den)
    g = gcd(abs(xi), abs(yi))
    if g:
        xi, yi = xi // g, yi // g
    return Vec(Q(xi), Q(yi))


def _epsilon_key(p: Sequence):
    return (p[0], p[1])


def build_symmetric_unfolding(
    base_vertices: Sequence,
    instructions: Sequence,
    kernel: str = "rational",
    name: Optional[str] = None,
) -> Table:
    """Unfold a base polygon by a tree of side reflections; mirrors on fold edges.

    ``base_vertices``: counterclockwise simple polygon (copy 0).
    ``instructions``: sequence of ``(parent_copy, side_index, mirror_side)``
    steps processed in order.  Step k reflects copy ``parent_copy`` across its
    side ``side_index`` (sides numbered as in the copy's vertex order),
    creating copy k+1.  ``mirror_side`` is ``None`` (no mirror on the fold
    edge), ``"parent"`` (reflective face toward the parent copy) or
    ``"child"``.  The resulting table records the covering data (base polygon
    and one isometry per copy).

    Raises ``ValueError`` when copies overlap (the union would not be a simple
    polygon) or when the boundary does not chain into a single loop.
    """
    base = tuple(Point(Q(x), Q(y)) for x, y in base_vertices)
    nb = len(base)
    if sgn(polygon_area2(base)) <= 0:
        raise ValueError("base polygon must be counterclockwise")

    copies = [Isometry.identity()]
    copy_polys = [base]
    fold_edges = []  # (segment, parent_copy, child_copy, mirror_side)
    for step_no, (parent, side_index, mirror_side) in enumerate(instructions):
        if not 0 <= parent < len(copies):
            raise ValueError(f"step {step_no}: unknown parent copy {parent}")
        poly = copy_polys[parent]
        a = poly[side_index % nb]
        b = poly[(side_index + 1) % nb]
        refl = Isometry.reflection(a, sub(b, a))
        iso = refl.compose(copies[parent])
        new_poly = tuple(refl.apply(p) for p in poly)
        copies.append(iso)
        copy_polys.append(new_poly)
        fold_edges.append((Segment(a, b), parent, len(copies) - 1, mirror_side))

    # Reject overlapping copies: any proper edge crossing, or a vertex/centroid
    # of one copy strictly inside another.
    for i in range(len(copy_polys)):
        for j in range(i + 1, len(copy_polys)):
            if _polygons_overlap(copy_polys[i], copy_polys[j]):
                raise ValueError(f"unfolding copies {i} and {j} overlap")

    boundary = _union_boundary(copy_polys)

    mirrors = []
    for seg, parent, _child, mirror_side in fold_edges:
        if mirror_side is None:
            continue
        if mirror_side not in ("parent", "child"):
            raise ValueError(f"mirror side must be None, 'parent' or 'child', got {mirror_side!r}")
        # The parent copy lies on the left of the fold edge traversed a->b
        # (its polygon is counterclockwise), so the toward-parent normal is
        # the left normal.
        normal = _left_normal(sub(seg.b, seg.a))
        if mirror_side == "child":
            normal = Vec(-normal[0], -normal[1])
        mirrors.append(Mirror(seg, _primitive(normal)))

    table = Table(
        vertices=boundary,
        mirrors=tuple(mirrors),
        kernel=kernel,
        name=name,
        covering=CoveringData(base=base, copies=tuple(copies)),
    )
    report = validate(table)
    if not report.ok:
        raise ValueError("unfolding produced an invalid table: " + "; ".join(report.issues))
    return table


def _polygons_overlap(p1: Sequence, p2: Sequence) -> bool:
    n1, n2 = len(p1), len(p2)
    edges1 = [Segment(p1[i], p1[(i + 1) % n1]) for i in range(n1)]
    edges2 = [Segment(p2[i], p2[(i + 1) % n2]) for i in range(n2)]
    for e1 in edges1:
        for e2 in edges2:
            kind = segment_meeting(e1, e2)
            if kind[0] == "point":
                _, t, s = kind
                if not (sgn(t) == 0 or sgn(t - 1) == 0) and not (sgn(s) == 0 or sgn(s - 1) == 0):
                    return True  # proper interior crossing
    for p in p1:
        if point_in_polygon(p2, p) > 0:
            return True
    for p in p2:
        if point_in_polygon(p1, p) > 0:
            return True
    c1 = _poly_centroid(p1)
    c2 = _poly_centroid(p2)
    return point_in_polygon(p2, c1) > 0 or point_in_polygon(p1, c2) > 0


def _poly_centroid(poly: Sequence) -> Point:
    sx = sy = None
    for p in poly:
        sx = p[0] if sx is None else sx + p[0]
        sy = p[1] if sy is None else sy + p[1]
    return Point(sx / len(poly), sy / len(poly))


def _union_boundary(copy_polys: Sequence) -> tuple:
    """Outer boundary of a union of edge-matched polygon copies.

    Every copy edge is split at all copy vertices lying on it; sub-edges used
    by exactly one copy form the boundary, sub-edges shared by two copies are
    interior folds.  The boundary must chain into a single closed loop, which
    is returned counterclockwise with collinear chains merged.
    """
    all_vertices = []
    seen = set()
    for poly in copy_polys:
        for p in poly:
            k = _epsilon_key(p)
            if k not in seen:
                seen.add(k)
                all_vertices.append(p)

    piece_count: dict = {}
    piece_pts: dict = {}
    for poly in copy_polys:
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            seg = Segment(a, b)
            cuts = [Q(0), Q(1)]
            d = sub(b, a)
            dd = dot2(d, d)
            for p in all_vertices:
                if point_on_segment(p, seg):
                    t = dot2(d, sub(p, a)) / dd
                    cuts.append(t)
            cuts = _sorted_unique(cuts)
            for t0, t1 in zip(cuts, cuts[1:]):
                pa = Point(a[0] + t0 * d[0], a[1] + t0 * d[1])
                pb = Point(a[0] + t1 * d[0], a[1] + t1 * d[1])
                ka, kb = _epsilon_key(pa), _epsilon_key(pb)
                key = (ka, kb) if ka <= kb else (kb, ka)
                piece_count[key] = piece_count.get(key, 0) + 1
                piece_pts[key] = (pa, pb) if key == (ka, kb) else (pb, pa)

    adjacency: dict = {}
    boundary_pieces = 0
    for key, count in piece_count.items():
        if count == 1:
            boundary_pieces += 1
            ka, kb = key
            adjacency.setdefault(ka, []).append(kb)
            adjacency.setdefault(kb, []).append(ka)
        elif count > 2:
            raise ValueError("unfolding copies stack more than two deep on an edge")

    for k, nbrs in adjacency.items():
        if len(nbrs) != 2:
            raise ValueError("union boundary does not chain (branch point)")

    start = next(iter(adjacency))
    loop = [start]
    prev = None
    while True:
        cur = loop[-1]
        nxt = adjacency[cur][0] if adjacency[cur][0] != prev else adjacency[cur][1]
        if nxt == start:
            break
        loop.append(nxt)
        prev = cur
    if len(loop) != boundary_pieces:
        raise ValueError("union boundary has more than one loop (holes are not allowed)")

    pts = [Point(k[0], k[1]) for k in loop]
    # Merge collinear chains.
    merged = []
    m = len(pts)
    for i in range(m):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % m]
        if sgn(cross2(sub(b, a), sub(c, b))) != 0:
            merged.append(b)
    if sgn(polygon_area2(merged)) < 0:
        merged.reverse()
    return tuple(merged)


def _sorted_unique(values):
    out = []
    for v in sorted(values):
        if not out or sgn(v - out[-1]) != 0:
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# Config file format
# ---------------------------------------------------------------------------


class TableFormatError(ValueError):
    """Config parse/validation error with line information."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _tokens(line: str):
    return line.split()


def load_table(text: str) -> Table:
    """Parse a table config (see module docstring), validate, and return it."""
    lines = text.splitlines()

    kernel = "rational"
    # Pre-scan for the kernel so coordinates parse with the right parser.
    section = None
    for line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            section = body
            continue
        if section == "[meta]":
            parts = _tokens(body)
            if parts[0] == "kernel" and len(parts) == 2:
                kernel = parts[1]
    if kernel not in ("rational", "interval"):
        raise TableFormatError(f"unknown kernel {kernel!r}", 1)

    def parse_scalar(tok: str, lineno: int, col: int):
        try:
            return scalar_from_string(tok, kernel)
        except ValueError as exc:
            raise TableFormatError(str(exc), lineno, col) from None

    def column_of(line: str, tok_index: int) -> int:
        parts = line.split("#", 1)[0].split()
        pos = 0
        for i, tok in enumerate(parts):
            pos = line.index(tok, pos)
            if i == tok_index:
                return pos + 1
            pos += len(tok)
        return 1

    verts = []
    mirrors = []
    name = None
    cover_base = []
    cover_copies = []
    cover_degree = None
    current_mirror: Optional[dict] = None
    section = None

    def finish_mirror(lineno: int):
        nonlocal current_mirror
        if current_mirror is None:
            return
        missing = [k for k in ("from", "to", "reflective") if k not in current_mirror]
        if missing:
            raise TableFormatError(
                f"mirror block missing {', '.join(missing)}", current_mirror["_line"]
            )
        a = current_mirror["from"]
        b = current_mirror["to"]
        side = current_mirror["reflective"]
        direction = sub(b, a)
        normal = _left_normal(direction)
        if side == "right":
            normal = Vec(-normal[0], -normal[1])
        if kernel == "rational":
            normal = _primitive(normal)
        mirrors.append(Mirror(Segment(a, b), normal))
        current_mirror = None

    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if body not in ("[meta]", "[polygon]", "[mirror]", "[cover]"):
                raise TableFormatError(f"unknown section {body}", lineno)
            if section == "[mirror]":
                finish_mirror(lineno)
            section = body
            if body == "[mirror]":
                current_mirror = {"_line": lineno}
            continue
        parts = _tokens(body)
        if section is None:
            raise TableFormatError("content before any [section]", lineno)
        if section == "[meta]":
            if len(parts) != 2:
                raise TableFormatError("meta entries are 'key value' pairs", lineno)
            key, value = parts
            if key == "kernel":
                pass  # handled in the pre-scan
            elif key == "name":
                name = value
            elif key == "precision":
                if not value.isdigit():
                    raise TableFormatError("precision must be an integer", lineno, column_of(raw, 1))
            else:
                raise TableFormatError(f"unknown meta key {key!r}", lineno)
        elif section == "[polygon]":
            if len(parts) != 2:
                raise TableFormatError("polygon lines are 'x y' pairs", lineno)
            x = parse_scalar(parts[0], lineno, column_of(raw, 0))
            y = parse_scalar(parts[1], lineno, column_of(raw, 1))
            verts.append(Point(x, y))
        elif section == "[mirror]":
            key = parts[0]
            if key in ("from", "to"):
                if len(parts) != 3:
                    raise TableFormatError(f"'{key}' takes two coordinates", lineno)
                x = parse_scalar(parts[1], lineno, column_of(raw, 1))
                y = parse_scalar(parts[2], lineno, column_of(raw, 2))
                current_mirror[key] = Point(x, y)
            elif key == "reflective":
                if len(parts) != 2 or parts[1] not in ("left", "right"):
                    raise TableFormatError("'reflective' takes left or right", lineno)
                current_mirror["reflective"] = parts[1]
            else:
                raise TableFormatError(f"unknown mirror key {key!r}", lineno)
        elif section == "[cover]":
            key = parts[0]
            if key == "degree":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise TableFormatError("'degree' takes an integer", lineno)
                cover_degree = int(parts[1])
            elif key == "base":
                if len(parts) != 3:
                    raise TableFormatError("'base' takes two coordinates", lineno)
                cover_base.append(
                    Point(
                        parse_scalar(parts[1], lineno, column_of(raw, 1)),
                        parse_scalar(parts[2], lineno, column_of(raw, 2)),
                    )
                )
            elif key == "copy":
                if len(parts) != 7:
                    raise TableFormatError("'copy' takes six numbers", lineno)
                nums = [parse_scalar(p, lineno, column_of(raw, i + 1)) for i, p in enumerate(parts[1:])]
                cover_copies.append(Isometry(*nums))
            else:
                raise TableFormatError(f"unknown cover key {key!r}", lineno)

    if section == "[mirror]":
        finish_mirror(len(lines))
    if len(verts) < 3:
        raise TableFormatError("polygon needs at least 3 vertices", len(lines) or 1)

    covering = None
    if cover_copies or cover_base:
        if not cover_base or not cover_copies:
            raise TableFormatError("[cover] needs both base and copy lines", len(lines) or 1)
        if cover_degree is not None and cover_degree != len(cover_copies):
            raise TableFormatError("[cover] degree disagrees with copy count", len(lines) or 1)
        covering = CoveringData(base=tuple(cover_base), copies=tuple(cover_copies))

    table = Table(
        vertices=tuple(verts),
        mirrors=tuple(mirrors),
        kernel=kernel,
        name=name,
        covering=covering,
    )
    report = validate(table)
    if not report.ok:
        raise TableFormatError("invalid table: " + "; ".join(report.issues), len(lines) or 1)
    return table


def dump_table(table: Table) -> str:
    """Serialize a table to the config format (exact round trip)."""
    out = ["[meta]", f"kernel {table.kernel}"]
    if table.name:
        out.append(f"name {table.name}")
    out.append("[polygon]")
    for p in table.vertices:
        out.append(f"{scalar_to_string(p[0])} {scalar_to_string(p[1])}")
    for m in table.mirrors:
        out.append("[mirror]")
        out.append(f"from {scalar_to_string(m.seg.a[0])} {scalar_to_string(m.seg.a[1])}")
        out.append(f"to {scalar_to_string(m.seg.b[0])} {scalar_to_string(m.seg.b[1])}")
        direction = sub(m.seg.b, m.seg.a)
        side = "left" if sgn(cross2(direction, m.normal)) > 0 else "right"
        out.append(f"reflective {side}")
    if table.covering is not None:
        out.append("[cover]")
        out.append(f"degree {table.covering.degree}")
        for p in table.covering.base:
            out.append(f"base {scalar_to_string(p[0])} {scalar_to_string(p[1])}")
        for iso in table.covering.copies:
            nums = " ".join(scalar_to_string(v) for v in iso.key())
            out.append(f"copy {nums}")
    return "\n".join(out) + "\n"
