"""Symbolic language of a mirror table: words, special words, diagonals.

The itinerary language is enumerated with exact beam tracing
(:mod:`spybilliard.tracing`): a word is a sequence of side labels realized by
some orbit in general position, and every word of length ``n`` is witnessed by
a full-dimensional beam of unfolded lines.  The two faces of a mirror have
identical outgoing state sets, so the words rooted at the reflective face are
traced once and cloned onto the transparent face ("twin" words); interior
letters are never twinned because there the face is determined by the
crossing direction.

Singular orbit segments (vertex-to-vertex flights, "generalized diagonals")
are discovered with one-parameter fans rooted at the singular points and then
re-validated one by one with an exact ray walk; the walk output, not the fan
bookkeeping, is what gets recorded.  Families of backward orbits that die on
the transparent mirror face ("spy families") are found by running fans under
the time-reversed mirror policy and collecting the parameter intervals that
branch at a mirror; adjacent intervals are merged exactly, including across
slope-chart seams.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .geometry import Isometry, Point, Vec, cross2, dot2, point_on_segment, sub
from .numbers import Q, sgn
from .table import MIRROR_REFLECTIVE, MIRROR_TRANSPARENT, WALL, Table
from .tracing import (
    BeamTracer,
    BudgetExceeded,
    TraceError,
    beam_children,
    chart_point,
    fan_step,
    ray_walk,
    guided_backward_walk,
    real_direction,
    root_beams,
    vertex_direction_ok,
    vertex_root_fans,
    _legal_subintervals,
)
from .tracing import Fan  # re-exported for scripts that build custom fans

__all__ = [
    "LanguageTree",
    "enumerate_language",
    "special_word_stats",
    "check_cassaigne_identity",
    "DiagonalRecord",
    "DiagonalCollection",
    "count_generalized_diagonals",
    "SpyFamilyRecord",
    "SpyFamilyCollection",
    "count_spy_diagonal_families",
    "directional_complexity",
    "write_complexity_csv",
    "dump_words",
]


# ---------------------------------------------------------------------------
# Word language
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LanguageTree:
    """Word sets of the itinerary language, by length.

    ``words[k]`` is the frozenset of words of length ``k`` (``words[0]`` holds
    the empty word).  ``complete_to`` is the deepest length whose word set is
    complete; it equals ``n_max`` unless the trace budget ran out, in which
    case ``truncated`` is set and deeper levels are absent.
    """

    n_max: int
    complete_to: int
    truncated: bool
    words: tuple
    alphabet: tuple

    def p(self, n: int) -> int:
        """Complexity: number of words of length ``n``."""
        if n > self.complete_to:
            raise ValueError(f"language only complete to length {self.complete_to}")
        return len(self.words[n])

    def complexity(self) -> list:
        return [len(self.words[n]) for n in range(self.complete_to + 1)]

    def successor_count(self, n: int) -> int:
        """s(n) = p(n+1) - p(n)."""
        return self.p(n + 1) - self.p(n)


def _twin_first_letter(table: Table) -> dict:
    """Reflective-face label name -> transparent-face label name."""
    out = {}
    for j in range(table.r):
        refl, trans = table.mirror_labels(j)
        out[refl.name] = trans.name
    return out


def enumerate_language(table: Table, n_max: int, budget: int = 10_000_000) -> LanguageTree:
    """Enumerate all words of length <= n_max by exact beam tracing.

    Beams are kept one level at a time; only the word sets accumulate.  When
    the total number of beams passes ``budget`` the tree is returned truncated
    at the deepest complete level instead of raising.
    """
    tracer = BeamTracer(table)
    twins = _twin_first_letter(table)
    alphabet = tuple(lab.name for lab in table.labels)

    words = [frozenset({()})]
    if n_max == 0:
        return LanguageTree(0, 0, False, tuple(words), alphabet)

    roots = [lab for lab in table.labels if lab.kind in (WALL, MIRROR_REFLECTIVE)]
    level = []
    for lab in roots:
        level.extend(root_beams(tracer, lab))
    total = len(level)
    truncated = False
    depth = 1
    while True:
        seen = {beam.code for beam in level}
        for code in list(seen):
            twin = twins.get(code[0])
            if twin is not None:
                seen.add((twin,) + code[1:])
        words.append(frozenset(seen))
        if depth == n_max:
            break
        nxt = []
        for beam in level:
            nxt.extend(beam_children(tracer, beam))
        total += len(nxt)
        if total > budget:
            truncated = True
            break
        level = nxt
        depth += 1
    complete_to = len(words) - 1
    return LanguageTree(n_max, complete_to, truncated, tuple(words), alphabet)


def special_word_stats(tree: LanguageTree, j: int) -> dict:
    """Extension statistics of every word of length ``j``.

    Returns a dict with:

    - ``stats``: word -> (m_l, m_r, m_b) where m_l / m_r count one-letter
      left / right extensions inside the language and m_b counts two-sided
      extensions,
    - ``bilateral``: the set of words with m_l >= 2 and m_r >= 2,
    - ``non_prolongable``: the set of words with m_l == 0.

    Needs the language complete to length ``j + 2``.
    """
    if tree.complete_to < j + 2:
        raise ValueError(
            f"need words up to length {j + 2}, language complete to {tree.complete_to}"
        )
    w1 = tree.words[j + 1]
    w2 = tree.words[j + 2]
    letters = sorted(tree.alphabet)
    stats = {}
    bilateral = set()
    non_prolongable = set()
    for w in tree.words[j]:
        lefts = [a for a in letters if (a,) + w in w1]
        rights = [b for b in letters if w + (b,) in w1]
        m_b = sum(1 for a in lefts for b in letters if (a,) + w + (b,) in w2)
        m_l, m_r = len(lefts), len(rights)
        stats[w] = (m_l, m_r, m_b)
        if m_l >= 2 and m_r >= 2:
            bilateral.add(w)
        if m_l == 0:
            non_prolongable.add(w)
    return {"stats": stats, "bilateral": bilateral, "non_prolongable": non_prolongable}


def cassaigne_terms(tree: LanguageTree, j: int) -> dict:
    """Components of the exact second-difference identity at length ``j``.

    For every word w define D(w) = m_b(w) - m_l(w) - m_r(w) + 1.  Summed over
    all of L(j), D telescopes to s(j+1) - s(j) by pure counting.  The sum
    localizes onto three classes:

    - bilateral words (m_l >= 2 and m_r >= 2) keep their full D,
    - words with no left extension contribute 1 - m_r each (their m_b is 0),
    - for a word with exactly one left extension, D equals minus the number of
      its right extensions that have no left extension themselves; these
      length-(j+1) dead ends are counted by ``left_deaths``.

    Words with m_l >= 2 but m_r = 1 contribute 0: the unique continuation
    letter must extend every aw, because aw itself always has at least one
    right extension (the forward dynamics never halts) and the candidates are
    limited to the continuations of w.  The identity therefore reads::

        s(j+1) - s(j) = bilateral_sum - non_prolongable_sum - left_deaths

    and its residual is exactly zero on every complete level.  Dropping
    ``left_deaths`` keeps s(j+1) - s(j) <= bilateral_sum (the term is never
    negative), which is the inequality the growth bound rests on, but the
    equality needs it: one-sided mirrors really do produce prolongable words
    with a dead extension one letter later.
    """
    if tree.complete_to < j + 2:
        raise ValueError(
            f"need words up to length {j + 2}, language complete to {tree.complete_to}"
        )
    data = special_word_stats(tree, j)
    lhs = tree.p(j + 2) - 2 * tree.p(j + 1) + tree.p(j)
    bilateral_sum = sum(
        m_b - m_l - m_r + 1 for w, (m_l, m_r, m_b) in data["stats"].items() if w in data["bilateral"]
    )
    non_prolongable_sum = sum(
        m_r - 1
        for w, (m_l, m_r, _m_b) in data["stats"].items()
        if w in data["non_prolongable"] and m_r > 1
    )
    w2 = tree.words[j + 2]
    letters = sorted(tree.alphabet)
    left_deaths = 0
    for x in tree.words[j + 1]:
        # An absent prefix means the word sets are not prefix-closed; skip the
        # word here and let the residual expose the inconsistency instead of
        # crashing (this path only triggers on externally supplied sets).
        prefix_stats = data["stats"].get(x[:j])
        if prefix_stats is None or prefix_stats[0] != 1:
            continue
        if not any((a,) + x in w2 for a in letters):
            left_deaths += 1
    return {
        "lhs": lhs,
        "bilateral_sum": bilateral_sum,
        "non_prolongable_sum": non_prolongable_sum,
        "left_deaths": left_deaths,
        "residual": lhs - (bilateral_sum - non_prolongable_sum - left_deaths),
    }


def check_cassaigne_identity(tree: LanguageTree, j: int) -> int:
    """Residual of the exact second-difference identity at length ``j``.

    Zero on every complete level; see :func:`cassaigne_terms` for the
    decomposition of the right-hand side.
    """
    return cassaigne_terms(tree, j)["residual"]


# ---------------------------------------------------------------------------
# Generalized diagonals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalRecord:
    """One oriented singular orbit segment between two singular points.

    ``letters`` are the events strictly between the endpoints; ``length``
    counts flight links (= len(letters) + 1).  ``target_unfolded`` is the
    image of the far endpoint under the composed reflections of ``letters``;
    it always lies on the straight ray ``source + t * direction``.
    """

    source: tuple
    direction: tuple
    letters: tuple
    target: tuple
    target_unfolded: tuple
    length: int
    mirror_hits: int
    transparent_hits: int


@dataclass(frozen=True)
class DiagonalCollection:
    """``complete`` is False when the sweep's depth limit dropped candidate
    cells that were still within the requested geometric cutoff (or, with no
    cutoff, dropped any cells at all at the boundary depth)."""

    n_max: int
    records: tuple
    complete: bool = True

    def counts_by_length(self) -> list:
        """counts[i] = number of diagonals with exactly i flight links (i >= 1)."""
        out = [0] * (self.n_max + 1)
        for rec in self.records:
            out[rec.length] += 1
        return out

    def cumulative(self, n: int) -> int:
        return sum(1 for rec in self.records if rec.length <= n)


def _direction_key(d) -> tuple:
    """Canonical form of an exact direction: primitive integer pair when
    rational, the raw pair otherwise."""
    dx, dy = d[0], d[1]
    try:
        qx, qy = Q(dx), Q(dy)
    except (TypeError, ValueError):
        return (dx, dy)
    scale = math.lcm(int(qx.denominator), int(qy.denominator))
    ax, ay = int(qx * scale), int(qy * scale)
    g = math.gcd(abs(ax), abs(ay))
    return (ax // g, ay // g)


def _point_key(p) -> tuple:
    return (p[0], p[1])


def _is_singular_point(table: Table, p) -> bool:
    for s in table.singular_points:
        if sgn(p[0] - s[0]) == 0 and sgn(p[1] - s[1]) == 0:
            return True
    return False


def _rides_incident_obstacle(table: Table, source: Point, d: Vec) -> bool:
    """Does the ray from ``source`` along ``d`` travel on top of an obstacle?

    Such directions are degenerate (the flight overlaps a wall or mirror) and
    are excluded from the diagonal census.  Collinearity with an obstacle the
    source merely points at, without lying on it, is fine - the flight then
    terminates at the obstacle's near endpoint.
    """
    for seg, _payload in table.obstacles:
        if not point_on_segment(source, seg):
            continue
        e = sub(seg.b, seg.a)
        if sgn(cross2(e, d)) != 0:
            continue
        at_a = sgn(source[0] - seg.a[0]) == 0 and sgn(source[1] - seg.a[1]) == 0
        at_b = sgn(source[0] - seg.b[0]) == 0 and sgn(source[1] - seg.b[1]) == 0
        de = sgn(dot2(d, e))
        if at_a and de > 0:
            return True
        if at_b and de < 0:
            return True
        if not at_a and not at_b:
            return True
    return False


def _unfolded_target(table: Table, tracer: BeamTracer, letters: Sequence, endpoint) -> tuple:
    """Image of the far endpoint under the reflections named by ``letters``."""
    frame = None
    for name in letters:
        lab = table.label_by_name[name]
        if lab.kind == WALL:
            refl = tracer.reflection("wall", lab.wall_id)
        elif lab.kind == MIRROR_REFLECTIVE:
            refl = tracer.reflection("mirror", lab.mirror_id)
        else:
            continue
        frame = refl if frame is None else frame.compose(refl)
    if frame is None:
        return _point_key(endpoint)
    return _point_key(frame.apply(endpoint))


def _validated_diagonal(
    table: Table,
    tracer: BeamTracer,
    source: Point,
    d: Vec,
    max_events: int,
) -> Optional[DiagonalRecord]:
    """Exact re-walk of a candidate direction; the walk output is the record."""
    if not vertex_direction_ok(table, source, d):
        return None
    if _rides_incident_obstacle(table, source, d):
        return None
    letters, endpoint, status = ray_walk(table, source, d, max_events)
    if status != "vertex" or not _is_singular_point(table, endpoint):
        return None
    target_unf = _unfolded_target(table, tracer, letters, endpoint)
    rel = sub(Point(target_unf[0], target_unf[1]), source)
    if sgn(cross2(rel, d)) != 0 or sgn(dot2(rel, d)) <= 0:
        raise TraceError("unfolded diagonal target is off the flight ray")
    mirror_hits = 0
    transparent_hits = 0
    for name in letters:
        kind = table.label_by_name[name].kind
        if kind == MIRROR_REFLECTIVE:
            mirror_hits += 1
        elif kind == MIRROR_TRANSPARENT:
            transparent_hits += 1
    return DiagonalRecord(
        source=_point_key(source),
        direction=_direction_key(d),
        letters=tuple(letters),
        target=_point_key(endpoint),
        target_unfolded=target_unf,
        length=len(letters) + 1,
        mirror_hits=mirror_hits,
        transparent_hits=transparent_hits,
    )


def _fan_major_progress_lb(fan, src: Point):
    """Exact lower bound on the chart-major distance already travelled from
    ``src`` when a ray of the fan crosses the fan's portal.

    The dual line is fixed for the whole walk while the scene unfolds around
    it, so ``sense * major`` increases monotonically along every ray and the
    portal crossing's major coordinate lies between the portal endpoints'.
    Root fans (no portal yet) have travelled nothing.
    """
    if fan.portal is None:
        return None
    src_major = src[0] if fan.chart == "x" else src[1]
    a, b = fan.portal
    ta, tb = fan.sense * a[0], fan.sense * b[0]
    return (ta if sgn(ta - tb) <= 0 else tb) - fan.sense * src_major


def _singular_fan_sweep(
    table: Table,
    n_max: int,
    budget: int,
    reversed_mirrors: bool,
    on_vertex,
    on_branch,
    major_cutoff=None,
):
    """Run legality-clipped vertex fans to depth n_max - 1 over every singular
    point, invoking the callbacks on vertex incidences and branch sites.

    ``on_vertex(source, cell, param)`` fires for each vertex-incidence
    parameter; ``on_branch(source, cell, mirror_id, lo, hi)`` for each
    reversed-policy mirror branch.  Budget counts fan-step cells.

    ``major_cutoff`` prunes fans whose portal already lies farther than the
    cutoff (in chart-major units, a lower bound for geometric distance) from
    the source.  Returns ``(tracer, truncated)`` where ``truncated`` flags
    dropped boundary-depth children that were still within the cutoff.
    """
    tracer = BeamTracer(table)
    steps = 0
    truncated = False

    def within(fan, src) -> bool:
        if major_cutoff is None:
            return True
        lb = _fan_major_progress_lb(fan, src)
        return lb is None or sgn(lb - major_cutoff) <= 0

    for source in table.singular_points:
        src = Point(source[0], source[1])
        frontier = []
        for root in vertex_root_fans(table, src):
            frontier.extend(_legal_subintervals(table, src, root))
        depth = 0
        while frontier and depth <= n_max - 1:
            nxt = []
            for fan in frontier:
                if not within(fan, src):
                    continue
                steps += 1
                if steps > budget:
                    raise BudgetExceeded(f"fan budget {budget} exceeded", depth - 1)
                for cell, event in fan_step(tracer, fan, reversed_mirrors=reversed_mirrors):
                    if on_vertex is not None:
                        for param, _chart_vertex in event.vertex_params:
                            on_vertex(src, cell, param)
                    if on_branch is not None and event.mirror_branch is not None:
                        mirror_id, lo, hi = event.mirror_branch
                        on_branch(src, cell, mirror_id, lo, hi)
                    if depth < n_max - 1:
                        nxt.extend(event.children)
                    elif major_cutoff is not None and any(
                        within(child, src) for child in event.children
                    ):
                        # Children beyond the depth limit can only host flights
                        # longer than n_max links, which the caller's length
                        # filter drops anyway; they make the result incomplete
                        # only when a geometric cutoff asked for all of them.
                        truncated = True
            frontier = nxt
            depth += 1
    return tracer, truncated


def count_generalized_diagonals(
    table: Table, n_max: int, budget: int = 10_000_000, major_cutoff=None
) -> DiagonalCollection:
    """All oriented vertex-to-vertex orbit segments with <= n_max flight links.

    Fans only nominate (source, direction) candidates; each is confirmed or
    rejected by an exact forward ray walk, cached per primitive direction.
    ``major_cutoff`` restricts the sweep to flights within that chart-major
    distance (a geometric-length lower bound) of their source.
    """
    tracer = BeamTracer(table)
    cache: dict = {}

    def on_vertex(src: Point, cell, param) -> None:
        u = cell.u0 + cell.du * param
        d = real_direction(cell.chart, cell.sense, u)
        key = (_point_key(src), _direction_key(d))
        if key in cache:
            return
        cache[key] = _validated_diagonal(table, tracer, src, d, n_max + 2)

    _, truncated = _singular_fan_sweep(
        table, n_max, budget, False, on_vertex, None, major_cutoff=major_cutoff
    )
    records = [rec for rec in cache.values() if rec is not None and rec.length <= n_max]
    records.sort(key=lambda r: (r.length, repr(r.source), repr(r.direction)))
    return DiagonalCollection(n_max, tuple(records), complete=not truncated)


# ---------------------------------------------------------------------------
# Spy-diagonal families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpyFamilyRecord:
    """A maximal one-parameter family of backward orbits from a singular point
    that reach a mirror from its reflective half-plane (a branching site).

    ``code`` holds the backward event letters from the source up to the
    branch; ``segments`` are the merged direction-parameter pieces, each
    ``(chart, sense, lo, hi)``; ``boundary`` reports the exact guided walks at
    the family's two extreme directions (letters, endpoint, status).
    """

    source: tuple
    code: tuple
    mirror_id: int
    length: int
    segments: tuple
    boundary: tuple


@dataclass(frozen=True)
class SpyFamilyCollection:
    n_max: int
    records: tuple

    def counts_by_length(self) -> list:
        out = [0] * (self.n_max + 1)
        for rec in self.records:
            out[rec.length] += 1
        return out

    def cumulative(self, n: int) -> int:
        return sum(1 for rec in self.records if rec.length <= n)


class _SegmentPool:
    """Merge overlapping parameter segments and chain them across chart seams."""

    def __init__(self):
        self.segments: list = []  # (chart, sense, lo, hi)

    def add(self, chart: str, sense: int, lo, hi) -> None:
        self.segments.append((chart, sense, lo, hi))

    def merged(self) -> list:
        by_cone: dict = {}
        for chart, sense, lo, hi in self.segments:
            by_cone.setdefault((chart, sense), []).append((lo, hi))
        merged = []
        for (chart, sense), items in by_cone.items():
            items.sort(key=lambda ab: ab[0])
            cur_lo, cur_hi = items[0]
            for lo, hi in items[1:]:
                if sgn(lo - cur_hi) <= 0:
                    if sgn(hi - cur_hi) > 0:
                        cur_hi = hi
                else:
                    merged.append((chart, sense, cur_lo, cur_hi))
                    cur_lo, cur_hi = lo, hi
            merged.append((chart, sense, cur_lo, cur_hi))
        return merged

    def components(self) -> list:
        """Group merged segments whose extreme directions coincide (chart seams).

        Returns a list of (segments, extreme_directions) where the extremes
        are the unshared endpoint directions of the chained component.
        """
        merged = self.merged()
        endpoint_keys = []
        for chart, sense, lo, hi in merged:
            d_lo = real_direction(chart, sense, lo)
            d_hi = real_direction(chart, sense, hi)
            endpoint_keys.append((_direction_key(d_lo), _direction_key(d_hi)))
        parent = list(range(len(merged)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i, j):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj

        by_key: dict = {}
        for i, (klo, khi) in enumerate(endpoint_keys):
            for k in (klo, khi):
                by_key.setdefault(k, []).append(i)
        for k, members in by_key.items():
            for other in members[1:]:
                union(members[0], other)
        groups: dict = {}
        for i in range(len(merged)):
            groups.setdefault(find(i), []).append(i)
        out = []
        for members in groups.values():
            segs = [merged[i] for i in members]
            counts: dict = {}
            for i in members:
                for k in endpoint_keys[i]:
                    counts[k] = counts.get(k, 0) + 1
            extremes = [k for k, c in counts.items() if c == 1]
            out.append((segs, extremes))
        return out


def count_spy_diagonal_families(
    table: Table, n_max: int, budget: int = 10_000_000
) -> SpyFamilyCollection:
    """Maximal families of branching backward orbits, length <= n_max.

    A family site is a fan cell that meets a mirror from its reflective
    half-plane under the time-reversed policy: there the backward orbit has
    two legal pasts (bounced or passed through) and the forward dynamics loses
    a layer.  Families sharing source, backward code and mirror are merged
    across parameter cells and chart seams; each family's extreme directions
    are walked exactly to expose the bounding singular segments.
    """
    sites: dict = {}

    def on_branch(src: Point, cell, mirror_id: int, lo, hi) -> None:
        if len(cell.code) + 1 > n_max:
            return
        key = (_point_key(src), cell.code, mirror_id)
        pool = sites.get(key)
        if pool is None:
            pool = _SegmentPool()
            sites[key] = pool
        pool.add(cell.chart, cell.sense, lo, hi)

    _singular_fan_sweep(table, n_max, budget, True, None, on_branch)

    records = []
    for (src_key, code, mirror_id), pool in sites.items():
        src = Point(src_key[0], src_key[1])
        for segs, extremes in pool.components():
            boundary = []
            for dkey in extremes:
                d = Vec(Q(dkey[0]), Q(dkey[1]))
                letters, endpoint, status = guided_backward_walk(
                    table, src, d, code, max_extra=2
                )
                boundary.append((tuple(letters), _point_key(endpoint), status))
            records.append(
                SpyFamilyRecord(
                    source=src_key,
                    code=tuple(code),
                    mirror_id=mirror_id,
                    length=len(code) + 1,
                    segments=tuple(sorted(segs, key=repr)),
                    boundary=tuple(sorted(boundary, key=repr)),
                )
            )
    records.sort(key=lambda r: (r.length, repr(r.source), repr(r.code), r.mirror_id))
    return SpyFamilyCollection(n_max, tuple(records))


# ---------------------------------------------------------------------------
# Directional complexity
# ---------------------------------------------------------------------------


def directional_complexity(
    table: Table, direction: Sequence, n_max: int, budget: int = 10_000_000
) -> list:
    """p_dir(n): number of words realized by orbits of one unoriented direction.

    Both orientations of the direction are traced (a vertical direction, say,
    has upward-moving and downward-moving words).  Roots are the sides whose
    outgoing half-plane contains the orientation; the fan parameter is the
    line intercept.  Twin cloning on the first letter applies exactly as in
    the full language.  Returns ``[p_dir(0), ..., p_dir(n_max)]``.
    """
    dx, dy = Q(direction[0]), Q(direction[1])
    if sgn(dx) == 0 and sgn(dy) == 0:
        raise ValueError("zero direction")
    chart = "x" if sgn(abs(dx) - abs(dy)) >= 0 else "y"
    major, minor = (dx, dy) if chart == "x" else (dy, dx)
    u = minor / major

    tracer = BeamTracer(table)
    twins = _twin_first_letter(table)
    fans = []
    for d in (Vec(dx, dy), Vec(-dx, -dy)):
        sense = sgn(d[0] if chart == "x" else d[1])
        for lab in table.labels:
            if lab.kind == MIRROR_TRANSPARENT:
                continue  # cloned from the reflective face
            seg = table.segment_of(lab)
            if lab.kind == WALL:
                normal = tracer._wall_normals[lab.wall_id]
            else:
                normal = table.mirrors[lab.mirror_id].normal
            if sgn(dot2(d, normal)) <= 0:
                continue  # no outgoing states on this side along the orientation
            a_c = chart_point(chart, seg.a)
            b_c = chart_point(chart, seg.b)
            va = a_c[1] - u * a_c[0]
            vb = b_c[1] - u * b_c[0]
            if sgn(va - vb) == 0:
                continue  # side parallel to the direction
            lo, hi = (va, vb) if sgn(vb - va) > 0 else (vb, va)
            fans.append(
                Fan(
                    code=(lab.name,),
                    frame=Isometry.identity(),
                    chart=chart,
                    sense=sense,
                    u0=u,
                    du=Q(0),
                    v0=Q(0),
                    dv=Q(1),
                    lo=lo,
                    hi=hi,
                    portal=(a_c, b_c),
                    tau_floor=None,
                )
            )

    counts = [1]
    frontier = fans
    steps = 0
    for depth in range(1, n_max + 1):
        seen = {fan.code for fan in frontier}
        for code in list(seen):
            twin = twins.get(code[0])
            if twin is not None:
                seen.add((twin,) + code[1:])
        counts.append(len(seen))
        if depth == n_max:
            break
        nxt = []
        for fan in frontier:
            steps += 1
            if steps > budget:
                raise BudgetExceeded(f"fan budget {budget} exceeded", depth)
            for _cell, event in fan_step(tracer, fan):
                nxt.extend(event.children)
        frontier = nxt
    return counts


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_complexity_csv(
    path,
    tree: LanguageTree,
    diagonals: Optional[DiagonalCollection] = None,
    spies: Optional[SpyFamilyCollection] = None,
) -> None:
    """One row per word length: complexity, growth, special-word and census counts."""
    n_top = tree.complete_to
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n", "p", "s", "bilateral", "non_prolongable", "diagonals_cum", "spy_families_cum"]
        )
        for n in range(n_top + 1):
            s = tree.p(n + 1) - tree.p(n) if n + 1 <= n_top else ""
            if n + 2 <= n_top:
                data = special_word_stats(tree, n)
                nbl = len(data["bilateral"])
                nnp = len(data["non_prolongable"])
            else:
                nbl = nnp = ""
            ndiag = diagonals.cumulative(n) if diagonals is not None and n <= diagonals.n_max else ""
            nspy = spies.cumulative(n) if spies is not None and n <= spies.n_max else ""
            writer.writerow([n, tree.p(n), s, nbl, nnp, ndiag, nspy])


def dump_words(path, tree: LanguageTree, n: int) -> None:
    """Write the length-n words, one per line, letters joined with dots."""
    if n > tree.complete_to:
        raise ValueError(f"language only complete to length {tree.complete_to}")
    with open(path, "w") as fh:
        for w in sorted(tree.words[n]):
            fh.write(".".join(w) + "\n")
