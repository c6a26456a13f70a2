"""Bound verification, growth fits, and census checks over enumerated data.

Everything here is pure post-processing of exact enumeration output:

* ``diagonal_count_bound`` evaluates the integer upper bound for word
  complexity driven by the per-length counts of vertex-to-vertex orbit
  segments, and the report compares it with the enumerated ``p(n)`` level by
  level (a hard inequality).
* ``fit_growth_degree`` and ``entropy_estimate`` are soft numerical trends:
  a log-log least-squares degree over a trailing window, and the sequence
  ``h_n = log p(n) / n`` with monotonicity flags.  They are reported, never
  used as proofs.
* ``square_cover_census`` re-derives, from endpoint data alone, the
  straight-line structure of diagonals on the unit square with vertical
  one-sided mirrors: unfolding a flight reflection by reflection keeps it
  straight, and each reflective mirror hit displaces the unfolded abscissa by
  a fixed jump (``2a`` for a mirror at ``x = a`` whose reflective face points
  to ``+x``, ``2 - 2a`` for the other face).  The sign-normalized abscissa
  ``m = |dx| + sum(jump * hits)`` must therefore be an integer for
  corner-to-corner flights, at most one flight can realize each hit pattern
  towards a given target, and the number of admissible hit patterns for
  abscissa ``m`` with ``k`` mirror lines is the lattice count ``Q_k(m)``
  (``Q_1(m) = m``).  The census asserts all of that against the traced
  records and fits the cumulative count-by-radius curve.
* ``covering_projection_check`` takes a table built by unfolding a base
  polygon, pushes every traced diagonal down through the recorded copy
  isometries, re-walks it in the base table, and checks the per-length count
  inequality (at most ``degree`` lifts per base diagonal).
* ``ComplexityReport`` aggregates the series, fits, and pass/fail flags for
  one table run, with deterministic JSON / CSV serialization (no clocks, no
  environment data), so identical configurations reproduce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import Point, Vec, sub
from .language import (
    DiagonalCollection,
    LanguageTree,
    SpyFamilyCollection,
    cassaigne_terms,
    count_generalized_diagonals,
    count_spy_diagonal_families,
    enumerate_language,
    _unfolded_target,
)
from .numbers import Q, scalar_to_string, sgn
from .table import MIRROR_REFLECTIVE, WALL, Table
from .tracing import BeamTracer, TraceError, ray_walk

__all__ = [
    "diagonal_count_bound",
    "GrowthFit",
    "fit_growth_degree",
    "EntropyEstimate",
    "entropy_estimate",
    "census_solution_count",
    "CensusRecord",
    "CensusReport",
    "square_cover_census",
    "ProjectionReport",
    "covering_projection_check",
    "ComplexityReport",
    "build_complexity_report",
    "write_report_csv",
]


# ---------------------------------------------------------------------------
# Complexity upper bound from diagonal counts
# ---------------------------------------------------------------------------


def diagonal_count_bound(q: int, r: int, n_vert_by_length: Sequence[int], n: int) -> int:
    """Upper bound for p(n) in exact integers.

    With alphabet size ``A = q + 2r`` and ``N(i)`` the number of
    vertex-to-vertex segments of combinatorial length exactly ``i``::

        bound(n) = 1 + (A - 1) n + 2 (A**2 - 3) * sum_{j=0}^{n-1} sum_{i=0}^{j} N(i)

    Requires ``N`` through length ``n - 1``.
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    alphabet = q + 2 * r
    if n == 0:
        return 1
    if len(n_vert_by_length) < n:
        raise ValueError(
            f"need diagonal counts through length {n - 1}, got {len(n_vert_by_length)}"
        )
    running = 0
    double_sum = 0
    for j in range(n):
        running += n_vert_by_length[j]
        double_sum += running
    return 1 + (alphabet - 1) * n + 2 * (alphabet * alphabet - 3) * double_sum


# ---------------------------------------------------------------------------
# Growth fitting and entropy proxy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares slope of log(series[n]) against log(n)."""

    degree: float
    residual: float  # root-mean-square residual of the fit
    window: int
    n_lo: int
    n_hi: int

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "residual": self.residual,
            "window": self.window,
            "n_lo": self.n_lo,
            "n_hi": self.n_hi,
        }


def fit_growth_degree(series: Sequence, window: int) -> GrowthFit:
    """Fitted polynomial degree of ``series`` over its trailing ``window``.

    ``series[n]`` is the value at ``n``; the entry at index 0 is ignored
    (log 0 is undefined as an abscissa).  An exactly constant window fits
    degree 0 with zero residual.
    """
    if window < 4:
        raise ValueError("window must be at least 4")
    usable = [(n, series[n]) for n in range(1, len(series))]
    if len(usable) < window:
        raise ValueError(f"series has {len(usable)} usable points, need {window}")
    tail = usable[-window:]
    if any(v <= 0 for _n, v in tail):
        raise ValueError("series must be positive on the fitted window")
    n_lo, n_hi = tail[0][0], tail[-1][0]
    ys = [math.log(float(v)) for _n, v in tail]
    if max(ys) == min(ys):
        return GrowthFit(0.0, 0.0, window, n_lo, n_hi)
    xs = [math.log(float(n)) for n, _v in tail]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    rss = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    return GrowthFit(slope, math.sqrt(rss / len(xs)), window, n_lo, n_hi)


@dataclass(frozen=True)
class EntropyEstimate:
    """``h_n = log p(n) / n`` with monotone-trend flags.

    ``tail_strictly_decreasing`` covers the trailing half of the computed
    range; ``below_first_after_two`` asks ``h_n < h_1 = log(alphabet)`` for
    every ``n >= 3``; ``last_below_half_second`` asks ``h_nmax < h_2 / 2``.
    """

    values: tuple
    tail_strictly_decreasing: bool
    below_first_after_two: bool
    last_below_half_second: bool

    def as_dict(self) -> dict:
        return {
            "values": list(self.values),
            "tail_strictly_decreasing": self.tail_strictly_decreasing,
            "below_first_after_two": self.below_first_after_two,
            "last_below_half_second": self.last_below_half_second,
        }


def entropy_estimate(series: Sequence) -> EntropyEstimate:
    """Entropy proxy of a complexity series ``series[n] = p(n)``."""
    if len(series) < 2:
        raise ValueError("need p(n) at least through n = 1")
    if any(v < 1 for v in series):
        raise ValueError("complexity values must be >= 1")
    values = tuple(math.log(float(series[n])) / n for n in range(1, len(series)))
    n_top = len(values)  # h_n computed for n = 1..n_top
    tail = values[n_top // 2 :]
    decreasing = all(b < a for a, b in zip(tail, tail[1:]))
    below_first = all(values[i] < values[0] for i in range(2, n_top))
    halved = n_top >= 2 and values[-1] < 0.5 * values[1]
    return EntropyEstimate(values, decreasing, below_first, halved)


# ---------------------------------------------------------------------------
# Straight-line cover census for the square with vertical one-sided mirrors
# ---------------------------------------------------------------------------


def census_solution_count(k: int, m: int) -> int:
    """Number of hit patterns ``(j_0, ..., j_k) >= 0`` with ``sum = m - 1``.

    Counted by direct enumeration (not a closed formula) so it can serve as
    the independent side of the stars-and-bars identity check.
    """
    if m < 1:
        return 0

    def count(parts: int, total: int) -> int:
        if parts == 1:
            return 1
        return sum(count(parts - 1, total - first) for first in range(total + 1))

    return count(k + 1, m - 1)


@dataclass(frozen=True)
class CensusRecord:
    """Classification of one traced diagonal in unfolded-cover terms.

    ``m`` is the sign-normalized cover abscissa ``|dx| + sum(jump_i * j_i)``
    (an exact scalar; integral for corner-to-corner flights), ``n = |dy|``,
    ``j_by_line`` the reflective hits per mirror line, ``j_walls`` the
    vertical wall crossings.  ``kind`` is "corner-corner", "corner-mirror"
    or "mirror-mirror" by endpoint type.
    """

    source: tuple
    target: tuple
    sign_x: int
    sign_y: int
    m: object
    n: int
    j_total: int
    j_by_line: tuple
    j_walls: int
    cover_norm_sq: object
    length: int
    kind: str


@dataclass(frozen=True)
class CensusReport:
    radius: int
    k: int
    mirror_lines: tuple
    jumps: tuple
    records: tuple
    integrality_failures: tuple
    class_failures: tuple
    domain_failures: tuple
    strip_failures: tuple
    slope_failures: tuple
    duplicate_failures: tuple
    group_bound_failures: tuple
    q_identity_ok: bool
    q_bound_ok: bool
    cumulative: tuple
    fit: Optional[GrowthFit]
    complete: bool

    @property
    def corner_corner_count(self) -> int:
        return sum(1 for rec in self.records if rec.kind == "corner-corner")

    @property
    def ok(self) -> bool:
        return (
            self.complete
            and self.q_identity_ok
            and self.q_bound_ok
            and not self.integrality_failures
            and not self.class_failures
            and not self.domain_failures
            and not self.strip_failures
            and not self.slope_failures
            and not self.duplicate_failures
            and not self.group_bound_failures
        )

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "k": self.k,
            "mirror_lines": [scalar_to_string(x) for x in self.mirror_lines],
            "jumps": [scalar_to_string(b) for b in self.jumps],
            "records_within_radius": len(self.records),
            "corner_corner_records": self.corner_corner_count,
            "failures": {
                "integrality": len(self.integrality_failures),
                "class": len(self.class_failures),
                "domain": len(self.domain_failures),
                "strip": len(self.strip_failures),
                "slope": len(self.slope_failures),
                "duplicate": len(self.duplicate_failures),
                "group_bound": len(self.group_bound_failures),
            },
            "q_identity_ok": self.q_identity_ok,
            "q_bound_ok": self.q_bound_ok,
            "cumulative": list(self.cumulative),
            "fit": None if self.fit is None else self.fit.as_dict(),
            "complete": self.complete,
            "ok": self.ok,
        }


def _is_unit_square(table: Table) -> bool:
    want = {(Q(0), Q(0)), (Q(1), Q(0)), (Q(1), Q(1)), (Q(0), Q(1))}
    got = {(Q(p[0]), Q(p[1])) for p in table.vertices}
    return got == want


def census_applicable(table: Table) -> bool:
    """True for the unit square with only vertical interior one-sided mirrors."""
    if table.r == 0 or not _is_unit_square(table):
        return False
    for m in table.mirrors:
        if sgn(m.seg.a[0] - m.seg.b[0]) != 0:
            return False
        if sgn(m.normal[1]) != 0 or sgn(m.normal[0]) == 0:
            return False
    return True


def _frac(x):
    """Fractional part of an exact scalar, in [0, 1)."""
    q = Q(x)
    return q - math.floor(q)


def square_cover_census(
    table: Table,
    radius: int,
    diagonals: Optional[DiagonalCollection] = None,
    n_max: Optional[int] = None,
    budget: int = 50_000_000,
    fit_window: Optional[int] = None,
) -> CensusReport:
    """Cross-check traced diagonals against the unfolded-cover candidate set.

    ``radius`` bounds the cover target norm: a record with abscissa ``m`` and
    ordinate ``n`` is kept when ``m**2 + n**2 <= radius**2``.  When
    ``diagonals`` is not supplied they are traced here with a geometric
    cutoff at ``radius`` (sound: jumps only increase ``m``, so the real
    flight is never longer than the cover distance).
    """
    if not census_applicable(table):
        raise ValueError(
            "census needs the unit square with vertical one-sided mirrors"
        )
    if radius < 2:
        raise ValueError("radius must be at least 2")

    # Jump size per mirror: reflective face toward +x jumps 2a, toward -x 2-2a.
    jumps = []
    xs = []
    for m in table.mirrors:
        a = Q(m.seg.a[0])
        if not (0 < a < 1):
            raise ValueError("mirror line must be interior to the unit square")
        xs.append(a)
        jumps.append(2 * a if sgn(m.normal[0]) > 0 else 2 - 2 * a)
    lines = sorted(set(xs))
    line_index = {x: i for i, x in enumerate(lines)}
    k = len(lines)

    if diagonals is None:
        depth = n_max if n_max is not None else 6 * radius
        diagonals = count_generalized_diagonals(
            table, depth, budget, major_cutoff=Q(radius)
        )

    vertical_walls = {
        lab.name
        for lab in table.labels
        if lab.kind == WALL
        and sgn(table.walls[lab.wall_id].a[0] - table.walls[lab.wall_id].b[0]) == 0
    }
    reflective_of_mirror = {
        lab.name: lab.mirror_id for lab in table.labels if lab.kind == MIRROR_REFLECTIVE
    }
    corner_x = {Q(p[0]) for p in table.vertices}

    def endpoint_kind(x) -> str:
        return "corner" if Q(x) in corner_x else "mirror"

    records = []
    integrality_failures = []
    class_failures = []
    domain_failures = []
    strip_failures = []
    slope_failures = []
    duplicate_failures = []
    group_bound_failures = []
    groups: dict = {}

    for rec in diagonals.records:
        dx = Q(rec.target_unfolded[0]) - Q(rec.source[0])
        dy = Q(rec.target_unfolded[1]) - Q(rec.source[1])
        if sgn(dx) == 0 or sgn(dy) == 0:
            # Axis-parallel flights ride a wall or mirror and are filtered at
            # the source; reaching here would be an engine bug.
            class_failures.append(rec)
            continue
        j_by_line = [0] * k
        j_walls = 0
        jump_sum = Q(0)
        for name in rec.letters:
            if name in vertical_walls:
                j_walls += 1
            elif name in reflective_of_mirror:
                mid = reflective_of_mirror[name]
                j_by_line[line_index[xs[mid]]] += 1
                jump_sum += jumps[mid]
        j_total = sum(j_by_line)
        m_val = abs(dx) + jump_sum
        n_val = abs(dy)
        if m_val * m_val + n_val * n_val > radius * radius:
            continue
        skind = endpoint_kind(rec.source[0])
        tkind = endpoint_kind(rec.target[0])
        kind = (
            "corner-corner"
            if skind == tkind == "corner"
            else ("mirror-mirror" if skind == tkind else "corner-mirror")
        )
        if Q(n_val).denominator != 1:
            integrality_failures.append(rec)
            continue
        xs_src, xs_tgt = Q(rec.source[0]), Q(rec.target[0])
        allowed_fracs = {
            _frac(s * xs_tgt + t * xs_src) for s in (1, -1) for t in (1, -1)
        }
        if _frac(m_val) not in allowed_fracs:
            class_failures.append(rec)
            continue
        crec = CensusRecord(
            source=rec.source,
            target=rec.target,
            sign_x=sgn(dx),
            sign_y=sgn(dy),
            m=m_val,
            n=int(n_val),
            j_total=j_total,
            j_by_line=tuple(j_by_line),
            j_walls=j_walls,
            cover_norm_sq=m_val * m_val + n_val * n_val,
            length=rec.length,
            kind=kind,
        )
        records.append(crec)
        if kind == "corner-corner":
            if Q(m_val).denominator != 1:
                integrality_failures.append(rec)
                continue
            m_int = int(m_val)
            if not 0 <= j_total <= m_int - 1:
                domain_failures.append(crec)
            if j_walls + j_total != m_int - 1:
                strip_failures.append(crec)
        # Slope consistency: dy/dx == sign_y * n / (sign_x * (m - sum(jumps))).
        straight = m_val - jump_sum
        if sgn(dy * crec.sign_x * straight - dx * crec.sign_y * n_val) != 0:
            slope_failures.append(crec)
        gkey = (rec.source, rec.target, crec.sign_x, crec.sign_y, m_val, int(n_val))
        groups.setdefault(gkey, []).append(crec)

    for gkey, members in groups.items():
        j_patterns = [(mrec.j_by_line) for mrec in members]
        if len(j_patterns) != len(set(j_patterns)):
            duplicate_failures.append(gkey)
        m_val = gkey[4]
        if Q(m_val).denominator == 1 and len(members) > census_solution_count(k, int(m_val)):
            group_bound_failures.append(gkey)

    # Enumerated pattern counts must match stars-and-bars exactly, in the
    # product form k! * Q_k(m) = m (m+1) ... (m+k-1); for one mirror line
    # that is the equality Q_1(m) = m.  The growth bound uses the largest
    # factor: Q_k(m) <= (m+k-1)**k / k!.  (The naive m**k / k! is *below*
    # the true count for k >= 2 because every factor of the product is
    # >= m.)
    q_identity_ok = all(
        census_solution_count(k, m) == math.comb(m - 1 + k, k)
        and math.factorial(k) * census_solution_count(k, m)
        == math.prod(range(m, m + k))
        and (k != 1 or census_solution_count(k, m) == m)
        for m in range(1, radius + 1)
    )
    q_bound_ok = all(
        math.factorial(kk) * math.comb(m - 1 + kk, kk) <= (m + kk - 1) ** kk
        for kk in range(1, max(4, k) + 1)
        for m in range(1, radius + 1)
    )

    cumulative = tuple(
        sum(1 for crec in records if crec.cover_norm_sq <= t * t)
        for t in range(1, radius + 1)
    )
    fit: Optional[GrowthFit] = None
    window = fit_window if fit_window is not None else max(4, radius // 2)
    series = [0] + list(cumulative)
    try:
        fit = fit_growth_degree(series, window)
    except ValueError:
        fit = None

    records.sort(key=lambda c: (c.length, repr(c.source), repr(c.target), c.j_total))
    return CensusReport(
        radius=radius,
        k=k,
        mirror_lines=tuple(lines),
        jumps=tuple(jumps),
        records=tuple(records),
        integrality_failures=tuple(integrality_failures),
        class_failures=tuple(class_failures),
        domain_failures=tuple(domain_failures),
        strip_failures=tuple(strip_failures),
        slope_failures=tuple(slope_failures),
        duplicate_failures=tuple(duplicate_failures),
        group_bound_failures=tuple(group_bound_failures),
        q_identity_ok=q_identity_ok,
        q_bound_ok=q_bound_ok,
        cumulative=cumulative,
        fit=fit,
        complete=diagonals.complete,
    )


# ---------------------------------------------------------------------------
# Covering projection check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionReport:
    degree: int
    n_max: int
    cover_counts: tuple
    base_counts: tuple
    checked: int
    failures: tuple
    count_ok: bool

    @property
    def ok(self) -> bool:
        return self.count_ok and not self.failures

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "n_max": self.n_max,
            "cover_counts": list(self.cover_counts),
            "base_counts": list(self.base_counts),
            "checked": self.checked,
            "projection_failures": len(self.failures),
            "count_ok": self.count_ok,
            "ok": self.ok,
        }


def covering_projection_check(
    table: Table,
    n_max: int,
    diagonals: Optional[DiagonalCollection] = None,
    base_diagonals: Optional[DiagonalCollection] = None,
    budget: int = 10_000_000,
) -> ProjectionReport:
    """Project every diagonal of an unfolded table onto its base polygon.

    Each singular point of the cover maps to a base vertex under the inverse
    of the copy isometry containing it, and the projected ray must re-walk in
    the base to a vertex with the same event count and the same flight
    length.  Per combinatorial length, the cover can have at most ``degree``
    diagonals per base diagonal (one lift per copy).
    """
    cov = table.covering
    if cov is None:
        raise ValueError("table has no covering data")
    base = Table(
        vertices=tuple(Point(p[0], p[1]) for p in cov.base),
        mirrors=(),
        kernel=table.kernel,
        name=(table.name or "table") + "-base",
    )
    if diagonals is None:
        diagonals = count_generalized_diagonals(table, n_max, budget)
    if base_diagonals is None:
        base_diagonals = count_generalized_diagonals(base, n_max, budget)
    tracer_b = BeamTracer(base)
    base_vertices = [Point(p[0], p[1]) for p in base.vertices]

    def is_base_vertex(p) -> bool:
        return any(
            sgn(p[0] - v[0]) == 0 and sgn(p[1] - v[1]) == 0 for v in base_vertices
        )

    failures = []
    checked = 0
    for rec in diagonals.records:
        checked += 1
        source = Point(Q(rec.source[0]), Q(rec.source[1]))
        direction = Vec(Q(rec.direction[0]), Q(rec.direction[1]))
        drel = sub(
            Point(Q(rec.target_unfolded[0]), Q(rec.target_unfolded[1])), source
        )
        span_sq = drel[0] * drel[0] + drel[1] * drel[1]
        ok = False
        for iso in cov.copies:
            inv = iso.inverse()
            p0 = inv.apply(source)
            if not is_base_vertex(p0):
                continue
            d0 = inv.apply_vec(direction)
            try:
                letters, endpoint, status = ray_walk(
                    base, p0, d0, len(rec.letters) + 2
                )
            except TraceError:
                continue
            if status != "vertex" or len(letters) != len(rec.letters):
                continue
            unf = _unfolded_target(base, tracer_b, letters, endpoint)
            brel = sub(Point(unf[0], unf[1]), p0)
            if sgn(brel[0] * brel[0] + brel[1] * brel[1] - span_sq) != 0:
                continue
            ok = True
            break
        if not ok:
            failures.append(rec)

    cover_counts = tuple(diagonals.counts_by_length())
    base_counts = tuple(base_diagonals.counts_by_length())
    top = min(len(cover_counts), len(base_counts))
    count_ok = all(
        cover_counts[i] <= cov.degree * base_counts[i] for i in range(top)
    )
    return ProjectionReport(
        degree=cov.degree,
        n_max=n_max,
        cover_counts=cover_counts,
        base_counts=base_counts,
        checked=checked,
        failures=tuple(failures),
        count_ok=count_ok,
    )


# ---------------------------------------------------------------------------
# Aggregated report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityReport:
    """All series and flags for one table run.

    Every flag is a pure function of the stored series: ``bound_ok`` compares
    ``p`` with ``bounds`` level by level, ``spy_bound_ok`` compares cumulative
    spy-family counts with cumulative diagonal counts, ``identity_ok`` asks
    that every stored second-difference residual vanish.
    """

    table_name: str
    q: int
    r: int
    kernel: str
    n_max: int
    complete_to: int
    truncated: bool
    p: tuple
    s: tuple
    identity_lhs: tuple
    identity_bilateral: tuple
    identity_non_prolongable: tuple
    identity_left_deaths: tuple
    identity_residuals: tuple
    n_vert: tuple
    n_spy: tuple
    bounds: tuple
    entropy: EntropyEstimate
    fit: Optional[GrowthFit]
    census: Optional[CensusReport]
    projection: Optional[ProjectionReport]

    @property
    def alphabet_size(self) -> int:
        return self.q + 2 * self.r

    @property
    def bound_ok(self) -> bool:
        return all(p <= b for p, b in zip(self.p, self.bounds))

    @property
    def spy_bound_ok(self) -> bool:
        vert_cum = spy_cum = 0
        for i in range(min(len(self.n_vert), len(self.n_spy))):
            vert_cum += self.n_vert[i]
            spy_cum += self.n_spy[i]
            if spy_cum > vert_cum:
                return False
        return True

    @property
    def identity_ok(self) -> bool:
        return all(res == 0 for res in self.identity_residuals)

    @property
    def hard_pass(self) -> bool:
        return self.bound_ok and self.spy_bound_ok and self.identity_ok

    def flags(self) -> dict:
        return {
            "bound_ok": self.bound_ok,
            "spy_bound_ok": self.spy_bound_ok,
            "identity_ok": self.identity_ok,
            "entropy_tail_decreasing": self.entropy.tail_strictly_decreasing,
            "entropy_below_first": self.entropy.below_first_after_two,
            "entropy_halved": self.entropy.last_below_half_second,
            "census_ok": None if self.census is None else self.census.ok,
            "projection_ok": None if self.projection is None else self.projection.ok,
            "hard_pass": self.hard_pass,
        }

    def to_json_dict(self) -> dict:
        return {
            "table": {
                "name": self.table_name,
                "q": self.q,
                "r": self.r,
                "alphabet": self.alphabet_size,
                "kernel": self.kernel,
            },
            "n_max": self.n_max,
            "complete_to": self.complete_to,
            "truncated": self.truncated,
            "series": {
                "p": list(self.p),
                "s": list(self.s),
                "identity_lhs": list(self.identity_lhs),
                "identity_bilateral": list(self.identity_bilateral),
                "identity_non_prolongable": list(self.identity_non_prolongable),
                "identity_left_deaths": list(self.identity_left_deaths),
                "identity_residuals": list(self.identity_residuals),
                "n_vert": list(self.n_vert),
                "n_spy": list(self.n_spy),
                "bounds": list(self.bounds),
                "entropy": list(self.entropy.values),
            },
            "fit": None if self.fit is None else self.fit.as_dict(),
            "entropy_flags": {
                "tail_strictly_decreasing": self.entropy.tail_strictly_decreasing,
                "below_first_after_two": self.entropy.below_first_after_two,
                "last_below_half_second": self.entropy.last_below_half_second,
            },
            "census": None if self.census is None else self.census.as_dict(),
            "projection": None if self.projection is None else self.projection.as_dict(),
            "flags": self.flags(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def build_complexity_report(
    table: Table,
    n_max: int,
    diag_n_max: Optional[int] = None,
    census_radius: Optional[int] = None,
    budget: int = 10_000_000,
    fit_window: Optional[int] = None,
    tree: Optional[LanguageTree] = None,
) -> ComplexityReport:
    """Enumerate one table and assemble the full report.

    ``census_radius`` adds the unfolded-cover census when the table qualifies
    (unit square, vertical mirrors); a covering projection section is added
    automatically when the table records covering data.  A pre-built ``tree``
    (for example a replayed word dump) replaces the enumeration, so the same
    checks can audit externally supplied word sets.
    """
    if tree is None:
        tree = enumerate_language(table, n_max, budget)
    top = tree.complete_to
    p = tuple(tree.p(n) for n in range(top + 1))
    s = tuple(p[n + 1] - p[n] for n in range(top))

    lhs = []
    bilateral = []
    non_prolongable = []
    left_deaths = []
    residuals = []
    for j in range(max(0, top - 1)):
        terms = cassaigne_terms(tree, j)
        lhs.append(terms["lhs"])
        bilateral.append(terms["bilateral_sum"])
        non_prolongable.append(terms["non_prolongable_sum"])
        left_deaths.append(terms["left_deaths"])
        residuals.append(terms["residual"])

    depth = diag_n_max if diag_n_max is not None else n_max
    diagonals = count_generalized_diagonals(table, depth, budget)
    spies = count_spy_diagonal_families(table, depth, budget)
    n_vert = tuple(diagonals.counts_by_length())
    n_spy = tuple(spies.counts_by_length())
    bounds = tuple(
        diagonal_count_bound(table.q, table.r, n_vert, n) for n in range(top + 1)
    )

    entropy = entropy_estimate(p)
    fit: Optional[GrowthFit] = None
    window = fit_window if fit_window is not None else max(4, top // 2)
    try:
        fit = fit_growth_degree(p, window)
    except ValueError:
        fit = None

    census = None
    if census_radius is not None and census_applicable(table):
        census = square_cover_census(table, census_radius, budget=budget)
    projection = None
    if table.covering is not None:
        projection = covering_projection_check(
            table, depth, diagonals=diagonals, budget=budget
        )

    return ComplexityReport(
        table_name=table.name or "table",
        q=table.q,
        r=table.r,
        kernel=table.kernel,
        n_max=n_max,
        complete_to=top,
        truncated=tree.truncated,
        p=p,
        s=s,
        identity_lhs=tuple(lhs),
        identity_bilateral=tuple(bilateral),
        identity_non_prolongable=tuple(non_prolongable),
        identity_left_deaths=tuple(left_deaths),
        identity_residuals=tuple(residuals),
        n_vert=n_vert,
        n_spy=n_spy,
        bounds=bounds,
        entropy=entropy,
        fit=fit,
        census=census,
        projection=projection,
    )


def write_report_csv(path, report: ComplexityReport) -> None:
    """CSV mirror of the report's per-level series."""
    rows = max(len(report.p), len(report.n_vert), len(report.n_spy))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "n",
                "p",
                "s",
                "identity_residual",
                "n_vert",
                "n_spy",
                "bound",
                "entropy",
            ]
        )
        for n in range(rows):
            writer.writerow(
                [
                    n,
                    report.p[n] if n < len(report.p) else "",
                    report.s[n] if n < len(report.s) else "",
                    report.identity_residuals[n]
                    if n < len(report.identity_residuals)
                    else "",
                    report.n_vert[n] if n < len(report.n_vert) else "",
                    report.n_spy[n] if n < len(report.n_spy) else "",
                    report.bounds[n] if n < len(report.bounds) else "",
                    report.entropy.values[n - 1]
                    if 1 <= n <= len(report.entropy.values)
                    else "",
                ]
            )
