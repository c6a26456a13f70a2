"""Independent oracles for the test suite.

The package computes its central quantities by beam tracing in a dual line
space.  Everything in this module reaches the same quantities by a second,
deliberately naive route — pointwise ray casting over ``fractions.Fraction``
(or high-precision mpmath floats for the one irrational table), direct
lattice counts, closed-form combinatorics — using only the standard library
plus mpmath, and none of the package's own geometry.  Tests compare the two
routes; agreement is evidence, disagreement is a bug on one side.

Conventions mirrored from the package's documented behavior:

* wall ``i`` (0-based) runs ``verts[i] -> verts[(i+1) % q]`` and is labeled
  ``w{i+1}``; mirror ``j`` contributes labels ``m{j+1}r`` (reflecting face)
  and ``m{j+1}t`` (transparent face);
* a mirror's normal points away from its transparent face: a flight with
  ``dot(d, normal) < 0`` bounces, ``> 0`` passes through unchanged;
* in the config format, ``reflective right`` means the reflecting face is on
  the right of the from->to direction, i.e. the normal is the *right* normal.

Every tracer here is conservative: any hit that is singular (a vertex, a
mirror endpoint), ambiguous (two obstacles at the same flight time), or — in
float mode — within ``eps`` of being either, rejects the whole trace by
returning ``None``.  A returned word therefore belongs to an open tube of
nearby orbits, which is exactly what language membership asserts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath

__all__ = [
    "OracleMirror",
    "OracleTable",
    "parse_table",
    "mp_scalar",
    "trace_word",
    "trace_word_axis",
    "backward_survives",
    "sample_phase_point",
    "square_oriented_diagonal_count",
    "square_oriented_diagonal_cumulative",
    "hit_pattern_count",
    "loglog_slope",
]


# ---------------------------------------------------------------------------
# Minimal independent reader for the table config format
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleMirror:
    a: tuple
    b: tuple
    normal: tuple


@dataclass(frozen=True)
class OracleTable:
    verts: tuple
    mirrors: tuple

    @property
    def q(self) -> int:
        return len(self.verts)

    def wall(self, i: int) -> tuple:
        return self.verts[i], self.verts[(i + 1) % self.q]

    def wall_inward_normal(self, i: int) -> tuple:
        # Vertices are counter-clockwise, so the interior is on the left of
        # each edge and the left normal points inward.
        a, b = self.wall(i)
        ex, ey = b[0] - a[0], b[1] - a[1]
        return (-ey, ex)

    def point_on_wall(self, i: int, s):
        a, b = self.wall(i)
        return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))

    def point_on_mirror(self, j: int, s):
        m = self.mirrors[j]
        return (m.a[0] + s * (m.b[0] - m.a[0]), m.a[1] + s * (m.b[1] - m.a[1]))


def mp_scalar(token: str):
    """Evaluate a coordinate token (``1/2``, ``sqrt(2)/2``, ...) as mpf.

    Integer literals are wrapped in mpf before evaluation so that ``1/2``
    divides at working precision instead of as a 53-bit float.
    """
    guarded = re.sub(r"(?<![\w.])(\d+)(?![\w.])", r"mpf(\1)", token)
    return eval(guarded, {"__builtins__": {}}, {"mpf": mpmath.mpf, "sqrt": mpmath.sqrt})


def parse_table(text: str, conv: Callable = Fraction) -> OracleTable:
    """Read the polygon and mirrors out of a table config, independently."""
    verts = []
    mirrors = []
    section = None
    current: Optional[dict] = None

    def finish(cur: dict) -> OracleMirror:
        a, b, side = cur["from"], cur["to"], cur["side"]
        ex, ey = b[0] - a[0], b[1] - a[1]
        left = (-ey, ex)
        normal = (ey, -ex) if side == "right" else left
        return OracleMirror(a, b, normal)

    for raw in text.splitlines():
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if current is not None and section == "[mirror]":
                mirrors.append(finish(current))
                current = None
            section = body
            if body == "[mirror]":
                current = {}
            continue
        parts = body.split()
        if section == "[polygon]":
            verts.append((conv(parts[0]), conv(parts[1])))
        elif section == "[mirror]":
            if parts[0] in ("from", "to"):
                current[parts[0]] = (conv(parts[1]), conv(parts[2]))
            elif parts[0] == "reflective":
                current["side"] = parts[1]
    if current is not None and section == "[mirror]":
        mirrors.append(finish(current))
    return OracleTable(tuple(verts), tuple(mirrors))


# ---------------------------------------------------------------------------
# Generic pointwise tracer (any polygon, exact or high-precision numbers)
# ---------------------------------------------------------------------------


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _reflect(d, e):
    """Reflection of direction d across the line spanned by e."""
    ee = _dot(e, e)
    de = _dot(d, e)
    return (2 * de * e[0] / ee - d[0], 2 * de * e[1] / ee - d[1])


def _first_hit(table: OracleTable, pos, d, eps):
    """First obstacle strictly ahead of ``pos`` along ``d``.

    Returns ``(t, hit_point, tag)`` with tag ``("w", i)`` or ``("m", j)``, or
    ``None`` for a singular/ambiguous cast.  ``eps == 0`` means exact mode.
    """
    candidates = []
    for i in range(table.q):
        a, b = table.wall(i)
        candidates.append((a, b, ("w", i)))
    for j, m in enumerate(table.mirrors):
        candidates.append((m.a, m.b, ("m", j)))

    best_t = None
    best = None
    tie = False
    for a, b, tag in candidates:
        e = (b[0] - a[0], b[1] - a[1])
        den = _cross(d, e)
        if abs(den) <= eps:
            continue  # moving parallel to this obstacle
        w = (a[0] - pos[0], a[1] - pos[1])
        t = _cross(w, e) / den
        if t <= eps:
            continue
        s = _cross(w, d) / den
        if s < -eps or s > 1 + eps:
            continue
        if s <= eps or s >= 1 - eps:
            s_singular = True  # endpoint contact: singular if it wins
        else:
            s_singular = False
        if best_t is None or t < best_t - eps:
            best_t, best, tie = t, (tag, s_singular), False
        elif t <= best_t + eps:
            tie = True
            if t < best_t:
                best_t, best = t, (tag, s_singular)
    if best is None or tie or best[1]:
        return None
    hit = (pos[0] + best_t * d[0], pos[1] + best_t * d[1])
    return best_t, hit, best[0]


def trace_word(table: OracleTable, pos, d, n: int, eps=0):
    """Label word of the forward orbit from an interior point, or None."""
    word = []
    for _ in range(n):
        cast = _first_hit(table, pos, d, eps)
        if cast is None:
            return None
        _t, hit, (kind, idx) = cast
        if kind == "w":
            a, b = table.wall(idx)
            word.append(f"w{idx + 1}")
            d = _reflect(d, (b[0] - a[0], b[1] - a[1]))
        else:
            m = table.mirrors[idx]
            side = _dot(d, m.normal)
            if abs(side) <= eps:
                return None
            if side < 0:
                word.append(f"m{idx + 1}r")
                d = _reflect(d, (m.b[0] - m.a[0], m.b[1] - m.a[1]))
            else:
                word.append(f"m{idx + 1}t")
        pos = hit
    return tuple(word)


# ---------------------------------------------------------------------------
# Fast exact tracer for axis-aligned rectangles with vertical mirrors
# ---------------------------------------------------------------------------


def _axis_data(table: OracleTable):
    """(W, H, mirrors) for a rectangle [0,W]x[0,H] in standard vertex order.

    Standard order is (0,0), (W,0), (W,H), (0,H): w1 bottom, w2 right,
    w3 top, w4 left.  Mirrors must be vertical.  Raises if the table does
    not have this shape.
    """
    if table.q != 4:
        raise ValueError("not a rectangle")
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = table.verts
    if not (x0 == 0 and y0 == 0 and y1 == 0 and x1 == x2 and y2 == y3 and x3 == 0):
        raise ValueError("not in standard rectangle vertex order")
    W, H = x1, y2
    if W <= 0 or H <= 0:
        raise ValueError("degenerate rectangle")
    mirrors = []
    for m in table.mirrors:
        if m.a[0] != m.b[0]:
            raise ValueError("mirror is not vertical")
        ylo, yhi = sorted((m.a[1], m.b[1]))
        nx = m.normal[0]
        if nx == 0:
            raise ValueError("vertical mirror with horizontal-free normal")
        mirrors.append((m.a[0], ylo, yhi, 1 if nx > 0 else -1))
    return W, H, mirrors


def trace_word_axis(table: OracleTable, pos, d, n: int):
    """Exact orbit word in an axis-aligned rectangle with vertical mirrors.

    Events are crossings of finitely many vertical/horizontal levels, so each
    step compares a handful of exact flight times instead of running general
    segment intersections.  Singular or ambiguous steps return None.
    """
    W, H, mirrors = _axis_data(table)
    x, y = pos
    dx, dy = d
    word = []
    for _ in range(n):
        events = []  # (t, kind, payload)
        if dx > 0:
            events.append(((W - x) / dx, "w", 1))
        elif dx < 0:
            events.append((x / -dx, "w", 3))
        if dy > 0:
            events.append(((H - y) / dy, "w", 2))
        elif dy < 0:
            events.append((y / -dy, "w", 0))
        if dx != 0:
            for j, (mx, ylo, yhi, nx) in enumerate(mirrors):
                t = (mx - x) / dx
                if t <= 0:
                    continue
                ym = y + t * dy
                if ym <= ylo or ym >= yhi:
                    if ym == ylo or ym == yhi:
                        events.append((t, "singular", j))
                    continue
                events.append((t, "m", j))
        if not events:
            return None  # axis-parallel drift with no wall ahead: impossible
        best_t = min(t for t, _k, _p in events)
        winners = [ev for ev in events if ev[0] == best_t]
        if len(winners) != 1 or winners[0][1] == "singular":
            return None
        _t, kind, payload = winners[0]
        x, y = x + best_t * dx, y + best_t * dy
        if kind == "w":
            if payload in (1, 3):
                if y <= 0 or y >= H:
                    return None  # corner
                dx = -dx
            else:
                if x <= 0 or x >= W:
                    return None
                dy = -dy
            word.append(f"w{payload + 1}")
        else:
            nx = mirrors[payload][3]
            if dx * nx < 0:
                word.append(f"m{payload + 1}r")
                dx = -dx
            else:
                word.append(f"m{payload + 1}t")
    return tuple(word)


# ---------------------------------------------------------------------------
# Backward survival (the attractor membership question), pointwise
# ---------------------------------------------------------------------------


def _undo_event(table: OracleTable, side, d_out):
    """Direction of the flight that arrived at ``side`` and left with d_out."""
    kind = side[0]
    if kind == "w":
        a, b = table.wall(side[1])
        return _reflect(d_out, (b[0] - a[0], b[1] - a[1]))
    j = side[1]
    m = table.mirrors[j]
    if side[2] == "r":
        return _reflect(d_out, (m.b[0] - m.a[0], m.b[1] - m.a[1]))
    return d_out


def backward_survives(table: OracleTable, side, pos, d_out, depth: int, eps=0):
    """Does (side, pos, d_out) have a backward orbit of ``depth`` steps?

    ``side`` is ``("w", i)`` or ``("m", j, "r"/"t")``; ``pos`` the event
    point; ``d_out`` the outgoing direction.  Branches: a wall supplies one
    previous state when the arrival direction leaves it inward; a mirror
    crossing on the transparent side supplies two (the flight either passed
    through or had just bounced); a crossing on the reflecting side supplies
    none.  Returns True/False, or None when a singular cast blocks the
    verdict (discard such samples).
    """
    if depth == 0:
        return True
    d_arr = _undo_event(table, side, d_out)
    cast = _first_hit(table, pos, (-d_arr[0], -d_arr[1]), eps)
    if cast is None:
        return None
    _t, hit, (kind, idx) = cast
    if kind == "w":
        inward = table.wall_inward_normal(idx)
        if _dot(d_arr, inward) <= 0:
            return False
        return backward_survives(table, ("w", idx), hit, d_arr, depth - 1, eps)
    m = table.mirrors[idx]
    side_sign = _dot(d_arr, m.normal)
    if side_sign <= 0:
        return False
    saw_none = False
    for face in ("t", "r"):
        sub = backward_survives(table, ("m", idx, face), hit, d_arr, depth - 1, eps)
        if sub is True:
            return True
        if sub is None:
            saw_none = True
    return None if saw_none else False


def sample_phase_point(table: OracleTable, rng):
    """One sample from the per-side product measure used for attractor areas.

    Mirrors the documented sampling rule: uniform label among the q + 2r
    side labels, uniform position, direction ``normal + zeta * tangent``
    with ``zeta = z / (1 - |z|)`` for z uniform in (-1, 1).  Returns
    ``(side, pos, d_out)`` in this module's conventions.
    """
    labels = [("w", i) for i in range(table.q)]
    for j in range(len(table.mirrors)):
        labels.append(("m", j, "r"))
        labels.append(("m", j, "t"))
    side = labels[rng.randrange(len(labels))]
    s = Fraction(rng.randrange(1, 2**40), 2**40)
    z = Fraction(rng.randrange(-(2**40) + 1, 2**40), 2**40)
    zeta = z / (1 - abs(z))
    if side[0] == "w":
        i = side[1]
        a, b = table.wall(i)
        tangent = (b[0] - a[0], b[1] - a[1])
        normal = table.wall_inward_normal(i)
        pos = table.point_on_wall(i, s)
    else:
        j = side[1]
        m = table.mirrors[j]
        tangent = (m.b[0] - m.a[0], m.b[1] - m.a[1])
        normal = m.normal
        pos = table.point_on_mirror(j, s)
    d = (normal[0] + zeta * tangent[0], normal[1] + zeta * tangent[1])
    return side, pos, d


# ---------------------------------------------------------------------------
# Lattice count of the plain square's vertex-to-vertex flights
# ---------------------------------------------------------------------------


def square_oriented_diagonal_count(n: int) -> int:
    """Oriented corner-to-corner flights of the unit square with n links.

    Unfolding the square across its sides tiles the plane with unit squares
    and sends every corner image to the integer lattice.  A flight leaving a
    fixed corner is a primitive lattice vector (a, b) with a, b >= 1 (the
    boundary of the quadrant runs along a wall and is excluded); it crosses
    (a - 1) + (b - 1) grid lines, so it has a + b - 1 flight links.  All four
    corners contribute equally by symmetry.
    """
    if n < 1:
        return 0
    return 4 * sum(1 for a in range(1, n + 1) if math.gcd(a, n + 1 - a) == 1)


def square_oriented_diagonal_cumulative(n: int) -> int:
    return sum(square_oriented_diagonal_count(i) for i in range(n + 1))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def hit_pattern_count(k: int, m: int) -> int:
    """#{(j_0, ..., j_k) >= 0 : sum = m - 1}, by stars and bars."""
    if m < 1:
        return 0
    return math.comb(m - 1 + k, k)


def loglog_slope(series: Sequence, window: int) -> float:
    """Least-squares slope of log series[n] vs log n over the trailing window."""
    import statistics

    pairs = [(n, series[n]) for n in range(1, len(series))][-window:]
    xs = [math.log(n) for n, _v in pairs]
    ys = [math.log(v) for _n, v in pairs]
    return statistics.linear_regression(xs, ys).slope
