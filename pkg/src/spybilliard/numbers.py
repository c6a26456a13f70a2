"""Scalar kernels: exact rationals and certified interval arithmetic.

Two interchangeable kernels drive every geometric predicate in the package:

* the *rational* kernel works over ``gmpy2.mpq`` values and is exact end to end
  (tables with rational vertex data never leave the rationals);
* the *interval* kernel wraps a lazy expression DAG whose leaves are rationals
  or symbolic atoms (``sqrt(2)`` and friends).  Signs are certified by interval
  evaluation at escalating mpmath precision, with an exact symbolic zero-test
  as the final fallback.  A predicate either returns a certified sign or raises
  :class:`UndecidableSignError`; it never guesses.

All geometry code is written against plain arithmetic operators plus the
:func:`sgn` helper, so it runs unchanged over either kernel.
"""

from __future__ import annotations

from typing import Iterable, Optional, Union

import gmpy2
import mpmath
import sympy

__all__ = [
    "Q",
    "Scalar",
    "UndecidableSignError",
    "KernelName",
    "IntervalScalar",
    "sgn",
    "is_zero",
    "scalar_from_string",
    "scalar_to_string",
    "as_float",
    "rationalize",
    "set_precision_floor",
]

#: Constructor for exact rational scalars.
Q = gmpy2.mpq

RATIONAL_TYPES = (type(Q(0)), int)

KernelName = str  # "rational" | "interval"

#: Precision ladder (bits) tried before the symbolic fallback.
_PRECISION_LADDER = (64, 128, 256, 512, 1024, 2048, 4096)

_precision_floor = _PRECISION_LADDER[0]


def set_precision_floor(bits: int) -> None:
    """Start interval sign certification at ``bits``, skipping lower rungs.

    Raising the floor avoids repeated low-precision attempts on tables whose
    coordinates are known to need fine enclosures; it never changes results,
    only which rungs are tried first.
    """
    global _precision_floor
    if bits < 4:
        raise ValueError("precision floor must be at least 4 bits")
    _precision_floor = int(bits)


def _ladder() -> tuple:
    rungs = tuple(p for p in _PRECISION_LADDER if p >= _precision_floor)
    return rungs if rungs else (_precision_floor,)


class UndecidableSignError(ArithmeticError):
    """Raised when a sign cannot be certified at any supported precision."""


def _iv_context(prec: int) -> mpmath.ctx_iv.MPIntervalContext:
    ctx = mpmath.iv
    ctx.prec = prec
    return ctx


# ---------------------------------------------------------------------------
# Exact fast path: values in a single quadratic field Q(sqrt(d))
# ---------------------------------------------------------------------------


class _QuadFail(Exception):
    """Expression leaves the quadratic field (nested/mismatched radicals...)."""


def _squarefree_split(n: int) -> tuple:
    """``n = d * s**2`` with d squarefree; returns (d, s).  Trial division."""
    d = s = 1
    m = n
    f = 2
    while f * f <= m:
        e = 0
        while m % f == 0:
            m //= f
            e += 1
        if e:
            s *= f ** (e // 2)
            if e % 2:
                d *= f
        f += 1 if f == 2 else 2
    return d * m, s


def _quad_eval(expr: sympy.Expr, memo: dict, radical: list) -> tuple:
    """Evaluate ``expr`` exactly as ``a + b*sqrt(d)`` over gmpy2 rationals.

    ``radical`` is a single-slot holder for the squarefree d, filled on the
    first square root encountered; a second distinct radical (or anything
    outside +,-,*,/ and square roots of rationals) raises :class:`_QuadFail`.
    The id-keyed ``memo`` makes shared subterms cost one visit.
    """
    key = id(expr)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if expr.is_Rational:
        val = (Q(expr.p) / Q(expr.q), Q(0))
    elif expr.is_Add:
        a = b = Q(0)
        for arg in expr.args:
            xa, xb = _quad_eval(arg, memo, radical)
            a += xa
            b += xb
        val = (a, b)
    elif expr.is_Mul:
        a, b = Q(1), Q(0)
        for arg in expr.args:
            xa, xb = _quad_eval(arg, memo, radical)
            # Cross term b*xb needs d, which is known whenever both are
            # nonzero (a radical must have been seen to produce them).
            d = radical[0] if radical[0] is not None else 0
            a, b = a * xa + b * xb * d, a * xb + b * xa
        val = (a, b)
    elif expr.is_Pow:
        exponent = expr.exp
        if exponent.is_Integer:
            n = int(exponent)
            xa, xb = _quad_eval(expr.base, memo, radical)
            if n < 0:
                d = radical[0] if radical[0] is not None else 0
                norm = xa * xa - xb * xb * d
                if norm == 0:
                    raise _QuadFail("division by zero in quadratic evaluation")
                xa, xb = xa / norm, -xb / norm
                n = -n
            a, b = Q(1), Q(0)
            for _ in range(n):
                d = radical[0] if radical[0] is not None else 0
                a, b = a * xa + b * xb * d, a * xb + b * xa
            val = (a, b)
        elif exponent == sympy.Rational(1, 2):
            xa, xb = _quad_eval(expr.base, memo, radical)
            if xb != 0 or xa < 0:
                raise _QuadFail("nested or negative radical")
            num = int(xa.numerator)
            den = int(xa.denominator)
            d0, s = _squarefree_split(num * den)
            if d0 == 1:
                val = (Q(s, den), Q(0))
            else:
                if radical[0] is None:
                    radical[0] = d0
                elif radical[0] != d0:
                    raise _QuadFail("mixed radicals")
                val = (Q(0), Q(s, den))
        else:
            raise _QuadFail("non-quadratic exponent")
    else:
        raise _QuadFail(f"leaf outside the quadratic field: {expr!r}")
    memo[key] = val
    return val


def _quad_sign(a, b, d: int) -> int:
    """Exact sign of ``a + b*sqrt(d)`` (d >= 0, rational a and b)."""
    sa = -1 if a < 0 else (1 if a > 0 else 0)
    sb = -1 if b < 0 else (1 if b > 0 else 0)
    if sb == 0:
        return sa
    if sa == 0:
        return sb
    if sa == sb:
        return sa
    diff = a * a - b * b * d
    sd = -1 if diff < 0 else (1 if diff > 0 else 0)
    # Opposite signs: |a| vs |b|*sqrt(d) decides, i.e. the sign of a^2 - b^2 d
    # weighted by which side is positive.
    return sa * sd


class IntervalScalar:
    """A real number represented as a lazy expression over exact leaves.

    Arithmetic builds a DAG; nothing is evaluated until a sign is needed.
    ``_expr`` is the exact sympy expression for the node (cheap to build
    because leaves are already sympy objects or rationals).  Interval
    enclosures are computed on demand per precision and memoised.
    """

    __slots__ = ("_expr", "_intervals", "_sign", "_size")

    #: Expression size (op count) beyond which a value is renormalized to the
    #: canonical quotient form over the field its radicals generate.  Keeps
    #: long derivation chains (clips of clips of clips ...) at constant cost.
    CANON_THRESHOLD = 64

    def __init__(self, expr: sympy.Expr, size: Optional[int] = None):
        expr = sympy.sympify(expr)
        if size is None:
            size = int(sympy.count_ops(expr)) + 1
        if size > self.CANON_THRESHOLD:
            canon = None
            try:
                holder: list = [None]
                a, b = _quad_eval(expr, {}, holder)
            except (_QuadFail, ZeroDivisionError):
                try:
                    canon = sympy.cancel(sympy.expand(expr.doit()), extension=True)
                except Exception:
                    canon = None
            else:
                canon = sympy.Rational(int(a.numerator), int(a.denominator))
                if b != 0:
                    canon = sympy.Add(
                        canon,
                        sympy.Mul(
                            sympy.Rational(int(b.numerator), int(b.denominator)),
                            sympy.sqrt(holder[0]),
                        ),
                    )
            if canon is not None:
                expr = canon
                size = int(sympy.count_ops(expr)) + 1
            # Cap the recorded size so a canonical form that stays large does
            # not trigger a (futile) renormalization on every operation; the
            # cap only schedules the next attempt, it carries no semantics.
            size = min(size, self.CANON_THRESHOLD // 2)
        self._expr = expr
        self._size = size
        self._intervals: dict[int, object] = {}
        self._sign: int | None = None

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _coerce(value) -> sympy.Expr:
        if isinstance(value, IntervalScalar):
            return value._expr
        if isinstance(value, RATIONAL_TYPES):
            q = Q(value)
            return sympy.Rational(int(q.numerator), int(q.denominator))
        if isinstance(value, sympy.Expr):
            return value
        raise TypeError(f"cannot mix {type(value).__name__} into interval arithmetic")

    @staticmethod
    def _opsize(value) -> int:
        if isinstance(value, IntervalScalar):
            return value._size
        if isinstance(value, RATIONAL_TYPES):
            return 1
        return int(sympy.count_ops(value)) + 1

    def _wrap(self, expr: sympy.Expr, other=None) -> "IntervalScalar":
        size = self._size + 1 + (0 if other is None else IntervalScalar._opsize(other))
        return IntervalScalar(expr, size)

    @staticmethod
    def sqrt(value) -> "IntervalScalar":
        return IntervalScalar(sympy.sqrt(IntervalScalar._coerce(value)))

    @staticmethod
    def of(value) -> "IntervalScalar":
        return IntervalScalar(IntervalScalar._coerce(value))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        return self._wrap(sympy.Add(self._expr, self._coerce(other), evaluate=False), other)

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(
            sympy.Add(self._expr, sympy.Mul(-1, self._coerce(other), evaluate=False), evaluate=False),
            other,
        )

    def __rsub__(self, other):
        return self._wrap(
            sympy.Add(self._coerce(other), sympy.Mul(-1, self._expr, evaluate=False), evaluate=False),
            other,
        )

    def __mul__(self, other):
        return self._wrap(sympy.Mul(self._expr, self._coerce(other), evaluate=False), other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(
            sympy.Mul(self._expr, sympy.Pow(self._coerce(other), -1, evaluate=False), evaluate=False),
            other,
        )

    def __rtruediv__(self, other):
        return self._wrap(
            sympy.Mul(self._coerce(other), sympy.Pow(self._expr, -1, evaluate=False), evaluate=False),
            other,
        )

    def __neg__(self):
        return self._wrap(sympy.Mul(-1, self._expr, evaluate=False))

    def __abs__(self):
        return self if self.certified_sign() >= 0 else -self

    # -- sign certification --------------------------------------------------

    def _enclosure(self, prec: int):
        cached = self._intervals.get(prec)
        if cached is None:
            ctx = _iv_context(prec)
            cached = _eval_interval(self._expr, ctx)
            self._intervals[prec] = cached
        return cached

    def _exact_zero_probe(self) -> int | None:
        """Cheap certified verdict via number-field normalization, or None.

        ``cancel(..., extension=True)`` canonicalizes rational expressions
        over the algebraic extension generated by the radical leaves in
        milliseconds, which is how exact zeros (ubiquitous in degenerate
        geometry tests) are recognized without the generic prover.
        """
        try:
            canon = sympy.cancel(sympy.expand(self._expr.doit()), extension=True)
        except Exception:
            return None
        if canon.is_zero:
            return 0
        if canon.is_Rational:
            return -1 if canon < 0 else 1
        return None

    def certified_sign(self) -> int:
        """Return -1, 0 or +1 with certainty, escalating precision as needed."""
        if self._sign is not None:
            return self._sign
        # Values inside one quadratic field (the overwhelmingly common case
        # for polygonal tables) get an exact verdict without any intervals.
        try:
            holder: list = [None]
            a, b = _quad_eval(self._expr, {}, holder)
        except (_QuadFail, ZeroDivisionError):
            pass
        else:
            d = holder[0] if holder[0] is not None else 0
            self._sign = _quad_sign(a, b, d)
            return self._sign
        probed = False
        for prec in _ladder():
            try:
                box = self._enclosure(prec)
            except (ValueError, ZeroDivisionError, mpmath.libmp.NoConvergence):
                continue
            if box.a > 0:
                self._sign = 1
                return 1
            if box.b < 0:
                self._sign = -1
                return -1
            if box.a == 0 and box.b == 0:
                self._sign = 0
                return 0
            if not probed:
                # The enclosure straddles zero; most such values are exact
                # zeros, so try the fast algebraic test before escalating.
                probed = True
                verdict = self._exact_zero_probe()
                if verdict is not None:
                    self._sign = verdict
                    return verdict
        # Last resort: the generic symbolic prover.
        verdict = self._expr.equals(0)
        if verdict is True:
            self._sign = 0
            return 0
        if verdict is False:
            simplified = sympy.simplify(self._expr)
            if simplified.is_positive:
                self._sign = 1
                return 1
            if simplified.is_negative:
                self._sign = -1
                return -1
        raise UndecidableSignError(
            f"sign undecidable at {_PRECISION_LADDER[-1]} bits: {self._expr}"
        )

    # -- comparisons (certified) ----------------------------------------------

    def _cmp(self, other) -> int:
        return (self - other).certified_sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, (IntervalScalar, *RATIONAL_TYPES, sympy.Expr)):
            return self._cmp(other) == 0
        return NotImplemented

    def __ne__(self, other):
        result = self.__eq__(other)
        return NotImplemented if result is NotImplemented else not result

    def __hash__(self):
        # Hash via a canonical simplification so equal values collide.
        return hash(sympy.simplify(self._expr))

    def __float__(self):
        box = self._enclosure(128)
        return float(box.mid)

    def __repr__(self):
        return f"IntervalScalar({self._expr})"

    @property
    def expr(self) -> sympy.Expr:
        return self._expr


def _eval_interval(expr: sympy.Expr, ctx, memo: Optional[dict] = None) -> object:
    """Evaluate a sympy expression DAG in mpmath interval arithmetic.

    Unevaluated expressions share subterms as the *same* Python objects, so
    the id-keyed ``memo`` turns the walk into a DAG traversal; without it the
    shared nodes are re-evaluated once per occurrence, which grows
    exponentially along chains of reused intermediates.
    """
    if memo is None:
        memo = {}
    key = id(expr)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if expr.is_Rational:
        val = ctx.mpf(expr.p) / ctx.mpf(expr.q)
    elif expr.is_Add:
        val = ctx.mpf(0)
        for arg in expr.args:
            val += _eval_interval(arg, ctx, memo)
    elif expr.is_Mul:
        val = ctx.mpf(1)
        for arg in expr.args:
            val *= _eval_interval(arg, ctx, memo)
    elif expr.is_Pow:
        base = _eval_interval(expr.base, ctx, memo)
        exponent = expr.exp
        if exponent.is_Integer:
            n = int(exponent)
            if n >= 0:
                val = base ** n
            else:
                val = (ctx.mpf(1) / base) ** (-n)
        elif exponent == sympy.Rational(1, 2):
            val = ctx.sqrt(base)
        else:
            # General powers: fall back to sympy's own certified evalf bounds.
            lo = sympy.Float(expr.evalf(ctx.prec // 3, strict=False), ctx.prec)
            val = ctx.mpf(str(lo))
    elif expr is sympy.pi:
        val = ctx.pi
    elif expr.is_Function and expr.func in (sympy.cos, sympy.sin, sympy.tan):
        inner = _eval_interval(expr.args[0], ctx, memo)
        val = getattr(ctx, expr.func.__name__)(inner)
    elif expr.is_Symbol:
        raise ValueError(f"free symbol {expr} has no numeric value")
    else:
        # Last resort: a numeric constant sympy can evaluate.
        approx = expr.evalf(max(ctx.prec // 3, 30))
        if not (approx.is_Number and approx.is_finite):
            raise ValueError(f"cannot evaluate {expr!r} as an interval")
        val = ctx.mpf(str(approx))
    memo[key] = val
    return val


Scalar = Union["IntervalScalar", type(Q(0)), int]


def sgn(x) -> int:
    """Certified sign of a scalar from either kernel (-1, 0, +1)."""
    if isinstance(x, RATIONAL_TYPES):
        if x > 0:
            return 1
        if x < 0:
            return -1
        return 0
    if isinstance(x, IntervalScalar):
        return x.certified_sign()
    raise TypeError(f"sgn: unsupported scalar type {type(x).__name__}")


def is_zero(x) -> bool:
    return sgn(x) == 0


def rationalize(x) -> object:
    """Coerce ints/strings into mpq; pass interval scalars through unchanged."""
    if isinstance(x, IntervalScalar):
        return x
    return Q(x)


_SAFE_ATOMS = {
    "sqrt": sympy.sqrt,
    "cbrt": sympy.cbrt,
    "pi": sympy.pi,
    "cos": sympy.cos,
    "sin": sympy.sin,
    "tan": sympy.tan,
    "Rational": sympy.Rational,
}


def scalar_from_string(text: str, kernel: KernelName):
    """Parse a scalar literal from a table config.

    Rational kernel accepts integers, fractions ``p/q`` and finite decimals
    (decimals are exact: ``0.25`` is 1/4).  The interval kernel additionally
    accepts symbolic expressions such as ``sqrt(2)/2``.
    """
    text = text.strip()
    if kernel == "rational":
        try:
            if "." in text:
                sign = -1 if text.startswith("-") else 1
                body = text.lstrip("+-")
                whole, frac = body.split(".", 1)
                whole = whole or "0"
                if not (whole.isdigit() and (frac == "" or frac.isdigit())):
                    raise ValueError(text)
                num = int(whole + frac) if frac else int(whole)
                return Q(sign * num, 10 ** len(frac))
            return Q(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational literal: {text!r}") from exc
    if kernel == "interval":
        try:
            expr = sympy.parse_expr(text, local_dict=dict(_SAFE_ATOMS), evaluate=True)
        except (SyntaxError, TypeError, sympy.SympifyError) as exc:
            raise ValueError(f"not a parseable scalar expression: {text!r}") from exc
        if expr.free_symbols:
            raise ValueError(f"expression has free symbols: {text!r}")
        if expr.is_Rational:
            return Q(int(expr.p), int(expr.q))
        return IntervalScalar(expr)
    raise ValueError(f"unknown kernel {kernel!r}")


def scalar_to_string(x) -> str:
    """Canonical round-trippable text form of a scalar."""
    if isinstance(x, IntervalScalar):
        return str(x.expr)
    q = Q(x)
    return str(q)


def as_float(x) -> float:
    """Lossy float view (for reports, SVG and fits only - never predicates)."""
    if isinstance(x, IntervalScalar):
        return float(x)
    return float(gmpy2.mpfr(x, 80))


def sum_scalars(values: Iterable):
    total = None
    for v in values:
        total = v if total is None else total + v
    return Q(0) if total is None else total
