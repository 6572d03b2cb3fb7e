"""Exact dyadic arithmetic, outward-rounded intervals and computable reals.

Everything downstream computes on three layers defined here:

* :class:`Dyadic` -- exact values ``man * 2**exp`` kept in canonical form.
* :class:`DyInterval` -- closed intervals with dyadic endpoints.  Operations
  round outward to a relative working precision, so every result encloses
  the exact image of its inputs.
* :class:`CReal` / :class:`CPoint` -- precision oracles ``i -> Dyadic`` with
  ``|approx(i) - x| <= 2**-i``.
"""
from __future__ import annotations

import math
import re
import sys
import threading
from fractions import Fraction
from typing import Callable, Iterable, Sequence

_HASH_P = sys.hash_info.modulus


class RefinementRequired(ArithmeticError):
    """An enclosure was too wide to decide an operation; retry with tighter inputs."""


def _tz(m: int) -> int:
    return (m & -m).bit_length() - 1


class Dyadic:
    """Exact dyadic rational ``man * 2**exp``; mantissa odd, or zero with exponent 0."""

    __slots__ = ("man", "exp")

    def __init__(self, man: int = 0, exp: int = 0):
        if man == 0:
            exp = 0
        elif not man & 1:
            t = _tz(man)
            man >>= t
            exp += t
        self.man = man
        self.exp = exp

    # -- construction -------------------------------------------------------
    @classmethod
    def _raw(cls, man: int, exp: int) -> "Dyadic":
        d = object.__new__(cls)
        d.man = man
        d.exp = exp
        return d

    @classmethod
    def coerce(cls, v) -> "Dyadic":
        if isinstance(v, Dyadic):
            return v
        if isinstance(v, int):
            return cls(v, 0)
        if isinstance(v, Fraction):
            return cls.from_fraction(v)
        if isinstance(v, str):
            return parse_dyadic(v)
        if isinstance(v, float):
            m, e = math.frexp(v)
            return cls(int(m * (1 << 53)), e - 53)
        raise TypeError(f"cannot convert {type(v).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Dyadic":
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not dyadic")
        return cls(q.numerator, -(den.bit_length() - 1))

    # -- views --------------------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def __float__(self) -> float:
        return math.ldexp(self.man, self.exp) if abs(self.exp) < 900 else float(self.to_fraction())

    def __bool__(self) -> bool:
        return self.man != 0

    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    def magnitude(self) -> int:
        """Smallest ``t`` with ``|self| < 2**t`` (undefined for zero, returns a very small value)."""
        if not self.man:
            return -(1 << 60)
        return abs(self.man).bit_length() + self.exp

    def is_integer(self) -> bool:
        return self.exp >= 0

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, o):
        if not isinstance(o, Dyadic):
            if isinstance(o, int):
                o = Dyadic(o)
            else:
                return NotImplemented
        if not o.man:
            return self
        if not self.man:
            return o
        e1, e2 = self.exp, o.exp
        if e1 == e2:
            return Dyadic(self.man + o.man, e1)
        if e1 < e2:
            return Dyadic._raw(self.man + (o.man << (e2 - e1)), e1)
        return Dyadic._raw((self.man << (e1 - e2)) + o.man, e2)

    __radd__ = __add__

    def __neg__(self):
        return Dyadic._raw(-self.man, self.exp)

    def __pos__(self):
        return self

    def __abs__(self):
        return self if self.man >= 0 else Dyadic._raw(-self.man, self.exp)

    def __sub__(self, o):
        if not isinstance(o, Dyadic):
            if isinstance(o, int):
                o = Dyadic(o)
            else:
                return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Dyadic):
            return Dyadic._raw(self.man * o.man, self.exp + o.exp) if self.man and o.man else ZERO
        if isinstance(o, int):
            return Dyadic(self.man * o, self.exp)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return Dyadic._raw(self.man ** k, self.exp * k) if self.man else (ONE if k == 0 else ZERO)

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` (exact)."""
        return Dyadic._raw(self.man, self.exp + k) if self.man else self

    def __truediv__(self, o):
        # Exact only when the divisor is a power of two (or +-1 times one).
        if isinstance(o, int):
            o = Dyadic(o)
        if isinstance(o, Dyadic):
            if o.man in (1, -1):
                return Dyadic._raw(self.man * o.man, self.exp - o.exp) if self.man else ZERO
            return self.to_fraction() / o.to_fraction()
        return NotImplemented

    # -- comparison ---------------------------------------------------------
    def _cmp(self, o) -> int:
        if isinstance(o, Dyadic):
            return (self - o).sign()
        if isinstance(o, int):
            return (self - Dyadic(o)).sign()
        if isinstance(o, Fraction):
            v = self.to_fraction()
            return (v > o) - (v < o)
        raise TypeError

    def __eq__(self, o):
        if isinstance(o, Dyadic):
            return self.man == o.man and self.exp == o.exp
        if isinstance(o, (int, Fraction)):
            return self._cmp(o) == 0
        return NotImplemented

    def __lt__(self, o):
        try:
            return self._cmp(o) < 0
        except TypeError:
            return NotImplemented

    def __le__(self, o):
        try:
            return self._cmp(o) <= 0
        except TypeError:
            return NotImplemented

    def __gt__(self, o):
        try:
            return self._cmp(o) > 0
        except TypeError:
            return NotImplemented

    def __ge__(self, o):
        try:
            return self._cmp(o) >= 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        # Agrees with hash(Fraction(...)) and hash(int) for equal values.
        m, e = self.man, self.exp
        if e >= 0:
            return hash(m << e)
        h = (abs(m) % _HASH_P) * (1 << (e % 61)) % _HASH_P
        if m < 0:
            h = -h
        return -2 if h == -1 else h

    # -- rounding -----------------------------------------------------------
    def floor_at(self, p: int) -> "Dyadic":
        """Largest multiple of ``2**-p`` that is ``<= self``."""
        if self.exp >= -p:
            return self
        return Dyadic(self.man >> (-p - self.exp), -p)

    def ceil_at(self, p: int) -> "Dyadic":
        if self.exp >= -p:
            return self
        return Dyadic(-((-self.man) >> (-p - self.exp)), -p)

    def round_at(self, p: int) -> "Dyadic":
        """Nearest multiple of ``2**-p`` (ties upward); error at most ``2**-(p+1)``."""
        if self.exp >= -p:
            return self
        sh = -p - self.exp
        return Dyadic((self.man + (1 << (sh - 1))) >> sh, -p)

    def round_down(self, bits: int) -> "Dyadic":
        """Round toward -inf to ``bits`` significant bits."""
        m = self.man
        sh = abs(m).bit_length() - bits
        if sh <= 0:
            return self
        return Dyadic(m >> sh, self.exp + sh)

    def round_up(self, bits: int) -> "Dyadic":
        m = self.man
        sh = abs(m).bit_length() - bits
        if sh <= 0:
            return self
        return Dyadic(-((-m) >> sh), self.exp + sh)

    # -- text ---------------------------------------------------------------
    def __repr__(self) -> str:
        return f"Dyadic({self.man}, {self.exp})"

    def __str__(self) -> str:
        return f"{self.man}*2^{self.exp}"

    def to_decimal(self) -> str:
        """Exact decimal expansion (always finite for a dyadic)."""
        m, e = self.man, self.exp
        if e >= 0:
            return str(m << e)
        digits = -e
        n = abs(m) * 5 ** digits
        s = str(n).rjust(digits + 1, "0")
        ip, fp = s[:-digits], s[-digits:].rstrip("0")
        out = ip + ("." + fp if fp else "")
        return "-" + out if m < 0 else out


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, -1)


def two_pow(k: int) -> Dyadic:
    return Dyadic._raw(1, k)


_MANEXP = re.compile(r"^\s*(-?\d+)\s*\*\s*2\^\s*\(?\s*(-?\d+)\s*\)?\s*$")


def parse_rational(s) -> Fraction:
    """Parse ints, ``p/q``, decimals and ``m*2^e`` into an exact Fraction."""
    if isinstance(s, Dyadic):
        return s.to_fraction()
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        return Fraction(s)
    if not isinstance(s, str):
        raise ValueError(f"not a number: {s!r}")
    m = _MANEXP.match(s)
    if m:
        return Dyadic(int(m.group(1)), int(m.group(2))).to_fraction()
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {s!r}") from exc


def parse_dyadic(s) -> Dyadic:
    q = parse_rational(s)
    try:
        return Dyadic.from_fraction(q)
    except ValueError as exc:
        raise ValueError(f"{s!r} is not a dyadic rational") from exc


def dyadic_from_fraction_nearest(q: Fraction, p: int) -> Dyadic:
    """Nearest multiple of ``2**-p`` to ``q`` (error at most ``2**-(p+1)``)."""
    num = q.numerator << p if p >= 0 else q.numerator
    den = q.denominator if p >= 0 else q.denominator << -p
    n = (2 * num + den) // (2 * den)
    return Dyadic(n, -p)


def fraction_floor_at(q: Fraction, p: int) -> Dyadic:
    return Dyadic((q.numerator << p) // q.denominator, -p) if p >= 0 else Dyadic(math.floor(q / (1 << -p)) << -p)


def fraction_ceil_at(q: Fraction, p: int) -> Dyadic:
    return -fraction_floor_at(-q, p)


# ---------------------------------------------------------------------------
# directed-rounding primitives (relative precision ``bits``)

def div_down(a: Dyadic, b: Dyadic, bits: int) -> Dyadic:
    return _div(a, b, bits, up=False)


def div_up(a: Dyadic, b: Dyadic, bits: int) -> Dyadic:
    return _div(a, b, bits, up=True)


def _div(a: Dyadic, b: Dyadic, bits: int, up: bool) -> Dyadic:
    if not b.man:
        raise ZeroDivisionError("dyadic division by zero")
    if not a.man:
        return ZERO
    m1, m2 = a.man, b.man
    if m2 < 0:
        m1, m2 = -m1, -m2
    s = max(0, bits + m2.bit_length() - abs(m1).bit_length() + 2)
    num = m1 << s
    q = -((-num) // m2) if up else num // m2
    return Dyadic(q, a.exp - b.exp - s)


def sqrt_floor_at(d: Dyadic, p: int) -> Dyadic:
    """Largest multiple of ``2**-p`` whose square is ``<= d`` (``d >= 0``)."""
    if d.man < 0:
        raise ValueError("square root of a negative dyadic")
    # floor(sqrt(d) * 2**p) = isqrt(d * 4**p)
    m, e = d.man, d.exp + 2 * p
    v = m << e if e >= 0 else m >> -e
    return Dyadic(math.isqrt(v), -p)


def sqrt_bounds(d: Dyadic, bits: int) -> tuple[Dyadic, Dyadic]:
    """Enclosure of ``sqrt(d)`` with about ``bits`` significant bits."""
    if d.man < 0:
        raise ValueError("square root of a negative dyadic")
    if not d.man:
        return ZERO, ZERO
    m, e = d.man, d.exp
    if e & 1:
        m <<= 1
        e -= 1
    t = max(0, bits - m.bit_length() // 2 + 2)
    v = m << (2 * t)
    r = math.isqrt(v)
    lo = Dyadic(r, e // 2 - t)
    hi = lo if r * r == v else Dyadic(r + 1, e // 2 - t)
    return lo, hi


def _series_fixed(a: int, F: int):
    """Power-series terms of ``exp(a / 2**F)`` in fixed point.

    Returns the computed terms ``T_j ~ (a/2**F)**j / j! * 2**F`` and a bound
    (in units of ``2**-F``) on the accumulated truncation error together with
    the tail of the series.
    """
    terms = [1 << F]
    err = 0
    errs = [0]
    one = 1 << F
    j = 0
    abs_a = abs(a)
    while True:
        j += 1
        t = (terms[-1] * a) // (j * one)
        # error recurrence: e_j <= e_{j-1} * |a| / (j 2^F) + 1
        err = -((-errs[-1] * abs_a) // (j * one)) + 1
        terms.append(t)
        errs.append(err)
        if j * one >= 2 * abs_a and abs(t) <= 1:
            break
    # |tail beyond the last term| <= 2 * (|T_j| + e_j) since ratios are <= 1/2
    tail = 2 * (abs(terms[-1]) + errs[-1]) + 1
    return terms, sum(errs) + tail


def exp_bounds(y: Dyadic, bits: int) -> tuple[Dyadic, Dyadic]:
    """Certified enclosure of ``exp(y)`` to about ``bits`` significant bits."""
    if not y.man:
        return ONE, ONE
    s = max(0, y.magnitude() + 1)  # |y / 2**s| <= 1/2
    F = bits + s + 12
    z = y.shift(-s)
    a_lo = z.floor_at(F)
    a_hi = z.ceil_at(F)
    lo = _exp_fixed(a_lo.man << (a_lo.exp + F), F, up=False)
    hi = _exp_fixed(a_hi.man << (a_hi.exp + F), F, up=True)
    for _ in range(s):
        lo = (lo * lo).round_down(F)
        hi = (hi * hi).round_up(F)
    return lo.round_down(bits + 4), hi.round_up(bits + 4)


def _exp_fixed(a: int, F: int, up: bool) -> Dyadic:
    terms, err = _series_fixed(a, F)
    total = sum(terms)
    return Dyadic(total + err if up else total - err, -F)


def _cos_sin_bounds(y: Dyadic, bits: int) -> tuple[DyInterval, DyInterval]:
    # Taylor series on y / 2**s with |y / 2**s| <= 1/2, then s angle doublings;
    # each doubling at most quadruples the enclosure width.
    s = max(0, y.magnitude() + 1)
    F = bits + 2 * s + 16
    z = y.shift(-s)
    a = z.floor_at(F)
    terms, err = _series_fixed(a.man << (a.exp + F), F)
    err += 1  # input rounding; both functions are 1-Lipschitz
    c = sum(((-1) ** (j // 2)) * terms[j] for j in range(0, len(terms), 2))
    sn = sum(((-1) ** (j // 2)) * terms[j] for j in range(1, len(terms), 2))
    cos_iv = DyInterval(Dyadic(c - err, -F), Dyadic(c + err, -F), F)
    sin_iv = DyInterval(Dyadic(sn - err, -F), Dyadic(sn + err, -F), F)
    for _ in range(s):
        cos_iv, sin_iv = cos_iv.sqr().shift(1) - ONE, (sin_iv * cos_iv).shift(1)
    return cos_iv, sin_iv


def _clamp_unit(iv: DyInterval, bits: int) -> tuple[Dyadic, Dyadic]:
    lo = max(iv.lo, Dyadic(-1)).floor_at(bits + 4)
    hi = min(iv.hi, ONE).ceil_at(bits + 4)
    return lo, hi


def cos_bounds(y: Dyadic, bits: int) -> tuple[Dyadic, Dyadic]:
    return _clamp_unit(_cos_sin_bounds(y, bits)[0], bits)


def sin_bounds(y: Dyadic, bits: int) -> tuple[Dyadic, Dyadic]:
    return _clamp_unit(_cos_sin_bounds(y, bits)[1], bits)


# ---------------------------------------------------------------------------
class DyInterval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints.

    ``prec`` is the relative working precision used to round results of
    inexact operations outward; ``None`` keeps ``+ - *`` exact.
    """

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo: Dyadic, hi: Dyadic | None = None, prec: int | None = None):
        if hi is None:
            hi = lo
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self.prec = prec

    @classmethod
    def point(cls, v, prec: int | None = None) -> "DyInterval":
        d = Dyadic.coerce(v)
        return cls(d, d, prec)

    @classmethod
    def around(cls, c: Dyadic, rad: Dyadic, prec: int | None = None) -> "DyInterval":
        return cls(c - rad, c + rad, prec)

    @classmethod
    def from_fraction(cls, q: Fraction, prec: int) -> "DyInterval":
        den = q.denominator
        if not den & (den - 1):
            d = Dyadic.from_fraction(q)
            return cls(d, d, prec)
        lo = div_down(Dyadic(q.numerator), Dyadic(den), prec)
        hi = div_up(Dyadic(q.numerator), Dyadic(den), prec)
        return cls(lo, hi, prec)

    # -- helpers ------------------------------------------------------------
    def _p(self, o=None) -> int | None:
        if o is None or not isinstance(o, DyInterval) or o.prec is None:
            return self.prec
        if self.prec is None:
            return o.prec
        return min(self.prec, o.prec)

    @staticmethod
    def _wrap(o, prec):
        if isinstance(o, DyInterval):
            return o
        if isinstance(o, (Dyadic, int)):
            d = Dyadic.coerce(o)
            return DyInterval(d, d, prec)
        if isinstance(o, Fraction):
            return DyInterval.from_fraction(o, prec or 128)
        raise TypeError(type(o))

    def _mk(self, lo: Dyadic, hi: Dyadic, p: int | None) -> "DyInterval":
        if p is not None:
            lo = lo.round_down(p)
            hi = hi.round_up(p)
        return DyInterval(lo, hi, p)

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def mid(self) -> Dyadic:
        return (self.lo + self.hi).shift(-1)

    def mag(self) -> Dyadic:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, v) -> bool:
        return self.lo <= v <= self.hi

    def contains_zero(self) -> bool:
        return self.lo.man <= 0 <= self.hi.man

    def is_point(self) -> bool:
        return self.lo == self.hi

    def with_prec(self, p: int | None) -> "DyInterval":
        return DyInterval(self.lo, self.hi, p)

    def hull(self, o: "DyInterval") -> "DyInterval":
        return DyInterval(min(self.lo, o.lo), max(self.hi, o.hi), self._p(o))

    def __repr__(self) -> str:
        return f"DyInterval[{self.lo.to_decimal()}, {self.hi.to_decimal()}]"

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, o):
        p = self._p(o)
        o = self._wrap(o, p)
        return self._mk(self.lo + o.lo, self.hi + o.hi, p)

    __radd__ = __add__

    def __neg__(self):
        return DyInterval(-self.hi, -self.lo, self.prec)

    def __sub__(self, o):
        p = self._p(o)
        o = self._wrap(o, p)
        return self._mk(self.lo - o.hi, self.hi - o.lo, p)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        p = self._p(o)
        o = self._wrap(o, p)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if a.man >= 0 and c.man >= 0:
            return self._mk(a * c, b * d, p)
        if a is b and c is d:
            v = a * c
            return self._mk(v, v, p)
        ps = (a * c, a * d, b * c, b * d)
        return self._mk(min(ps), max(ps), p)

    __rmul__ = __mul__

    def sqr(self) -> "DyInterval":
        a, b = self.lo, self.hi
        if a.man >= 0:
            return self._mk(a * a, b * b, self.prec)
        if b.man <= 0:
            return self._mk(b * b, a * a, self.prec)
        return self._mk(ZERO, max(a * a, b * b), self.prec)

    def __pow__(self, k: int) -> "DyInterval":
        if k == 0:
            return DyInterval(ONE, ONE, self.prec)
        if k == 1:
            return self
        if k % 2 == 0:
            base = self.sqr()
            return base ** (k // 2)
        r = self
        for _ in range(k - 1):
            r = r * self
        return r

    def shift(self, k: int) -> "DyInterval":
        return DyInterval(self.lo.shift(k), self.hi.shift(k), self.prec)

    def recip(self, prec: int | None = None) -> "DyInterval":
        p = prec or self.prec
        if p is None:
            raise ValueError("reciprocal needs a working precision")
        if self.lo.man <= 0 <= self.hi.man:
            raise RefinementRequired("divisor enclosure contains zero")
        return DyInterval(div_down(ONE, self.hi, p), div_up(ONE, self.lo, p), p)

    def __truediv__(self, o):
        p = self._p(o)
        o = self._wrap(o, p)
        if o.lo is o.hi and o.lo.man in (1, -1):
            r = self.shift(-o.lo.exp)
            return -r if o.lo.man < 0 else r
        if p is None:
            raise ValueError("division needs a working precision")
        if o.lo.man <= 0 <= o.hi.man:
            raise RefinementRequired("divisor enclosure contains zero")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        los = [div_down(x, y, p) for x in (a, b) for y in (c, d)]
        his = [div_up(x, y, p) for x in (a, b) for y in (c, d)]
        return DyInterval(min(los), max(his), p)

    def __rtruediv__(self, o):
        return self._wrap(o, self.prec) / self

    def exp(self, prec: int | None = None) -> "DyInterval":
        p = prec or self.prec or 64
        lo = exp_bounds(self.lo, p)[0]
        hi = exp_bounds(self.hi, p)[1]
        return DyInterval(lo, hi, p)

    def sqrt(self, prec: int | None = None) -> "DyInterval":
        p = prec or self.prec or 64
        if self.lo.man < 0:
            if self.hi.man < 0:
                raise ValueError("square root of a negative interval")
            lo = ZERO
        else:
            lo = sqrt_bounds(self.lo, p)[0]
        hi = sqrt_bounds(self.hi, p)[1]
        return DyInterval(lo, hi, p)

    def cos(self, prec: int | None = None) -> "DyInterval":
        return _lipschitz_trig(self, prec, cos_bounds)

    def sin(self, prec: int | None = None) -> "DyInterval":
        return _lipschitz_trig(self, prec, sin_bounds)


def _lipschitz_trig(x: DyInterval, prec, fn) -> DyInterval:
    p = prec or x.prec or 64
    c = x.mid()
    r = (x.hi - x.lo).shift(-1)
    lo, hi = fn(c, p)
    lo, hi = lo - r, hi + r
    return DyInterval(max(lo, Dyadic(-1)), min(hi, ONE), p)


# ---------------------------------------------------------------------------
# expression evaluation

Expr = tuple  # ("var", i) | ("const", v) | (op, *children)

_UNARY = {"neg", "exp", "sqrt", "recip", "cos", "sin"}
_BINARY = {"add", "sub", "mul", "div"}


def interval_eval(expr: Expr, inputs: Sequence[DyInterval], prec: int = 64) -> DyInterval:
    """Evaluate an expression DAG over intervals.

    Nodes are tuples: ``("var", i)``, ``("const", value)`` or
    ``(op, child...)`` with ``op`` one of add, sub, mul, div, neg, exp,
    sqrt, recip.  Shared sub-expressions (same object) are evaluated once.
    Raises :class:`RefinementRequired` when a divisor enclosure contains 0.
    """
    memo: dict[int, DyInterval] = {}

    def ev(node) -> DyInterval:
        key = id(node)
        if key in memo:
            return memo[key]
        tag = node[0]
        if tag == "var":
            v = inputs[node[1]].with_prec(prec)
        elif tag == "const":
            c = node[1]
            if isinstance(c, Fraction):
                v = DyInterval.from_fraction(c, prec)
            else:
                v = DyInterval.point(c, prec)
        elif tag in _BINARY:
            a, b = ev(node[1]), ev(node[2])
            v = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}[tag](b)
        elif tag in _UNARY:
            a = ev(node[1])
            if tag == "neg":
                v = -a
            elif tag == "recip":
                v = a.recip(prec)
            else:
                v = getattr(a, tag)(prec)
        else:
            raise ValueError(f"unknown expression node {tag!r}")
        memo[key] = v
        return v

    return ev(expr)


# ---------------------------------------------------------------------------
# computable reals

def refine_to(enclose: Callable[[int], DyInterval], i: int, start: int | None = None) -> Dyadic:
    """Turn an enclosure family into a ``2**-i`` approximation.

    ``enclose(p)`` must return intervals containing the target whose widths
    tend to zero as ``p`` grows.  The loop doubles ``p`` until the width is at
    most ``2**-(i+1)`` and returns the midpoint rounded to ``2**-(i+2)``.
    """
    p = start if start is not None else max(i, 0) + 16
    lim = two_pow(-(i + 1))
    while True:
        try:
            iv = enclose(p)
        except RefinementRequired:
            iv = None
        if iv is not None and iv.width() <= lim:
            return iv.mid().round_at(i + 2)
        p = 2 * p + 8
        if p > 1 << 20:
            raise RuntimeError("precision refinement did not converge")


class CReal:
    """A computable real given by a deterministic precision oracle."""

    __slots__ = ("_fn", "_cache", "_lock", "exact", "label")

    def __init__(self, fn: Callable[[int], Dyadic], exact: Dyadic | None = None, label: str | None = None):
        self._fn = fn
        self._cache: dict[int, Dyadic] = {}
        self._lock = threading.Lock()
        self.exact = exact
        self.label = label

    def approx(self, i: int) -> Dyadic:
        if self.exact is not None:
            return self.exact
        c = self._cache.get(i)
        if c is None:
            c = self._fn(i)
            with self._lock:
                c = self._cache.setdefault(i, c)
        return c

    def enclosure(self, i: int) -> DyInterval:
        if self.exact is not None:
            return DyInterval(self.exact, self.exact)
        a = self.approx(i)
        r = two_pow(-i)
        return DyInterval(a - r, a + r)

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"CReal({self.exact.to_decimal()})"
        return f"CReal({self.label or '?'})"

    # -- constructors -------------------------------------------------------
    @classmethod
    def of(cls, v) -> "CReal":
        if isinstance(v, CReal):
            return v
        if isinstance(v, Fraction) and v.denominator & (v.denominator - 1):
            return cls.from_fraction(v)
        if isinstance(v, str):
            return cls.of(parse_rational(v))
        return cls(None, exact=Dyadic.coerce(v))

    @classmethod
    def from_fraction(cls, q: Fraction) -> "CReal":
        q = Fraction(q)
        if not q.denominator & (q.denominator - 1):
            return cls(None, exact=Dyadic.from_fraction(q))
        return cls(lambda i: dyadic_from_fraction_nearest(q, i + 1), label=str(q))

    @classmethod
    def from_enclosure(cls, enclose: Callable[[int], DyInterval], label: str | None = None) -> "CReal":
        return cls(lambda i: refine_to(enclose, i), label=label)

    def __add__(self, o):
        return creal_lift([self, CReal.of(o)], "sum")

    def __neg__(self):
        return creal_lift([self], "negation")

    def __sub__(self, o):
        return creal_lift([self, creal_lift([CReal.of(o)], "negation")], "sum")

    def __mul__(self, o):
        if isinstance(o, (Dyadic, int)):
            return creal_lift([self], "scalar", scalar=Dyadic.coerce(o))
        return creal_lift([self, CReal.of(o)], "product")


def _clog2(n: int) -> int:
    return max(0, (n - 1).bit_length())


def creal_lift(xs: Sequence[CReal], op: str, scalar: Dyadic | None = None) -> CReal:
    """Lift sum / product / negation / scalar multiplication to computable reals."""
    xs = list(xs)
    if op == "negation":
        (x,) = xs
        if x.exact is not None:
            return CReal(None, exact=-x.exact)
        return CReal(lambda i: -x.approx(i), label=f"-{x.label}")
    if all(x.exact is not None for x in xs) and op != "scalar":
        if op == "sum":
            return CReal(None, exact=sum((x.exact for x in xs), ZERO))
        if op == "product":
            v = ONE
            for x in xs:
                v = v * x.exact
            return CReal(None, exact=v)
    if op == "sum":
        extra = _clog2(len(xs)) + 2

        def fsum(i: int) -> Dyadic:
            s = sum((x.approx(i + extra) for x in xs), ZERO)
            return s.round_at(i + 1)

        return CReal(fsum, label="sum")
    if op == "scalar":
        (x,) = xs
        c = scalar
        if x.exact is not None:
            return CReal(None, exact=x.exact * c)
        extra = max(0, c.magnitude()) + 2

        def fscale(i: int) -> Dyadic:
            return (x.approx(i + extra) * c).round_at(i + 1)

        return CReal(fscale, label="scaled")
    if op == "product":
        if len(xs) == 1:
            return xs[0]
        acc = xs[0]
        for y in xs[1:]:
            acc = _mul2(acc, y)
        return acc
    raise ValueError(f"unknown lift {op!r}")


def _mul2(x: CReal, y: CReal) -> CReal:
    def fmul(i: int) -> Dyadic:
        # |x| <= |x[0]| + 1, likewise y; error <= (|x|+|y|+1) 2^-p
        bx = abs(x.approx(0)) + ONE
        by = abs(y.approx(0)) + ONE
        extra = max(bx.magnitude(), by.magnitude(), 0) + 3
        p = i + extra
        return (x.approx(p) * y.approx(p)).round_at(i + 1)

    return CReal(fmul, label="product")


class CPoint:
    """A computable point of R^n, coordinate-wise :class:`CReal`."""

    __slots__ = ("coords", "exact")

    def __init__(self, coords: Iterable):
        self.coords = tuple(CReal.of(c) for c in coords)
        ex = [c.exact for c in self.coords]
        self.exact: tuple[Dyadic, ...] | None = tuple(ex) if all(e is not None for e in ex) else None

    @classmethod
    def of(cls, v) -> "CPoint":
        if isinstance(v, CPoint):
            return v
        return cls(v)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def approx(self, i: int) -> tuple[Dyadic, ...]:
        if self.exact is not None:
            return self.exact
        return tuple(c.approx(i) for c in self.coords)

    def key(self):
        return self.exact if self.exact is not None else id(self)

    def box(self, i: int) -> tuple[DyInterval, ...]:
        return tuple(c.enclosure(i) for c in self.coords)

    def __repr__(self) -> str:
        if self.exact is not None:
            return "CPoint(" + ", ".join(d.to_decimal() for d in self.exact) + ")"
        return f"CPoint(dim={self.dim})"


def sqdist(a: Sequence[Dyadic], b: Sequence[Dyadic]) -> Dyadic:
    s = ZERO
    for u, v in zip(a, b):
        t = u - v
        s = s + t * t
    return s


def sqrt_nearest(d: Dyadic, i: int) -> Dyadic:
    """A multiple of ``2**-(i+2)`` within ``2**-(i+1)`` of ``sqrt(d)``."""
    return sqrt_floor_at(d, i + 2)


def point_precision(j: int, n: int) -> int:
    """Coordinate precision so that the Euclidean error is at most ``2**-(j+1)``."""
    return j + 1 + _clog2(n)


def cpoint_dist(x: CPoint, y: CPoint, i: int) -> Dyadic:
    """``q`` with ``|q - d(x, y)| <= 2**-i``."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.exact is not None and y.exact is not None:
        return sqrt_nearest(sqdist(x.exact, y.exact), i)
    p = point_precision(i + 1, x.dim) + 1
    return sqrt_nearest(sqdist(x.approx(p), y.approx(p)), i + 1)


def sqrt_enclosure_int(n: int, bits: int = 64) -> tuple[Dyadic, Dyadic]:
    return sqrt_bounds(Dyadic(n), bits)


def cmp_sqrt(a, c, n: int) -> int:
    """Sign of ``a - c * sqrt(n)`` for rationals ``a`` and ``c >= 0`` (exact)."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if a <= 0:
        return 0 if (a == 0 and c == 0) else -1
    lhs = a * a
    rhs = c * c * n
    return (lhs > rhs) - (lhs < rhs)
