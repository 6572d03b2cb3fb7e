"""Smooth bumps, the partition of unity on the complement, and derivative bounds.

Every evaluator has an interval form (``*_iv``) that returns a certified
enclosure at working precision ``p`` and a point form that refines the
enclosure until it pins the value to ``2**-i``.
"""
from __future__ import annotations

import functools
import itertools
import math
import threading
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cubes import DEFAULT_EPS, Decomposition, DyadicCube, Inconclusive, N_n, sqrt_n
from .exact import (
    ONE,
    ZERO,
    CPoint,
    CReal,
    Dyadic,
    DyInterval,
    refine_to,
    two_pow,
)

MultiIndex = tuple[int, ...]


class PreconditionError(ValueError):
    """An evaluator was called outside its domain (e.g. a point of F)."""


# ---------------------------------------------------------------------------
# bound tables

@functools.lru_cache(maxsize=None)
def lambda_poly(k: int) -> tuple[int, ...]:
    """Integer coefficients (low degree first) of ``P_k``, where
    ``lambda^(k)(x) = lambda(x) P_k(x) / x**(2k)`` for ``x > 0``."""
    if k == 0:
        return (1,)
    prev = lambda_poly(k - 1)
    j = k - 1
    out = [0] * (len(prev) + 1)
    for d, c in enumerate(prev):
        out[d] += c
        out[d + 1] -= 2 * j * c
        if d:
            out[d + 1] += d * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class QuotientTerm:
    coeff: int
    lead: MultiIndex
    powers: tuple[tuple[MultiIndex, int], ...]

    def degree(self) -> int:
        return sum(self.lead) + sum(m * sum(l) for l, m in self.powers)


@dataclass(frozen=True)
class QuotientExpansion:
    """``d_k (u/v) = sum_j W_j / v**(|k|+1)``, each ``W_j = r d_lead u prod (d_l v)**m``."""

    kbar: MultiIndex
    terms: tuple[QuotientTerm, ...]

    @property
    def denominator_power(self) -> int:
        return sum(self.kbar) + 1


def _bump(idx: MultiIndex, i: int, by: int = 1) -> MultiIndex:
    return idx[:i] + (idx[i] + by,) + idx[i + 1:]


def _merge(acc: dict, lead: MultiIndex, powers: dict, coeff: int) -> None:
    key = (lead, tuple(sorted((l, m) for l, m in powers.items() if m)))
    acc[key] = acc.get(key, 0) + coeff


@functools.lru_cache(maxsize=None)
def quotient_expand(kbar: MultiIndex) -> QuotientExpansion:
    kbar = tuple(kbar)
    n = len(kbar)
    zero = (0,) * n
    # derivative order: first coordinate fully, then the next, ...
    steps = [c for c in range(n) for _ in range(kbar[c])]
    terms = {(zero, ()): 1}
    cur = zero
    for c in steps:
        K = sum(cur)
        new: dict = {}
        for (lead, pw), r in terms.items():
            pw = dict(pw)
            # d_c W_j, multiplied by v
            p1 = Counter(pw)
            p1[zero] += 1
            _merge(new, _bump(lead, c), p1, r)
            for h, m in pw.items():
                p2 = Counter(pw)
                p2[h] -= 1
                p2[_bump(h, c)] += 1
                p2[zero] += 1
                _merge(new, lead, p2, r * m)
            # -(K+1) W_j d_c v
            p3 = Counter(pw)
            p3[_bump(zero, c)] += 1
            _merge(new, lead, p3, -(K + 1) * r)
        terms = {k: v for k, v in new.items() if v}
        cur = _bump(cur, c)
    out = tuple(QuotientTerm(r, lead, pw) for (lead, pw), r in sorted(terms.items()))
    return QuotientExpansion(kbar, out)


@functools.lru_cache(maxsize=None)
def mu_numerator(k: int) -> tuple[tuple[int, tuple[tuple[str, int], ...]], ...]:
    """Monomials of the numerator of ``mu^(k)`` over ``(lambda(x) + lambda(1-x))**(k+1)``.

    Variables are ``("a", j) = lambda^(j)(x)`` and ``("b", j) = lambda^(j)(1-x)``.
    """
    poly: dict[tuple, int] = {}
    for t in quotient_expand((k,)).terms:
        # u^(l) = a_l;  v^(l) = a_l + (-1)^l b_l
        factors = [[(1, (("a", t.lead[0]),))]]
        for (l,), m in t.powers:
            sign = -1 if l % 2 else 1
            factors.extend([[(1, (("a", l),)), (sign, (("b", l),))]] * m)
        for combo in itertools.product(*factors):
            c = t.coeff
            mono: list = []
            for s, vs in combo:
                c *= s
                mono.extend(vs)
            key = tuple(sorted(mono))
            poly[key] = poly.get(key, 0) + c
    return tuple(sorted((c, m) for m, c in poly.items() if c))


@dataclass(frozen=True)
class DerivBoundTable:
    A: tuple[int, ...]
    H: tuple[int, ...]
    T: tuple[int, ...]
    B: tuple[int, ...]

    @property
    def kmax(self) -> int:
        return len(self.H) - 1


@functools.lru_cache(maxsize=None)
def deriv_bounds(kmax: int) -> DerivBoundTable:
    A = tuple(sum(abs(c) for c in lambda_poly(k)) for k in range(kmax + 2))
    H = tuple((2 * k) ** (2 * k) * A[k] for k in range(kmax + 2))  # 0**0 == 1
    T = []
    for k in range(kmax + 1):
        T.append(sum(abs(c) * math.prod(H[j] for _, j in mono) for c, mono in mu_numerator(k)))
    B = tuple(8 ** (k + 1) * T[k] for k in range(kmax + 1))
    return DerivBoundTable(A[: kmax + 1], H[: kmax + 1], tuple(T), B)


def H(k: int) -> int:
    return deriv_bounds(k).H[k]


def B(k: int) -> int:
    return deriv_bounds(k).B[k]


def B_multi(kbar: MultiIndex) -> int:
    return math.prod(B(k) for k in kbar)


def _sqrt_n_pow_up(n: int, e: int) -> Dyadic:
    """Dyadic upper bound for ``sqrt(n)**e``."""
    r = math.isqrt(n)
    if r * r == n:
        return Dyadic(r ** e)
    base = Dyadic(n ** (e // 2))
    return base * sqrt_n(n)[1] if e % 2 else base


def bprime(kbar: MultiIndex, n: int | None = None) -> Dyadic:
    """Constant ``B'`` with ``|d_k phi*_Q| <= B' (2/(eps diam Q))**|k|``."""
    kbar = tuple(kbar)
    n = len(kbar) if n is None else n
    NN = N_n(n)
    total = ZERO
    for t in quotient_expand(kbar).terms:
        K = Dyadic(abs(t.coeff) * B_multi(t.lead)) * _sqrt_n_pow_up(n, sum(t.lead))
        for l, m in t.powers:
            f = Dyadic(NN * B_multi(l) * 21 ** sum(l)) * _sqrt_n_pow_up(n, sum(l))
            K = K * f ** m
        total = total + K
    return total


# ---------------------------------------------------------------------------
# interval evaluators

def _zero(p: int) -> DyInterval:
    return DyInterval(ZERO, ZERO, p)


def _const(v, p: int) -> DyInterval:
    if isinstance(v, Fraction):
        return DyInterval.from_fraction(v, p)
    return DyInterval.point(v, p)


def lambda_iv(X: DyInterval, k: int, p: int) -> DyInterval:
    """Enclosure of ``lambda^(k)`` over ``X``."""
    if X.hi.man <= 0:
        return _zero(p)
    Hk1 = H(k + 1)
    # |lambda^(k)(x)| <= H_{k+1} max(x, 0) by the mean value theorem
    cap = X.hi * Hk1
    if X.lo.man <= 0 or cap <= two_pow(-p):
        return DyInterval(-cap, cap, p) if k else DyInterval(ZERO, min(cap, ONE), p)
    X = X.with_prec(p)
    lam = (-X.recip(p)).exp(p)
    if k == 0:
        return lam
    coeffs = lambda_poly(k)
    poly = _const(coeffs[-1], p)
    for c in reversed(coeffs[:-1]):
        poly = poly * X + c
    return lam * poly / (X ** (2 * k))


def mu_iv(X: DyInterval, k: int, p: int) -> DyInterval:
    """Enclosure of ``mu^(k)`` over ``X``."""
    if X.hi.man <= 0:
        return _zero(p)
    if X.lo >= ONE:
        return DyInterval(ONE, ONE, p) if k == 0 else _zero(p)
    X = X.with_prec(p)
    Y = 1 - X
    a = [lambda_iv(X, j, p) for j in range(k + 1)]
    b = [lambda_iv(Y, j, p) for j in range(k + 1)]
    num = _zero(p)
    for c, mono in mu_numerator(k):
        term = _const(c, p)
        for which, j in mono:
            term = term * (a[j] if which == "a" else b[j])
        num = num + term
    v = a[0] + b[0]
    # lambda(x) + lambda(1-x) >= 2 exp(-2) > 1/8 everywhere
    v = DyInterval(max(v.lo, Dyadic(1, -3)), max(v.hi, Dyadic(1, -3)), p)
    out = num / (v ** (k + 1))
    if k == 0:
        out = DyInterval(max(out.lo, ZERO), min(out.hi, ONE), p)
    return out


def _eps_frac(eps) -> Fraction:
    return eps.to_fraction() if isinstance(eps, Dyadic) else Fraction(eps)


def nu_iv(X: DyInterval, k: int, eps: Dyadic, p: int) -> DyInterval:
    """Enclosure of ``nu^(k)`` over ``X``; ``nu`` is 1 on ``[-1/2, 1/2]`` and
    vanishes outside ``[-(1+eps)/2, (1+eps)/2]``."""
    half = Dyadic(1, -1)
    if X.lo >= -half and X.hi <= half:
        return DyInterval(ONE, ONE, p) if k == 0 else _zero(p)
    edge = (ONE + eps).shift(-1)
    if X.lo >= edge or X.hi <= -edge:
        return _zero(p)
    X = X.with_prec(p)
    e = _eps_frac(eps)
    inv = _const(1 / e, p)
    Aiv = (X.shift(1) + (ONE + eps)) * inv
    Biv = ((ONE + eps) - X.shift(1)) * inv
    acc = _zero(p)
    for j in range(k + 1):
        t = mu_iv(Aiv, k - j, p) * mu_iv(Biv, j, p) * math.comb(k, j)
        acc = acc - t if j % 2 else acc + t
    if k:
        acc = acc * _const((2 / e) ** k, p)
    else:
        acc = DyInterval(max(acc.lo, ZERO), min(acc.hi, ONE), p)
    return acc


def _point_box(x: CPoint, p: int) -> tuple[DyInterval, ...]:
    if x.exact is not None:
        return tuple(DyInterval(v, v, p) for v in x.exact)
    return tuple(iv.with_prec(p) for iv in x.box(p))


def phi_iv(Q: DyadicCube, X: Sequence[DyInterval], kbar: MultiIndex, eps: Dyadic, p: int) -> DyInterval:
    """Enclosure of ``d_k phi_Q`` over the box ``X``."""
    acc = DyInterval(ONE, ONE, p)
    for Xc, c, kc in zip(X, Q.center(), kbar):
        t = nu_iv((Xc - c).shift(Q.level), kc, eps, p)
        if t.lo.man == 0 and t.hi.man == 0:
            return _zero(p)
        acc = acc * t
    return acc.shift(Q.level * sum(kbar))


# ---------------------------------------------------------------------------
# point evaluators

def _start(i: int) -> int:
    return max(i, 0) + 24


def lambda_deriv(x: CReal | object, k: int, i: int) -> Dyadic:
    """``2**-i`` approximation of ``lambda^(k)(x)`` by the threshold scheme."""
    x = CReal.of(x)
    Hk1 = H(k + 1)
    # least j with 2^{-j+1} < 2^{-i} / H_{k+1}
    j = i + 1 + Hk1.bit_length()
    while two_pow(-j + 1) * Hk1 >= two_pow(-i):
        j += 1
    while j > 0 and two_pow(-j + 2) * Hk1 < two_pow(-i):
        j -= 1
    thresh = Fraction(1, 2 ** i * Hk1) - Fraction(1, 2 ** j)
    if x.approx(j).to_fraction() < thresh:
        return ZERO
    return refine_to(lambda p: lambda_iv(x.enclosure(p), k, p), i, _start(i))


def mu_deriv(x, k: int, i: int) -> Dyadic:
    x = CReal.of(x)
    return refine_to(lambda p: mu_iv(x.enclosure(p), k, p), i, _start(i))


def nu_deriv(x, k: int, i: int, eps: Dyadic = DEFAULT_EPS) -> Dyadic:
    x = CReal.of(x)
    return refine_to(lambda p: nu_iv(x.enclosure(p), k, eps, p), i, _start(i))


def mu_nu_deriv(which: str, x, k: int, i: int, eps: Dyadic = DEFAULT_EPS) -> Dyadic:
    if which == "mu":
        return mu_deriv(x, k, i)
    if which == "nu":
        return nu_deriv(x, k, i, eps)
    raise ValueError(f"unknown bump {which!r}")


def phi_deriv(Q: DyadicCube, x: CPoint, kbar: MultiIndex, i: int, eps: Dyadic = DEFAULT_EPS) -> Dyadic:
    x = CPoint.of(x)
    return refine_to(lambda p: phi_iv(Q, _point_box(x, p), kbar, eps, p), i, _start(i))


def sub_indices(kbar: MultiIndex) -> list[MultiIndex]:
    return [t for t in itertools.product(*(range(k + 1) for k in kbar))]


class PartitionAtPoint:
    """Evaluates ``phi*_Q`` and derivatives at one point ``x`` off F.

    The candidate set is ``enum_Gx(x)``; enclosures of ``d_l phi_Q`` and
    ``d_l Phi`` are cached per working precision.
    """

    def __init__(self, decomp: Decomposition, x: CPoint, budget: int = 4096):
        self.decomp = decomp
        self.eps = decomp.eps
        self.x = CPoint.of(x)
        try:
            self.G = decomp.enum_Gx(self.x, budget).cubes
        except Inconclusive as exc:
            raise PreconditionError(f"point may lie in F: {exc}") from None
        self._tables: dict[int, dict] = {}
        self._lock = threading.Lock()

    def active(self) -> list[DyadicCube]:
        """Cubes of G_x with ``x`` possibly inside ``Q*``."""
        x = self.x
        half = (ONE + self.eps)
        out = []
        for Q in self.G:
            r = half * two_pow(-Q.level - 1)
            if x.exact is not None:
                if all(abs(v - c) < r for v, c in zip(x.exact, Q.center())):
                    out.append(Q)
            else:
                box = x.box(60)
                if all(iv.hi > c - r and iv.lo < c + r for iv, c in zip(box, Q.center())):
                    out.append(Q)
        return out

    def _table(self, p: int) -> dict:
        t = self._tables.get(p)
        if t is None:
            t = {"X": _point_box(self.x, p), "phi": {}, "Phi": {}}
            with self._lock:
                t = self._tables.setdefault(p, t)
        return t

    def phi(self, Q: DyadicCube, l: MultiIndex, p: int) -> DyInterval:
        t = self._table(p)
        key = (Q, l)
        v = t["phi"].get(key)
        if v is None:
            v = t["phi"][key] = phi_iv(Q, t["X"], l, self.eps, p)
        return v

    def Phi(self, l: MultiIndex, p: int) -> DyInterval:
        t = self._table(p)
        v = t["Phi"].get(l)
        if v is None:
            v = _zero(p)
            for Q in self.G:
                v = v + self.phi(Q, l, p)
            if not any(l):
                # x lies in some cube of F, where its bump equals 1
                v = DyInterval(max(v.lo, ONE), max(v.hi, ONE), p)
            t["Phi"][l] = v
        return v

    def phistar_iv(self, Q: DyadicCube, kbar: MultiIndex, p: int) -> DyInterval:
        exp = quotient_expand(tuple(kbar))
        num = _zero(p)
        for term in exp.terms:
            w = self.phi(Q, term.lead, p)
            if w.lo.man == 0 and w.hi.man == 0:
                continue
            w = w * term.coeff
            for l, m in term.powers:
                w = w * (self.Phi(l, p) ** m)
            num = num + w
        return num / (self.Phi((0,) * len(kbar), p) ** exp.denominator_power)

    def phistar(self, Q: DyadicCube, kbar: MultiIndex, i: int) -> Dyadic:
        if self.x.exact is not None and not _maybe_supported(Q, self.eps, self.x.exact):
            return ZERO
        return refine_to(lambda p: self.phistar_iv(Q, kbar, p), i, _start(i))

    def phistar_sum(self, kbar: MultiIndex, i: int) -> Dyadic:
        """Sum over G_x of ``d_k phi*_Q(x)``, each term at precision ``i``."""
        return sum((self.phistar(Q, kbar, i) for Q in self.G), ZERO)


def _maybe_supported(Q: DyadicCube, eps: Dyadic, x: Sequence[Dyadic]) -> bool:
    r = (ONE + eps) * two_pow(-Q.level - 1)
    return all(abs(v - c) < r for v, c in zip(x, Q.center()))


def phi_eval(decomp: Decomposition, Q: DyadicCube, kind: str, x, kbar: MultiIndex, i: int) -> Dyadic:
    """``2**-i`` approximation of ``d_k phi_Q(x)`` or ``d_k phi*_Q(x)``."""
    x = CPoint.of(x)
    kbar = tuple(kbar)
    if kind == "phi":
        return phi_deriv(Q, x, kbar, i, decomp.eps)
    if kind == "phistar":
        return PartitionAtPoint(decomp, x).phistar(Q, kbar, i)
    raise ValueError(f"unknown kind {kind!r}")
