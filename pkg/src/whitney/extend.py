"""Whitney jets and the certified extension operators.

``wet0_eval`` extends a continuous function on F; ``wetm_eval`` extends a
Whitney jet of order ``m`` and returns any derivative of order at most ``m``.
Both run two searches side by side, one quantum each per step:

* branch "outsideF": look for a complement ball containing ``x``; once found,
  evaluate the cube sum directly;
* branch "viaF": look for a dense point of F close enough to ``x`` that a value
  computed near F is already within ``2**-i`` of the extension.

Whichever finishes first answers.  When ``x`` is in F only the second can
finish, and when ``x`` is off F the first eventually does.
"""
from __future__ import annotations

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .bump import PartitionAtPoint, PreconditionError, bprime, sub_indices
from .closedset import Ball, TotalClosedSet, outside_probe_steps
from .cubes import DEFAULT_EPS, Decomposition, N_n, decomposition_for, sqrt_n
from .exact import (
    ONE,
    ZERO,
    CPoint,
    Dyadic,
    DyInterval,
    cpoint_dist,
    parse_rational,
    point_precision,
    refine_to,
    sqdist,
    sqrt_bounds,
    two_pow,
)

log = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]


# ---------------------------------------------------------------------------
# multi-index helpers

def multi_indices(n: int, order: int, exact: bool = False) -> list[MultiIndex]:
    """All multi-indices of length ``n`` with ``|l| <= order`` (or ``== order``)."""
    out = [l for l in itertools.product(range(order + 1), repeat=n) if (sum(l) == order if exact else sum(l) <= order)]
    return sorted(out, key=lambda l: (sum(l), l))


def count_degree(n: int, d: int) -> int:
    """Number of multi-indices of length ``n`` with ``|l| = d``."""
    return math.comb(d + n - 1, n - 1) if d >= 0 else 0


def mfact(l: MultiIndex) -> int:
    return math.prod(math.factorial(v) for v in l)


def mbinom(k: MultiIndex, l: MultiIndex) -> int:
    return math.prod(math.comb(a, b) for a, b in zip(k, l))


def madd(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def msub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def mpow(v: Sequence, l: MultiIndex):
    """``v**l`` for Dyadics or intervals."""
    acc = None
    for x, e in zip(v, l):
        if e:
            t = x ** e
            acc = t if acc is None else acc * t
    return acc


def _frac(v) -> Fraction:
    if isinstance(v, Dyadic):
        return v.to_fraction()
    if isinstance(v, str):
        return parse_rational(v)
    return Fraction(v)


def _iv(v, p: int) -> DyInterval:
    q = _frac(v)
    return DyInterval.from_fraction(q, p)


def _frac_up_iv(iv: DyInterval) -> Fraction:
    return max(abs(iv.lo), abs(iv.hi)).to_fraction()


# ---------------------------------------------------------------------------
# global smooth functions (sources of built-in jets)

class GlobalFn:
    """A smooth function on R^n with interval-evaluable partial derivatives."""

    dim: int
    name: str

    def deriv_iv(self, kbar: MultiIndex, X: Sequence[DyInterval], p: int) -> DyInterval:
        raise NotImplementedError

    def sup_abs(self, kbar: MultiIndex, box) -> Fraction | None:
        """Upper bound for ``|d_k h|`` on the box (``None`` box = all of R^n); ``None`` if unbounded."""
        if box is None:
            return None
        X = [DyInterval(a, b, 64) for a, b in zip(*box)]
        return _frac_up_iv(self.deriv_iv(kbar, X, 64))

    def deriv_at(self, kbar: MultiIndex, x: Sequence, i: int) -> Dyadic:
        pt = CPoint.of(x)
        return refine_to(lambda p: self.deriv_iv(kbar, _box_of(pt, p), p), i)


def _box_of(x: CPoint, p: int) -> tuple[DyInterval, ...]:
    if x.exact is not None:
        return tuple(DyInterval(v, v, p) for v in x.exact)
    return tuple(iv.with_prec(p) for iv in x.box(p))


@dataclass
class PolyFn(GlobalFn):
    """``sum c_e x**e``; ``terms`` maps exponent tuples to rational coefficients."""

    dim: int
    terms: dict
    name: str = "poly"

    def degree(self) -> int:
        return max((sum(e) for e, c in self.terms.items() if c), default=0)

    def derivative_terms(self, kbar: MultiIndex) -> dict:
        out = {}
        for e, c in self.terms.items():
            if c and all(a >= b for a, b in zip(e, kbar)):
                f = math.prod(math.factorial(a) // math.factorial(a - b) for a, b in zip(e, kbar))
                ne = msub(e, kbar)
                out[ne] = out.get(ne, 0) + c * f
        return {e: c for e, c in out.items() if c}

    def deriv_iv(self, kbar, X, p):
        acc = DyInterval(ZERO, ZERO, p)
        for e, c in sorted(self.derivative_terms(kbar).items()):
            t = _iv(c, p)
            m = mpow(X, e)
            acc = acc + (t if m is None else t * m)
        return acc

    def sup_abs(self, kbar, box):
        dt = self.derivative_terms(kbar)
        if not dt:
            return Fraction(0)
        if all(not any(e) for e in dt):
            return abs(sum(dt.values(), Fraction(0)))
        return super().sup_abs(kbar, box)


_TRIG_CYCLE = {
    "cos": [("cos", 1), ("sin", -1), ("cos", -1), ("sin", 1)],
    "sin": [("sin", 1), ("cos", 1), ("sin", -1), ("cos", -1)],
}


@dataclass
class LinearFormFn(GlobalFn):
    """``outer(a . x + shift)`` with outer one of cos, sin, exp."""

    dim: int
    kind: str
    coeffs: tuple
    shift: Fraction = Fraction(0)
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("cos", "sin", "expc"):
            raise ValueError(f"unknown builtin {self.kind!r}")
        self.name = self.name or self.kind

    def _scale(self, kbar) -> Fraction:
        return math.prod((Fraction(a) ** k for a, k in zip(self.coeffs, kbar)), start=Fraction(1))

    def deriv_iv(self, kbar, X, p):
        t = _iv(self.shift, p)
        for a, x in zip(self.coeffs, X):
            if a:
                t = t + _iv(a, p) * x
        j = sum(kbar)
        if self.kind == "expc":
            base = t.exp(p)
        else:
            fn, sgn = _TRIG_CYCLE[self.kind][j % 4]
            base = getattr(t, fn)(p)
            if sgn < 0:
                base = -base
        sc = self._scale(kbar)
        return base if sc == 1 else base * _iv(sc, p)

    def sup_abs(self, kbar, box):
        sc = abs(self._scale(kbar))
        if self.kind != "expc" or sc == 0:
            return sc
        return super().sup_abs(kbar, box)


# ---------------------------------------------------------------------------
# functions on F

@dataclass
class FnOnF:
    """A continuous function on F given by a precision oracle and a modulus of continuity.

    ``modulus(R, e)`` returns ``delta > 0`` such that ``|f(a) - f(b)| <= e``
    whenever ``a, b`` lie in ``F`` within ``B(0, R)`` and ``d(a, b) <= delta``.
    """

    F: TotalClosedSet
    eval_fn: Callable[[CPoint, int], Dyadic]
    modulus_fn: Callable[[Dyadic, Dyadic], Dyadic]
    label: str = "f"
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def eval(self, x, i: int) -> Dyadic:
        x = CPoint.of(x)
        key = (x.key(), i)
        v = self._memo.get(key)
        if v is None:
            v = self.eval_fn(x, i)
            with self._lock:
                v = self._memo.setdefault(key, v)
        return v

    def enclosure(self, x, p: int) -> DyInterval:
        v = self.eval(x, p)
        r = two_pow(-p)
        return DyInterval(v - r, v + r, p)

    def modulus(self, R: Dyadic, eps: Dyadic) -> Dyadic:
        return self.modulus_fn(R, eps)


BIG_DELTA = two_pow(64)


def _box_clip(F: TotalClosedSet, R: Dyadic):
    n = F.dim
    lo = [-R] * n
    hi = [R] * n
    bb = F.bbox()
    if bb is not None:
        lo = [max(a, b) for a, b in zip(lo, bb[0])]
        hi = [min(a, b) for a, b in zip(hi, bb[1])]
        if any(a > b for a, b in zip(lo, hi)):
            lo, hi = list(bb[0]), list(bb[1])
    return tuple(lo), tuple(hi)


def _pow2_floor(q: Fraction) -> Dyadic:
    """Largest power of two not exceeding ``q > 0``."""
    k = q.numerator.bit_length() - q.denominator.bit_length()
    while Fraction(2) ** k > q:
        k -= 1
    while Fraction(2) ** (k + 1) <= q:
        k += 1
    return two_pow(k)


def restrict(h: GlobalFn, kbar: MultiIndex, F: TotalClosedSet) -> FnOnF:
    """``d_k h`` restricted to F, with a Lipschitz-derived modulus."""
    kbar = tuple(kbar)
    n = F.dim
    sq_hi = sqrt_n(n)[1].to_fraction()
    cache: dict = {}

    def ev(x: CPoint, i: int) -> Dyadic:
        return refine_to(lambda p: h.deriv_iv(kbar, _box_of(x, p), p), i)

    def modulus(R: Dyadic, eps: Dyadic) -> Dyadic:
        key = (R, eps)
        if key in cache:
            return cache[key]
        box = _box_clip(F, R)
        L = Fraction(0)
        for c in range(n):
            s = h.sup_abs(madd(kbar, tuple(int(j == c) for j in range(n))), box)
            if s is None:
                raise ValueError("derivative bound unavailable on this region")
            L = max(L, s)
        L = L * sq_hi
        d = BIG_DELTA if L == 0 else min(_pow2_floor(eps.to_fraction() / L), BIG_DELTA)
        cache[key] = d
        return d

    return FnOnF(F, ev, modulus, label=f"d{list(kbar)} {h.name}")


# ---------------------------------------------------------------------------
# jets

@dataclass
class WhitneyJet:
    """Components ``f^(k)`` for ``|k| <= order`` on a shared set, with compatibility constant ``M``."""

    F: TotalClosedSet
    order: int
    components: dict
    M: Fraction
    source: GlobalFn | None = None
    parts: tuple = ()
    label: str = "jet"

    @property
    def dim(self) -> int:
        return self.F.dim

    def component(self, kbar: MultiIndex) -> FnOnF:
        kbar = tuple(kbar)
        if sum(kbar) > self.order:
            raise ValueError(f"derivative order {sum(kbar)} exceeds jet order {self.order}")
        return self.components[kbar]

    def truncate(self, order: int) -> "WhitneyJet":
        """Restriction to lower order; its constant is recomputed for that order."""
        if order == self.order:
            return self
        if order > self.order or order < 0:
            raise ValueError("invalid truncation order")
        comps = {k: f for k, f in self.components.items() if sum(k) <= order}
        if self.source is not None:
            M = auto_M(self.source, order, self.F)
        elif self.parts:
            M = sum((abs(a) * J.truncate(order).M for a, J in self.parts), Fraction(0))
        else:
            raise ValueError("cannot derive a compatibility constant for the truncated jet")
        parts = tuple((a, J.truncate(order)) for a, J in self.parts)
        return WhitneyJet(self.F, order, comps, M, self.source, parts, f"{self.label}|{order}")

    def single(self, kbar: MultiIndex) -> "WhitneyJet":
        """The order-0 jet consisting of the single component ``f^(k)``."""
        f = self.component(kbar)
        zero = (0,) * self.dim
        return WhitneyJet(self.F, 0, {zero: f}, Fraction(0), None, (), f"{self.label}[{list(kbar)}]")


def auto_M(h: GlobalFn, m: int, F: TotalClosedSet) -> Fraction:
    """``n^((m+1)/2) * sup_{|j|=m+1} |d_j h| * max(1, sum_{|l|<=m} 1/l!)`` over the hull of F."""
    n = F.dim
    bb = F.bbox()
    sup = Fraction(0)
    for j in multi_indices(n, m + 1, exact=True):
        s = h.sup_abs(j, bb)
        if s is None:
            raise ValueError(
                f"{h.name}: derivatives of order {m + 1} are unbounded on an unbounded set; supply M explicitly")
        sup = max(sup, s)
    fac = max(Fraction(1), sum((Fraction(1, mfact(l)) for l in multi_indices(n, m)), Fraction(0)))
    r = math.isqrt(n)
    if (m + 1) % 2 == 0:
        npow = Fraction(n) ** ((m + 1) // 2)
    elif r * r == n:
        npow = Fraction(r) ** (m + 1)
    else:
        npow = Fraction(n) ** (m // 2) * sqrt_n(n)[1].to_fraction()
    return npow * sup * fac


def jet_from_function(h: GlobalFn, m: int, F: TotalClosedSet, M=None) -> WhitneyJet:
    if h.dim != F.dim:
        raise ValueError(f"function dimension {h.dim} differs from set dimension {F.dim}")
    comps = {k: restrict(h, k, F) for k in multi_indices(F.dim, m)}
    MM = auto_M(h, m, F) if M is None or M == "auto" else _frac(M)
    return WhitneyJet(F, m, comps, MM, h, (), h.name)


def parse_global_fn(spec: dict, n: int) -> GlobalFn:
    kind = spec.get("builtin")
    coeffs = spec.get("coeffs", [1])
    if kind == "poly":
        terms: dict = {}
        if coeffs and all(not isinstance(c, (list, tuple)) for c in coeffs):
            for d, c in enumerate(coeffs):
                e = (d,) + (0,) * (n - 1)
                terms[e] = terms.get(e, 0) + _frac(c)
        else:
            for item in coeffs:
                c, e = item
                e = tuple(int(v) for v in e)
                if len(e) != n:
                    raise ValueError(f"exponent {list(e)} does not match dimension {n}")
                terms[e] = terms.get(e, 0) + _frac(c)
        return PolyFn(n, terms)
    if kind in ("cos", "sin", "expc"):
        a = [_frac(c) for c in coeffs]
        if len(a) > n:
            raise ValueError(f"{len(a)} coefficients for dimension {n}")
        a = tuple(a + [Fraction(0)] * (n - len(a)))
        return LinearFormFn(n, kind, a, _frac(spec.get("shift", 0)))
    raise ValueError(f"unknown builtin {kind!r}")


def jet_make(spec: dict, F: TotalClosedSet) -> WhitneyJet:
    """Build a jet from ``{"builtin": ..., "coeffs": [...], "order": m, "M": "auto"|rational}``."""
    if not isinstance(spec, dict):
        raise ValueError("jet spec must be a JSON object")
    m = int(spec.get("order", 0))
    if m < 0:
        raise ValueError("jet order must be nonnegative")
    h = parse_global_fn(spec, F.dim)
    return jet_from_function(h, m, F, spec.get("M", "auto"))


def linear_combination(a, J1: WhitneyJet, b, J2: WhitneyJet) -> WhitneyJet:
    """The jet ``a J1 + b J2`` (same set, same order)."""
    if J1.F is not J2.F or J1.order != J2.order:
        raise ValueError("jets must share the set and the order")
    a, b = _frac(a), _frac(b)
    comps = {}
    for k in J1.components:
        f1, f2 = J1.components[k], J2.components[k]
        comps[k] = _combine(a, f1, b, f2)
    M = abs(a) * J1.M + abs(b) * J2.M
    return WhitneyJet(J1.F, J1.order, comps, M, None, ((a, J1), (b, J2)), f"({a})*{J1.label}+({b})*{J2.label}")


def _mag_bits(q: Fraction) -> int:
    q = abs(q)
    return max(0, q.numerator.bit_length() - q.denominator.bit_length() + 1)


def _combine(a: Fraction, f1: FnOnF, b: Fraction, f2: FnOnF) -> FnOnF:
    extra = max(_mag_bits(a), _mag_bits(b)) + 3

    def ev(x, i):
        p = i + extra
        v = _iv(a, p + 8) * f1.enclosure(x, p) + _iv(b, p + 8) * f2.enclosure(x, p)
        return v.mid().round_at(i + 2)

    def modulus(R, eps):
        # |a| e1 + |b| e2 <= eps with e_j = eps / (2 (|coef| + 1))
        e1 = _pow2_floor(eps.to_fraction() / (2 * (abs(a) + 1)))
        e2 = _pow2_floor(eps.to_fraction() / (2 * (abs(b) + 1)))
        return min(f1.modulus(R, e1), f2.modulus(R, e2))

    return FnOnF(f1.F, ev, modulus, label=f"({a})*{f1.label}+({b})*{f2.label}")


def perturbed(jet: WhitneyJet, kbar: MultiIndex, delta, where: Callable[[tuple], bool]) -> WhitneyJet:
    """Copy of ``jet`` with ``f^(k)`` shifted by ``delta`` on the exact points where ``where`` holds.

    Used to build jets that violate the compatibility conditions.
    """
    kbar = tuple(kbar)
    base = jet.component(kbar)
    d = _frac(delta)

    def ev(x: CPoint, i: int) -> Dyadic:
        v = base.eval(x, i + 2)
        if x.exact is None:
            raise ValueError("perturbed components need exact points")
        if where(x.exact):
            v = (_iv(d, i + 8) + v).mid()
        return v.round_at(i + 2)

    comps = dict(jet.components)
    comps[kbar] = FnOnF(jet.F, ev, base.modulus_fn, label=f"{base.label}+perturbation")
    return WhitneyJet(jet.F, jet.order, comps, jet.M, None, (), f"{jet.label}~")


# ---------------------------------------------------------------------------
# Taylor fields

def taylor_iv(values: dict, y: Sequence[Dyadic], X: Sequence[DyInterval], kbar: MultiIndex, m: int, p: int) -> DyInterval:
    """``P^k_y`` over ``X`` from enclosures ``values[l]`` of ``f^(l)(y)``."""
    n = len(kbar)
    diff = [xc - yc for xc, yc in zip(X, y)]
    acc = DyInterval(ZERO, ZERO, p)
    for l in multi_indices(n, m - sum(kbar)):
        t = values[madd(kbar, l)]
        mon = mpow(diff, l)
        if mon is not None:
            t = t * mon
        f = mfact(l)
        if f != 1:
            t = t / DyInterval(Dyadic(f), Dyadic(f), p)
        acc = acc + t
    return acc


def _y_box(y: CPoint, p: int):
    if y.exact is not None:
        return y.exact, None
    return None, _box_of(y, p)


def taylor_eval(jet: WhitneyJet, kbar: MultiIndex, y, x, i: int) -> Dyadic:
    """``2**-i`` approximation of ``P^k_y(x)`` for ``y`` in F."""
    kbar = tuple(kbar)
    if sum(kbar) > jet.order:
        raise ValueError("derivative order exceeds jet order")
    y = CPoint.of(y)
    x = CPoint.of(x)

    def enc(p):
        vals = {l: jet.component(l).enclosure(y, p) for l in multi_indices(jet.dim, jet.order)}
        X = _box_of(x, p)
        if y.exact is not None:
            return taylor_iv(vals, y.exact, X, kbar, jet.order, p)
        Y = _box_of(y, p)
        return _taylor_iv_box(vals, Y, X, kbar, jet.order, p)

    return refine_to(enc, i)


def _taylor_iv_box(values, Y, X, kbar, m, p):
    diff = [xc - yc for xc, yc in zip(X, Y)]
    acc = DyInterval(ZERO, ZERO, p)
    for l in multi_indices(len(kbar), m - sum(kbar)):
        t = values[madd(kbar, l)]
        mon = mpow(diff, l)
        if mon is not None:
            t = t * mon
        t = t / DyInterval(Dyadic(mfact(l)), Dyadic(mfact(l)), p)
        acc = acc + t
    return acc


@dataclass
class CompatReport:
    """Outcome of sampling the compatibility condition over pairs of dense points."""

    pairs: int
    tested: int
    violations: list
    worst_ratio: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "tested": self.tested, "passed": self.passed,
                "worst_ratio": self.worst_ratio, "violations": self.violations[:10]}


def check_compatibility(jet: WhitneyJet, pairs: int = 1000, seed: int = 0, pool: int = 256,
                        i: int = 40) -> CompatReport:
    """Sample ``|f^(k)(x) - P^k_y(x)| <= M d(x, y)^(m-|k|+1)`` over pairs of dense points.

    A pair counts as a violation only when it is certified: a lower bound of the
    left side exceeds an upper bound of the right side.  ``worst_ratio`` is the
    largest observed approximate ratio of the two sides.
    """
    import random

    rng = random.Random(f"compat:{seed}")
    pts = jet.F.dense.take(pool)
    idx = multi_indices(jet.dim, jet.order)
    slack = Fraction(2, 2 ** i)
    bad, tested, worst = [], 0, 0.0
    for _ in range(pairs):
        x, y = rng.choice(pts), rng.choice(pts)
        d = cpoint_dist(x, y, i).to_fraction()
        d_hi = d + Fraction(1, 2 ** i)
        d_lo = max(d - Fraction(1, 2 ** i), Fraction(0))
        for k in idx:
            power = jet.order - sum(k) + 1
            diff = jet.component(k).eval(x, i + 1) - taylor_eval(jet, k, y, x, i + 1)
            lower = abs(diff.to_fraction()) - slack
            bound = jet.M * d_hi ** power
            tested += 1
            if lower > bound:
                bad.append({"x": repr(x), "y": repr(y), "deriv": list(k),
                            "gap": float(lower), "bound": float(bound)})
            elif d_lo > 0:
                worst = max(worst, float(abs(diff.to_fraction()) / (jet.M * d_lo ** power)) if jet.M else 0.0)
    return CompatReport(pairs, tested, bad, worst)


# ---------------------------------------------------------------------------
# certified pairs

@dataclass(frozen=True)
class Pair:
    """``f`` maps ``closure(inner) & F`` into ``outer``; ``witness`` is a dense point in ``inner``."""

    inner: Ball
    outer: Ball
    witness: CPoint
    index: int
    level: int


def _norm_bound(p: CPoint) -> Dyadic:
    """Dyadic upper bound for ``|p|`` (the l1 norm of a coarse approximation)."""
    pa = p.approx(8)
    slack = ZERO if p.exact is not None else two_pow(-8) * len(pa)
    return sum((abs(v) for v in pa), ZERO) + slack


def pair_radius(f: FnOnF, p: CPoint, u: int) -> Dyadic:
    """Inner radius for a dense point ``p`` at output level ``u`` (capped at 1)."""
    R = _norm_bound(p) + ONE
    return min(f.modulus(R, two_pow(-u)), ONE)


def make_pair(f: FnOnF, s: int, u: int) -> Pair:
    p = f.F.dense.at(s)
    rho = pair_radius(f, p, u)
    center = p.exact if p.exact is not None else p.approx(u + 8)
    y2 = f.eval(p, u + 2)
    return Pair(Ball(tuple(center), rho), Ball((y2,), two_pow(1 - u)), p, s, u)


def pair_enumerate(f: FnOnF) -> Iterator[Pair]:
    """Dovetails dense points with output levels ``u``: stage ``t`` emits ``(s, t - s)``."""
    for t in itertools.count():
        for s in range(t + 1):
            yield make_pair(f, s, t - s)


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class ExtConstants:
    n: int
    m: int
    eps: Fraction
    e: Fraction
    c: Fraction
    M: Fraction
    A: Fraction
    A_k: dict
    N: int

    @staticmethod
    def p(n: int, d: int) -> int:
        return count_degree(n, d)


def _bprime_frac(l: MultiIndex) -> Fraction:
    return bprime(l).to_fraction()


def A_m(M: Fraction, m: int, n: int, e: Fraction) -> Fraction:
    return M * sum((Fraction((7 * e + 1) ** (m - sum(l) + 1)) / mfact(l) for l in multi_indices(n, m)), Fraction(0))


def A_m_k(M: Fraction, m: int, kbar: MultiIndex, eps: Fraction, e: Fraction) -> Fraction:
    n = len(kbar)
    K = sum(kbar)
    first = sum((M * (7 * e + 1) ** (m - K - sum(l) + 1) / mfact(l) for l in multi_indices(n, m - K)), Fraction(0))
    second = Fraction(0)
    for l in sub_indices(kbar):
        if not any(l):
            continue
        inner = Fraction(0)
        rest = msub(kbar, l)
        for h in multi_indices(n, m - sum(rest)):
            inner += M * (7 * e + 1) ** (m - sum(rest) - sum(h) + 1) / mfact(h)
        second += mbinom(kbar, l) * N_n(n) * (98 * e) ** sum(l) * _bprime_frac(l) / eps ** sum(l) * inner
    return first + second


def ext_constants(jet: WhitneyJet, eps=DEFAULT_EPS) -> ExtConstants:
    n, m = jet.dim, jet.order
    ef = _frac(eps)
    e = 2 / (1 - ef)
    c = 14 * e + 1
    A = A_m(jet.M, m, n, e)
    Ak = {k: A_m_k(jet.M, m, k, ef, e) for k in multi_indices(n, m)}
    return ExtConstants(n, m, ef, e, c, jet.M, A, Ak, N_n(n))


# ---------------------------------------------------------------------------
# evaluation

@dataclass(frozen=True)
class EvalResult:
    value: Dyadic
    precision: int
    branch: str  # "outsideF" or "viaF"

    def to_json(self) -> dict:
        return {"value": str(self.value), "decimal": self.value.to_decimal(), "precision": self.precision, "branch": self.branch}


def _within(x: CPoint, p: CPoint, r) -> bool:
    """Certified ``d(x, p) < r``; ``r`` a Fraction, Dyadic or ``None`` (infinite)."""
    if r is None:
        return True
    r = _frac(r)
    if r <= 0:
        return False
    if x.exact is not None and p.exact is not None:
        return sqdist(x.exact, p.exact).to_fraction() < r * r
    j = max(8, -math.floor(math.log2(r)) + 8)
    q = point_precision(j, x.dim)
    d2 = sqdist(x.approx(q), p.approx(q))
    d_hi = sqrt_bounds(d2, j + 8)[1].to_fraction() + Fraction(2, 2 ** (j + 1))
    return d_hi < r


def _delta_for(K: Fraction, power: int, target: Fraction, c: Fraction):
    """Largest ``delta = 2**-t`` with ``K (c delta)**power < target``; ``None`` when any delta works."""
    if K == 0 or power == 0:
        return None if (K == 0 or K < target) else Fraction(0)
    t = 0
    # move up while the condition holds with room, down while it fails
    while K * (c * Fraction(2) ** -t) ** power >= target:
        t += 1
    while t > -64 and K * (c * Fraction(2) ** (-(t - 1))) ** power < target:
        t -= 1
    return Fraction(2) ** -t


class Extender:
    """Evaluates the extension of one jet on one set name.

    All memo tables (cube sums, partitions, recursive lower-order extenders)
    live here, so repeated and nested queries share work.
    """

    def __init__(self, jet: WhitneyJet, decomp: Decomposition | None = None, eps=DEFAULT_EPS):
        self.jet = jet
        self.F = jet.F
        self.n = jet.dim
        self.m = jet.order
        self.decomp = decomp if decomp is not None else decomposition_for(jet.F, eps)
        self.eps = self.decomp.eps
        self.consts = ext_constants(jet, self.eps)
        self._lower: Extender | None = None
        self._single: dict = {}
        self._partitions: dict = {}
        self._memo: dict = {}
        self._lock = threading.Lock()

    # -- helpers ---------------------------------------------------------------
    def lower(self) -> "Extender":
        if self._lower is None:
            self._lower = Extender(self.jet.truncate(self.m - 1), self.decomp)
        return self._lower

    def single(self, kbar: MultiIndex) -> "Extender":
        ext = self._single.get(kbar)
        if ext is None:
            ext = self._single[kbar] = Extender(self.jet.single(kbar), self.decomp)
        return ext

    def partition(self, x: CPoint) -> PartitionAtPoint:
        key = x.key()
        P = self._partitions.get(key)
        if P is None:
            P = PartitionAtPoint(self.decomp, x)
            with self._lock:
                P = self._partitions.setdefault(key, P)
        return P

    # -- public ------------------------------------------------------------------
    def evaluate(self, x, kbar: MultiIndex | None = None, i: int = 20) -> EvalResult:
        x = CPoint.of(x)
        if x.dim != self.n:
            raise ValueError(f"point dimension {x.dim} differs from set dimension {self.n}")
        kbar = tuple(kbar) if kbar is not None else (0,) * self.n
        if len(kbar) != self.n or any(v < 0 for v in kbar):
            raise ValueError(f"bad multi-index {list(kbar)}")
        if sum(kbar) > self.m:
            raise ValueError(f"derivative order {sum(kbar)} exceeds jet order {self.m}")
        key = (x.key(), kbar, i)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = self._interleave(x, kbar, i)
        with self._lock:
            res = self._memo.setdefault(key, res)
        return res

    def _interleave(self, x: CPoint, kbar: MultiIndex, i: int) -> EvalResult:
        probe = outside_probe_steps(self.F, x)
        search = self._via_F(x, kbar, i)
        probe_alive = True
        for step in itertools.count():
            if probe_alive:
                try:
                    ball = next(probe)
                except StopIteration:
                    probe_alive = False
                    ball = None
                if ball is not None:
                    log.debug("x certified outside F at quantum %d", step)
                    return EvalResult(self.off_F(x, kbar, i), i, "outsideF")
            out = next(search)
            if out is not None:
                log.debug("value found near F at quantum %d", step)
                return EvalResult(out, i, "viaF")

    # -- branch outsideF ---------------------------------------------------------
    def off_F(self, x: CPoint, kbar: MultiIndex, i: int) -> Dyadic:
        """``sum_Q sum_{h<=k} C(k,h) P^h_{r_Q}(x) d_{k-h} phi*_Q(x)`` for ``x`` off F."""
        P = self.partition(x)
        cubes = P.active() if x.exact is not None else list(P.G)
        reps = [(Q, self.decomp.approx_projection(Q)) for Q in cubes]
        m = self.m
        allk = multi_indices(self.n, m)
        hs = sub_indices(kbar)

        def enc(p: int) -> DyInterval:
            X = _box_of(x, p)
            acc = DyInterval(ZERO, ZERO, p)
            for Q, r in reps:
                vals = {l: self.jet.component(l).enclosure(r, p) for l in allk}
                for h in hs:
                    phi = P.phistar_iv(Q, msub(kbar, h), p)
                    if phi.lo.man == 0 and phi.hi.man == 0:
                        continue
                    if r.exact is not None:
                        tay = taylor_iv(vals, r.exact, X, h, m, p)
                    else:
                        tay = _taylor_iv_box(vals, _box_of(r, p), X, h, m, p)
                    term = tay * phi
                    b = mbinom(kbar, h)
                    acc = acc + (term * b if b != 1 else term)
            return acc

        return refine_to(enc, i, max(i, 0) + 24)

    # -- branch viaF ---------------------------------------------------------------
    def _dense_search(self, x: CPoint, accept: Callable[[CPoint], bool], hint) -> Iterator[None]:
        """Yields ``None`` per quantum until a dense point passes ``accept``; returns that point.

        The first quantum asks the stream for a point near ``x`` directly (when
        the stream supports it) using the radius ``hint``; after that the dense
        sequence is scanned in order.
        """
        dense = self.F.dense
        if dense.seek is not None and (hint is None or hint > 0):
            r = two_pow(64) if hint is None else _pow2_floor(_frac(hint))
            k = max(0, -r.magnitude() + 8) if r < ONE else 8
            xa = x.exact if x.exact is not None else x.approx(point_precision(k, self.n))
            p = CPoint(dense.seek(xa, r))
            if accept(p):
                return p
            yield None
        for s in itertools.count():
            p = dense.at(s)
            if accept(p):
                return p
            yield None

    def _hint_radius(self, comps, u: int, x: CPoint) -> Fraction:
        R = _norm_bound(x) + 2
        return min(min(f.modulus(R, two_pow(-u)), ONE).to_fraction() for f in comps) / self.consts.c

    def _via_F(self, x: CPoint, kbar: MultiIndex, i: int) -> Iterator[Dyadic | None]:
        c = self.consts.c
        if self.m == 0:
            f = self.jet.component(kbar)
            u = i + 1
            p = yield from self._dense_search(
                x, lambda p: _within(x, p, pair_radius(f, p, u).to_fraction() / c), self._hint_radius([f], u, x))
            yield f.eval(p, u + 2)
            return
        K = sum(kbar)
        M = self.m
        target = Fraction(1, 2 ** (i + 1))
        if K < M:
            # slack-1/2 values of the top-order components near x
            tops = multi_indices(self.n, M, exact=True)
            comps = [self.jet.component(l) for l in tops]
            p = yield from self._dense_search(
                x, lambda p: _within(x, p, min(pair_radius(f, p, 2) for f in comps).to_fraction() / c),
                self._hint_radius(comps, 2, x))
            s_vals = {l: f.eval(p, 4) for l, f in zip(tops, comps)}
            yield None
            if K == 0:
                S = Fraction(1, 2) + max(abs(s_vals[l].to_fraction()) / mfact(l) for l in tops)
                H = count_degree(self.n, M) * S
                delta = _delta_for(H, M, target, c)
            else:
                H = Fraction(0)
                for h in sub_indices(kbar):
                    rest = msub(kbar, h)
                    Sh = Fraction(1, 2) + max(
                        abs(s_vals[madd(h, j)].to_fraction()) / mfact(j) for j in multi_indices(self.n, M - sum(h), exact=True))
                    H += (mbinom(kbar, h) * Sh * (98 * self.consts.e) ** sum(rest) * _bprime_frac(rest)
                          * count_degree(self.n, M - sum(h)) / self.consts.eps ** sum(rest))
                H *= self.consts.N
                delta = _delta_for(H, M - K, target, c)
            yield from self._dense_search(x, lambda p: _within(x, p, delta), delta)
            yield self.lower().evaluate(x, kbar, i + 2).value
            return
        # top order: the order-0 extension of f^(k) plus a vanishing correction
        H = Fraction(0)
        for h in sub_indices(kbar):
            if h == kbar:
                continue
            rest = msub(kbar, h)
            H += (mbinom(kbar, h) * (98 * self.consts.e) ** sum(rest) * _bprime_frac(rest)
                  * self.consts.A_k[h] / self.consts.eps ** sum(rest))
        H *= self.consts.N
        delta = _delta_for(H, 1, target, c)
        yield from self._dense_search(x, lambda p: _within(x, p, delta), delta)
        yield self.single(kbar).evaluate(x, None, i + 1).value


# ---------------------------------------------------------------------------
# functional API

_EXTENDERS: dict = {}
_EXT_LOCK = threading.Lock()


def extender_for(jet: WhitneyJet, eps=DEFAULT_EPS) -> Extender:
    key = (id(jet), eps)
    with _EXT_LOCK:
        hit = _EXTENDERS.get(key)
        if hit is None or hit[0] is not jet:
            hit = _EXTENDERS[key] = (jet, Extender(jet, eps=eps))
        return hit[1]


def order0_jet(f: FnOnF) -> WhitneyJet:
    return WhitneyJet(f.F, 0, {(0,) * f.F.dim: f}, Fraction(0), None, (), f.label)


def wet0_eval(f: FnOnF | WhitneyJet, x, i: int, eps=DEFAULT_EPS) -> Dyadic:
    """``2**-i`` approximation of the order-0 extension of ``f`` at ``x``."""
    jet = f if isinstance(f, WhitneyJet) else order0_jet(f)
    if jet.order != 0:
        jet = jet.single((0,) * jet.dim)
    return extender_for(jet, eps).evaluate(x, None, i).value


def wetm_eval(jet: WhitneyJet, x, kbar: MultiIndex, i: int, eps=DEFAULT_EPS) -> Dyadic:
    """``2**-i`` approximation of ``d_k g(x)`` for the order-m extension ``g`` of ``jet``."""
    return extender_for(jet, eps).evaluate(x, kbar, i).value


def wetm_eval_detail(jet: WhitneyJet, x, kbar: MultiIndex, i: int, eps=DEFAULT_EPS) -> EvalResult:
    return extender_for(jet, eps).evaluate(x, kbar, i)


__all__ = [
    "CompatReport", "EvalResult", "ExtConstants", "Extender", "FnOnF", "GlobalFn", "LinearFormFn", "Pair", "PolyFn",
    "PreconditionError", "WhitneyJet", "auto_M", "check_compatibility", "ext_constants", "jet_from_function", "jet_make",
    "linear_combination", "multi_indices", "pair_enumerate", "perturbed", "restrict", "taylor_eval",
    "wet0_eval", "wetm_eval", "wetm_eval_detail",
]
