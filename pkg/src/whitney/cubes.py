"""Computable Whitney decomposition of the complement of a closed set.

Cubes are identified by ``(level, corner)``: the cube of level ``k`` with
integer corner ``a`` is ``prod [a_c 2**-k, (a_c + 1) 2**-k]``.  All tests
against ``diam = sqrt(n) 2**-k`` are decided exactly by squaring.

Enumeration (:meth:`Decomposition.enum_region`, :meth:`Decomposition.enum_Gx`)
walks the dyadic tree from the coarsest admissible level and discards a cell
when no sub-cube of it can satisfy the membership inequalities, which keeps the
work proportional to the cubes near the requested scale.
"""
from __future__ import annotations

import itertools
import math
import threading
import weakref
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .closedset import TotalClosedSet
from .exact import (
    ONE,
    ZERO,
    CPoint,
    Dyadic,
    cmp_sqrt,
    cpoint_dist,
    point_precision,
    sqdist,
    sqrt_bounds,
    two_pow,
)

DEFAULT_EPS = Dyadic(1, -3)


class Inconclusive(RuntimeError):
    """A bounded search ran out of budget without deciding."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    corner: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def edge(self) -> Dyadic:
        return two_pow(-self.level)

    def lo(self) -> tuple[Dyadic, ...]:
        return tuple(Dyadic(a, -self.level) for a in self.corner)

    def hi(self) -> tuple[Dyadic, ...]:
        return tuple(Dyadic(a + 1, -self.level) for a in self.corner)

    def center(self) -> tuple[Dyadic, ...]:
        return tuple(Dyadic(2 * a + 1, -self.level - 1) for a in self.corner)

    def diam_sq(self) -> Dyadic:
        return Dyadic(self.dim, -2 * self.level)

    def ancestor(self, h: int) -> "DyadicCube":
        if h > self.level:
            raise ValueError("ancestor level must not exceed the cube level")
        s = self.level - h
        return DyadicCube(h, tuple(a >> s for a in self.corner))

    def children(self) -> Iterator["DyadicCube"]:
        k = self.level + 1
        base = [2 * a for a in self.corner]
        for off in itertools.product((0, 1), repeat=self.dim):
            yield DyadicCube(k, tuple(b + o for b, o in zip(base, off)))

    def vertices(self) -> list[tuple[Dyadic, ...]]:
        lo, hi = self.lo(), self.hi()
        return [tuple(hi[c] if s else lo[c] for c, s in enumerate(bits)) for bits in itertools.product((0, 1), repeat=self.dim)]

    def contains(self, x: Sequence[Dyadic]) -> bool:
        return all(a <= v <= b for v, a, b in zip(x, self.lo(), self.hi()))

    def interiors_overlap(self, other: "DyadicCube") -> bool:
        for a1, b1, a2, b2 in zip(self.lo(), self.hi(), other.lo(), other.hi()):
            if not (a1 < b2 and a2 < b1):
                return False
        return True

    def touches(self, other: "DyadicCube") -> bool:
        """Closed cubes intersect."""
        return all(a1 <= b2 and a2 <= b1 for a1, b1, a2, b2 in zip(self.lo(), self.hi(), other.lo(), other.hi()))

    def to_json(self) -> dict:
        return {"level": self.level, "corner": list(self.corner)}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicCube":
        return cls(int(obj["level"]), tuple(int(a) for a in obj["corner"]))

    def __str__(self) -> str:
        parts = [f"[{a.to_decimal()},{b.to_decimal()}]" for a, b in zip(self.lo(), self.hi())]
        return "x".join(parts)


@dataclass(frozen=True)
class RoundoffSchedule:
    """``b_k = max(k+3, 0)`` and ``eta_k = 2**-b_k``."""

    def b(self, k: int) -> int:
        return max(k + 3, 0)

    def eta(self, k: int) -> Dyadic:
        return two_pow(-self.b(k))


ROUNDOFF = RoundoffSchedule()


def grid_level(i: int, n: int) -> int:
    """Least ``h`` with ``sqrt(n)/2 * 2**-h < 2**-i``, i.e. ``n < 4**(h-i+1)``."""
    t = 0
    while 4 ** t <= n:
        t += 1
    return i + t - 1


def sample_grid(Q: DyadicCube, i: int) -> list[tuple[Dyadic, ...]]:
    """Vertices of ``Q`` together with the vertices of its sub-cubes at level ``h_i``."""
    h = max(grid_level(i, Q.dim), Q.level)
    s = h - Q.level
    m = 1 << s
    axes = [[Dyadic((a << s) + t, -h) for t in range(m + 1)] for a in Q.corner]
    return list(itertools.product(*axes))


def enlarged_contains(Q: DyadicCube, eps: Dyadic, x: Sequence[Dyadic]) -> bool:
    """Exact test ``x in Q* = (1+eps)(Q - c_Q) + c_Q``."""
    half = (ONE + eps) * two_pow(-Q.level - 1)
    return all(abs(v - c) <= half for v, c in zip(x, Q.center()))


def N_n(n: int) -> int:
    """``ceil(197 sqrt(n))**n``."""
    r = math.isqrt(197 * 197 * n)
    if r * r != 197 * 197 * n:
        r += 1
    return r ** n


_SQRT_CACHE: dict[int, tuple[Dyadic, Dyadic]] = {}


def sqrt_n(n: int) -> tuple[Dyadic, Dyadic]:
    v = _SQRT_CACHE.get(n)
    if v is None:
        v = _SQRT_CACHE[n] = sqrt_bounds(Dyadic(n), 64)
    return v


def _floor_int(d: Dyadic) -> int:
    return d.man << d.exp if d.exp >= 0 else d.man >> -d.exp


def _ceil_int(d: Dyadic) -> int:
    return -_floor_int(-d)


@dataclass
class GxResult:
    cubes: list[DyadicCube]
    i: int
    delta: Dyadic


class Decomposition:
    """Whitney cubes of ``R^n \\ F`` with memoized membership tests.

    ``eps`` is the enlargement factor of ``Q*`` (default 1/8).
    """

    def __init__(self, F: TotalClosedSet, eps: Dyadic = DEFAULT_EPS):
        if not (ZERO < eps < Dyadic(1, -2) and eps * 5 < ONE):
            raise ValueError("eps must satisfy 0 < eps < 1/5")
        self.F = F
        self.n = F.dim
        self.eps = eps
        self._f0: dict[DyadicCube, bool] = {}
        self._f: dict[DyadicCube, bool] = {}
        self._proj: dict[DyadicCube, CPoint] = {}
        self._gx: dict = {}
        self._lock = threading.Lock()
        self.sqrt_lo, self.sqrt_hi = sqrt_n(self.n)

    # -- membership ---------------------------------------------------------------
    def _f0_window(self, q: Dyadic, k: int) -> bool:
        """``2 diam - eta_k < q < 4 diam + eta_k`` decided exactly."""
        eta = ROUNDOFF.eta(k)
        edge = two_pow(-k)
        return cmp_sqrt(q + eta, edge * 2, self.n) > 0 and cmp_sqrt(q - eta, edge * 4, self.n) < 0

    def in_F0(self, Q: DyadicCube) -> bool:
        v = self._f0.get(Q)
        if v is not None:
            return v
        v = self._compute_f0(Q)
        with self._lock:
            self._f0[Q] = v
        return v

    def _compute_f0(self, Q: DyadicCube) -> bool:
        k = Q.level
        if not self._subtree_may_hit(Q, k, k):
            return False
        b = ROUNDOFF.b(k)
        for r in sample_grid(Q, max(k + 1, 0)):
            if self._f0_window(self.F.dist(r, b), k):
                return True
        return False

    def hstar(self, k: int) -> int:
        """Largest ``h`` with ``sqrt(n)/2 2**-h > 4 diam_k + 2 eta_k``."""
        eta2 = ROUNDOFF.eta(k).shift(1)
        h = k - 4
        while True:
            # sqrt(n) (2^{-h-1} - 2^{2-k}) > 2 eta_k
            c = two_pow(-h - 1) - two_pow(2 - k)
            if c.man > 0 and cmp_sqrt(eta2, c, self.n) < 0:
                return h
            h -= 1

    def in_F(self, Q: DyadicCube) -> bool:
        v = self._f.get(Q)
        if v is not None:
            return v
        v = self.in_F0(Q)
        if v:
            for h in range(self.hstar(Q.level) + 1, Q.level):
                if self.in_F0(Q.ancestor(h)):
                    v = False
                    break
        with self._lock:
            self._f[Q] = v
        return v

    # -- pruning ------------------------------------------------------------------
    def _dist_range(self, C: DyadicCube) -> tuple[Dyadic, Dyadic]:
        """Certified ``[lo, hi]`` containing ``d(y, F)`` for every ``y`` in ``C``."""
        j = max(C.level + 4, 0)
        q = self.F.dist(C.center(), j)
        half_diag = (self.sqrt_hi * two_pow(-C.level - 1))
        err = two_pow(-j) + half_diag
        return q - err, q + err

    def _subtree_may_hit(self, C: DyadicCube, kmin: int, kmax: int) -> bool:
        """False only if no cube inside ``C`` with level in ``[kmin, kmax]`` can be in F0.

        Membership in F0 needs a point with ``7/4 diam < d < 17/4 diam``
        because ``2 eta_k <= diam/4`` at every level.
        """
        lo_d, hi_d = self._dist_range(C)
        for k in range(max(kmin, C.level), kmax + 1):
            diam_lo = self.sqrt_lo * two_pow(-k)
            diam_hi = self.sqrt_hi * two_pow(-k)
            if (diam_lo * 7).shift(-2) < hi_d and (diam_hi * 17).shift(-2) > lo_d:
                return True
            if (diam_hi * 17).shift(-2) <= lo_d:
                # finer levels only shrink diam further
                return False
        return False

    def _descend(self, roots: Iterable[DyadicCube], kmin: int, kmax: int, keep) -> list[DyadicCube]:
        out: list[DyadicCube] = []
        stack = list(roots)
        stack.reverse()
        while stack:
            C = stack.pop()
            if not keep(C):
                continue
            if not self._subtree_may_hit(C, kmin, kmax):
                continue
            if C.level >= kmin and self.in_F(C):
                out.append(C)
                continue
            if C.level < kmax:
                kids = list(C.children())
                kids.reverse()
                stack.extend(kids)
        return out

    # -- enumeration ----------------------------------------------------------------
    def enum_region(self, box: tuple[Sequence, Sequence], kmin: int, kmax: int) -> list[DyadicCube]:
        """All cubes of the decomposition with level in ``[kmin, kmax]`` whose interior meets ``box``."""
        if kmin > kmax:
            return []
        lo = tuple(Dyadic.coerce(v) for v in box[0])
        hi = tuple(Dyadic.coerce(v) for v in box[1])
        if any(a > b for a, b in zip(lo, hi)):
            return []

        def overlaps(C: DyadicCube) -> bool:
            return all(a < bh and al < b for a, b, al, bh in zip(C.lo(), C.hi(), lo, hi))

        ranges = [range(_floor_int(a.shift(kmin)), _ceil_int(b.shift(kmin))) for a, b in zip(lo, hi)]
        roots = [DyadicCube(kmin, c) for c in itertools.product(*ranges)]
        found = self._descend(roots, kmin, kmax, overlaps)
        return sorted(found, key=lambda Q: (Q.level, Q.corner))

    def covering_cube(self, x: Sequence[Dyadic], dlo: Dyadic | None = None) -> DyadicCube | None:
        """A cube of the decomposition containing the dyadic point ``x`` (``x`` off F)."""
        if dlo is None:
            dlo = self.F.dist(x, 40)
        if dlo.man <= 0:
            return None
        # levels with d/7 < diam < 3d, padded by one on each side
        k_lo = _level_with_diam_below(dlo * 3, self.n) - 1
        k_hi = _level_with_diam_below(dlo.shift(-3), self.n) + 1
        for k in range(k_lo, k_hi + 1):
            for Q in _cubes_containing(x, k):
                if self.in_F(Q):
                    return Q
        return None

    def enum_Gx(self, x: CPoint, budget: int = 4096) -> GxResult:
        """The finite superset of cubes whose enlargements may contain ``x`` (``x`` off F)."""
        key = x.key()
        hit = self._gx.get(key)
        if hit is not None:
            return hit
        F = self.F
        for i in range(budget):
            q = F.dist(x, i)
            if q >= two_pow(1 - i):
                break
        else:
            raise Inconclusive(f"distance search exceeded {budget} steps (x may lie in F)")
        rho = (q * 3).shift(-1) + two_pow(2 - i)
        # admissible levels: q/14 < sqrt(n) 2^-k < 6q
        q14 = q.to_fraction() / 14
        ks = [k for k in range(_level_with_diam_below(q * 6, self.n), _level_with_diam_below(q.shift(-4), self.n) + 1)
              if cmp_sqrt(q14, two_pow(-k).to_fraction(), self.n) < 0 and cmp_sqrt(q * 6, two_pow(-k), self.n) > 0]
        kmin, kmax = min(ks), max(ks)
        p = i + 8
        xa = x.exact if x.exact is not None else x.approx(point_precision(p, self.n))
        xerr = ZERO if x.exact is not None else two_pow(-p)
        R = rho + two_pow(-i) + xerr
        R2 = R * R

        def near(C: DyadicCube) -> bool:
            g = [max(a - v, ZERO, v - b) for v, a, b in zip(xa, C.lo(), C.hi())]
            return sqdist(g, [ZERO] * self.n) < R2

        ranges = [range(_floor_int((v - R).shift(kmin)), _floor_int((v + R).shift(kmin)) + 1) for v in xa]
        roots = [DyadicCube(kmin, c) for c in itertools.product(*ranges)]
        found = self._descend(roots, kmin, kmax, near)
        cubes = []
        for Q in found:
            if Q.level not in ks:
                continue
            if cpoint_dist(x, CPoint(Q.center()), i) < rho:
                cubes.append(Q)
        cubes.sort(key=lambda Q: (Q.level, Q.corner))
        res = GxResult(cubes, i, q)
        with self._lock:
            self._gx.setdefault(key, res)
        return self._gx[key]

    def F_x(self, x: Sequence[Dyadic]) -> list[DyadicCube]:
        """Cubes of ``enum_Gx`` whose enlargement contains the dyadic point ``x``."""
        G = self.enum_Gx(CPoint(x))
        return [Q for Q in G.cubes if enlarged_contains(Q, self.eps, x)]

    # -- projections ----------------------------------------------------------------
    def approx_projection(self, Q: DyadicCube, max_stage: int = 1 << 16) -> CPoint:
        """First dense point certified to lie within ``5 diam(Q)`` of a sample point of ``Q``."""
        hit = self._proj.get(Q)
        if hit is not None:
            return hit
        bound = Q.diam_sq() * 25
        lo, hi = Q.lo(), Q.hi()
        dense = self.F.dense
        for stage in range(max_stage):
            for s in range(stage + 1):
                i = stage - s
                r = dense.at(s)
                h = max(grid_level(i, self.n), Q.level)
                if r.exact is not None:
                    ra = r.exact
                    slack = ZERO
                else:
                    ra = r.approx(point_precision(h + 8, self.n))
                    slack = two_pow(-(h + 8))
                g = tuple(_nearest_grid(v, a, b, h) for v, a, b in zip(ra, lo, hi))
                d2 = sqdist(ra, g)
                if slack:
                    d_hi = sqrt_bounds(d2, h + 16)[1] + slack
                    ok = d_hi * d_hi < bound
                else:
                    ok = d2 < bound
                if ok:
                    with self._lock:
                        self._proj.setdefault(Q, r)
                    return self._proj[Q]
        raise Inconclusive("no approximate projection found")


def _nearest_grid(v: Dyadic, a: Dyadic, b: Dyadic, h: int) -> Dyadic:
    if v <= a:
        return a
    if v >= b:
        return b
    g = v.round_at(h)
    return min(max(g, a), b)


def _level_with_diam_below(d: Dyadic, n: int) -> int:
    """Least ``k`` with ``sqrt(n) 2**-k < d`` (``d > 0``)."""
    if d.man <= 0:
        raise ValueError("positive bound required")
    k = -d.magnitude() - 2
    while cmp_sqrt(d, two_pow(-k), n) <= 0:
        k += 1
    while cmp_sqrt(d, two_pow(-(k - 1)), n) > 0:
        k -= 1
    return k


def _cubes_containing(x: Sequence[Dyadic], k: int) -> list[DyadicCube]:
    axes = []
    for v in x:
        s = v.shift(k)
        f = _floor_int(s)
        axes.append([f - 1, f] if s.is_integer() else [f])
    return [DyadicCube(k, c) for c in itertools.product(*axes)]


def touching_level_gap(cubes: Sequence[DyadicCube]) -> int:
    """Largest level difference among touching pairs (brute force over the list)."""
    worst = 0
    for a, b in itertools.combinations(cubes, 2):
        if abs(a.level - b.level) > worst and a.touches(b):
            worst = abs(a.level - b.level)
    return worst


_DECOMPS: "weakref.WeakKeyDictionary[TotalClosedSet, dict]" = weakref.WeakKeyDictionary()
_DECOMPS_LOCK = threading.Lock()


def decomposition_for(F: TotalClosedSet, eps: Dyadic = DEFAULT_EPS) -> Decomposition:
    """Shared decomposition per (set instance, eps), so memo tables are reused."""
    with _DECOMPS_LOCK:
        per = _DECOMPS.setdefault(F, {})
        D = per.get(eps)
        if D is None:
            D = per[eps] = Decomposition(F, eps)
        return D
