"""Sampled invariant suites behind ``whitney check``.

Every check returns an :class:`InvariantResult`; failures carry up to a few
counterexamples in JSON-friendly form.  All sampling is driven by a seeded
``random.Random`` so reports are reproducible.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .bump import B_multi, H, PartitionAtPoint, bprime, lambda_deriv, phi_deriv
from .closedset import TotalClosedSet, ball_set, box_set, point_set, union
from .cubes import DEFAULT_EPS, Decomposition, DyadicCube, decomposition_for, sqrt_n
from .exact import CPoint, Dyadic, ONE, ZERO, cpoint_dist, sqdist, two_pow
from .extend import (
    Extender,
    WhitneyJet,
    check_compatibility,
    ext_constants,
    jet_make,
    linear_combination,
    madd,
    multi_indices,
    taylor_eval,
)

MAX_DUMP = 5


@dataclass
class InvariantResult:
    suite: str
    name: str
    passed: bool
    checked: int
    detail: str = ""
    counterexamples: list = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["seconds"] = round(self.seconds, 3)
        return d


class _Recorder:
    def __init__(self, suite: str, name: str):
        self.suite, self.name = suite, name
        self.count = 0
        self.bad: list = []
        self.nbad = 0
        self.t0 = time.perf_counter()

    def ok(self, cond: bool, **example) -> None:
        self.count += 1
        if not cond:
            self.nbad += 1
            if len(self.bad) < MAX_DUMP:
                self.bad.append({k: _jsonable(v) for k, v in example.items()})

    def result(self, detail: str = "", require: int = 1) -> InvariantResult:
        passed = self.nbad == 0 and self.count >= require
        if self.count < require:
            detail = (detail + "; " if detail else "") + f"only {self.count} samples (need {require})"
        if self.nbad:
            detail = (detail + "; " if detail else "") + f"{self.nbad} violations"
        return InvariantResult(self.suite, self.name, passed, self.count, detail, self.bad,
                               time.perf_counter() - self.t0)


def _jsonable(v):
    if isinstance(v, Dyadic):
        return v.to_decimal()
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, DyadicCube):
        return str(v)
    if isinstance(v, CPoint):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


# ---------------------------------------------------------------------------
# sampling

def rand_dyadic(rng: random.Random, lo: float, hi: float, bits: int = 20) -> Dyadic:
    a, b = math.ceil(lo * 2 ** bits), math.floor(hi * 2 ** bits)
    return Dyadic(rng.randint(a, b), -bits)


def sample_off_F(F: TotalClosedSet, rng: random.Random, count: int, log_dmin: int, log_dmax: int,
                 bits: int = 24, max_tries: int = 200) -> list[tuple[tuple[Dyadic, ...], Dyadic]]:
    """Dyadic points ``x`` with ``2**log_dmin <= d(x, F) <= 2**log_dmax``, paired with ``d(x, F)`` to ``2**-30``."""
    out = []
    anchors = F.dense.take(32)
    dmin, dmax = two_pow(log_dmin), two_pow(log_dmax)
    err = two_pow(-30)
    for _ in range(count * max_tries):
        if len(out) >= count:
            break
        a = rng.choice(anchors).approx(bits)
        r = 2.0 ** rng.uniform(log_dmin, log_dmax + 0.5)
        v = [rng.gauss(0, 1) for _ in range(F.dim)]
        nv = math.sqrt(sum(t * t for t in v)) or 1.0
        x = tuple(c + Dyadic(round(r * t / nv * 2 ** bits), -bits) for c, t in zip(a, v))
        q = F.dist(x, 30)
        if q - err >= dmin and q + err <= dmax:
            out.append((x, q))
    return out


def _window(F: TotalClosedSet, pad: int = 2):
    bb = F.bbox()
    if bb is None:
        lo = tuple(Dyadic(-4) for _ in range(F.dim))
        hi = tuple(Dyadic(4) for _ in range(F.dim))
        return lo, hi
    return tuple(v - pad for v in bb[0]), tuple(v + pad for v in bb[1])


def _diam_bounds(Q: DyadicCube) -> tuple[Dyadic, Dyadic]:
    lo, hi = sqrt_n(Q.dim)
    e = Q.edge
    return lo * e, hi * e


# ---------------------------------------------------------------------------
# set consistency

def check_set_consistency(F: TotalClosedSet, n_dense: int = 64, n_balls: int = 64, suite: str = "set") -> list[InvariantResult]:
    dense = F.dense.take(n_dense)
    balls = list(itertools.islice(iter(F.complement), n_balls))
    cons = _Recorder(suite, "dense points avoid complement balls")
    for b in balls:
        for p in dense:
            cons.ok(not b.contains(p), ball=b.to_json(), point=p)
    sound = _Recorder(suite, "complement balls certified against dense points")
    for b in balls:
        ok = True
        for p in dense:
            if p.exact is not None and sqdist(p.exact, b.center) < b.radius * b.radius:
                ok = False
                break
        sound.ok(ok, ball=b.to_json())
    return [cons.result(), sound.result()]


# ---------------------------------------------------------------------------
# cubes

@dataclass
class CubesParams:
    kmin: int = -3
    kmax: int = 6
    covering_samples: int = 200
    gx_samples: int = 40


def check_cubes(F: TotalClosedSet, seed: int = 0, params: CubesParams | None = None, eps=DEFAULT_EPS,
                window=None) -> list[InvariantResult]:
    params = params or CubesParams()
    rng = random.Random(f"{seed}:cubes")
    D = decomposition_for(F, eps)
    res = check_set_consistency(F, suite="cubes")
    box = window or _window(F)
    cubes = D.enum_region(box, params.kmin, params.kmax)

    present = set(cubes)
    rec = _Recorder("cubes", "disjoint interiors")
    # two dyadic cubes with overlapping interiors are nested
    for Q in cubes:
        for h in range(params.kmin, Q.level):
            A = Q.ancestor(h)
            rec.ok(A not in present, a=A, b=Q)
    res.append(rec.result(f"{len(cubes)} cubes"))

    rec = _Recorder("cubes", "distance between 1/2 diam and 5 diam")
    sep = _Recorder("cubes", "enlarged cube avoids F")
    half_one_minus = (ONE - D.eps).shift(-1)
    for Q in cubes:
        d_lo, d_hi = F.box_dist_bounds(Q.lo(), Q.hi())
        dm_lo, dm_hi = _diam_bounds(Q)
        rec.ok(d_lo > dm_hi.shift(-1) and d_hi < dm_lo * 5, cube=Q, dist=[d_lo, d_hi])
        r = (ONE + D.eps) * Q.edge.shift(-1)
        c = Q.center()
        s_lo, _ = F.box_dist_bounds(tuple(v - r for v in c), tuple(v + r for v in c))
        sep.ok(s_lo >= half_one_minus * dm_hi, cube=Q, dist_lower=s_lo)
    res.append(rec.result(require=1))
    res.append(sep.result(require=1))

    rec = _Recorder("cubes", "touching cubes differ by at most 3 levels")
    gap = 0
    for a, b in _touching_pairs(cubes, present, params.kmin):
        rec.ok(abs(a.level - b.level) <= 3, a=a, b=b)
        gap = max(gap, abs(a.level - b.level))
    res.append(rec.result(f"max gap {gap}", require=0))

    rec = _Recorder("cubes", "covering of sampled complement points")
    for x, q in sample_off_F(F, rng, params.covering_samples, -8, 8):
        Q = D.covering_cube(x)
        rec.ok(Q is not None and Q.contains(x) and D.in_F(Q), x=x, cube=Q)
    res.append(rec.result(require=params.covering_samples))

    rec = _Recorder("cubes", "enlarged-cube hits are listed in the candidate set")
    for x, q in sample_off_F(F, rng, params.gx_samples, -4, 3):
        G = set(D.enum_Gx(CPoint(x)).cubes)
        Q = D.covering_cube(x)
        hits = [C for k in range(Q.level - 3, Q.level + 4) for C in _cubes_near(x, k, D)]
        missing = [C for C in hits if C not in G]
        rec.ok(not missing, x=x, missing=missing[:3])
    res.append(rec.result(require=params.gx_samples))
    return res


def _touching_pairs(cubes: Sequence[DyadicCube], present: set, kmin: int):
    """Touching pairs ``(coarser-or-equal, finer)``.

    A coarser grid-aligned cube touching ``Q`` contains one of the same-size
    neighbours of ``Q``, so looking at ancestors of those neighbours finds it.
    """
    seen = set()
    for Q in cubes:
        for off in itertools.product((-1, 0, 1), repeat=Q.dim):
            if not any(off):
                continue
            cell = DyadicCube(Q.level, tuple(a + o for a, o in zip(Q.corner, off)))
            for h in range(kmin, Q.level + 1):
                A = cell.ancestor(h)
                if A in present and A != Q and A.touches(Q):
                    key = (A, Q) if (A.level, A.corner) <= (Q.level, Q.corner) else (Q, A)
                    if key not in seen:
                        seen.add(key)
                        yield key


def _cubes_near(x: Sequence[Dyadic], k: int, D: Decomposition) -> list[DyadicCube]:
    """Cubes of level ``k`` in the decomposition whose enlargement contains ``x``."""
    from .cubes import enlarged_contains

    e = two_pow(-k)
    r = (ONE + D.eps) * e.shift(-1)
    ranges = []
    for v in x:
        a = ((v - r - e).shift(k)).floor_at(0)
        b = ((v + r).shift(k)).ceil_at(0)
        ranges.append(range(int(a.to_fraction()), int(b.to_fraction()) + 1))
    out = []
    for corner in itertools.product(*ranges):
        C = DyadicCube(k, corner)
        if enlarged_contains(C, D.eps, x) and D.in_F(C):
            out.append(C)
    return out


# ---------------------------------------------------------------------------
# partition

@dataclass
class PartitionParams:
    samples: int = 40
    precision: int = 21
    deriv_order: int = 3
    lambda_samples: int = 200
    fd_samples: int = 20


def _clog2(k: int) -> int:
    return max(0, (k - 1).bit_length())


def phistar_total(P: PartitionAtPoint, l, i: int) -> Dyadic:
    """Sum of ``d_l phi*_Q(x)`` over the candidate cubes, accurate to ``2**-i``."""
    j = i + _clog2(max(len(P.G), 1)) + 2
    return sum((P.phistar(Q, l, j) for Q in P.G), ZERO)


def check_partition(F: TotalClosedSet, seed: int = 0, params: PartitionParams | None = None, eps=DEFAULT_EPS) -> list[InvariantResult]:
    params = params or PartitionParams()
    rng = random.Random(f"{seed}:partition")
    D = decomposition_for(F, eps)
    n = F.dim
    pts = sample_off_F(F, rng, params.samples, -4, 3)
    i = params.precision
    tol_i = two_pow(-i)
    res = []

    rng_rec = _Recorder("partition", "bump values lie in [0, 1]")
    pou = _Recorder("partition", "partition of unity")
    dsum = _Recorder("partition", "derivative sums vanish")
    bnd = _Recorder("partition", "derivative bounds for bumps")
    worst = Fraction(0)
    lidx = [l for l in multi_indices(n, params.deriv_order) if any(l)]
    for x, q in pts:
        P = PartitionAtPoint(D, CPoint(x))
        for Q in P.active():
            a = phi_deriv(Q, CPoint(x), (0,) * n, i, D.eps)
            b = P.phistar(Q, (0,) * n, i)
            rng_rec.ok(-tol_i <= a <= ONE + tol_i and -tol_i <= b <= ONE + tol_i, x=x, cube=Q, phi=a, phistar=b)
            for l in lidx:
                d1 = phi_deriv(Q, CPoint(x), l, 12, D.eps)
                d2 = P.phistar(Q, l, 12)
                k = sum(l)
                cap1 = Fraction(B_multi(l)) * (Fraction(2) / (D.eps.to_fraction() * Q.edge.to_fraction())) ** k
                dm_lo, _ = _diam_bounds(Q)
                cap2 = bprime(l).to_fraction() * (Fraction(2) / (D.eps.to_fraction() * dm_lo.to_fraction())) ** k
                slack = Fraction(1, 2 ** 12)
                bnd.ok(abs(d1.to_fraction()) <= cap1 + slack and abs(d2.to_fraction()) <= cap2 + slack,
                       x=x, cube=Q, index=list(l), phi=d1, phistar=d2)
        s = phistar_total(P, (0,) * n, i)
        err = abs(s.to_fraction() - 1)
        worst = max(worst, err)
        pou.ok(err <= Fraction(1, 2 ** (i - 1)), x=x, total=s)
        for l in lidx:
            t = phistar_total(P, l, 17)
            dsum.ok(abs(t.to_fraction()) <= Fraction(1, 2 ** 16), x=x, index=list(l), total=t)
    res += [rng_rec.result(), pou.result(f"worst |sum-1| = {float(worst):.3e}", require=params.samples),
            dsum.result(require=params.samples), bnd.result()]
    res.append(_check_phistar_fd(F, D, rng, params))

    rec = _Recorder("partition", "lambda derivative bounds")
    for _ in range(params.lambda_samples):
        x = rand_dyadic(rng, 0, 1, 24)
        if x.man <= 0 or x >= ONE:
            continue
        for k in range(7):
            v = lambda_deriv(x, k, 20)
            rec.ok(abs(v.to_fraction()) <= H(k) + Fraction(1, 2 ** 20), x=x, k=k, value=v)
    res.append(rec.result())
    return res


def _check_phistar_fd(F, D, rng, params) -> InvariantResult:
    """Central differences of ``phi*_Q`` against first partials, with a certified third-derivative constant."""
    n = F.dim
    h = two_pow(-10)
    i = 40
    rec = _Recorder("partition", "finite differences of normalized bumps")
    emp = 0.0
    for x, q in sample_off_F(F, rng, params.fd_samples, -1, 2):
        if q < two_pow(-6):
            continue
        P0 = PartitionAtPoint(D, CPoint(x))
        for Q in P0.active()[:4]:
            for c in range(n):
                e = tuple(h if j == c else ZERO for j in range(n))
                xp = tuple(a + b for a, b in zip(x, e))
                xm = tuple(a - b for a, b in zip(x, e))
                vp = _phistar_or_zero(D, Q, xp, i)
                vm = _phistar_or_zero(D, Q, xm, i)
                fd = (vp - vm).to_fraction() / (2 * h.to_fraction())
                dd = P0.phistar(Q, tuple(int(j == c) for j in range(n)), i).to_fraction()
                k3 = tuple(3 if j == c else 0 for j in range(n))
                dm_lo, _ = _diam_bounds(Q)
                C = bprime(k3).to_fraction() * (2 / (D.eps.to_fraction() * dm_lo.to_fraction())) ** 3 / 6
                tol = C * h.to_fraction() ** 2 + 4 * Fraction(1, 2 ** (i - 10))
                err = abs(fd - dd)
                emp = max(emp, float(err / h.to_fraction() ** 2))
                rec.ok(err <= tol, x=x, cube=Q, axis=c, fd=fd, deriv=dd, tol=tol)
    return rec.result(f"empirical constant {emp:.4g}")


def _phistar_or_zero(D, Q, x, i) -> Dyadic:
    P = PartitionAtPoint(D, CPoint(x))
    return P.phistar(Q, (0,) * D.n, i) if Q in P.G else ZERO


# ---------------------------------------------------------------------------
# extension

@dataclass
class ExtendParams:
    on_F_samples: int = 30
    estimate_samples: int = 30
    linearity_samples: int = 10
    fd_samples: int = 8
    monotone_samples: int = 20
    compat_pairs: int = 200
    precision: int = 20


def default_jets() -> list[WhitneyJet]:
    two = union(box_set([-2], [-1]), box_set([1], [2]))
    return [
        jet_make({"builtin": "poly", "coeffs": [0, 0, 0, 1], "order": 2}, two),
        jet_make({"builtin": "cos", "coeffs": [1], "order": 0}, point_set(0, 1)),
        jet_make({"builtin": "sin", "coeffs": [1, 1], "order": 1}, ball_set([0, 0], 1)),
    ]


def check_extension_on_F(jet: WhitneyJet, n_points: int, i: int, suite: str = "extend") -> InvariantResult:
    rec = _Recorder(suite, f"agreement on F [{jet.label}]")
    ext = Extender(jet)
    tol = 2 * two_pow(-i)
    for s in range(n_points):
        p = jet.F.dense.at(s)
        for k in multi_indices(jet.dim, jet.order):
            g = ext.evaluate(p, k, i).value
            f = jet.component(k).eval(p, i)
            rec.ok(abs(g - f) <= tol, point=p, index=list(k), g=g, f=f)
    return rec.result()


def _dist_bounds(x: CPoint, a: CPoint, j: int = 30) -> tuple[Fraction, Fraction]:
    d = cpoint_dist(x, a, j).to_fraction()
    e = Fraction(1, 2 ** j)
    return max(d - e, Fraction(0)), d + e


def check_whitney_estimates(jet: WhitneyJet, rng: random.Random, samples: int, i: int = 20,
                            suite: str = "extend", anchors: int = 64) -> list[InvariantResult]:
    """Sampled Taylor-remainder estimates for the extension against base points of F."""
    ext = Extender(jet)
    C = ext_constants(jet, ext.eps)
    m, n = jet.order, jet.dim
    tol = Fraction(3, 2 ** i)
    value = _Recorder(suite, f"Taylor remainder estimate [{jet.label}]")
    deriv = _Recorder(suite, f"Taylor remainder estimate for derivatives [{jet.label}]")
    dense = jet.F.dense.take(anchors)
    seven_e = 7 * C.e
    for x, q in sample_off_F(jet.F, rng, samples, -3, 1):
        X = CPoint(x)
        a = rng.choice(dense)
        _, dhi = _dist_bounds(X, a)
        g = ext.evaluate(X, None, i).value
        P = taylor_eval(jet, (0,) * n, a, X, i)
        lhs = abs(g.to_fraction() - P.to_fraction())
        value.ok(lhs <= C.A * dhi ** (m + 1) + tol, x=x, base=a, g=g, taylor=P, bound=C.A * dhi ** (m + 1))
        # base points close enough for the derivative version
        qlo = q.to_fraction() - Fraction(1, 2 ** 30)
        near = [b for b in dense if _dist_bounds(X, b)[1] <= seven_e * qlo]
        if not near:
            continue
        b = rng.choice(near)
        _, dhi = _dist_bounds(X, b)
        for k in multi_indices(n, m):
            gk = ext.evaluate(X, k, i).value
            Pk = taylor_eval(jet, k, b, X, i)
            bound = C.A_k[k] * dhi ** (m - sum(k) + 1)
            deriv.ok(abs(gk.to_fraction() - Pk.to_fraction()) <= bound + tol, x=x, base=b, index=list(k),
                     g=gk, taylor=Pk, bound=bound)
    return [value.result(require=samples), deriv.result()]


def check_linearity(J1: WhitneyJet, J2: WhitneyJet, rng: random.Random, samples: int, i: int = 20,
                    suite: str = "extend") -> InvariantResult:
    rec = _Recorder(suite, f"linearity [{J1.label}, {J2.label}]")
    for _ in range(samples):
        a = Dyadic(rng.randint(-8, 8), -2)
        b = Dyadic(rng.randint(-8, 8), -2)
        J = linear_combination(a, J1, b, J2)
        x = tuple(rand_dyadic(rng, -3, 3, 12) for _ in range(J.dim))
        for k in multi_indices(J.dim, J.order):
            g = Extender(J).evaluate(CPoint(x), k, i).value
            g1 = Extender(J1, decomposition_for(J1.F)).evaluate(CPoint(x), k, i).value
            g2 = Extender(J2, decomposition_for(J2.F)).evaluate(CPoint(x), k, i).value
            err = abs(g - (a * g1 + b * g2)).to_fraction()
            bound = (abs(a.to_fraction()) + abs(b.to_fraction()) + 1) / 2 ** i
            rec.ok(err <= bound, x=x, alpha=a, beta=b, index=list(k), err=err)
    return rec.result(require=samples)


def check_derivative_fd(jet: WhitneyJet, rng: random.Random, samples: int, suite: str = "extend",
                        tol: float = 1e-3) -> InvariantResult:
    rec = _Recorder(suite, f"finite differences of the extension [{jet.label}]")
    ext = Extender(jet)
    n, m = jet.dim, jet.order
    h = two_pow(-10)
    i = 40
    worst = 0.0
    if m == 0:
        return rec.result("order 0: no derivatives", require=0)
    for x, q in sample_off_F(jet.F, rng, samples, -2, 1):
        for k in multi_indices(n, m - 1):
            for c in range(n):
                e = tuple(h if j == c else ZERO for j in range(n))
                vp = ext.evaluate(CPoint(tuple(a + b for a, b in zip(x, e))), k, i).value
                vm = ext.evaluate(CPoint(tuple(a - b for a, b in zip(x, e))), k, i).value
                fd = (vp - vm).to_fraction() / (2 * h.to_fraction())
                kk = madd(k, tuple(int(j == c) for j in range(n)))
                d = ext.evaluate(CPoint(x), kk, i).value.to_fraction()
                err = float(abs(fd - d))
                worst = max(worst, err)
                rec.ok(err <= tol, x=x, index=list(k), axis=c, fd=fd, deriv=d)
    return rec.result(f"worst error {worst:.3e}")


def check_jet_compat(jet: WhitneyJet, pairs: int, seed: int, suite: str = "extend") -> InvariantResult:
    rec = _Recorder(suite, f"jet compatibility [{jet.label}]")
    rep = check_compatibility(jet, pairs, seed)
    for v in rep.violations:
        rec.ok(False, **v)
    rec.count += rep.tested - len(rep.violations)
    return rec.result(f"{rep.tested} comparisons, worst ratio {rep.worst_ratio:.3f}")


def check_precision_monotone(jet: WhitneyJet, rng: random.Random, samples: int, suite: str = "extend") -> list[InvariantResult]:
    mono = _Recorder(suite, f"precision monotonicity [{jet.label}]")
    det = _Recorder(suite, f"determinism [{jet.label}]")
    ext = Extender(jet)
    fresh = Extender(jet, decomposition_for(jet.F))
    ks = multi_indices(jet.dim, jet.order)
    for _ in range(samples):
        x = CPoint(tuple(rand_dyadic(rng, -3, 3, 10) for _ in range(jet.dim)))
        k = rng.choice(ks)
        i = rng.randint(8, 24)
        a = ext.evaluate(x, k, i).value
        b = ext.evaluate(x, k, i + 1).value
        mono.ok(abs(a - b) <= two_pow(-i) + two_pow(-i - 1), x=x, index=list(k), i=i, a=a, b=b)
        c = fresh.evaluate(x, k, i).value
        det.ok(a == c, x=x, index=list(k), i=i, first=a, second=c)
    return [mono.result(require=samples), det.result(require=samples)]


def check_extend(jets: Iterable[WhitneyJet] | None = None, seed: int = 0, params: ExtendParams | None = None) -> list[InvariantResult]:
    params = params or ExtendParams()
    rng = random.Random(f"{seed}:extend")
    jets = list(jets) if jets is not None else default_jets()
    res = []
    for J in jets:
        res.append(check_jet_compat(J, params.compat_pairs, seed))
        res.append(check_extension_on_F(J, params.on_F_samples, params.precision))
        res += check_whitney_estimates(J, rng, params.estimate_samples, params.precision)
        res.append(check_derivative_fd(J, rng, params.fd_samples))
        res += check_precision_monotone(J, rng, params.monotone_samples)
    if len(jets) >= 1:
        J = jets[0]
        other = jet_make({"builtin": "cos", "coeffs": [1] * J.dim, "order": J.order}, J.F)
        res.append(check_linearity(J, other, rng, params.linearity_samples, params.precision))
    return res


# ---------------------------------------------------------------------------
# driver

SUITES = ("cubes", "partition", "extend", "all")


def default_sets() -> list[TotalClosedSet]:
    return [point_set(0), ball_set([0, 0], 1)]


def run_suite(suite: str, seed: int = 0, sets: Sequence[TotalClosedSet] | None = None,
              jets: Sequence[WhitneyJet] | None = None, eps=DEFAULT_EPS) -> list[InvariantResult]:
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {', '.join(SUITES)}")
    sets = list(sets) if sets else default_sets()
    out: list[InvariantResult] = []
    if suite in ("cubes", "all"):
        for F in sets:
            out += check_cubes(F, seed, eps=eps)
    if suite in ("partition", "all"):
        for F in sets:
            out += check_partition(F, seed, eps=eps)
    if suite in ("extend", "all"):
        out += check_extend(jets, seed)
    return out


__all__ = [
    "InvariantResult", "SUITES", "check_cubes", "check_extend", "check_partition", "check_set_consistency",
    "check_extension_on_F", "check_jet_compat", "check_whitney_estimates", "check_linearity", "check_derivative_fd",
    "check_precision_monotone", "phistar_total", "rand_dyadic", "run_suite", "sample_off_F",
]
