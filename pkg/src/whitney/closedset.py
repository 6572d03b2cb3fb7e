"""Closed sets given by total information: dense points plus complement balls.

A :class:`TotalClosedSet` bundles

* a replayable stream of points whose closure is ``F`` (positive information),
* a replayable stream of open balls exhausting ``R^n \\ F`` (negative information),
* a certified, memoized distance ``dist(x, j)`` with ``|dist - d(x, F)| <= 2**-j``.

Sets built from primitives (points, boxes, balls) use closed-form distances.
:func:`generic_set` builds a set whose distance is derived from the two
streams alone.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .exact import (
    ZERO,
    CPoint,
    Dyadic,
    parse_dyadic,
    point_precision,
    sqdist,
    sqrt_bounds,
    sqrt_floor_at,
    two_pow,
)

DPoint = tuple  # tuple[Dyadic, ...]


class SetSpecError(ValueError):
    """Malformed set description."""


class EmptySetError(SetSpecError):
    """The described set has no parts."""


@dataclass(frozen=True)
class Ball:
    center: DPoint
    radius: Dyadic

    def contains_exact(self, x: DPoint) -> bool:
        return sqdist(x, self.center) < self.radius * self.radius

    def contains(self, x: CPoint, p: int = 40) -> bool:
        """Certified test ``d(x, center) + err < radius``."""
        if x.exact is not None:
            return self.contains_exact(x.exact)
        q = point_precision(p, x.dim)
        slack = self.radius - two_pow(-p)
        if slack.man <= 0:
            return False
        return sqdist(x.approx(q), self.center) < slack * slack

    def to_json(self) -> dict:
        return {"center": [str(c) for c in self.center], "radius": str(self.radius)}


# ---------------------------------------------------------------------------
# primitives

def _floor_int(d: Dyadic) -> int:
    return d.man << d.exp if d.exp >= 0 else d.man >> -d.exp


def _clamp_gap(v: Dyadic, lo: Dyadic, hi: Dyadic) -> Dyadic:
    if v < lo:
        return lo - v
    if v > hi:
        return v - hi
    return ZERO


def _interval_gap(a_lo, a_hi, b_lo, b_hi) -> Dyadic:
    if a_hi < b_lo:
        return b_lo - a_hi
    if b_hi < a_lo:
        return a_lo - b_hi
    return ZERO


class Part:
    dim: int

    def sqdist(self, x: DPoint) -> Dyadic | None:
        """Exact squared distance when it is a dyadic, else ``None``."""
        return None

    def dist_approx(self, x: DPoint, j: int) -> Dyadic:
        raise NotImplementedError

    def box_sqgap(self, lo: DPoint, hi: DPoint) -> Dyadic:
        """Squared distance from the box ``[lo, hi]`` to the part's reference geometry."""
        raise NotImplementedError

    def dense_level(self, t: int) -> Iterator[DPoint]:
        raise NotImplementedError

    def grid_scale(self) -> Dyadic:
        """Spacing of ``dense_level(t)`` is at most ``grid_scale() * 2**-t`` per axis."""
        return ZERO

    def nearest_dense(self, x: DPoint, t: int) -> DPoint:
        """A point emitted by ``dense_level(s)`` for some ``s <= t``, near the part's closest point to ``x``."""
        raise NotImplementedError

    def bbox(self) -> tuple[DPoint, DPoint]:
        raise NotImplementedError

    def member(self, x: DPoint) -> bool:
        raise NotImplementedError


class PointPart(Part):
    def __init__(self, coords: Sequence[Dyadic]):
        self.p = tuple(coords)
        self.dim = len(self.p)

    def sqdist(self, x):
        return sqdist(x, self.p)

    def box_sqgap(self, lo, hi):
        return sqdist([_clamp_gap(v, a, b) for v, a, b in zip(self.p, lo, hi)], [ZERO] * self.dim)

    def dense_level(self, t):
        yield self.p

    def nearest_dense(self, x, t):
        return self.p

    def bbox(self):
        return self.p, self.p

    def member(self, x):
        return tuple(x) == self.p

    def to_json(self):
        return {"type": "point", "coords": [str(c) for c in self.p]}


class BoxPart(Part):
    def __init__(self, lo: Sequence[Dyadic], hi: Sequence[Dyadic]):
        self.lo, self.hi = tuple(lo), tuple(hi)
        if len(self.lo) != len(self.hi):
            raise SetSpecError("box min/max dimension mismatch")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise SetSpecError("box with min > max")
        self.dim = len(self.lo)

    def sqdist(self, x):
        s = ZERO
        for v, a, b in zip(x, self.lo, self.hi):
            g = _clamp_gap(v, a, b)
            s = s + g * g
        return s

    def box_sqgap(self, lo, hi):
        s = ZERO
        for a1, b1, a2, b2 in zip(lo, hi, self.lo, self.hi):
            g = _interval_gap(a1, b1, a2, b2)
            s = s + g * g
        return s

    def _axis(self, c: int, t: int) -> list[Dyadic]:
        a, b = self.lo[c], self.hi[c]
        if a == b:
            return [a]
        w = b - a
        return [a + (w * m).shift(-t) for m in range(2 ** t + 1)]

    def grid_scale(self):
        return max(b - a for a, b in zip(self.lo, self.hi))

    def nearest_dense(self, x, t):
        out = []
        for v, a, b in zip(x, self.lo, self.hi):
            if a == b:
                out.append(a)
                continue
            w = b - a
            v = min(max(v, a), b)
            # index of the grid point a + w m 2^-t just below v
            q = ((v - a).to_fraction() / w.to_fraction()) * 2 ** t
            m = q.numerator // q.denominator
            out.append(a + (w * m).shift(-t))
        return tuple(out)

    def dense_level(self, t):
        axes = [self._axis(c, t) for c in range(self.dim)]
        old = [set(self._axis(c, t - 1)) for c in range(self.dim)] if t > 0 else None
        for pt in itertools.product(*axes):
            if old is not None and all(v in o for v, o in zip(pt, old)):
                continue
            yield pt

    def bbox(self):
        return self.lo, self.hi

    def member(self, x):
        return all(a <= v <= b for v, a, b in zip(x, self.lo, self.hi))

    def to_json(self):
        return {"type": "box", "min": [str(c) for c in self.lo], "max": [str(c) for c in self.hi]}


class BallPart(Part):
    def __init__(self, center: Sequence[Dyadic], radius: Dyadic):
        self.c = tuple(center)
        self.r = radius
        if radius < 0:
            raise SetSpecError("negative ball radius")
        self.dim = len(self.c)

    def dist_approx(self, x, j):
        s = sqrt_floor_at(sqdist(x, self.c), j + 1)
        d = s - self.r
        return d if d.man > 0 else ZERO

    def center_gap_sq(self, lo, hi):
        return sqdist([_clamp_gap(v, a, b) for v, a, b in zip(self.c, lo, hi)], [ZERO] * self.dim)

    def grid_scale(self):
        return self.r

    def nearest_dense(self, x, t):
        if self.r.man == 0:
            return self.c
        R = 2 ** t
        u = []
        for v, c in zip(x, self.c):
            q = ((v - c).to_fraction() / self.r.to_fraction()) * R
            u.append(int(q))  # truncation toward zero keeps the point inside
        S2 = sum(a * a for a in u)
        S = math.isqrt(S2)
        if S * S < S2:
            S += 1
        if S > R:
            u = [(abs(a) * R // S) * (1 if a >= 0 else -1) for a in u]
        return tuple(c + (self.r * a).shift(-t) for c, a in zip(self.c, u))

    def dense_level(self, t):
        R = 2 ** t
        rng = range(-R, R + 1)
        for a in itertools.product(rng, repeat=self.dim):
            if t > 0 and all(v % 2 == 0 for v in a):
                continue
            if sum(v * v for v in a) > R * R:
                continue
            yield tuple(c + (self.r * v).shift(-t) for c, v in zip(self.c, a))

    def bbox(self):
        return tuple(c - self.r for c in self.c), tuple(c + self.r for c in self.c)

    def member(self, x):
        return sqdist(x, self.c) <= self.r * self.r

    def to_json(self):
        return {"type": "ball", "center": [str(c) for c in self.c], "radius": str(self.r)}


# ---------------------------------------------------------------------------
# streams

class DenseStream:
    """Replayable, randomly indexable stream of dyadic points of F."""

    def __init__(self, gen_factory: Callable[[], Iterator[DPoint]],
                 seek: Callable[[DPoint, Dyadic], DPoint] | None = None):
        # seek(x, r): some stream point within r of x when d(x, F) is well below r
        self.seek = seek
        self._factory = gen_factory
        self._gen = gen_factory()
        self._items: list[CPoint] = []
        self._lock = threading.Lock()
        self._exhausted = False

    def at(self, s: int) -> CPoint:
        if s < len(self._items):
            return self._items[s]
        with self._lock:
            while len(self._items) <= s:
                try:
                    p = next(self._gen)
                except StopIteration:
                    # finite lists are repeated cyclically
                    self._exhausted = True
                    return self._items[s % len(self._items)]
                self._items.append(CPoint(p))
            return self._items[s]

    def __iter__(self) -> Iterator[CPoint]:
        for s in itertools.count():
            yield self.at(s)

    def take(self, n: int) -> list[CPoint]:
        return [self.at(s) for s in range(n)]


class ComplementStream:
    """Replayable stream of open balls disjoint from F."""

    def __iter__(self) -> Iterator[Ball]:
        raise NotImplementedError

    def probe(self, x: CPoint, t: int) -> Ball | None:
        """Work quantum ``t`` of a search for a ball containing ``x``."""
        raise NotImplementedError


class ListComplement(ComplementStream):
    """Complement balls given explicitly (and optionally followed by another stream)."""

    def __init__(self, balls: Iterable[Ball] | Callable[[], Iterator[Ball]], tail: ComplementStream | None = None):
        self._factory = balls if callable(balls) else (lambda b=list(balls): iter(b))
        self.tail = tail
        self._cache: list[Ball] = []
        self._it = None
        self._done = False
        self._lock = threading.Lock()

    def _entry(self, s: int) -> Ball | None:
        with self._lock:
            if self._it is None:
                self._it = self._factory()
            while not self._done and len(self._cache) <= s:
                try:
                    self._cache.append(next(self._it))
                except StopIteration:
                    self._done = True
        return self._cache[s] if s < len(self._cache) else None

    def __iter__(self):
        s = 0
        while True:
            b = self._entry(s)
            if b is None:
                break
            yield b
            s += 1
        if self.tail is not None:
            yield from self.tail

    def probe(self, x, t):
        b = self._entry(t)
        if b is not None and b.contains(x, t + 8):
            return b
        if self.tail is not None:
            return self.tail.probe(x, t)
        return None


class GridComplement(ComplementStream):
    """Stage ``t``: centers on the ``2**-t`` grid of ``[-2**t, 2**t]^n``, maximal certified radii."""

    def __init__(self, F: "TotalClosedSet"):
        self.F = F
        self.n = F.dim

    def ball_at(self, t: int, a: Sequence[int]) -> Ball | None:
        j = t + 4
        p = tuple(Dyadic(v, -t) for v in a)
        q = self.F.dist(p, j)
        r = q - two_pow(-j)
        return Ball(p, r) if r.man > 0 else None

    def __iter__(self):
        for t in itertools.count():
            R = 4 ** t
            for a in itertools.product(range(-R, R + 1), repeat=self.n):
                b = self.ball_at(t, a)
                if b is not None:
                    yield b

    def probe(self, x, t):
        R = 4 ** t
        xa = x.approx(point_precision(t + 8, self.n))
        cands = []
        for v in xa:
            lo = _floor_int(v.shift(t))
            cands.append(sorted({min(max(lo, -R), R), min(max(lo + 1, -R), R)}))
        for a in itertools.product(*cands):
            b = self.ball_at(t, a)
            if b is not None and b.contains(x, t + 8):
                return b
        return None


# ---------------------------------------------------------------------------

class TotalClosedSet:
    """A nonempty closed set with dense points, complement balls and a certified distance."""

    def __init__(
        self,
        dim: int,
        dense: DenseStream,
        dist_fn: Callable[[DPoint, int], Dyadic],
        complement: ComplementStream | None = None,
        parts: Sequence[Part] | None = None,
        label: str = "F",
    ):
        self.dim = dim
        self.dense = dense
        self._dist_fn = dist_fn
        self.complement = complement if complement is not None else GridComplement(self)
        self.parts = list(parts) if parts is not None else None
        self.label = label
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"TotalClosedSet({self.label}, dim={self.dim})"

    # distance ----------------------------------------------------------------
    def dist(self, x, j: int) -> Dyadic:
        """``q`` with ``|q - d(x, F)| <= 2**-j``; ``x`` a CPoint or a tuple of Dyadics."""
        if isinstance(x, CPoint):
            if x.exact is None:
                xa = x.approx(point_precision(j + 1, self.dim))
                return self.dist(xa, j + 1)
            x = x.exact
        key = (x, j)
        v = self._memo.get(key)
        if v is None:
            v = self._dist_fn(x, j)
            with self._lock:
                v = self._memo.setdefault(key, v)
        return v

    def dense_points(self) -> Iterator[CPoint]:
        return iter(self.dense)

    # primitive-only extras -------------------------------------------------------
    @property
    def closed_form(self) -> bool:
        return self.parts is not None

    def member(self, x: DPoint) -> bool:
        if self.parts is None:
            raise NotImplementedError("exact membership needs a primitive set")
        return any(p.member(x) for p in self.parts)

    def bbox(self) -> tuple[DPoint, DPoint] | None:
        if not self.parts:
            return None
        boxes = [p.bbox() for p in self.parts]
        lo = tuple(min(b[0][c] for b in boxes) for c in range(self.dim))
        hi = tuple(max(b[1][c] for b in boxes) for c in range(self.dim))
        return lo, hi

    def box_dist_bounds(self, lo: DPoint, hi: DPoint, j: int = 40) -> tuple[Dyadic, Dyadic]:
        """Certified enclosure of ``d([lo, hi], F)`` of width at most ``2**-j``."""
        if self.parts is None:
            raise NotImplementedError("box distance needs a primitive set")
        best_lo = best_hi = None
        for p in self.parts:
            if isinstance(p, BallPart):
                s_lo, s_hi = sqrt_bounds(p.center_gap_sq(lo, hi), j + 8)
                a, b = s_lo - p.r, s_hi - p.r
            else:
                a, b = sqrt_bounds(p.box_sqgap(lo, hi), j + 8)
            a = a if a.man > 0 else ZERO
            b = b if b.man > 0 else ZERO
            best_lo = a if best_lo is None else min(best_lo, a)
            best_hi = b if best_hi is None else min(best_hi, b)
        return best_lo.floor_at(j + 2), best_hi.ceil_at(j + 2)

    def spec(self) -> dict:
        if self.parts is None:
            raise NotImplementedError
        return {"dim": self.dim, "parts": [p.to_json() for p in self.parts]}


def dist_approx(F: TotalClosedSet, x, j: int) -> Dyadic:
    return F.dist(x, j)


def dense_points(F: TotalClosedSet) -> Iterator[CPoint]:
    return F.dense_points()


def outside_probe(F: TotalClosedSet, x: CPoint, budget: int) -> Ball | None:
    """A complement ball certified to contain ``x``, or ``None`` if none found in ``budget`` quanta."""
    for t in range(budget):
        b = F.complement.probe(x, t)
        if b is not None:
            return b
    return None


def outside_probe_steps(F: TotalClosedSet, x: CPoint) -> Iterator[Ball | None]:
    """Unbounded version of :func:`outside_probe`: yields ``None`` per quantum, then the ball."""
    for t in itertools.count():
        b = F.complement.probe(x, t)
        yield b
        if b is not None:
            return


# ---------------------------------------------------------------------------
# construction

def _primitive_dist(parts: Sequence[Part]):
    sq_parts = [p for p in parts if not isinstance(p, BallPart)]
    ball_parts = [p for p in parts if isinstance(p, BallPart)]

    def dist(x: DPoint, j: int) -> Dyadic:
        best = None
        if sq_parts:
            s = min(p.sqdist(x) for p in sq_parts)
            best = sqrt_floor_at(s, j + 1)
        for p in ball_parts:
            d = p.dist_approx(x, j)
            best = d if best is None else min(best, d)
        return best

    return dist


def _dense_union(parts: Sequence[Part]):
    def gen():
        for t in itertools.count():
            for p in parts:
                yield from p.dense_level(t)

    return gen


def _seek_union(parts: Sequence[Part]):
    def seek(x: DPoint, r: Dyadic) -> DPoint:
        best = None
        for p in parts:
            scale = p.grid_scale() * p.dim
            t = 0
            while scale.man > 0 and scale.shift(-t) >= r.shift(-1) and t < 1 << 12:
                t += 1
            q = p.nearest_dense(x, t)
            d = sqdist(q, x)
            if best is None or d < best[0]:
                best = (d, q)
        return best[1]

    return seek


def from_parts(parts: Sequence[Part], extra_complement: Sequence[Ball] = (), label: str = "F") -> TotalClosedSet:
    if not parts:
        raise EmptySetError("set has no parts")
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise SetSpecError("parts have different dimensions")
    (n,) = dims
    F = TotalClosedSet(n, DenseStream(_dense_union(parts), _seek_union(parts)), _primitive_dist(parts), parts=parts, label=label)
    if extra_complement:
        F.complement = ListComplement(list(extra_complement), tail=GridComplement(F))
    return F


def _num_list(v, what: str) -> tuple[Dyadic, ...]:
    if not isinstance(v, (list, tuple)):
        raise SetSpecError(f"{what} must be a list")
    try:
        return tuple(parse_dyadic(s) for s in v)
    except (ValueError, TypeError) as exc:
        raise SetSpecError(f"{what}: {exc}") from exc


def make_set(spec: dict) -> TotalClosedSet:
    """Build a set from its JSON description (see the README for the format)."""
    if not isinstance(spec, dict):
        raise SetSpecError("set spec must be a JSON object")
    try:
        n = int(spec["dim"])
        raw_parts = spec["parts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SetSpecError(f"set spec needs 'dim' and 'parts': {exc}") from exc
    if not isinstance(raw_parts, list):
        raise SetSpecError("'parts' must be a list")
    if not raw_parts:
        raise EmptySetError("set spec has no parts (F must be nonempty)")
    parts: list[Part] = []
    for rp in raw_parts:
        if not isinstance(rp, dict) or "type" not in rp:
            raise SetSpecError(f"bad part {rp!r}")
        kind = rp["type"]
        try:
            if kind == "point":
                part = PointPart(_num_list(rp["coords"], "coords"))
            elif kind == "box":
                part = BoxPart(_num_list(rp["min"], "min"), _num_list(rp["max"], "max"))
            elif kind == "ball":
                (r,) = _num_list([rp["radius"]], "radius")
                part = BallPart(_num_list(rp["center"], "center"), r)
            else:
                raise SetSpecError(f"unknown part type {kind!r}")
        except KeyError as exc:
            raise SetSpecError(f"part {kind!r} missing field {exc}") from exc
        if part.dim != n:
            raise SetSpecError(f"part {kind!r} has dimension {part.dim}, expected {n}")
        parts.append(part)
    extra = []
    for b in spec.get("extra_complement", []):
        try:
            (r,) = _num_list([b["radius"]], "radius")
            extra.append(Ball(_num_list(b["center"], "center"), r))
        except (KeyError, TypeError) as exc:
            raise SetSpecError(f"bad complement ball {b!r}") from exc
    F = from_parts(parts, extra, label=spec.get("label", "F"))
    if spec.get("distance", "closed_form") == "generic":
        return generic_set(F.dim, F.dense, F.complement, label=F.label)
    return F


# convenience constructors -------------------------------------------------------

def _d(v) -> Dyadic:
    return Dyadic.coerce(v)


def point_set(*points) -> TotalClosedSet:
    parts = [PointPart(tuple(_d(c) for c in (p if isinstance(p, (list, tuple)) else (p,)))) for p in points]
    return from_parts(parts)


def box_set(lo, hi) -> TotalClosedSet:
    return from_parts([BoxPart(tuple(map(_d, lo)), tuple(map(_d, hi)))])


def ball_set(center, radius) -> TotalClosedSet:
    return from_parts([BallPart(tuple(map(_d, center)), _d(radius))])


def union(*sets: TotalClosedSet) -> TotalClosedSet:
    parts = [p for s in sets for p in s.parts]
    return from_parts(parts)


# ---------------------------------------------------------------------------
# generic pathway: distance from the two streams only

def _covered(center: DPoint, rho: Dyadic, balls: Sequence[Ball], depth: int) -> bool:
    """Certify that the closed ball ``B(center, rho)`` lies in the union of ``balls``."""
    n = len(center)
    rho2 = rho * rho
    near = [b for b in balls if sqdist(b.center, center) < (b.radius + rho) * (b.radius + rho)]
    if not near:
        return False

    def cell_ok(lo: DPoint, hi: DPoint, d: int) -> bool:
        # cell misses the target ball
        gap = sqdist([_clamp_gap(c, a, b) for c, a, b in zip(center, lo, hi)], [ZERO] * n)
        if gap > rho2:
            return True
        for b in near:
            far = ZERO
            for c, a, h in zip(b.center, lo, hi):
                g = max(abs(c - a), abs(h - c))
                far = far + g * g
            if far < b.radius * b.radius:
                return True
        if d == 0:
            return False
        mids = [(a + h).shift(-1) for a, h in zip(lo, hi)]
        for choice in itertools.product((0, 1), repeat=n):
            clo = tuple(lo[c] if s == 0 else mids[c] for c, s in enumerate(choice))
            chi = tuple(mids[c] if s == 0 else hi[c] for c, s in enumerate(choice))
            if not cell_ok(clo, chi, d - 1):
                return False
        return True

    lo = tuple(c - rho for c in center)
    hi = tuple(c + rho for c in center)
    return cell_ok(lo, hi, depth)


def generic_distance(dense: DenseStream, complement: ComplementStream, n: int):
    """Distance evaluator built only from positive and negative information.

    Stage ``s`` takes ``2**(s+1)`` dense points for an upper bound ``U`` and the
    first complement balls for a covering certificate of ``B(x, U - 2**(1-j))``.
    """
    balls_cache: list[Ball] = []
    ball_iter = iter(complement)
    lock = threading.Lock()

    def balls(m: int) -> list[Ball]:
        with lock:
            while len(balls_cache) < m:
                b = next(ball_iter, None)
                if b is None:
                    break
                balls_cache.append(b)
            return balls_cache[:m]

    def dist(x: DPoint, j: int) -> Dyadic:
        for s in itertools.count():
            pts = dense.take(2 ** (s + 1))
            # dense points known only approximately cost at most 2^-(j+5) extra
            err = two_pow(-(j + 6))
            if any(p.exact is None for p in pts):
                err = err + two_pow(-(j + 5))
            q = point_precision(j + 6, n)
            D = min(sqdist(x, p.exact if p.exact is not None else p.approx(q)) for p in pts)
            U = sqrt_floor_at(D, j + 6) + err
            U = U.ceil_at(j + 4)
            rho = U - two_pow(1 - j)
            if rho.man <= 0:
                return U.shift(-1)
            if _covered(x, rho, balls(4 ** (s + 2)), depth=s + 3):
                return U - two_pow(-j)
        raise AssertionError("unreachable")

    return dist


def generic_set(dim: int, dense: DenseStream, complement: ComplementStream, label: str = "F") -> TotalClosedSet:
    return TotalClosedSet(dim, dense, generic_distance(dense, complement, dim), complement=complement, label=label)


def generic_copy(F: TotalClosedSet) -> TotalClosedSet:
    """Same streams as ``F`` but with the distance derived from the streams only."""
    return generic_set(F.dim, F.dense, F.complement, label=F.label + "/generic")
