import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitney.checks import check_cubes, sample_off_F
from whitney.closedset import ball_set, box_set, point_set, union
from whitney.cubes import (
    DEFAULT_EPS,
    Decomposition,
    DyadicCube,
    N_n,
    RoundoffSchedule,
    decomposition_for,
    enlarged_contains,
    sample_grid,
)
from whitney.exact import CPoint, Dyadic, cmp_sqrt

import oracles


def frac(d):
    return d.to_fraction()


def cube_1d(a, b):
    """The dyadic interval [a, b] as a cube."""
    a, b = Fraction(a), Fraction(b)
    e = b - a
    k = -(e.numerator.bit_length() - 1) if e >= 1 else e.denominator.bit_length() - 1
    return DyadicCube(k, (int(a / e),))


# -- basic geometry -------------------------------------------------------------------------

def test_cube_geometry():
    Q = DyadicCube(1, (3, -2))
    assert Q.edge == Dyadic(1, -1)
    assert Q.center() == (Dyadic(7, -2), Dyadic(-3, -2))
    assert Q.diam_sq() == Dyadic(1, -1)
    R = DyadicCube(-2, (1,))
    assert all(frac(v) % 4 == 0 for v in R.lo() + R.hi())


def test_roundoff_schedule():
    s = RoundoffSchedule()
    for k in range(-20, 20):
        assert s.b(k) == max(k + 3, 0) and s.b(k) > k
        assert s.eta(k) == Dyadic(1, -s.b(k))


def test_sample_grid_examples():
    assert set(sample_grid(cube_1d(1, 2), 1)) == {(Dyadic(1),), (Dyadic(3, -1),), (Dyadic(2),)}
    assert set(sample_grid(cube_1d(Fraction(1, 2), 1), 2)) == {(Dyadic(1, -1),), (Dyadic(3, -2),), (Dyadic(1),)}
    Q = DyadicCube(2, (1, 3))
    assert set(Q.vertices()) <= set(sample_grid(Q, 0))


@given(st.integers(-3, 4), st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 6),
       st.integers(0, 2**10), st.integers(0, 2**10))
def test_sample_grid_density(k, c1, c2, i, u, v):
    Q = DyadicCube(k, (c1, c2))
    grid = sample_grid(Q, i)
    x = [frac(a) + frac(Q.edge) * Fraction(t, 2**10) for a, t in zip(Q.lo(), (u, v))]
    best = min(sum((frac(g) - y) ** 2 for g, y in zip(p, x)) for p in grid)
    assert best < Fraction(1, 4**i)


def test_enlarged_contains_examples():
    Q = cube_1d(1, 2)
    assert enlarged_contains(Q, DEFAULT_EPS, (Dyadic(33, -4),))
    assert enlarged_contains(Q, DEFAULT_EPS, (Dyadic(15, -4),))
    assert not enlarged_contains(Q, DEFAULT_EPS, (Dyadic(35, -4),))
    assert enlarged_contains(Q, DEFAULT_EPS, Q.center())
    assert not enlarged_contains(Q, DEFAULT_EPS, (Dyadic(3),))


def test_N_n():
    assert N_n(1) == 197
    assert N_n(2) == 279 ** 2  # ceil(197 sqrt 2) = 279
    assert cmp_sqrt(Fraction(278), Fraction(197), 2) < 0 < cmp_sqrt(Fraction(279), Fraction(197), 2)


# -- membership --------------------------------------------------------------------------------

def test_membership_examples():
    D = Decomposition(point_set(0))
    assert D.in_F0(cube_1d(1, 2))
    assert not D.in_F0(cube_1d(0, 1))
    assert D.in_F0(cube_1d(Fraction(1, 2), 1))
    assert D.in_F(cube_1d(1, 2))
    assert D.in_F(cube_1d(Fraction(1, 2), 1))
    assert not D.in_F(cube_1d(Fraction(3, 2), 2))
    for sup in [(0, 2), (0, 4), (0, 8), (0, 16)]:
        assert not D.in_F0(cube_1d(*sup))


@pytest.mark.parametrize("level", range(-4, 7))
def test_membership_matches_bruteforce_oracle(level):
    D = Decomposition(point_set(0))
    e = Fraction(2) ** -level
    span = int(40 / e) + 2
    for c in range(-span, span + 1):
        Q = DyadicCube(level, (c,))
        assert D.in_F0(Q) == oracles.in_F0_origin(level, c), Q
        assert D.in_F(Q) == oracles.in_F_origin(level, c), Q


def test_enum_region_examples():
    D = Decomposition(point_set(0))
    got = D.enum_region(([Dyadic(1, -2)], [Dyadic(4)]), -2, 2)
    assert {(frac(Q.lo()[0]), frac(Q.hi()[0])) for Q in got} == {
        (Fraction(1, 4), Fraction(1, 2)), (Fraction(1, 2), 1), (1, 2), (2, 4)}
    assert D.enum_region(([1], [2]), 3, 2) == []
    B = Decomposition(ball_set([0, 0], 1))
    cubes = B.enum_region(([1, 1], [2, 2]), -1, 6)
    assert cubes
    F = ball_set([0, 0], 1)
    for Q in cubes:
        lo, _ = F.box_dist_bounds(Q.lo(), Q.hi())
        assert lo.man > 0


def test_enum_region_matches_oracle_full_window():
    D = Decomposition(point_set(0))
    got = {(Q.level, Q.corner[0]) for Q in D.enum_region(([-64], [64]), -6, 8)}
    assert got == oracles.decomposition_origin(Fraction(-64), Fraction(64), -6, 8)


def test_decomposition_of_origin_is_dyadic_shells():
    D = Decomposition(point_set(0))
    got = {(frac(Q.lo()[0]), frac(Q.hi()[0])) for Q in D.enum_region(([-32], [32]), -4, 8)}
    want = set()
    for k in range(-8, 5):
        a, b = Fraction(2) ** k, Fraction(2) ** (k + 1)
        want |= {(a, b), (-b, -a)}
    assert got == want


def test_memoized_decomposition():
    F = point_set(0)
    assert decomposition_for(F) is decomposition_for(F)


# -- projections and candidate sets ----------------------------------------------------------

def test_approx_projection_examples():
    D = Decomposition(point_set(0))
    assert D.approx_projection(cube_1d(1, 2)).exact == (Dyadic(0),)
    E = Decomposition(point_set(0, 10))
    assert E.approx_projection(cube_1d(1, 2)).exact == (Dyadic(0),)


@pytest.mark.parametrize("F", [point_set(0, 10), ball_set([0, 0], 1), union(box_set([0, 0], [1, 1]), point_set((3, 3)))],
                         ids=["points", "ball", "box+point"])
def test_approx_projection_certificate(F):
    D = Decomposition(F)
    lo, hi = F.bbox()
    box = ([v - 2 for v in lo], [v + 2 for v in hi])
    for Q in D.enum_region(box, -1, 3)[:150]:
        r = D.approx_projection(Q).exact
        g2 = sum(max(frac(a) - frac(v), 0, frac(v) - frac(b)) ** 2 for v, a, b in zip(r, Q.lo(), Q.hi()))
        assert g2 < 25 * frac(Q.diam_sq())
        assert F.member(r)


def test_Gx_examples():
    D = Decomposition(point_set(0))
    x = CPoint((Dyadic(3, -1),))
    G = D.enum_Gx(x)
    assert cube_1d(1, 2) in G.cubes
    assert len(G.cubes) <= 197
    q = frac(G.delta)
    for Q in G.cubes:
        assert frac(Q.diam_sq()) < 36 * q * q


@given(st.integers(-2**12, 2**12).filter(lambda v: v != 0), st.integers(0, 10))
def test_Gx_size_bound_1d(m, e):
    D = decomposition_for(point_set(0, 1))
    x = Dyadic(m, -e)
    if x in (Dyadic(0), Dyadic(1)):
        return
    assert len(D.enum_Gx(CPoint((x,))).cubes) <= N_n(1)


def test_covering_and_Fx_subset():
    for F in (point_set(0), ball_set([0, 0], 1)):
        D = Decomposition(F)
        rng = random.Random(4)
        for x, _ in sample_off_F(F, rng, 40, -6, 6):
            Q = D.covering_cube(x)
            assert Q is not None and Q.contains(x)
            G = set(D.enum_Gx(CPoint(x)).cubes)
            assert Q in G
            assert set(D.F_x(x)) <= G


# -- invariant suites ---------------------------------------------------------------------------

@pytest.mark.parametrize("F", [point_set(0), point_set(0, 1), ball_set([0, 0], 1), box_set([0, 0], [1, 1])],
                         ids=["origin", "two-points", "ball", "box"])
def test_cube_invariants(F):
    results = check_cubes(F, seed=1)
    bad = [r for r in results if not r.passed]
    assert not bad, [(r.name, r.detail, r.counterexamples) for r in bad]
