import random
from fractions import Fraction
from math import isqrt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitney.closedset import (
    EmptySetError,
    SetSpecError,
    ball_set,
    box_set,
    dist_approx,
    make_set,
    outside_probe,
    point_set,
    union,
)
from whitney.exact import CPoint, Dyadic

from oracles import mp_frac


def frac(d):
    return d.to_fraction()


def sqrt_bracket_ok(q: Fraction, d2: Fraction, j: int) -> bool:
    """``|q - sqrt(d2)| <= 2**-j`` decided exactly."""
    tol = Fraction(1, 2**j)
    return d2 <= (q + tol) ** 2 and (q - tol <= 0 or (q - tol) ** 2 <= d2)


# -- reference distances computed from the definitions -----------------------------

def ref_sqdist_point(x, p):
    return sum((a - b) ** 2 for a, b in zip(x, p))


def ref_sqdist_box(x, lo, hi):
    return sum((max(a - c, 0, c - b)) ** 2 for c, a, b in zip(x, lo, hi))


def ref_dist_ball(x, c, r):
    import mpmath

    return max(mpmath.sqrt(mp_frac(ref_sqdist_point(x, c))) - mp_frac(r), 0)


# -- examples --------------------------------------------------------------------------

def test_point_example():
    F = make_set({"dim": 1, "parts": [{"type": "point", "coords": ["0"]}]})
    assert abs(frac(dist_approx(F, CPoint((Dyadic(3, -1),)), 10)) - Fraction(3, 2)) <= Fraction(1, 2**10)
    q = frac(dist_approx(F, CPoint((5,)), 3))
    assert Fraction(39, 8) <= q <= Fraction(41, 8)


def test_ball_examples():
    F = make_set({"dim": 2, "parts": [{"type": "ball", "center": ["0", "0"], "radius": "1"}]})
    for j in (0, 5, 20, 40):
        assert abs(frac(F.dist(CPoint((2, 0)), j)) - 1) <= Fraction(1, 2**j)
        assert abs(frac(F.dist(CPoint((0, 0)), j))) <= Fraction(1, 2**j)


def test_union_example_nondyadic_query():
    F = union(point_set(0), point_set(1))
    x = CPoint((Fraction(2, 5),))
    for j in (4, 12, 30):
        assert abs(frac(F.dist(x, j)) - Fraction(2, 5)) <= Fraction(1, 2**j)


def test_generic_pathway_example():
    F = make_set({"dim": 1, "distance": "generic",
                  "parts": [{"type": "point", "coords": ["0"]}, {"type": "point", "coords": ["1"]}]})
    assert not F.closed_form
    q = frac(F.dist(CPoint((Dyadic(1, -1),)), 6))
    assert abs(q - Fraction(1, 2)) <= Fraction(1, 2**6)


def test_generic_pathway_matches_closed_form():
    spec = {"dim": 2, "parts": [{"type": "box", "min": ["0", "0"], "max": ["1", "1"]}]}
    F = make_set(spec)
    G = make_set(dict(spec, distance="generic"))
    rng = random.Random(3)
    for _ in range(6):
        x = CPoint((Dyadic(rng.randint(-40, 80), -4), Dyadic(rng.randint(-40, 80), -4)))
        a, b = frac(F.dist(x, 5)), frac(G.dist(x, 5))
        assert abs(a - b) <= Fraction(2, 2**5)


def test_empty_and_malformed_specs():
    with pytest.raises(EmptySetError):
        make_set({"dim": 1, "parts": []})
    with pytest.raises(SetSpecError):
        make_set({"dim": 1})
    with pytest.raises(SetSpecError):
        make_set({"dim": 1, "parts": [{"type": "torus"}]})
    with pytest.raises(SetSpecError):
        make_set({"dim": 2, "parts": [{"type": "point", "coords": ["0"]}]})
    with pytest.raises(SetSpecError):
        make_set({"dim": 1, "parts": [{"type": "point", "coords": ["1/3"]}]})


# -- distance contract against exact references -------------------------------------------

coord = st.builds(Dyadic, st.integers(-2**12, 2**12), st.integers(-8, 0))


@given(st.tuples(coord, coord), st.integers(0, 40))
def test_distance_contract_box(x, j):
    F = box_set([0, Dyadic(-1, -1)], [1, 2])
    xf = [frac(c) for c in x]
    d2 = ref_sqdist_box(xf, [0, Fraction(-1, 2)], [1, 2])
    assert sqrt_bracket_ok(frac(F.dist(x, j)), d2, j)


@given(st.tuples(coord, coord), st.integers(0, 40))
def test_distance_contract_points(x, j):
    F = point_set((0, 0), (1, Dyadic(3, -2)))
    xf = [frac(c) for c in x]
    d2 = min(ref_sqdist_point(xf, (0, 0)), ref_sqdist_point(xf, (1, Fraction(3, 4))))
    assert sqrt_bracket_ok(frac(F.dist(x, j)), d2, j)


@given(st.tuples(coord, coord), st.integers(0, 40))
def test_distance_contract_ball(x, j):
    import mpmath

    mpmath.mp.dps = 50
    F = ball_set([Dyadic(1, -1), 0], Dyadic(3, -2))
    xf = [frac(c) for c in x]
    ref = ref_dist_ball(xf, (Fraction(1, 2), 0), Fraction(3, 4))
    assert abs(mp_frac(frac(F.dist(x, j))) - ref) <= mpmath.mpf(2) ** -j


def test_distance_deterministic():
    F = ball_set([0, 0], 1)
    G = ball_set([0, 0], 1)
    x = CPoint((Fraction(1, 3), Fraction(7, 5)))
    assert [F.dist(x, j) for j in range(30)] == [G.dist(x, j) for j in range(30)]


# -- dense stream -------------------------------------------------------------------------

def _members(F, pts):
    return all(F.member(p.exact) for p in pts)


def test_dense_points_examples():
    assert all(p.exact == (Dyadic(0),) for p in point_set(0).dense.take(5))
    early = {p.exact for p in box_set([0, 0], [1, 1]).dense.take(4)}
    assert early == {(Dyadic(a), Dyadic(b)) for a in (0, 1) for b in (0, 1)}
    early = {p.exact[0] for p in ball_set([0], 1).dense.take(16)}
    assert {Dyadic(-1), Dyadic(0), Dyadic(1)} <= early


@pytest.mark.parametrize("F", [box_set([0, 0], [1, 1]), ball_set([0, 0], 1),
                               union(point_set(3), box_set([-2], [-1]))], ids=["box", "ball", "mixed"])
def test_dense_points_in_F_and_dense(F):
    K = 4096
    pts = F.dense.take(K)
    assert _members(F, pts)
    rng = random.Random(11)
    lo, hi = F.bbox()
    found = 0
    while found < 100:
        y = tuple(Fraction(rng.randint(int(a) * 1000, int(b) * 1000), 1000) for a, b in
                  zip(map(frac, lo), map(frac, hi)))
        if not F.member(tuple(Dyadic.coerce(Fraction(round(c * 1024), 1024)) for c in y)):
            continue
        found += 1
        best = min(sum((frac(a) - b) ** 2 for a, b in zip(p.exact, y)) for p in pts)
        assert best <= Fraction(1, 2**10)


def test_dense_stream_replayable():
    F = ball_set([0, 0], 1)
    assert [p.exact for p in F.dense.take(50)] == [F.dense.at(s).exact for s in range(50)]


def test_seek_finds_near_points():
    F = union(ball_set([0, 0], 1), box_set([2, 2], [3, 3]))
    rng = random.Random(5)
    for _ in range(50):
        x = (Dyadic(rng.randint(-4000, 4000), -10), Dyadic(rng.randint(-4000, 4000), -10))
        d = frac(F.dist(x, 40))
        r = Dyadic(1, -rng.randint(1, 40))
        p = F.dense.seek(x, r)
        assert F.member(p)
        dp2 = sum((frac(a) - frac(b)) ** 2 for a, b in zip(p, x))
        assert dp2 < (d + frac(r) + Fraction(1, 2**40)) ** 2


# -- complement stream ----------------------------------------------------------------------

def test_outside_probe_examples():
    F = point_set(0)
    b = outside_probe(F, CPoint((1,)), 5000)
    assert b is not None and b.contains(CPoint((1,)))
    assert not b.contains(CPoint((0,)))
    assert outside_probe(F, CPoint((0,)), 2000) is None
    G = box_set([0, 0, 0], [1, 1, 1])
    b = outside_probe(G, CPoint((2, 2, 2)), 20000)
    assert b is not None and b.contains(CPoint((2, 2, 2)))


@pytest.mark.parametrize("F", [point_set(0, 1), ball_set([0, 0], 1), box_set([0, 0], [1, 1])],
                         ids=["points", "ball", "box"])
def test_complement_soundness_and_consistency(F):
    dense = F.dense.take(400)
    for s, ball in enumerate(F.complement):
        if s >= 300:
            break
        # ball disjoint from F: the closed-form distance of its center is at least the radius
        d2_center = [sum((frac(a) - frac(c)) ** 2 for a, c in zip(p.exact, ball.center)) for p in dense]
        assert all(v >= frac(ball.radius) ** 2 for v in d2_center)
        assert frac(F.dist(ball.center, 40)) + Fraction(1, 2**40) >= frac(ball.radius)


def test_distance_sandwich():
    F = union(point_set((0, 0)), ball_set([3, 0], 1))
    dense = F.dense.take(2000)
    rng = random.Random(2)
    for _ in range(20):
        x = (Dyadic(rng.randint(-300, 600), -6), Dyadic(rng.randint(-300, 300), -6))
        j = 12
        q = frac(F.dist(x, j))
        upper = min(sum((frac(a) - frac(b)) ** 2 for a, b in zip(p.exact, x)) for p in dense)
        # approximate distance cannot exceed the best dense point by more than the tolerance
        assert q - Fraction(1, 2**j) <= 0 or (q - Fraction(1, 2**j)) ** 2 <= upper
        b = outside_probe(F, CPoint(x), 3000)
        if b is not None:
            # the ball around x certifies d(x, F) >= radius - d(x, center)
            dx = sum((frac(a) - frac(c)) ** 2 for a, c in zip(x, b.center))
            r = frac(b.radius)
            s = Fraction(isqrt(int(dx * 2**60)) + 1, 2**30)
            assert q + Fraction(1, 2**j) >= r - s
