import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitney.bump import (
    B,
    B_multi,
    PartitionAtPoint,
    PreconditionError,
    bprime,
    deriv_bounds,
    lambda_deriv,
    lambda_poly,
    mu_deriv,
    mu_nu_deriv,
    nu_deriv,
    phi_deriv,
    phi_eval,
    quotient_expand,
)
from whitney.checks import check_partition, sample_off_F
from whitney.closedset import ball_set, point_set
from whitney.cubes import DEFAULT_EPS, Decomposition, DyadicCube, N_n
from whitney.exact import CPoint, CReal, Dyadic

import oracles
from oracles import mp_frac

mpmath.mp.dps = 60


def mp(d):
    return mp_frac(d.to_fraction())


def close(value, ref, i):
    return abs(mp(value) - ref) <= mpmath.mpf(2) ** -i


# -- tables -------------------------------------------------------------------------------

def test_H_examples():
    t = deriv_bounds(6)
    assert t.H[:3] == (1, 4, 768)
    assert t.A[:3] == (1, 1, 3)


def test_table_identities():
    t = deriv_bounds(8)
    for k in range(9):
        assert t.H[k] == (2 * k) ** (2 * k) * t.A[k]
        assert t.B[k] == 8 ** (k + 1) * t.T[k]
    assert list(t.H) == sorted(t.H) and list(t.B) == sorted(t.B)


@pytest.mark.parametrize("k", range(8))
def test_lambda_numerators_match_symbolic_derivatives(k):
    want = [int(c) for c in oracles.lambda_numerator(k).all_coeffs()[::-1]]
    assert list(lambda_poly(k)) == want


@pytest.mark.parametrize("kbar", [(0,), (1,), (2,), (3,), (4,), (0, 0), (1, 0), (1, 1), (2, 1), (0, 3), (1, 1, 1)])
def test_quotient_expansion_matches_symbolic(kbar):
    got = {(t.lead, t.powers): t.coeff for t in quotient_expand(kbar).terms}
    assert got == oracles.quotient_rule_terms(kbar)


@pytest.mark.parametrize("kbar", [(0,), (3,), (2, 2), (1, 2, 1)])
def test_quotient_degree_identity(kbar):
    ex = quotient_expand(kbar)
    assert ex.denominator_power == sum(kbar) + 1
    for t in ex.terms:
        assert t.degree() == sum(kbar)


def test_quotient_small_cases():
    (t,) = quotient_expand((0,)).terms
    assert (t.coeff, t.lead, t.powers) == (1, (0,), ())
    terms = {(t.coeff, t.lead, t.powers) for t in quotient_expand((0, 1)).terms}
    # (u' v - u v') / v^2, the v factor of the first term kept explicitly
    assert terms == {(1, (0, 1), (((0, 0), 1),)), (-1, (0, 0), (((0, 1), 1),))}


def test_bprime_values():
    assert bprime((0,)) == Dyadic(B(0))
    assert bprime((0, 0)) == Dyadic(B(0) ** 2)
    # u' v - u v': the factor v contributes N_1 B_0, the factor v' contributes N_1 B_1 21
    assert bprime((1,)) == Dyadic(B(1) * (N_n(1) * B(0)) + B(0) * (N_n(1) * B(1) * 21))
    assert bprime((1,)) == Dyadic(17752064)
    for kbar in [(1,), (2,), (1, 1), (2, 0), (1, 2)]:
        assert bprime(kbar) >= Dyadic(B_multi(kbar))


# -- lambda, mu, nu against mpmath --------------------------------------------------------

def test_lambda_examples():
    for k in range(4):
        assert lambda_deriv(-1, k, 20) == Dyadic(0)
    assert close(lambda_deriv(1, 0, 20), mpmath.exp(-1), 20)
    assert close(lambda_deriv(Dyadic(1, -1), 1, 30), 4 * mpmath.exp(-2), 30)


def test_mu_nu_examples():
    assert close(mu_deriv(Dyadic(1, -1), 0, 30), mpmath.mpf(1) / 2, 30)
    assert close(nu_deriv(0, 0, 30), 1, 30)
    far = Dyadic(1, -1) + DEFAULT_EPS.shift(-1) + 1
    for k in range(4):
        assert nu_deriv(far, k, 20) == Dyadic(0)
    with pytest.raises(ValueError):
        mu_nu_deriv("eta", 0, 0, 10)


xs_lambda = st.builds(Fraction, st.integers(-100, 1100), st.just(1000))


@given(xs_lambda, st.integers(0, 5), st.integers(0, 40))
def test_lambda_against_mpmath(x, k, i):
    ref = oracles.lam(mp_frac(x), k)
    assert close(lambda_deriv(CReal.of(x), k, i), ref, i)


@given(st.builds(Fraction, st.integers(-50, 1050), st.just(1000)), st.integers(0, 4), st.integers(0, 30))
def test_mu_against_mpmath(x, k, i):
    ref = oracles.mu(mp_frac(x), k)
    assert close(mu_deriv(CReal.of(x), k, i), ref, i)


@given(st.builds(Fraction, st.integers(-650, 650), st.just(1000)), st.integers(0, 3), st.integers(0, 24))
def test_nu_against_mpmath(x, k, i):
    ref = oracles.nu(mp_frac(x), k)
    assert close(nu_deriv(CReal.of(x), k, i), ref, i)


@given(st.builds(Fraction, st.integers(1, 999), st.just(1000)), st.integers(0, 6))
def test_derivative_bounds_hold(x, k):
    t = deriv_bounds(6)
    assert abs(oracles.lam(mp_frac(x), k)) <= t.H[k]
    assert abs(oracles.mu(mp_frac(x), k)) <= t.B[k]


# -- phi and phi* -----------------------------------------------------------------------------

def test_phi_examples():
    Q = DyadicCube(0, (1, -1))
    assert phi_deriv(Q, CPoint(Q.center()), (0, 0), 30) == Dyadic(1)
    for kbar in [(0, 0), (1, 0), (2, 1)]:
        assert phi_deriv(Q, CPoint((4, 4)), kbar, 20) == Dyadic(0)


@given(st.integers(-2, 3), st.integers(-3, 3), st.integers(-3, 3),
       st.integers(-700, 700), st.integers(-700, 700), st.tuples(st.integers(0, 2), st.integers(0, 1)))
def test_phi_against_mpmath(level, c1, c2, u, v, kbar):
    Q = DyadicCube(level, (c1, c2))
    e = Q.edge.to_fraction()
    x = tuple(c.to_fraction() + e * Fraction(t, 1000) for c, t in zip(Q.center(), (u, v)))
    got = phi_deriv(Q, CPoint(x), kbar, 20)
    emp = mp_frac(e)
    ref = mpmath.mpf(1)
    for cc, xc, kc in zip(Q.center(), x, kbar):
        ref *= oracles.nu((mp_frac(xc) - mp(cc)) / emp, kc) / emp ** kc
    assert close(got, ref, 20)


def _phistar_ref(x: Fraction, cubes, target):
    """phi*_Q(x) from the brute-force decomposition: phi_Q / sum of all phi."""
    total = sum(oracles.phi_cube(k, (c,), (mp_frac(x),)) for k, c in cubes)
    return oracles.phi_cube(target[0], (target[1],), (mp_frac(x),)) / total


@pytest.mark.parametrize("x", [Fraction(3, 2), Fraction(-5, 16), Fraction(7, 3), Fraction(1, 64), Fraction(-40, 7)])
def test_phistar_against_bruteforce(x):
    F = point_set(0)
    D = Decomposition(F)
    ax = abs(x)
    cubes = oracles.decomposition_origin(-4 * ax, 4 * ax, -8, 12)
    P = PartitionAtPoint(D, CPoint((x,)))
    assert {(Q.level, Q.corner[0]) for Q in P.active()} <= set(cubes)
    for k, c in cubes:
        ref = _phistar_ref(x, cubes, (k, c))
        Q = DyadicCube(k, (c,))
        got = P.phistar(Q, (0,), 24) if Q in P.G else Dyadic(0)
        assert close(got, ref, 23)
    assert close(P.phistar_sum((0,), 24), 1, 20)


def test_phistar_first_derivative_against_bruteforce():
    # inside the enlargements of both [1, 2] and [1/2, 1]
    x = Fraction(1) + Fraction(1, 64)
    D = Decomposition(point_set(0))
    cubes = oracles.decomposition_origin(Fraction(-8), Fraction(8), -4, 8)
    P = PartitionAtPoint(D, CPoint((x,)))
    for k, c in [(0, 1), (1, 1)]:
        ref = mpmath.diff(lambda t: _phistar_ref_mp(t, cubes, (k, c)), mp_frac(x), 1)
        assert close(P.phistar(DyadicCube(k, (c,)), (1,), 20), ref, 18)


def _phistar_ref_mp(t, cubes, target):
    total = sum(oracles.phi_cube(k, (c,), (t,)) for k, c in cubes)
    return oracles.phi_cube(target[0], (target[1],), (t,)) / total


def test_phi_eval_dispatch_and_precondition():
    D = Decomposition(point_set(0))
    Q = DyadicCube(0, (1,))
    x = CPoint((Dyadic(3, -1),))
    assert phi_eval(D, Q, "phi", x, (0,), 20) == Dyadic(1)
    assert close(phi_eval(D, Q, "phistar", x, (0,), 20), 1, 20)
    with pytest.raises(ValueError):
        phi_eval(D, Q, "psi", x, (0,), 20)
    with pytest.raises(PreconditionError):
        PartitionAtPoint(D, CPoint((0,)), budget=40)


def test_phistar_sum_at_three_halves():
    D = Decomposition(point_set(0))
    P = PartitionAtPoint(D, CPoint((Dyadic(3, -1),)))
    for i in (8, 16, 30):
        assert abs(P.phistar_sum((0,), i).to_fraction() - 1) <= Fraction(2, 2**i)


def test_partition_of_unity_2d_sampled():
    F = ball_set([0, 0], 1)
    D = Decomposition(F)
    rng = random.Random(9)
    for x, _ in sample_off_F(F, rng, 15, -5, 3):
        P = PartitionAtPoint(D, CPoint(x))
        s = sum((P.phistar(Q, (0, 0), 21 + 9) for Q in P.G), Dyadic(0))
        assert abs(s.to_fraction() - 1) <= Fraction(1, 2**20)
        for l in [(1, 0), (0, 1), (1, 1), (2, 0)]:
            s = sum((P.phistar(Q, l, 21 + 9) for Q in P.G), Dyadic(0))
            assert abs(s.to_fraction()) <= Fraction(1, 2**16)


@pytest.mark.parametrize("F", [point_set(0), ball_set([0, 0], 1)], ids=["origin", "ball"])
def test_partition_suite(F):
    results = check_partition(F, seed=3)
    bad = [r for r in results if not r.passed]
    assert not bad, [(r.name, r.detail, r.counterexamples) for r in bad]
