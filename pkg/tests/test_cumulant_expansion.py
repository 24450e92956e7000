import math

import numpy as np
import pytest

from percolation_rmt.cumulant_expansion import (
    TestFunction,
    default_library,
    expansion_estimate,
    parse_test_function,
    remainder_bound,
)
from percolation_rmt.entries import MaskedEntry, cumulants, make_distribution
from oracles import central_difference

GAUSS = make_distribution("gaussian", 1.0)
RAD = make_distribution("rademacher", 1.0)
TWO = make_distribution("twopoint", 1.0, p=0.2)
UNI = make_distribution("uniform", 1.0)
CUBIC = TestFunction("polynomial", coefficients=(0.0, 0.0, 0.0, 1.0))


@pytest.mark.parametrize("f", default_library(), ids=lambda f: f.label)
def test_closed_form_derivatives_match_finite_differences(f):
    h = 1e-4
    for t in (-1.3, 0.0, 0.4, 2.2):
        for r in range(6):
            fd = central_difference(lambda s: f.derivative(r, s), t, h)
            exact = f.derivative(r + 1, t)
            assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_finite_difference_error_is_second_order():
    f = TestFunction("resolvent", z=complex(0.2, 1.0))
    t = 0.3
    err = [abs(central_difference(f, t, h) - f.derivative(1, t)) for h in (1e-2, 5e-3)]
    assert err[0] / err[1] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("f", default_library(), ids=lambda f: f.label)
def test_sup_derivative_bounds_grid(f):
    grid = np.linspace(-20, 20, 40001)
    for r in range(5):
        assert np.max(np.abs(f.derivative(r, grid))) <= f.sup_derivative(r) * (1 + 1e-12)


def test_rademacher_cubic_exact():
    rep = expansion_estimate(RAD, CUBIC, q=3)
    assert rep.method == "exact"
    assert rep.lhs == pytest.approx(1.0, abs=1e-15)
    # K2 E f' + K4/3! E f''' = 3 + (-2/6) * 6
    assert rep.terms[1] == pytest.approx(3.0, abs=1e-15)
    assert rep.terms[3] == pytest.approx(-2.0, abs=1e-15)
    assert abs(rep.remainder) <= 1e-12
    assert remainder_bound(RAD, CUBIC, 3) == 0.0


@pytest.mark.parametrize("f", default_library(), ids=lambda f: f.label)
def test_gaussian_stein_identity(f):
    rep = expansion_estimate(GAUSS, f, q=1, samples=400_000, seed=1)
    assert rep.method == "monte-carlo"
    assert abs(rep.remainder) <= 3 * rep.remainder_stderr


@pytest.mark.parametrize("f", default_library(), ids=lambda f: f.label)
def test_gaussian_stein_identity_by_quadrature(f):
    rep = expansion_estimate(GAUSS, f, q=1, method="exact")
    assert abs(rep.remainder) <= 1e-10


@pytest.mark.parametrize("law", [RAD, TWO], ids=lambda d: d.spec)
@pytest.mark.parametrize("coeffs", [(1.0, 2.0), (0.0, 0.0, 1.0), (1.0, -1.0, 0.0, 2.0), (0.0, 1.0, 0.5, -1.0, 0.25, 0.3)])
def test_polynomial_remainder_vanishes_when_q_covers_degree(law, coeffs):
    f = TestFunction("polynomial", coefficients=coeffs)
    d = len(coeffs) - 1
    K = cumulants(law)
    for q in (1, 3, 5):
        rem = expansion_estimate(law, f, q).remainder
        if q >= d:
            assert abs(rem) <= 1e-12
        elif q == d - 1:
            # only the first omitted term survives: K_{d+1}/d! f^{(d)}, with f^{(d)} = d! c_d
            assert rem == pytest.approx(K[d] * coeffs[d], abs=1e-12)


def test_terms_use_cumulants():
    f = TestFunction("rational", a=1.5)
    rep = expansion_estimate(TWO, f, q=5)
    K = cumulants(TWO)
    x, w = TWO.atoms()
    for r in range(6):
        direct = K[r] / math.factorial(r) * np.sum(w * f.derivative(r, x))
        assert rep.terms[r] == pytest.approx(direct, abs=1e-12)
    assert rep.bound is None  # q = 5 is measured only


def test_bound_dominates_battery():
    for law in (GAUSS, UNI, RAD, TWO, MaskedEntry(GAUSS, 16, 0.5), MaskedEntry(TWO, 9, 0.7)):
        for f in default_library():
            for q in (1, 3):
                rep = expansion_estimate(law, f, q, samples=200_000, seed=3)
                if rep.bound is not None:
                    assert rep.bound_holds, (law, f.label, q)


def test_q3_bound_requires_zero_third_moment():
    with pytest.raises(ValueError):
        remainder_bound(TWO, TestFunction("rational"), 3)
    rep = expansion_estimate(TWO, TestFunction("rational"), 3)
    assert rep.bound is None


def test_gaussian_polynomial_bound_from_closed_form_moments():
    f = TestFunction("polynomial", coefficients=(0.0, 1.0, 0.5, -1.0, 0.25))
    # sup|f''''| = 6, K4 = 0, K2 = 1, E|X|^3 = 2 sqrt(2/pi), E|X|^5 = 8 sqrt(2/pi)
    expected = 6 * (2 * math.sqrt(2 / math.pi) / 6 + 8 * math.sqrt(2 / math.pi) / 24)
    assert remainder_bound(GAUSS, f, 3) == pytest.approx(expected, rel=1e-12)
    rep = expansion_estimate(GAUSS, f, 3, samples=400_000)
    assert abs(rep.remainder) <= expected


def test_unbounded_derivative_has_no_bound():
    with pytest.raises(ValueError):
        remainder_bound(GAUSS, TestFunction("polynomial", coefficients=(0, 0, 0, 1)), 1)


def test_matrix_entry_remainder_scaling():
    f = TestFunction("resolvent", z=3j)
    r16 = expansion_estimate(MaskedEntry(GAUSS, 16, 0.5), f, 1, method="exact")
    r64 = expansion_estimate(MaskedEntry(GAUSS, 64, 0.5), f, 1, method="exact")
    assert abs(r16.remainder) <= r16.bound
    assert abs(r64.remainder) <= r64.bound
    # bound scales with E|X|^3 ~ b^{-3/2}
    assert r64.bound / r16.bound == pytest.approx((16 / 64) ** 1.5, rel=0.2)
    # remainder is driven by K4 ~ b^{-2} and so falls at least as fast as the bound
    ratio = abs(r64.remainder) / abs(r16.remainder)
    assert ratio <= 1 / 8
    assert ratio == pytest.approx(1 / 16, rel=0.2)


def test_matrix_entry_monte_carlo_within_bound():
    f = TestFunction("resolvent", z=3j)
    for b in (16, 64):
        rep = expansion_estimate(MaskedEntry(GAUSS, b, 0.5), f, 1, samples=400_000, seed=b)
        assert abs(rep.remainder) <= rep.bound + 4 * rep.remainder_stderr


def test_unmasked_gaussian_entry_is_stein_exact():
    rep = expansion_estimate(MaskedEntry(GAUSS, 16, 1.0), TestFunction("resolvent", z=3j), 1, method="exact")
    assert abs(rep.remainder) <= 1e-15


def test_rejects_bad_q():
    with pytest.raises(ValueError):
        expansion_estimate(GAUSS, CUBIC, 2)


def test_parse_test_function():
    assert parse_test_function("resolvent:0,3").z == 3j
    assert parse_test_function("poly:1,0,2").coefficients == (1.0, 0.0, 2.0)
    assert parse_test_function("rational:2").a == 2.0
    with pytest.raises(ValueError):
        parse_test_function("sine:1")


def test_report_serializes():
    import json

    d = expansion_estimate(RAD, CUBIC, 3).to_dict()
    text = json.dumps(d)
    assert json.loads(text)["remainder_abs"] == 0.0
