import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqemp.arrays import MixingProfile
from seqemp.growth import (DivergenceError, DomainError, GrowthFunction, check_condition_S, combine_h, constant_A,
                           gamma, gamma_growth, holder_gap, kappa_range, linear, q_threshold, zeta)


def test_linear_q_min_one():
    cert = check_condition_S(linear(3.7, 200, 2.0))
    assert cert.q_min == 1.0 and cert.admissible


def test_sqrt_boundary_not_admissible():
    g = GrowthFunction.from_callable(np.sqrt, 100, 2.0)
    cert = check_condition_S(g)
    assert abs(cert.q_min - math.sqrt(2)) < 1e-12
    assert not cert.admissible


def test_square_clamped_to_one():
    g = GrowthFunction.from_callable(lambda m: m ** 2.0, 10, 2.0)
    cert = check_condition_S(g)
    assert cert.q_min == 1.0
    assert abs(cert.raw_max_ratio - 0.82) < 1e-12


def test_nonmonotone_growth_reported():
    cert = check_condition_S(GrowthFunction(np.array([0.0, 2.0, 1.0, 3.0]), 2.0))
    assert cert.violations and not cert.admissible


def test_constant_A_spot_value():
    # independent rational/float evaluation of (1 - 2^(-1/4))^(-4)
    ref = (1 - 2 ** Fraction(-1, 4).__float__()) ** -4
    assert abs(constant_A(2, 4, 1) - ref) / ref < 1e-12
    assert f"{constant_A(2, 4, 1):.5g}" == "1560.6"


def test_constant_A_domain():
    thr = q_threshold(2.0)
    with pytest.raises(DomainError):
        constant_A(2, 4, thr)
    with pytest.raises(DomainError):
        constant_A(2, 4, 0.99)
    with pytest.raises(DomainError):
        constant_A(1.0, 4, 1.0)
    constant_A(2, 4, thr * (1 - 1e-9))


def test_constant_A_diverges_toward_threshold():
    thr = q_threshold(3.0)
    qs = 1 + (thr - 1) * np.array([0.0, 0.5, 0.9, 0.99, 0.9999])
    vals = [constant_A(3.0, 6, q) for q in qs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1e6 * vals[0]


def test_constant_A_increases_in_nu():
    # the closed form grows with nu at fixed (alpha, Q = 1)
    for alpha in (1.5, 2.0, 3.0):
        vals = [constant_A(alpha, nu, 1.0) for nu in (1, 2, 3, 4, 6, 8)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


@settings(max_examples=300, deadline=None)
@given(x=st.floats(0, 1e6), y=st.floats(0, 1e6), d=st.floats(1e-6, 1 - 1e-6))
def test_holder_lemma(x, y, d):
    assert x ** d + y ** d <= 2 ** (1 - d) * (x + y) ** d + 1e-12 * max(1.0, (x + y) ** d)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(1e-6, 1e6), d=st.floats(1e-6, 1 - 1e-6))
def test_holder_equality_on_diagonal(x, d):
    assert abs(holder_gap(x, x, d)) <= 1e-12 * max(1.0, x ** d)


def test_kappa_range():
    lo, hi = kappa_range(4)
    assert lo == 0.0 and hi == pytest.approx(0.25)
    assert kappa_range(4, 2 / 3)[1] == pytest.approx(1 / 6)
    with pytest.raises(DomainError):
        kappa_range(2)


def test_gamma_linear_when_J_zero():
    R = lambda d: 0.3
    J = lambda d: 0.0
    g = gamma_growth(0.1, 2.0, 0.2, R, J, 4, 200)
    assert np.allclose(g.values, 2.0 * np.arange(1, 201) * 0.09)
    assert check_condition_S(g).q_min == 1.0


def test_gamma_pure_J_q_bound():
    g = gamma_growth(0.1, 1.0, 0.2, lambda d: 0.0, lambda d: 1.0, 4, 200)
    assert check_condition_S(g).q_min <= 2 ** 0.4 + 1e-9


def test_gamma_limit_ratio():
    R = lambda d: d
    J = lambda d: 1.0
    ms = 2.0 ** np.arange(4, 60)
    limits = []
    for delta in (0.1, 0.01, 0.001):
        excess = gamma(ms, delta, 1.5, 0.2, R, J, 4) / ms - 1.5 * delta ** 2
        # g(m, delta)/m decreases to C R(delta)^2 along m = 2^k
        assert np.all(np.diff(excess) < 0) and excess[-1] < 1e-3 * excess[0]
        limits.append(1.5 * delta ** 2)
    assert limits[0] > limits[1] > limits[2]


def test_gamma_kappa_domain():
    with pytest.raises(DomainError):
        gamma(5, 0.1, 1.0, 0.3, lambda d: 1, lambda d: 1, 4)


@settings(max_examples=100, deadline=None)
@given(C=st.floats(0.01, 10), kappa=st.floats(0.01, 0.24), Rv=st.floats(0, 5), Jv=st.floats(0, 5),
       delta=st.floats(0.01, 1))
def test_gamma_certificate_and_monotone(C, kappa, Rv, Jv, delta):
    g = gamma_growth(delta, C, kappa, lambda d: Rv, lambda d: Jv, 4, 200)
    assert np.all(np.diff(g.values) >= -1e-12 * g.values.max(initial=1.0))
    assert check_condition_S(g).q_min <= 2 ** (2 * kappa) + 1e-9


@settings(max_examples=100, deadline=None)
@given(c1=st.floats(0.01, 10), c2=st.floats(0.01, 10), k1=st.floats(0.01, 0.24), k2=st.floats(0.01, 0.24))
def test_closure_under_addition(c1, c2, k1, k2):
    g = gamma_growth(0.5, c1, k1, lambda d: 0.1, lambda d: 1.0, 4, 100)
    h = gamma_growth(0.5, c2, k2, lambda d: 0.0, lambda d: 1.0, 4, 100)
    qg, qh = check_condition_S(g).q_min, check_condition_S(h).q_min
    assert check_condition_S(g + h).q_min <= max(qg, qh) + 1e-9


def test_combine_h_examples():
    g = linear(2.0, 50, 2.0)
    h, cert = combine_h(g, GrowthFunction(np.zeros(51), 2.0))
    assert np.allclose(h.values, 2 * g.values) and cert.q_min == 1.0
    h, cert = combine_h(linear(1.0, 50, 2.0), linear(3.0, 50, 2.0))
    assert cert.q_min == 1.0
    gam = gamma_growth(1.0, 1.0, 0.2, lambda d: 0.5, lambda d: 1.0, 4, 200)
    h, cert = combine_h(gam, linear(0.25, 200, 2.0))
    assert cert.q_min <= max(2 ** 0.4, 1.0) + 1e-9


def test_zeta_zero_beyond():
    lam, nu = 2 / 3, 4
    res = zeta(MixingProfile.zero_beyond(3), lam, nu)
    expected = sum(s ** (nu - 2) * 0.25 ** (lam / (2 + lam)) for s in range(1, 4))
    assert res.value == pytest.approx(expected, rel=1e-15)
    assert res.truncation_bound == 0.0


def test_zeta_geometric_closed_form():
    lam, rho = 0.5, 0.6
    r = rho ** (lam / (2 + lam))
    res = zeta(MixingProfile.geometric(1.0, rho), lam, 2)
    assert abs(res.value - r / (1 - r)) <= 1e-10


def test_zeta_zero_profile():
    assert zeta(MixingProfile.geometric(1.0, 0.0), 1.0, 4).value == 0.0


def test_zeta_missing_tail_diverges():
    with pytest.raises(DivergenceError):
        zeta(MixingProfile.tabulated([0.2, 0.1]), 1.0, 4)


def test_zeta_rejects_odd_nu():
    with pytest.raises(DomainError):
        zeta(MixingProfile.zero_beyond(2), 1.0, 3)
