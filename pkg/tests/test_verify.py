import math

import numpy as np
import pytest

from seqemp.arrays import IID, TVAR1, ConstantCoef, MDependent
from seqemp.bracketing import Constant, PowerLaw, bracketing_integral
from seqemp.fclasses import Net, Rho, ZERO, grid_net, halfline, halfline_indicators, lp_distance
from seqemp.growth import DomainError, check_condition_S, linear
from seqemp.marginals import Marginals
from seqemp.verify import (NetModel, ProductFunctional, SignFlipModel, all_pairs, check_covariance_inequality,
                           dyadic_pairs, exact_small_oracle, fit_moment_constant, local_pair_net, mc_sup_moment,
                           moment_tau, rhs_chaining_bound, scaling_check, sup_powers, verify_maximal_inequality,
                           walsh_signs)


def test_walsh_signs_orthogonal():
    W = walsh_signs(8, 64)
    assert np.array_equal(W @ W.T, 64 * np.eye(8))


def test_dyadic_pairs_cover_blocks():
    pairs = dyadic_pairs(8)
    assert (1, 8) in pairs and (5, 8) in pairs and (3, 3) in pairs
    assert len(all_pairs(4)) == 10


def test_zero_functional_estimate_zero():
    model = SignFlipModel(np.zeros((1, 16)))
    est = mc_sup_moment(model, 1, 16, 4, 1000, seed=1)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_rademacher_second_moment():
    model = SignFlipModel.walsh(1, 32)
    for m in (4, 16, 32):
        est = mc_sup_moment(model, 1, m, 2, 20_000, seed=2)
        assert abs(est.mean - m) <= 3 * est.std_error


def test_maxima_dominate_sums():
    model = SignFlipModel.walsh(4, 32)
    s = mc_sup_moment(model, 3, 30, 4, 5000, seed=3)
    m = mc_sup_moment(model, 3, 30, 4, 5000, seed=3, sums_or_maxima="maxima")
    assert m.mean >= s.mean
    S, M = sup_powers(model.sample(500, 3), [(3, 30)], 4)
    assert np.all(M >= S)


def test_mc_requires_replicates():
    with pytest.raises(ValueError):
        mc_sup_moment(SignFlipModel.walsh(1, 8), 1, 8, 2, 999, seed=0)


def test_degenerate_process_passes():
    rep = verify_maximal_inequality(SignFlipModel(np.zeros((2, 8))), 4, 2, 2000, seed=0)
    assert rep.verdict == "PASS"
    assert all(c.lhs_max == 0.0 for c in rep.checks)


def test_alpha_at_most_one_rejected():
    with pytest.raises(DomainError):
        verify_maximal_inequality(SignFlipModel.walsh(2, 8), 2, 1.0, 1000, seed=0)


def test_harness_small_pass_and_fitted_certificate():
    rep = verify_maximal_inequality(SignFlipModel.walsh(4, 32), 4, 2, 20_000, seed=4)
    assert rep.verdict == "PASS"
    assert rep.q_min == 1.0 and rep.min_margin > 0
    assert check_condition_S(linear(rep.C_hat, 32, 2.0)).q_min == 1.0


def test_oracle_n1_margin():
    rep = exact_small_oracle(SignFlipModel.walsh(1, 1), 4, 2)
    c = rep.checks[0]
    assert c.lhs_max == c.lhs_sums
    assert c.margin == pytest.approx((rep.A - 1) * (rep.C_hat * 1) ** 2, rel=1e-12)


def test_oracle_n2_fourth_moment():
    rep = exact_small_oracle(SignFlipModel.walsh(1, 2), 4, 2, pairs=[(1, 2)])
    assert rep.checks[0].lhs_sums == 8.0
    assert rep.verdict == "PASS"


def test_oracle_nu2_not_applicable():
    rep = exact_small_oracle(SignFlipModel.walsh(2, 6), 2, 1.0)
    assert rep.verdict == "NOT_APPLICABLE"


def test_oracle_monotone_in_index_set():
    small = exact_small_oracle(SignFlipModel.walsh(2, 8), 4, 2)
    large = exact_small_oracle(SignFlipModel.walsh(4, 8), 4, 2)
    for a, b in zip(small.checks, large.checks):
        assert b.lhs_sums >= a.lhs_sums - 1e-12
        assert b.lhs_max >= a.lhs_max - 1e-12


def test_oracle_asymmetric_two_point():
    rep = exact_small_oracle(SignFlipModel.walsh(3, 9, a=0.0, b=3.0), 4, 2)
    assert rep.verdict == "PASS"


def test_mc_matches_oracle():
    model = SignFlipModel.walsh(4, 10)
    exact = exact_small_oracle(model, 4, 2, pairs=dyadic_pairs(10))
    for c in exact.checks[:6]:
        est = mc_sup_moment(model, c.i, c.j, 4, 20_000, seed=11, sums_or_maxima="maxima")
        assert abs(est.mean - c.lhs_max) <= 3 * est.std_error + 1e-12


def test_maximal_reports_are_deterministic():
    model = SignFlipModel.walsh(2, 16)
    a = verify_maximal_inequality(model, 4, 2, 3000, seed=9).to_dict()
    b = verify_maximal_inequality(model, 4, 2, 3000, seed=9, threads=2).to_dict()
    assert a == b


def test_moment_tau_indicator():
    marg = Marginals.uniform(4)
    net = Net((halfline(0.5),), (0.5,))
    lam = 2 / 3
    # E|1{U<=1/2} - 1/2|^q = 2^-q: the largest moment over l = 2..4 is at l = 2
    assert moment_tau(net, marg, 4, lam) == pytest.approx((0.5 ** (2 + lam)) ** (1 / (2 + lam)))


def test_fit_moment_zero_member_ignored():
    net = Net((ZERO, halfline(0.3)), (None, 0.3))
    fit = fit_moment_constant(IID(), net, 2, 2 / 3, [8, 16, 32], 2000, seed=1)
    alone = fit_moment_constant(IID(), Net((halfline(0.3),), (0.3,)), 2, 2 / 3, [8, 16, 32], 2000, seed=1)
    assert np.allclose(fit.C_hat, alone.C_hat, rtol=1e-12, atol=0)


def test_fit_moment_variance_identity():
    net = Net((halfline(0.5),), (0.5,))
    fit = fit_moment_constant(IID(), net, 2, 2 / 3, [16, 64, 256], 10_000, seed=5)
    assert fit.variance_identity["ok"]
    assert fit.band_ratio <= 4.0


def test_fit_moment_m_dependent_band():
    net = grid_net(halfline_indicators(), 5)
    fit = fit_moment_constant(MDependent(2), net, 4, 2 / 3, [16, 32, 64, 128], 4000, seed=6)
    assert fit.verdict == "PASS" and fit.band_ratio <= 4.0


def test_fit_moment_rejects_odd_nu():
    with pytest.raises(DomainError):
        fit_moment_constant(IID(), Net((halfline(0.5),), (0.5,)), 3, 1.0, [8, 16], 1000, seed=0)


def test_covariance_m_dependent_beyond_m():
    fn = ProductFunctional((halfline(0.5), halfline(0.5)), 1)
    rep = check_covariance_inequality(MDependent(2), fn, [2, 6], 8, 2 / 3, 20_000, seed=3)
    assert rep.rhs == 0.0
    assert abs(rep.lhs) <= 3 * rep.lhs_se + 1e-12
    assert rep.verdict == "PASS"


def test_covariance_iid_rhs_zero():
    fn = ProductFunctional((halfline(0.3), halfline(0.7), halfline(0.5)), 2)
    rep = check_covariance_inequality(IID(), fn, [1, 2, 5], 6, 1.0, 20_000, seed=4)
    assert rep.rhs == 0.0 and rep.verdict == "PASS"


def test_covariance_tvar1_decays_and_holds():
    fn = ProductFunctional((halfline(0.0), halfline(0.0)), 1)
    model = TVAR1(ConstantCoef(0.5), abar=0.5)
    near = check_covariance_inequality(model, fn, [10, 11], 16, 2 / 3, 20_000, seed=5)
    far = check_covariance_inequality(model, fn, [10, 15], 16, 2 / 3, 20_000, seed=5)
    assert near.verdict == "PASS" and far.verdict == "PASS"
    assert far.lhs < near.lhs


def test_covariance_gap_must_be_positive():
    fn = ProductFunctional((halfline(0.5), halfline(0.5)), 1)
    with pytest.raises(ValueError):
        check_covariance_inequality(IID(), fn, [3, 3], 6, 1.0, 1000, seed=0)


def test_chaining_rhs_monotone_in_delta():
    N = PowerLaw(1.0, 2.0)
    vals = [rhs_chaining_bound(256, d, 0.5, N, 2 / 3, 4, 0.1) for d in (0.5, 0.2, 0.1, 0.01, 1e-4, 0.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    lim = (256 * (N(0.5) ** 0.5 * 256 ** -0.1 + bracketing_integral(N, 2 / 3, 4, 0.5).value) ** 2) ** 2
    assert vals[-1] == pytest.approx(lim, rel=1e-12)


def test_chaining_rhs_constant_branch():
    m, delta, lam, nu, kappa = 100, 0.1, 2 / 3, 4, 0.1
    integral = 1.0 ** (2 / (2 + lam)) * (2 + lam) / 2
    hand = (m * ((m ** -kappa + delta + delta ** 2) + integral) ** 2) ** 2
    assert rhs_chaining_bound(m, delta, 1.0, Constant(), lam, nu, kappa) == pytest.approx(hand, rel=1e-9)


def test_chaining_kappa_checked():
    with pytest.raises(DomainError):
        rhs_chaining_bound(10, 0.1, 1.0, Constant(), 2 / 3, 4, 0.2)


def test_local_pair_net_within_delta():
    marg = Marginals.uniform(8)
    rho = Rho(2, marg)
    net = local_pair_net(halfline_indicators(), rho, 0.2, anchors=8)
    xs = np.asarray(net.params)
    assert np.all(np.diff(xs) > 0)
    assert lp_distance(halfline(xs[0]), halfline(xs[1]), marg, 2) <= 0.2 + 1e-12


def test_scaling_check_small():
    rep = scaling_check(IID(), halfline_indicators(), 4, 2 / 3, 0.1, [64, 128, 256], [0.2, 0.3], 2000, seed=1)
    assert rep.verdict == "PASS"
    assert set(rep.growth_by_delta) == {0.2, 0.3}


def test_scaling_check_unresolved_cells_reported():
    rep = scaling_check(IID(), halfline_indicators(), 4, 2 / 3, 0.1, [64, 128], [0.02], 500, seed=1)
    assert rep.verdict == "INCONCLUSIVE" and rep.unresolved == [0.02]


def test_net_model_centering():
    nm = NetModel(IID(), grid_net(halfline_indicators(), 3), 50)
    W = nm.sample(20_000, seed=2)
    assert W.shape == (20_000, 3, 50)
    means = W.mean(axis=0)
    assert np.all(np.abs(means) <= 4 * W.std(axis=0) / math.sqrt(20_000) + 1e-12)
