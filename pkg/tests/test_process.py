import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqemp.arrays import IID, MDependent, gen_iid, simulate
from seqemp.fclasses import halfline, lipschitz
from seqemp.process import (CenteredEval, centered, eval_Z, eval_Zs_interval, eval_Zs_union, eval_Zs_weights,
                            floor_index, interval_symdiff, modulus, partial_sum, running_max, smoothing_weights,
                            tau_matrix, tau_s_matrix, z_path)


def ce_for(n, x=0.4, seed=0):
    return centered(gen_iid(n, seed=seed), halfline(x))


def test_partial_sum_conventions():
    ce = ce_for(20)
    assert partial_sum(ce, 5, 4) == 0.0
    assert partial_sum(ce, 7, 7) == ce.z[6]


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 200), seed=st.integers(0, 10**6), data=st.data())
def test_additivity_and_running_max(n, seed, data):
    ce = ce_for(n, seed=seed)
    k = data.draw(st.integers(1, n - 1))
    assert abs(partial_sum(ce, 1, n) - partial_sum(ce, 1, k) - partial_sum(ce, k + 1, n)) <= 1e-12
    i = data.draw(st.integers(1, n))
    j = data.draw(st.integers(i, n))
    naive = max(abs(sum(ce.z[i - 1:l])) for l in range(i, j + 1))
    assert abs(running_max(ce, i, j) - naive) <= 1e-12
    assert running_max(ce, i, j) >= abs(partial_sum(ce, i, j)) - 1e-15


def test_running_max_single_and_nonnegative():
    ce = ce_for(10)
    assert running_max(ce, 3, 3) == abs(ce.z[2])
    pos = CenteredEval(None, None, np.abs(ce.z))
    assert abs(running_max(pos, 2, 9) - partial_sum(pos, 2, 9)) <= 1e-15


def test_index_errors():
    ce = ce_for(10)
    with pytest.raises(IndexError):
        partial_sum(ce, 0, 3)
    with pytest.raises(IndexError):
        running_max(ce, 1, 11)


def test_eval_Z_endpoints():
    ce = ce_for(50)
    assert eval_Z(ce, 0.0) == 0.0
    assert abs(eval_Z(ce, 1.0) - partial_sum(ce, 1, 50) / math.sqrt(50)) <= 1e-15


def test_eval_Z_centered_in_mean():
    X = simulate(IID(), 64, 10_000, seed=3)
    vals = (halfline(0.3)(X) - 0.3).sum(axis=1) / 8.0
    assert abs(vals.mean()) <= 3 * vals.std(ddof=1) / 100


def test_floor_index_is_exact_on_grid():
    for n in (3, 7, 10, 1000):
        for k in range(n + 1):
            assert floor_index(n, k / n) == k


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), t=st.floats(0, 1), seed=st.integers(0, 1000))
def test_Z_piecewise_constant(n, t, seed):
    ce = ce_for(n, seed=seed)
    assert eval_Z(ce, t) == eval_Z(ce, floor_index(n, t) / n)


def test_z_path_matches_eval():
    ce = ce_for(30)
    path = z_path(ce)
    assert path.shape == (31,)
    for k in range(31):
        assert abs(path[k] - eval_Z(ce, k / 30)) <= 1e-12


def test_smoothed_full_interval_and_empty():
    ce = ce_for(40)
    assert abs(eval_Zs_interval(ce, 0.0, 1.0) - eval_Z(ce, 1.0)) <= 1e-12
    assert eval_Zs_interval(ce, 0.3, 0.3) == 0.0
    assert eval_Zs_weights(ce, 0.3, 0.3) == 0.0


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 200), u=st.floats(0, 1), v=st.floats(0, 1), x=st.floats(0, 1),
       seed=st.integers(0, 10**6))
def test_smoothed_identity(n, u, v, x, seed):
    u, v = min(u, v), max(u, v)
    ce = ce_for(n, x, seed)
    assert abs(eval_Zs_interval(ce, u, v) - eval_Zs_weights(ce, u, v)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), u=st.floats(0, 1), v=st.floats(0, 1))
def test_weights_sum(n, u, v):
    u, v = min(u, v), max(u, v)
    w = smoothing_weights(n, u, v)
    assert np.all((w >= 0) & (w <= 1))
    assert abs(w.sum() - n * (v - u)) <= 1e-9 * max(1.0, n)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), data=st.data())
def test_smoothed_on_grid_equals_Z(n, data):
    k = data.draw(st.integers(0, n))
    ce = ce_for(n, seed=k)
    assert abs(eval_Zs_weights(ce, 0.0, k / n) - eval_Z(ce, k / n)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), a=st.floats(0, 1), b=st.floats(0, 1), c=st.floats(0, 1))
def test_smoothed_additivity(n, a, b, c):
    u, v, w = sorted((a, b, c))
    ce = ce_for(n, seed=n)
    assert abs(eval_Zs_interval(ce, u, w) - eval_Zs_interval(ce, u, v) - eval_Zs_interval(ce, v, w)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 200), u=st.floats(0, 1), v=st.floats(0, 1), v2=st.floats(0, 1),
       seed=st.integers(0, 1000))
def test_smoothed_path_continuity(n, u, v, v2, seed):
    row = gen_iid(n, seed=seed)
    ce = centered(row, lipschitz(0.7))
    lo = min(u, v, v2)
    v, v2 = max(v, lo), max(v2, lo)
    diff = abs(eval_Zs_interval(ce, lo, v) - eval_Zs_interval(ce, lo, v2))
    # envelope of the lipschitz ball is 1, so each centered value is at most 2 in size
    assert diff <= math.sqrt(n) * abs(v - v2) * 2 * 1.0 + 1e-12


def test_smoothed_union_disjoint_sum():
    ce = ce_for(77)
    iv = [(0.1, 0.25), (0.5, 0.9)]
    assert abs(eval_Zs_union(ce, iv) - sum(eval_Zs_interval(ce, a, b) for a, b in iv)) <= 1e-12
    with pytest.raises(ValueError):
        eval_Zs_union(ce, [(0.1, 0.5), (0.4, 0.6)])


def test_interval_validation():
    with pytest.raises(ValueError):
        eval_Zs_interval(ce_for(5), 0.6, 0.2)


def test_batched_evaluation_matches_rows():
    X = simulate(MDependent(1), 33, 6, seed=2)
    f = halfline(0.6)
    z = f(X) - 0.6
    batch = eval_Zs_interval(z, 0.13, 0.71)
    for r in range(6):
        assert abs(batch[r] - eval_Zs_weights(z[r], 0.13, 0.71)) <= 1e-12


def test_interval_symdiff():
    assert interval_symdiff((0.0, 0.5), (0.25, 0.75)) == pytest.approx(0.5)
    assert interval_symdiff((0.0, 0.2), (0.3, 0.4)) == pytest.approx(0.3)


def test_modulus_delta_zero_and_full():
    rng = np.random.default_rng(0)
    times = np.linspace(0, 1, 6)
    fd = np.array([[0.0, 0.4], [0.4, 0.0]])
    d = tau_matrix(times, fd)
    e = rng.normal(size=(3, d.shape[0]))
    with pytest.warns(RuntimeWarning):
        assert np.all(modulus(e, d, 0.0) == 0.0)
    full = modulus(e, d, 10.0)
    naive = [max(abs(e[r, a] - e[r, b]) for a in range(12) for b in range(12)) for r in range(3)]
    assert np.allclose(full, naive, rtol=0, atol=0)


def test_modulus_refinement_never_decreases():
    ce = ce_for(64)
    coarse_t = np.linspace(0, 1, 5)
    fine_t = np.linspace(0, 1, 17)
    ec = np.array([eval_Z(ce, t) for t in coarse_t])
    ef = np.array([eval_Z(ce, t) for t in fine_t])
    one = np.zeros((1, 1))
    for delta in (0.1, 0.3, 1.0):
        assert modulus(ef, tau_matrix(fine_t, one), delta, warn=False) >= \
            modulus(ec, tau_matrix(coarse_t, one), delta, warn=False)


def test_tau_s_matrix_structure():
    iv = [(0.0, 0.5), (0.25, 0.75)]
    fd = np.array([[0.0, 0.1], [0.1, 0.0]])
    d = tau_s_matrix(iv, fd)
    assert d.shape == (4, 4)
    assert np.allclose(np.diag(d), 0.0)
    assert d[0, 3] == pytest.approx(math.sqrt(0.5) + 0.1)
