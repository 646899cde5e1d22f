import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgsense.codebook import FRAME, SIEVE, Codebook, CodebookSpec, build_dense
from dgsense.recovery import (
    NOISELESS_LAMBDA,
    SolverError,
    SparseSignal,
    generate_signal,
    kkt_residual,
    lasso_cd,
    lasso_objective,
    lasso_solve,
    lasso_solve_batch,
    measure,
    select_lambda,
    soft_threshold,
    support_loss,
    top_k,
)

DG70 = CodebookSpec(7, 0, FRAME)


def test_generate_signal():
    s = generate_signal(64, 64, seed=1)
    assert s.k == 64 and np.all(s.dense() != 0)
    a, b = generate_signal(1000, 7, seed=3), generate_signal(1000, 7, seed=3)
    assert np.array_equal(a.support, b.support) and np.array_equal(a.values, b.values)
    assert set(generate_signal(50, 10, seed=0, amplitude=2.5).values.tolist()) <= {-2.5, 2.5}
    with pytest.raises(ValueError):
        generate_signal(10, 11, seed=0)
    with pytest.raises(ValueError):
        generate_signal(10, 0, seed=0)


def test_sign_balance():
    rng = np.random.default_rng(11)
    n = 10_000
    pos = sum(int(generate_signal(100, 1, rng).values[0] > 0) for _ in range(n))
    assert abs(pos / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_measure_noiseless_is_exact():
    cb = Codebook(CodebookSpec(5, 1, SIEVE))
    s = generate_signal(cb.shape[1], 4, seed=2)
    m = measure(cb, s)
    np.testing.assert_array_equal(m.f, cb.apply(s.dense()))
    assert m.sigma_sq == 0


def test_measure_deterministic_and_sigma():
    spec = CodebookSpec(5, 0, FRAME)
    s = generate_signal(spec.n_cols, 3, seed=0)
    a = measure(spec, s, 0.1, 0.02, seed=5)
    b = measure(spec, s, 0.1, 0.02, seed=5)
    np.testing.assert_array_equal(a.f, b.f)
    assert a.sigma_sq == pytest.approx(spec.redundancy * 0.02**2 + 0.1**2)
    with pytest.raises(ValueError):
        measure(spec, s, -1.0)


def test_data_noise_covariance():
    # a tight frame maps iid data noise to white measurement noise of variance (C/N) sigma_d^2
    spec = CodebookSpec(3, 0, FRAME)
    A = build_dense(spec)
    sigma_d, n = 0.3, 10_000
    rng = np.random.default_rng(8)
    zero = np.zeros(spec.n_cols)
    F = np.array([measure(A, zero, 0.0, sigma_d, seed=rng).f for _ in range(n)])
    cov = F.T @ F.conj() / n
    target = spec.redundancy * sigma_d**2
    se = target / math.sqrt(n)
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() < 5 * se
    assert np.abs(np.diag(cov) - target).max() < 5 * se


def test_select_lambda():
    assert select_lambda(16384, 1.0, noiseless=True) == NOISELESS_LAMBDA
    assert select_lambda(2**14, 1.0) == pytest.approx(2 * math.sqrt(2 * math.log(16384)), rel=1e-14)
    assert select_lambda(2**14, 1.0) == pytest.approx(8.810930, abs=1e-6)
    assert select_lambda(2**14, 0.0) == 0.0
    with pytest.raises(ValueError):
        select_lambda(10, -1.0)


def test_support_loss():
    s = SparseSignal(10, np.array([1, 4, 7]), np.array([1.0, -1.0, 1.0]))
    assert support_loss(s, s.dense()) == 0
    assert support_loss(s, np.zeros(10)) == 1
    assert support_loss(SparseSignal(10, np.array([0, 1]), np.ones(2)), np.zeros(10)) == 1
    est = np.zeros(10)
    est[[0, 2, 3]] = 5
    assert support_loss(s, est) == 1
    est[4] = 9
    assert support_loss(s, est) == pytest.approx(2 / 3)


def test_top_k_ties_go_low():
    assert top_k(np.array([1, 3, 3, 3, 0]), 2).tolist() == [1, 2]
    assert top_k(np.zeros(5), 2).tolist() == [0, 1]


@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False), st.floats(0, 100))
def test_soft_threshold(u, t):
    out = soft_threshold(np.array([u]), t)[0]
    assert abs(out) == pytest.approx(max(abs(u) - t, 0), abs=1e-9)
    if abs(out) > 1e-12:
        assert abs(out / abs(out) - u / abs(u)) < 1e-9


def test_zero_signal_gives_zero():
    r = lasso_solve(DG70, np.zeros(DG70.n_rows, dtype=complex), 0.1)
    assert not r.estimate.any() and r.converged


def test_single_atom_recovered():
    s = generate_signal(DG70.n_cols, 1, seed=21)
    r = lasso_solve(DG70, measure(DG70, s).f, NOISELESS_LAMBDA).score(s)
    assert r.zero_one_loss == 0
    assert r.converged


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matches_coordinate_descent(seed):
    spec = CodebookSpec(3, 0, FRAME)
    A = build_dense(spec)
    rng = np.random.default_rng(seed)
    s = generate_signal(spec.n_cols, 3, rng)
    f = measure(A, s, 0.05, seed=rng).f
    lam = 0.05
    x_cd = lasso_cd(A, f, lam)
    x_sp = lasso_solve(A, f, lam, tol=1e-14, max_iters=20000).estimate
    assert lasso_objective(A, f, x_sp, lam) == pytest.approx(lasso_objective(A, f, x_cd, lam), abs=1e-6)
    assert kkt_residual(A, f, x_cd, lam) < 1e-6


@pytest.mark.parametrize("m,r,variant", [(3, 1, SIEVE), (5, 0, FRAME), (5, 1, SIEVE)])
def test_kkt_at_convergence(m, r, variant):
    spec = CodebookSpec(m, r, variant)
    s = generate_signal(spec.n_cols, 3, seed=m + r)
    f = measure(spec, s).f
    lam = 1e-3
    res = lasso_solve(spec, f, lam, tol=1e-14, max_iters=20000)
    assert kkt_residual(spec, f, res.estimate, lam) < 1e-6


def test_objective_not_above_truth():
    s = generate_signal(DG70.n_cols, 5, seed=4)
    f = measure(DG70, s).f
    lam = 1e-3
    res = lasso_solve(DG70, f, lam)
    assert lasso_objective(DG70, f, res.estimate, lam) <= lasso_objective(DG70, f, s.dense(), lam) + 1e-9


def test_objective_trace_windowed_nonincreasing():
    s = generate_signal(DG70.n_cols, 8, seed=6)
    res = lasso_solve(DG70, measure(DG70, s, 0.05, seed=1).f, 0.05, continuation=False)
    tr = res.objective_trace
    # every accepted value sits below the max of the previous window
    for i in range(1, len(tr)):
        assert tr[i] <= max(tr[max(0, i - 5) : i]) + 1e-12


def test_deterministic():
    s = generate_signal(DG70.n_cols, 6, seed=9)
    f = measure(DG70, s, 0.05, seed=3).f
    a = lasso_solve(DG70, f, 0.02)
    b = lasso_solve(DG70, f, 0.02)
    np.testing.assert_array_equal(a.estimate, b.estimate)
    assert a.objective_trace == b.objective_trace and a.iterations == b.iterations


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    F = np.array([measure(DG70, generate_signal(DG70.n_cols, 4, rng), 0.05, seed=rng).f for _ in range(3)])
    batch = lasso_solve_batch(DG70, F, 0.02)
    # batched products round differently, so compare objectives and supports
    for f, b in zip(F, batch):
        single = lasso_solve(DG70, f, 0.02)
        ob, os_ = (lasso_objective(DG70, f, r.estimate, 0.02) for r in (b, single))
        assert ob == pytest.approx(os_, rel=1e-6)
        assert np.array_equal(top_k(b.estimate, 4), top_k(single.estimate, 4))


def test_divergence_raises():
    s = generate_signal(DG70.n_cols, 3, seed=0)
    f = measure(DG70, s).f
    with pytest.raises(SolverError) as info:
        lasso_solve(DG70, f, 1e-6, alpha_min=1e-6, alpha_max=1e-4, continuation=False)
    assert info.value.trace


def test_input_validation():
    with pytest.raises(ValueError):
        lasso_solve(DG70, np.zeros(5), 0.1)
    with pytest.raises(ValueError):
        lasso_solve(DG70, np.zeros(DG70.n_rows), -1.0)
    with pytest.raises(ValueError):
        lasso_solve(DG70, np.zeros((2, DG70.n_rows)), 0.1)


def test_result_dict():
    s = generate_signal(DG70.n_cols, 2, seed=0)
    d = lasso_solve(DG70, measure(DG70, s).f, NOISELESS_LAMBDA).score(s).to_dict()
    assert d["zero_one_loss"] == 0 and len(d["recovered_support"]) == 2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_loss_in_unit_interval(seed):
    spec = CodebookSpec(5, 1, SIEVE)
    s = generate_signal(spec.n_cols, 6, seed)
    r = lasso_solve(spec, measure(spec, s, 0.2, seed=seed).f, 0.1, max_iters=300).score(s)
    assert 0 <= r.zero_one_loss <= 1


@pytest.mark.slow
def test_k10_noiseless_dg70():
    rng = np.random.default_rng(10)
    sigs = [generate_signal(DG70.n_cols, 10, rng) for _ in range(200)]
    F = np.array([measure(DG70, s).f for s in sigs])
    # solver settings of the sweeps
    res = lasso_solve_batch(DG70, F, NOISELESS_LAMBDA, tol=1e-6, max_iters=500)
    loss = np.mean([support_loss(s, r.estimate) for s, r in zip(sigs, res)])
    assert loss < 0.01
