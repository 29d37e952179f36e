"""Solver pieces: weights, prox, step size, FISTA, reweighted outer loop."""

import numpy as np
import pytest

from gswpe.mclp import BinProblem, DelayProfile, build_bin_problem, build_bin_problems
from gswpe.solver import (
    LAMBDA_C_GRID,
    SolverConfig,
    composite_objective,
    compute_weights,
    fista_solve,
    largest_eigenvalue,
    normal_equations,
    prox_group,
    reweighted_solve,
)
from gswpe.stft import StftConfig, analyze


def _toy_problem(seed=0, n_mics=3, n_frames=64, n_taps=4, p=0.5):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n_mics, n_frames)) + 1j * rng.standard_normal(
        (n_mics, n_frames)
    )
    prob = build_bin_problem(data, DelayProfile((2,) * n_mics), n_taps, p)
    return prob, rng


# --- config -------------------------------------------------------------------


def test_config_defaults_match_operating_point():
    cfg = SolverConfig()
    assert cfg.p == 0.5
    assert cfg.n_reweight_iters == 10
    assert cfg.n_fista_iters == 50
    assert cfg.filter_length == 20
    assert cfg.base_delay == 2


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(p=0.0)
    with pytest.raises(ValueError):
        SolverConfig(p=1.5)
    with pytest.raises(ValueError):
        SolverConfig(n_reweight_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(lambda_c=-1e-3)
    with pytest.raises(ValueError):
        SolverConfig(weight_floor=0.0)


def test_lambda_grid_values():
    assert LAMBDA_C_GRID == (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)


# --- weights ------------------------------------------------------------------


def test_compute_weights_oracle():
    # |d|^2 = 4, p = 0.5: (4 + 1e-8)^(-0.75)
    w = compute_weights(np.array([2.0 + 0j]), p=0.5)
    assert w[0] == pytest.approx((4.0 + 1e-8) ** -0.75, rel=1e-12)
    assert w[0] == pytest.approx(0.35355339, rel=1e-7)


def test_compute_weights_p2_is_flat():
    rng = np.random.default_rng(0)
    d = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    np.testing.assert_array_equal(compute_weights(d, p=2.0), np.ones(100))


def test_compute_weights_rejects_nonfinite():
    with pytest.raises(ValueError):
        compute_weights(np.array([1.0, np.inf]), p=0.5)
    with pytest.raises(ValueError):
        compute_weights(np.ones(3), p=0.5, floor=0.0)


# --- prox ---------------------------------------------------------------------


def test_prox_group_oracle():
    # non-reference group (3, 4) has norm 5; threshold 1 scales by 4/5
    g = np.array([9.0, 9.0, 3.0, 4.0])
    out = prox_group(g, 1.0, n_taps=2)
    np.testing.assert_allclose(out, [9.0, 9.0, 2.4, 3.2], atol=1e-15)


def test_prox_group_reference_exempt():
    g = np.array([0.3, 0.4, 0.3, 0.4])
    out = prox_group(g, 10.0, n_taps=2)
    np.testing.assert_array_equal(out[:2], g[:2])  # untouched at any threshold
    np.testing.assert_array_equal(out[2:], [0.0, 0.0])  # killed


def test_prox_group_zero_group_stays_zero():
    g = np.array([1.0, 1.0, 0.0, 0.0])
    out = prox_group(g, 0.5, n_taps=2)
    np.testing.assert_array_equal(out[2:], [0.0, 0.0])


def test_prox_group_complex_and_batched_thresholds():
    rng = np.random.default_rng(1)
    g = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    thr = np.abs(rng.standard_normal(5))
    out = prox_group(g, thr, n_taps=2)
    for i in range(5):
        np.testing.assert_allclose(out[i], prox_group(g[i], thr[i], 2), atol=1e-15)


def test_prox_group_minimizes_its_objective():
    # prox output must beat a cloud of perturbed candidates on
    # 0.5||v - g||^2 + threshold * sum_{m>=2} ||v_m||
    rng = np.random.default_rng(2)
    g = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    thr = 0.7
    out = prox_group(g, thr, n_taps=2)

    def objective(v):
        groups = v.reshape(4, 2)
        pen = sum(np.linalg.norm(groups[m]) for m in range(1, 4))
        return 0.5 * np.linalg.norm(v - g) ** 2 + thr * pen

    best = objective(out)
    for _ in range(300):
        cand = out + 1e-3 * (
            rng.standard_normal(8) + 1j * rng.standard_normal(8)
        )
        cand[:2] = out[:2]  # reference coordinates are unconstrained-optimal
        assert objective(cand) >= best - 1e-12


def test_prox_group_rejects_negative_threshold():
    with pytest.raises(ValueError):
        prox_group(np.ones(4), -0.1, n_taps=2)


# --- step size ----------------------------------------------------------------


def test_largest_eigenvalue_diagonal():
    assert largest_eigenvalue(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-5)


def test_largest_eigenvalue_matches_eigvalsh():
    rng = np.random.default_rng(3)
    b = rng.standard_normal((30, 20)) + 1j * rng.standard_normal((30, 20))
    a = b.conj().T @ b
    top = largest_eigenvalue(a, n_iters=5000, tol=1e-12)
    exact = np.linalg.eigvalsh(a)[-1]
    assert top == pytest.approx(exact, rel=1e-6)


def test_largest_eigenvalue_zero_matrix():
    assert largest_eigenvalue(np.zeros((4, 4))) == 0.0


def test_largest_eigenvalue_batch_independent():
    rng = np.random.default_rng(4)
    mats = []
    for _ in range(6):
        b = rng.standard_normal((12, 8)) + 1j * rng.standard_normal((12, 8))
        mats.append(b.conj().T @ b)
    batch = np.stack(mats)
    batched = largest_eigenvalue(batch)
    singles = np.array([largest_eigenvalue(m) for m in mats])
    np.testing.assert_array_equal(batched, singles)  # bitwise, by construction


def test_largest_eigenvalue_fallback_overestimates():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    exact = np.linalg.eigvalsh(a)[-1]
    # one iteration cannot meet the tolerance; the Gershgorin row bound steps in
    bound = largest_eigenvalue(a, n_iters=1)
    assert bound == pytest.approx(2.5)
    assert bound >= exact


def test_largest_eigenvalue_warm_start():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    exact_val = np.linalg.eigvalsh(a)[-1]
    exact_vec = np.linalg.eigh(a)[1][:, -1]
    # starting at the eigenvector, the Rayleigh quotient settles immediately
    top = largest_eigenvalue(a, n_iters=3, v0=exact_vec)
    assert top == pytest.approx(exact_val, rel=1e-12)


# --- normal equations ---------------------------------------------------------


def test_normal_equations_oracle():
    prob, rng = _toy_problem(n_frames=20)
    w = np.abs(rng.standard_normal(20)) + 0.1
    a, b = normal_equations(prob, w)
    x = prob.regressor
    a_direct = np.zeros((12, 12), dtype=complex)
    b_direct = np.zeros(12, dtype=complex)
    for i in range(12):
        b_direct[i] = np.sum(np.conj(x[:, i]) * w * prob.x1)
        for j in range(12):
            a_direct[i, j] = np.sum(np.conj(x[:, i]) * w * x[:, j])
    np.testing.assert_allclose(a, a_direct, atol=1e-12)
    np.testing.assert_allclose(b, b_direct, atol=1e-12)
    # Hermitian PSD by construction
    np.testing.assert_allclose(a, a.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(a)[0] > -1e-10


# --- FISTA --------------------------------------------------------------------


def test_fista_reaches_least_squares_solution():
    prob, rng = _toy_problem(seed=5)
    w = np.ones(prob.n_frames)
    a, b = normal_equations(prob, w)
    exact = np.linalg.solve(a, b)
    g = fista_solve(prob, w, lam=0.0, n_iters=400)
    rel = np.linalg.norm(g - exact) / np.linalg.norm(exact)
    assert rel < 1e-3
    stationarity = np.linalg.norm(a @ g - b) / np.linalg.norm(b)
    assert stationarity < 1e-6


def test_fista_warm_start_stays_at_solution():
    prob, rng = _toy_problem(seed=6)
    w = np.ones(prob.n_frames)
    a, b = normal_equations(prob, w)
    exact = np.linalg.solve(a, b)
    g = fista_solve(prob, w, lam=0.0, n_iters=5, g_init=exact)
    assert np.linalg.norm(g - exact) / np.linalg.norm(exact) < 1e-10


def test_ista_monotone_descent_on_composite():
    # momentum off: each proximal gradient step must decrease
    # ||x1 - X g||_W^2 + 2 lam sum_{m>=2} ||g_m||
    prob, rng = _toy_problem(seed=7)
    w = np.abs(rng.standard_normal(prob.n_frames)) + 0.2
    _, b = normal_equations(prob, w)
    lam = 0.05 * np.max(np.abs(b))
    objs = []
    for k in range(25):
        g = fista_solve(prob, w, lam=lam, n_iters=k + 1, momentum=False)
        objs.append(float(composite_objective(prob, g, w, lam)))
    objs = np.array(objs)
    assert np.all(objs[1:] <= objs[:-1] * (1 + 1e-12) + 1e-15)


def test_fista_with_momentum_converges_faster_than_ista():
    # compare mid-trajectory; near the solution momentum overshoot can put
    # plain ISTA ahead on easy problems
    prob, _ = _toy_problem(seed=8)
    w = np.ones(prob.n_frames)
    a, b = normal_equations(prob, w)
    exact = np.linalg.solve(a, b)
    fast = fista_solve(prob, w, lam=0.0, n_iters=12)
    slow = fista_solve(prob, w, lam=0.0, n_iters=12, momentum=False)
    err_fast = np.linalg.norm(fast - exact)
    err_slow = np.linalg.norm(slow - exact)
    assert err_fast < err_slow


def test_large_penalty_zeroes_all_candidate_groups():
    prob, rng = _toy_problem(seed=9)
    w = np.ones(prob.n_frames)
    _, b = normal_equations(prob, w)
    g = fista_solve(prob, w, lam=1e3 * np.max(np.abs(b)), n_iters=100)
    groups = g.reshape(3, 4)
    assert np.all(groups[1:] == 0.0)  # killed by the prox
    assert np.any(groups[0] != 0.0)  # reference group survives


# --- reweighted outer loop ------------------------------------------------------


def test_reweighted_solve_shapes_and_descent():
    prob, _ = _toy_problem(seed=10)
    config = SolverConfig(
        filter_length=4, lambda_c=0.0, n_reweight_iters=5, n_fista_iters=40
    )
    res = reweighted_solve(prob, config)
    assert res.filters.shape == (12,)
    assert res.residual.shape == (prob.n_frames,)
    assert res.objectives.shape == (5,)
    # prediction must beat leaving the reference untouched
    passthrough = np.sum(np.abs(prob.x1) ** 0.5)
    assert res.objectives[-1] < passthrough


def test_reweighted_solve_rejects_mismatched_taps():
    prob, _ = _toy_problem()
    with pytest.raises(ValueError):
        reweighted_solve(prob, SolverConfig(filter_length=20))


def test_reweighted_solve_batch_invariance_bitwise():
    # solving all bins at once and solving one bin alone must agree exactly;
    # selection relies on this to share one cost table across methods
    rng = np.random.default_rng(11)
    cfg = StftConfig(frame_size=64, frame_shift=16)
    spec = analyze(rng.standard_normal((3, 800)), cfg)
    prob = build_bin_problems(spec, DelayProfile((2, 2, 2)), 4, 0.5)
    config = SolverConfig(
        filter_length=4, lambda_c=1e-2, n_reweight_iters=4, n_fista_iters=20
    )
    batched = reweighted_solve(prob, config)
    for f in (0, 7, 25):
        single = BinProblem(
            x1=prob.x1[f],
            regressor=prob.regressor[f],
            n_mics=prob.n_mics,
            n_taps=prob.n_taps,
            delays=prob.delays,
            p=prob.p,
            x1_scale=prob.x1_scale[f],
            block_scale=prob.block_scale[f],
            degenerate=prob.degenerate[f],
        )
        alone = reweighted_solve(single, config)
        np.testing.assert_array_equal(batched.filters[f], alone.filters)
        np.testing.assert_array_equal(batched.residual[f], alone.residual)
        np.testing.assert_array_equal(batched.alphas[f], alone.alphas)
        np.testing.assert_array_equal(batched.lambdas[f], alone.lambdas)


def test_reweighted_solve_degenerate_bin_passthrough():
    data = np.zeros((2, 2, 30), dtype=complex)
    rng = np.random.default_rng(12)
    data[1] = rng.standard_normal((2, 30)) + 1j * rng.standard_normal((2, 30))
    # bin 0: silent reference and candidate; bin 1: live
    prob = build_bin_problem(data[:, 0], DelayProfile((2, 2)), 4, 0.5)
    assert prob.degenerate  # silent reference flagged at build time

    batch = BinProblem(
        x1=np.stack([np.zeros(30, dtype=complex), data[0, 1]]),
        regressor=np.stack(
            [np.zeros((30, 8), dtype=complex)] * 2
        ),
        n_mics=2,
        n_taps=4,
        delays=DelayProfile((2, 2)),
        p=0.5,
        x1_scale=np.ones(2),
        block_scale=np.ones((2, 2)),
        degenerate=np.array([True, False]),
    )
    config = SolverConfig(filter_length=4, n_reweight_iters=3, n_fista_iters=10)
    res = reweighted_solve(batch, config)
    np.testing.assert_array_equal(res.filters[0], np.zeros(8))
    np.testing.assert_array_equal(res.residual[0], batch.x1[0])
    assert np.all(res.alphas[0] == 0.0)
    # the all-zero regressor makes bin 1 dead too (top eigenvalue 0)
    assert res.degenerate[1]
    np.testing.assert_array_equal(res.residual[1], batch.x1[1])


def test_reweighted_solve_records_penalty_weights():
    prob, _ = _toy_problem(seed=13)
    config = SolverConfig(
        filter_length=4, lambda_c=1e-2, n_reweight_iters=3, n_fista_iters=10
    )
    res = reweighted_solve(prob, config)
    assert np.all(res.lambdas > 0)
    assert np.all(res.alphas > 0)
    zero = reweighted_solve(prob, SolverConfig(
        filter_length=4, lambda_c=0.0, n_reweight_iters=3, n_fista_iters=10
    ))
    assert np.all(zero.lambdas == 0.0)


def test_composite_objective_oracle():
    prob, rng = _toy_problem(seed=14)
    g = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    w = np.abs(rng.standard_normal(prob.n_frames)) + 0.1
    lam = 0.3
    d = prob.x1 - prob.regressor @ g
    groups = g.reshape(3, 4)
    expected = np.sum(w * np.abs(d) ** 2) + 2 * lam * (
        np.linalg.norm(groups[1]) + np.linalg.norm(groups[2])
    )
    assert composite_objective(prob, g, w, lam) == pytest.approx(expected, rel=1e-12)
