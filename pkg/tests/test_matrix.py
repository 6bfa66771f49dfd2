import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cee.errors import InputError, UnequalIndicesError
from cee.interp import InterpolationProblem, build_data_matrices, covariance_problem, normalize
from cee.matrix import (
    MatrixPrior,
    build_VN,
    build_canonical,
    coeffs_to_state,
    compute_matrix_uU,
    matrix_degree_and_reduce,
    matrix_reduced_residual,
    path_pick_margins,
    solve_matrix_cee,
    state_to_coeffs,
)
from cee.scalar import SpectralPrior, compute_uU, reduced_residual, solve_covariance

from generators import (
    carath_realization,
    random_matrix_case,
    random_matrix_filter,
    random_monic_schur,
    realization_lags,
    well_posed,
)

seeds = st.integers(min_value=0, max_value=2**31)


def prior_of(desc):
    return SpectralPrior(np.asarray(desc)[1:])


def lag_problem(C):
    """Matrix covariance data ``(C_0/2, C_1, ..., C_n)`` at the origin."""
    W = np.array(C, dtype=complex)
    W[0] = 0.5 * W[0]
    return InterpolationProblem((0.0,), (W,), W.shape[1])


def as_matrix_problem(c):
    return InterpolationProblem((0.0,), (np.asarray(c, dtype=complex).reshape(-1, 1, 1),), 1)


# ---------------------------------------------------------------- structure


def test_scalar_canonical_structure():
    st_ = build_canonical(1, 4)
    np.testing.assert_array_equal(st_.H, [[1, 0, 0, 0]])
    np.testing.assert_array_equal(st_.J, np.eye(4, k=1))
    for k, Nk in enumerate(st_.N):
        np.testing.assert_array_equal(Nk, np.eye(1, 4, k))


def test_canonical_identity_and_last_selector():
    st_ = build_canonical(3, 4)
    for z in (0.3 - 0.8j, 2.5, -0.4j):
        assert st_.identity_residual(z) < 1e-12
    np.testing.assert_array_equal(st_.N[-1] @ st_.J, 0.0)
    assert st_.equal_indices and st_.t == 4


def test_unequal_indices():
    st_ = build_canonical(2, 3, (2, 4))
    assert not st_.equal_indices and st_.t == 4
    assert st_.identity_residual(0.6 + 0.1j) < 1e-12
    (prob, *_), _ = well_posed(random_matrix_case, 0, n=3)
    with pytest.raises(UnequalIndicesError):
        compute_matrix_uU(normalize(prob)[0], st_)


def test_invalid_indices():
    with pytest.raises(InputError):
        build_canonical(2, 3, (2, 3))
    with pytest.raises(InputError):
        build_canonical(0, 3)


def test_state_coefficient_round_trip():
    C = np.random.default_rng(0).normal(size=(4, 3, 3))
    full = state_to_coeffs(coeffs_to_state(C), 3)
    np.testing.assert_array_equal(full[0], np.eye(3))
    np.testing.assert_array_equal(full[1:], C)


def test_VN_for_covariance_data():
    dm = build_data_matrices(covariance_problem([0.5, 0.2, 0.1, 0.05]))
    VN, L, ok = build_VN(build_canonical(1, 3), dm.Z, dm.e)
    np.testing.assert_array_equal(VN, np.vstack([np.zeros((1, 3)), np.eye(3)]))
    assert ok


def test_VN_requires_origin_base():
    dm = build_data_matrices(InterpolationProblem((0.3, -0.2), ([0.5], [0.4])))
    with pytest.raises(InputError):
        build_VN(build_canonical(1, 1), dm.Z, dm.e)


# ---------------------------------------------------------------- u and U


def test_constant_data_give_zero_parameters():
    W = np.zeros((3, 2, 2))
    W[0] = 0.5 * np.eye(2)
    par = compute_matrix_uU(InterpolationProblem((0.0,), (W,), 2))
    assert not np.any(par.u) and not np.any(par.U)


def test_scalar_degeneration_of_parameters():
    (prob, *_), _ = well_posed(random_matrix_case, 1, n=3, ell=1)
    norm = normalize(prob)[0]
    par = compute_matrix_uU(norm)
    jets = tuple(np.asarray(w)[:, 0, 0] for w in norm.jets)
    ref = compute_uU(build_data_matrices(InterpolationProblem(norm.nodes, jets)))
    np.testing.assert_allclose(par.u.ravel(), ref.u, atol=1e-10)
    np.testing.assert_allclose(par.U, ref.U, atol=1e-10)


# ---------------------------------------------------------------- reduced equation


def test_matrix_residual_vanishes_at_start():
    (prob, _, sigma, _), _ = well_posed(random_matrix_case, 2, n=3)
    norm = normalize(prob)[0]
    prior = MatrixPrior.from_scalar(prior_of(sigma), 2)
    res, *_ = matrix_reduced_residual(np.zeros((6, 2)), 0.0, prior, compute_matrix_uU(norm))
    np.testing.assert_allclose(res, 0.0, atol=1e-13)


def test_matrix_jacobians_match_finite_differences():
    (prob, _, sigma, _), _ = well_posed(random_matrix_case, 3, n=2)
    norm = normalize(prob)[0]
    prior = MatrixPrior.from_scalar(prior_of(sigma), 2)
    par = compute_matrix_uU(norm)
    rng = np.random.default_rng(3)
    p, lam, h = 0.05 * rng.normal(size=(4, 2)), 0.7, 1e-6

    def vres(q, l):
        return matrix_reduced_residual(q, l, prior, par)[0].reshape(-1, order="F")

    _, Jp, Jl = matrix_reduced_residual(p, lam, prior, par)
    fd = []
    for c in range(8):
        E = np.zeros(8)
        E[c] = h
        dE = E.reshape((4, 2), order="F")
        fd.append((vres(p + dE, lam) - vres(p - dE, lam)) / (2 * h))
    np.testing.assert_allclose(Jp, np.column_stack(fd), atol=1e-6)
    np.testing.assert_allclose(Jl, (vres(p, lam + h) - vres(p, lam - h)) / (2 * h), atol=1e-6)


def test_matrix_residual_reduces_to_scalar():
    c = [0.5, 0.3, 0.1, -0.05]
    prior = SpectralPrior.from_zeros([0.5, -0.3, 0.2])
    mpar = compute_matrix_uU(as_matrix_problem(c))
    spar = compute_uU(build_data_matrices(covariance_problem(c)))
    p = np.array([0.05, -0.02, 0.01])
    mres, *_ = matrix_reduced_residual(p.reshape(3, 1), 0.4, MatrixPrior.from_scalar(prior, 1), mpar)
    sres, *_ = reduced_residual(p, 0.4, prior, spar)
    np.testing.assert_allclose(mres.ravel(), sres, atol=1e-12)


# ---------------------------------------------------------------- solutions


def test_constant_data_are_trivial():
    W = np.zeros((3, 2, 2), dtype=complex)
    W[0] = 0.5 * np.eye(2)
    sol = solve_matrix_cee(InterpolationProblem((0.0,), (W,), 2))
    np.testing.assert_array_equal(sol.P, 0.0)
    np.testing.assert_array_equal(sol.R, np.eye(2))


def test_scalar_degeneration_of_solution():
    c = [0.5, 0.3, 0.1, -0.05]
    prior = SpectralPrior.from_zeros([0.5, -0.3, 0.2])
    s1 = solve_covariance(c, prior)
    s2 = solve_matrix_cee(as_matrix_problem(c), prior)
    np.testing.assert_allclose(s2.P, s1.P, atol=1e-9)
    np.testing.assert_allclose(s2.A.ravel(), s1.a.tail(), atol=1e-9)
    assert s2.R[0, 0] == pytest.approx(s1.rho, abs=1e-9)


def test_scalar_data_rejected():
    with pytest.raises(InputError):
        solve_matrix_cee(covariance_problem([0.5, 0.3]))


def test_reduction_of_zero_solution():
    W = np.zeros((3, 2, 2), dtype=complex)
    W[0] = 0.5 * np.eye(2)
    plan = matrix_degree_and_reduce(solve_matrix_cee(InterpolationProblem((0.0,), (W,), 2)))
    assert plan.degree == 0


def test_reduction_to_true_degree():
    # degree-2 data solved with n = 3 and a prior sharing the true spectral zeros
    rng = np.random.default_rng(5)
    Ak, sigma, R, filt = random_matrix_filter(2, rng)
    C = realization_lags(*carath_realization(*filt), 3)
    tau = random_monic_schur(1, rng, 0.5)
    sol = solve_matrix_cee(lag_problem(C), prior_of(np.convolve(sigma, tau)), rank_tol=1e-6)
    assert sol.diagnostics["degree"] == 4
    plan = matrix_degree_and_reduce(sol, tol=1e-6)
    assert plan.reduced_index == 2 and plan.reduced_problem.n == 2
    assert len(plan.removed_zeros) == 2 and plan.reduced_prior.ell == 2


def test_full_rank_needs_no_reduction():
    (prob, _, sigma, _), _ = well_posed(random_matrix_case, 4, n=2)
    sol = solve_matrix_cee(prob, prior_of(sigma))
    plan = matrix_degree_and_reduce(sol, tol=1e-8)
    assert plan.degree == 4 and plan.reduced_index == 2


# ---------------------------------------------------------------- properties


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_matrix_solution_invariants(seed):
    (prob, _, _, _), _ = well_posed(random_matrix_case, seed)
    prior = prior_of(random_monic_schur(prob.n, np.random.default_rng(seed), 0.8))
    sol = solve_matrix_cee(prob, prior)
    d = sol.diagnostics
    assert d["interpolation_residual"] < 1e-8
    assert d["spectral_identity_residual"] < 1e-8
    assert d["cee_residual"] < 1e-8
    assert d["max_eig_HPH"] < 1.0 and d["min_hermitian_eig"] > 0
    assert path_pick_margins(sol).min() > 0


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_true_prior_recovers_matrix_filter(seed):
    (prob, Ak, sigma, R), _ = well_posed(random_matrix_case, seed)
    sol = solve_matrix_cee(prob, prior_of(sigma))
    A, Rhat = sol.original_system()
    np.testing.assert_allclose(A[1:], Ak, atol=1e-8)
    np.testing.assert_allclose(Rhat, R, atol=1e-8 * max(1.0, np.abs(R).max()))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_matrix_endpoint_independent_of_step_size(seed):
    (prob, _, sigma, _), _ = well_posed(random_matrix_case, seed)
    p1 = solve_matrix_cee(prob, prior_of(sigma)).p
    p2 = solve_matrix_cee(prob, prior_of(sigma), step0=0.013).p
    np.testing.assert_allclose(p1, p2, atol=1e-8)
