import numpy as np
import pytest

from cee.apps import (
    FilterBank,
    PlantSpec,
    ShapingFilter,
    covariance_data,
    carath_jets,
    estimate_covariances,
    exact_covariances,
    filter_from_solution,
    model_reduce_pipeline,
    sensitivity_shape,
    simulate,
    three_estimate,
)
from cee.errors import InfeasibleError, InputError
from cee.poly import Polynomial
from cee.scalar import SpectralPrior, solve_cee

from generators import carath_realization, random_matrix_filter, random_monic_schur, realization_lags

E = np.exp
PI = np.pi

# degree-7 reference shaping filter with gain 0.5
FILTER_ZEROS = [0.9 * E(2.6j), 0.9 * E(-2.6j), 0.5 * E(1.3j), 0.5 * E(-1.3j), 0.94 * E(1.6j), 0.94 * E(-1.6j), 0.3]
FILTER_POLES = [0.1 * E(1.9j), 0.1 * E(-1.9j), 0.8 * E(1.35j), 0.8 * E(-1.35j), 0.7 * E(2.1j), 0.7 * E(-2.1j), 0.1]
BANK = FilterBank((0.0, 0.98 * E(2.1j), 0.98 * E(-2.1j), 0.99, -0.99), (4, 1, 1, 1, 1))


def degree7_filter():
    return ShapingFilter.scalar(0.5, Polynomial.from_roots(FILTER_ZEROS), Polynomial.from_roots(FILTER_POLES))


def scalar_filter(a_desc, sigma_desc, rho):
    return ShapingFilter.scalar(rho, Polynomial(np.asarray(sigma_desc)[::-1]), Polynomial(np.asarray(a_desc)[::-1]))


def ar1(rho=1.0):
    return ShapingFilter.scalar(rho, Polynomial([0.0, 1.0]), Polynomial([-0.3, 1.0]))


def shaping_plant(bands=((0.0, 0.3, -1.0), (2.5, PI, 0.5))):
    num = Polynomial.from_roots([1.1 * E(19j * PI / 20), 1.1 * E(-19j * PI / 20)])
    den = Polynomial.from_roots([0.0, 1.1, 1.1j, -1.1j])
    zeros = [0.98 * E(7j * PI / 15), 0.98 * E(-7j * PI / 15), 0.97j, -0.97j, 0.0, -0.1]
    return PlantSpec(num, den, 5.0, zeros, bands=list(bands))


# ---------------------------------------------------------------- filters and simulation


def test_unstable_filter_rejected():
    with pytest.raises(InputError):
        ShapingFilter.scalar(1.0, Polynomial([0.0, 1.0]), Polynomial([-1.2, 1.0]))


def test_all_pass_filter_gives_white_noise():
    N = 100_000
    a = Polynomial([0.2, -0.5, 1.0])
    y = simulate(ShapingFilter.scalar(1.0, a, a), N, seed=3)
    c = estimate_covariances(y, 2)
    assert abs(c[1] / c[0]) < 3 / np.sqrt(N)
    assert c[0] == pytest.approx(1.0, abs=4 * np.sqrt(2 / N))


def test_ar1_sample_correlation():
    N = 100_000
    c = estimate_covariances(simulate(ar1(), N, seed=4), 1)
    assert abs(c[1] / c[0] - 0.3) < 3 / np.sqrt(N)


def test_simulation_is_reproducible():
    np.testing.assert_array_equal(simulate(ar1(), 500, seed=9), simulate(ar1(), 500, seed=9))
    assert not np.array_equal(simulate(ar1(), 500, seed=9), simulate(ar1(), 500, seed=10))


def test_degree_seven_filter_runs_stably():
    filt = degree7_filter()
    y = simulate(filt, 100_000, seed=1)
    assert y.shape == (100_000,) and np.all(np.isfinite(y))
    c0 = exact_covariances(filt, 0)[0]
    assert np.var(y) == pytest.approx(c0, rel=0.05)


def test_vector_simulation_matches_exact_covariances():
    Ak, sigma, R, _ = random_matrix_filter(2, np.random.default_rng(2))
    filt = ShapingFilter(Ak, np.einsum("k,ij->kij", sigma[1:], np.eye(2)), R)
    y = simulate(filt, 100_000, seed=2)
    C = estimate_covariances(y, 2)
    np.testing.assert_allclose(C, exact_covariances(filt, 2), atol=0.05 * np.abs(C[0]).max())


# ---------------------------------------------------------------- covariance estimates


def test_zero_series_gives_zero_covariances():
    np.testing.assert_array_equal(estimate_covariances(np.zeros(50), 3), np.zeros(4))


def test_estimator_divisor():
    # record y_0..y_2: C_1 = (y_1 y_0 + y_2 y_1) / 2
    c = estimate_covariances(np.array([1.0, 2.0, 3.0]), 1)
    np.testing.assert_allclose(c, [14 / 3, 4.0], atol=1e-15)


def test_white_noise_estimates():
    N = 200_000
    y = np.random.default_rng(0).standard_normal(N)
    c = estimate_covariances(y, 4)
    assert c[0] == pytest.approx(1.0, abs=4 * np.sqrt(2 / N))
    assert np.all(np.abs(c[1:]) < 4 / np.sqrt(N))


def test_short_record_rejected():
    with pytest.raises(InputError):
        estimate_covariances(np.ones(3), 3)


def test_non_positive_estimate_rejected():
    with pytest.raises(InfeasibleError):
        estimate_covariances(np.array([1.0, -1.0, 1.0, -1.0]), 1)


def test_estimates_converge_to_exact():
    filt = scalar_filter([1, -0.5, 0.3], [1, 0.4, 0.1], 0.8)
    exact = exact_covariances(filt, 4)
    errs = []
    for N in (1_000, 10_000, 100_000):
        # average over a fixed seed ladder to smooth single-record fluctuations
        errs.append(np.mean([np.abs(estimate_covariances(simulate(filt, N, seed=s), 4) - exact).max() for s in range(8)]))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 3.0 * exact[0] / np.sqrt(100_000) * 4


# ---------------------------------------------------------------- exact covariances


def test_ar1_exact_covariances_follow_geometric_law():
    c = exact_covariances(ar1(np.sqrt(0.91)), 4)
    np.testing.assert_allclose(c, 0.3 ** np.arange(5), atol=1e-14)


def test_all_pass_exact_covariances():
    a = Polynomial([0.2, -0.5, 1.0])
    c = exact_covariances(ShapingFilter.scalar(2.0, a, a), 3)
    np.testing.assert_allclose(c, [4.0, 0.0, 0.0, 0.0], atol=1e-13)


def test_exact_covariances_match_independent_realization():
    rng = np.random.default_rng(3)
    Ak, sigma, R, filt_ss = random_matrix_filter(3, rng)
    filt = ShapingFilter(Ak, np.einsum("k,ij->kij", sigma[1:], np.eye(2)), R)
    np.testing.assert_allclose(exact_covariances(filt, 5), realization_lags(*carath_realization(*filt_ss), 5),
                               atol=1e-12)


def test_solved_interpolant_reproduces_covariances():
    rng = np.random.default_rng(4)
    a, sigma = random_monic_schur(3, rng, 0.8), random_monic_schur(3, rng, 0.8)
    C = exact_covariances(scalar_filter(a, sigma, 1.3), 3)
    sol = solve_cee(covariance_data(C), SpectralPrior(sigma[1:]))
    np.testing.assert_allclose(sol.original_interpolant.jet(0.0, 3), carath_jets(C), atol=1e-8)


# ---------------------------------------------------------------- THREE


def test_three_exact_mode_recovers_scalar_filter():
    rng = np.random.default_rng(5)
    a, sigma = random_monic_schur(3, rng, 0.8), random_monic_schur(3, rng, 0.8)
    filt = scalar_filter(a, sigma, 0.7)
    bank = FilterBank((0.0, 0.9 * E(1.0j), 0.9 * E(-1.0j)), (2, 1, 1))
    sol, table = three_estimate(None, bank, SpectralPrior(sigma[1:]), exact=filt)
    np.testing.assert_allclose(sol.a.tail(), a[1:], atol=1e-6)
    assert sol.original_rho == pytest.approx(0.7, abs=1e-6)
    true = np.array([abs(filt(E(1j * t))[0, 0]) ** 2 for t in table[:, 0]])
    np.testing.assert_allclose(table[:, 1], true, rtol=1e-6)


def test_three_exact_mode_recovers_matrix_filter():
    Ak, sigma, R, _ = random_matrix_filter(2, np.random.default_rng(6))
    filt = ShapingFilter(Ak, np.einsum("k,ij->kij", sigma[1:], np.eye(2)), R)
    bank = FilterBank((0.0, 0.6), (2, 1))
    sol, _ = three_estimate(None, bank, SpectralPrior(sigma[1:]), exact=filt)
    A, Rhat = sol.original_system()
    np.testing.assert_allclose(A[1:], Ak, atol=1e-6)
    np.testing.assert_allclose(Rhat, R, atol=1e-6)
    back = filter_from_solution(sol)
    np.testing.assert_allclose(back(0.3 + 0.4j), filt(0.3 + 0.4j), atol=1e-6)


def test_three_with_origin_bank_is_covariance_extension():
    rng = np.random.default_rng(7)
    a, sigma = random_monic_schur(3, rng, 0.8), random_monic_schur(3, rng, 0.8)
    filt = scalar_filter(a, sigma, 1.0)
    prior = SpectralPrior.from_zeros([0.5, -0.2, 0.1])
    sol, _ = three_estimate(None, FilterBank((0.0,), (4,)), prior, exact=filt)
    ref = solve_cee(covariance_data(exact_covariances(filt, 3)), prior)
    np.testing.assert_allclose(sol.a.coeffs, ref.a.coeffs, atol=1e-9)
    assert sol.rho == pytest.approx(ref.rho, abs=1e-9)


def test_three_on_simulated_data_reduces_to_degree_four():
    filt = degree7_filter()
    y = simulate(filt, 100_000, seed=1)
    sol, table = three_estimate(y, BANK, SpectralPrior(filt.Sigma[:, 0, 0]))
    assert sol.diagnostics["degree"] == 4
    assert table.shape == (512, 2) and np.all(table[:, 1] > 0)


# ---------------------------------------------------------------- sensitivity shaping


def test_reference_sensitivity_design():
    res = sensitivity_shape(shaping_plant())
    np.testing.assert_allclose(res.S_num.coeffs[::-1], [1, -0.0414, 1.1873, -0.8951, -0.4795, -1.0224, -0.5470],
                               atol=1e-3)
    np.testing.assert_allclose(res.S_den.coeffs[::-1], [1, -0.0414, 1.5522, -0.0209, 0.5729, 0.0192, -0.0219],
                               atol=1e-3)
    rep = res.report
    assert rep["hinf"] < 5.0 and rep["all_ok"]
    assert [b["ok"] for b in rep["bands"]] == [True, True]


def test_sensitivity_design_is_internally_stable():
    res = sensitivity_shape(shaping_plant())
    rep = res.report
    assert rep["S_interpolation_residual"] < 1e-7
    assert rep["S_stable"] and rep["S_stability_margin"] > 0
    # the loop identity S (1 + P C) = 1 holds away from the cancelled factors
    pl = shaping_plant()
    for z in (1.7, -0.4 + 2.0j, 3.0j):
        P = pl.gain * pl.num(z) / pl.den(z)
        assert abs(res.S(z) * (1 + P * res.C(z)) - 1.0) < 1e-8


def test_trivial_plant_gives_unit_sensitivity():
    plant = PlantSpec(Polynomial([1.0]), Polynomial.from_roots([0.5, -0.5]), 5.0, [0.0])
    res = sensitivity_shape(plant)
    for z in (2.0, -1.5j):
        assert res.S(z) == pytest.approx(1.0, abs=1e-14)
        assert res.C(z) == 0.0
    assert res.report["all_ok"]


def test_spectral_zero_count_checked():
    with pytest.raises(InputError):
        sensitivity_shape(PlantSpec(Polynomial([1.0]), Polynomial.from_roots([0.5, -0.5]), 5.0, [0.0, 0.1]))


def test_gamma_must_exceed_one():
    with pytest.raises(InputError):
        PlantSpec(Polynomial([1.0]), Polynomial([0.0, 1.0]), 0.9, [])


# ---------------------------------------------------------------- model reduction


def test_full_rank_reduction_is_noop():
    rng = np.random.default_rng(8)
    a, sigma = random_monic_schur(3, rng, 0.7), random_monic_schur(3, rng, 0.7)
    problem = covariance_data(exact_covariances(scalar_filter(a, sigma, 1.0), 3))
    res = model_reduce_pipeline(problem, SpectralPrior(sigma[1:]), tol=1e-8)
    assert res.reduced is res.full
    np.testing.assert_array_equal(res.table[:, 1], res.table[:, 2])


def test_reduced_prior_of_bank_problem():
    filt = degree7_filter()
    sol, _ = three_estimate(None, BANK, SpectralPrior(filt.Sigma[:, 0, 0]), exact=filt)
    res = model_reduce_pipeline(sol.problem, sol.prior, tol=1e-2)
    assert res.plan.degree == 4
    # the three spectral zeros of smallest modulus are dropped
    np.testing.assert_allclose(res.plan.reduced_prior.poly.coeffs[::-1], [1, 1.5973, 1.7783, 1.4073, 0.7157], atol=1e-4)
    assert res.reduced.n == 4 and res.reduced.rho > 0
    assert res.table.shape == (512, 3)
