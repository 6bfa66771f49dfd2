"""Acceptance criteria 1-8; each test prints one PASS/FAIL line with its measurements."""

import time
from functools import lru_cache

import numpy as np
import pytest
import scipy.linalg

from cee.apps import (
    FilterBank,
    PlantSpec,
    ShapingFilter,
    covariance_data,
    estimate_covariances,
    exact_covariances,
    sensitivity_shape,
    simulate,
)
from cee.interp import (
    InterpolationProblem,
    build_data_matrices,
    denormalize_jets,
    normalize,
    structured_W_from_covariance,
    validate,
)
from cee.matrix import build_canonical, build_VN, path_pick_margins as matrix_pick_margins, solve_matrix_cee
from cee.numerics import numerical_rank
from cee.poly import Polynomial
from cee.scalar import (
    SpectralPrior,
    cayley_T,
    omega_inverse,
    omega_map,
    path_pick_margins,
    solve_cee,
    solve_covariance,
)

from generators import random_matrix_case, random_monic_schur, random_scalar_case, reflection_sequence, well_posed

E = np.exp
PI = np.pi

FILTER_ZEROS = [0.9 * E(2.6j), 0.9 * E(-2.6j), 0.5 * E(1.3j), 0.5 * E(-1.3j), 0.94 * E(1.6j), 0.94 * E(-1.6j), 0.3]
FILTER_POLES = [0.1 * E(1.9j), 0.1 * E(-1.9j), 0.8 * E(1.35j), 0.8 * E(-1.35j), 0.7 * E(2.1j), 0.7 * E(-2.1j), 0.1]
BANK = FilterBank((0.0, 0.98 * E(2.1j), 0.98 * E(-2.1j), 0.99, -0.99), (4, 1, 1, 1, 1))

# reference 2x2 system of dimension ten: A(z) tails, zeros of the scalar Sigma(z), R
A_TAILS = np.array([
    [[-0.11, -0.02], [0.11, 0.07]],
    [[-0.08, -0.15], [0.09, 0.19]],
    [[0.05, 0.10], [-0.03, -0.03]],
    [[-0.05, -0.09], [-0.10, -0.13]],
    [[-0.13, -0.09], [0.12, 0.05]],
])
SIGMA_ZEROS = [0.1, 0.9, 0.37, -0.4, -0.95]
R_REF = np.array([[2.0, 1.0], [1.0, 2.0]])

S_NUM = [1, -0.0414, 1.1873, -0.8951, -0.4795, -1.0224, -0.5470]
S_DEN = [1, -0.0414, 1.5522, -0.0209, 0.5729, 0.0192, -0.0219]
C_NUM = [0.3648, 0.08142, 0.434, 0.0]
C_DEN = [1, 1.059, 1.142, 0.411]
BANDS = [(0.0, 0.3, -1.0), (2.5, PI, 0.5)]

N_SCALAR, N_MATRIX, N_ROUND = 200, 50, 100


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail} [{elapsed:.2f} s]")
    return emit


def prior_of(desc):
    return SpectralPrior(np.asarray(desc)[1:])


def fmt(d):
    return ", ".join(f"1-{k} {1 - v:.1e}" if k in ("hPh", "HPH") else f"{k} {v:.1e}" for k, v in d.items())


def jet_scale(prob):
    return max(1.0, max(float(np.abs(w).max()) for w in prob.jets))


@lru_cache(maxsize=None)
def scalar_suite():
    """Well-posed random scalar problems with their rejected-draw counts."""
    return [well_posed(random_scalar_case, seed) for seed in range(N_SCALAR)]


@lru_cache(maxsize=None)
def matrix_suite():
    return [well_posed(random_matrix_case, seed) for seed in range(N_MATRIX)]


def matrix_system():
    sigma = SpectralPrior.from_zeros(SIGMA_ZEROS)
    filt = ShapingFilter(A_TAILS, np.einsum("k,ij->kij", sigma.vec, np.eye(2)), R_REF)
    return filt, sigma


# ---------------------------------------------------------------- criteria


def test_criterion_1_closed_form(report):
    t = time.perf_counter()
    sol = solve_covariance([0.5, 0.3], SpectralPrior.max_entropy(1))
    elapsed = time.perf_counter() - t
    errs = {
        "P": abs(sol.P[0, 0] - 0.09),
        "a": abs(sol.a.tail()[0] + 0.3),
        "b": abs(sol.b.tail()[0] - 0.3),
        "rho": abs(sol.rho - np.sqrt(0.91)),
    }
    ok = max(errs.values()) < 1e-10 and elapsed < 0.1
    report(1, ok, "max error " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items()), elapsed)
    assert ok


def test_criterion_2_levinson(report):
    rng = np.random.default_rng(2024)
    cases = []
    for _ in range(50):
        n = int(rng.integers(1, 9))
        cases.append((n, reflection_sequence(n, rng)))
    worst = 0.0
    t = time.perf_counter()
    for n, r in cases:
        c = np.concatenate([[0.5], r[1:]])
        sol = solve_covariance(c, SpectralPrior.max_entropy(n))
        # Yule-Walker normal equations as the independent oracle
        a_ref = scipy.linalg.solve_toeplitz(r[:-1], -r[1:])
        worst = max(worst, float(np.max(np.abs(sol.a.tail() - a_ref))))
    elapsed = time.perf_counter() - t
    ok = worst < 1e-8 and elapsed < 1.0
    report(2, ok, f"50 sequences, max coefficient error {worst:.1e}", elapsed)
    assert ok


def test_criterion_3_scalar_exact_recovery(report):
    sigma = Polynomial.from_roots(FILTER_ZEROS)
    a_true = Polynomial.from_roots(FILTER_POLES)
    filt = ShapingFilter.scalar(0.5, sigma, a_true)
    t = time.perf_counter()
    Z, e, blocks, nodes = BANK.matrices()
    _, jets, _ = structured_W_from_covariance(BANK.exact_covariance(filt), Z, e, blocks, nodes)
    sol = solve_cee(InterpolationProblem(tuple(nodes), tuple(jets)), SpectralPrior(sigma.tail()), rank_tol=1e-6)
    elapsed = time.perf_counter() - t
    err = float(np.max(np.abs(sol.a.tail() - a_true.tail())))
    rank, _ = numerical_rank(sol.P, 1e-6)
    ok = err < 1e-6 and rank == 7 and elapsed < 5.0
    report(3, ok, f"a error {err:.1e}, rank(P) {rank} at 1e-6, rho {sol.original_rho:.12f}", elapsed)
    assert ok


def test_criterion_4_sensitivity_shaping(report):
    num = Polynomial.from_roots([1.1 * E(19j * PI / 20), 1.1 * E(-19j * PI / 20)])
    den = Polynomial.from_roots([0.0, 1.1, 1.1j, -1.1j])
    zeros = [0.98 * E(7j * PI / 15), 0.98 * E(-7j * PI / 15), 0.97j, -0.97j, 0.0, -0.1]
    t = time.perf_counter()
    res = sensitivity_shape(PlantSpec(num, den, 5.0, zeros, bands=list(BANDS)))
    elapsed = time.perf_counter() - t
    coef = {
        "S_num": np.max(np.abs(res.S_num.coeffs[::-1] - S_NUM)),
        "S_den": np.max(np.abs(res.S_den.coeffs[::-1] - S_DEN)),
        "C_num": np.max(np.abs(res.C_num.coeffs[::-1] - C_NUM)),
        "C_den": np.max(np.abs(res.C_den.coeffs[::-1] - C_DEN)),
    }
    # independent check of the specs on a 2048-point grid of the closed upper half circle
    theta = np.linspace(0.0, PI, 2048)
    z = E(1j * theta)
    mag = np.abs(res.S_num(z) / res.S_den(z))
    hinf = float(mag.max())
    bands_ok = all(
        20 * np.log10(mag[(theta >= lo) & (theta <= hi)].max()) <= lim for lo, hi, lim in BANDS
    )
    ok = max(coef.values()) < 1e-3 and hinf < 5.0 and bands_ok and elapsed < 5.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in coef.items())
    report(4, ok, f"max coefficient gap {detail}; hinf {hinf:.3f}, bands ok {bands_ok}", elapsed)
    assert ok


def test_criterion_5_matrix_exact_recovery(report):
    filt, sigma = matrix_system()
    t = time.perf_counter()
    C = exact_covariances(filt, 5)
    sol = solve_matrix_cee(covariance_data(C), sigma, rank_tol=1e-9)
    A, R = sol.original_system()
    elapsed = time.perf_counter() - t
    a_err = float(np.max(np.abs(A[1:] - A_TAILS)))
    r_err = float(np.max(np.abs(R - R_REF)))
    rank, sv = numerical_rank(sol.P, 1e-9)
    exact_ok = a_err < 1e-6 and r_err < 1e-6 and rank == 10 and elapsed < 30.0
    # qualitative pattern with estimated covariances at N = 1e5
    y = simulate(filt, 100_000, seed=0)
    ssol = solve_matrix_cee(covariance_data(estimate_covariances(y, 5)), sigma)
    ssv = ssol.diagnostics["singular_values"]
    small = int(np.sum(ssv < 1e-2 * ssv[0]))
    ok = exact_ok and small == 6
    detail = (f"exact: A error {a_err:.1e}, R error {r_err:.1e}, rank(P) {rank} at 1e-9 "
              f"(smallest sv ratio {sv[-1] / sv[0]:.1e}); simulated: {small} singular values below 1e-2 sigma_1 "
              f"(pattern expects 6)")
    report(5, ok, detail, time.perf_counter() - t)
    assert exact_ok, detail
    assert small == 6, detail


def test_criterion_6_invariant_suite(report):
    t = time.perf_counter()
    rejected = 0
    worst = dict(jet=0.0, cee=0.0, hPh=0.0, step=0.0)
    failures = []
    for seed, ((prob, _, _, prior), k) in enumerate(scalar_suite()):
        rejected += k
        sol = solve_cee(prob, prior_of(prior))
        d = sol.diagnostics
        jet = sol.original_interpolant.jet_residual(prob) / jet_scale(prob)
        step = float(np.max(np.abs(solve_cee(prob, prior_of(prior), step0=0.013).p - sol.p)))
        worst.update(jet=max(worst["jet"], jet), cee=max(worst["cee"], d["cee_residual"]),
                     hPh=max(worst["hPh"], d["hPh"]), step=max(worst["step"], step))
        if not (jet < 1e-7 and d["cee_residual"] < 1e-8 and d["hPh"] < 1 and d["min_real_part"] > 0
                and d["positivity_residual"] < 1e-8 and path_pick_margins(sol).min() > 0 and step < 1e-8):
            failures.append(("scalar", seed))
    m_rejected = 0
    m_worst = dict(jet=0.0, cee=0.0, HPH=0.0, step=0.0)
    for seed, ((prob, _, _, _), k) in enumerate(matrix_suite()):
        m_rejected += k
        prior = prior_of(random_monic_schur(prob.n, np.random.default_rng(seed), 0.8))
        sol = solve_matrix_cee(prob, prior)
        d = sol.diagnostics
        jet = d["interpolation_residual"] / jet_scale(prob)
        step = float(np.max(np.abs(solve_matrix_cee(prob, prior, step0=0.013).p - sol.p)))
        m_worst.update(jet=max(m_worst["jet"], jet), cee=max(m_worst["cee"], d["cee_residual"]),
                       HPH=max(m_worst["HPH"], d["max_eig_HPH"]), step=max(m_worst["step"], step))
        if not (jet < 1e-7 and d["cee_residual"] < 1e-8 and d["max_eig_HPH"] < 1 and d["min_hermitian_eig"] > 0
                and matrix_pick_margins(sol).min() > 0 and step < 1e-8):
            failures.append(("matrix", seed))
    elapsed = time.perf_counter() - t
    ok = not failures and elapsed < 300.0
    detail = (f"{N_SCALAR} scalar ({rejected} ill-conditioned draws replaced), worst "
              + fmt(worst)
              + f"; {N_MATRIX} matrix ({m_rejected} replaced), worst "
              + fmt(m_worst)
              + f"; failures {failures}")
    report(6, ok, detail, elapsed)
    assert ok


def test_criterion_7_structural_checks(report):
    t = time.perf_counter()
    vn_ok = True
    for (prob, *_), _ in matrix_suite():
        dm = build_data_matrices(normalize(prob)[0])
        n = prob.n
        _, _, equal = build_VN(build_canonical(2, n), dm.Z, dm.e)
        vn_ok &= equal
        # every unequal index pair with the same total fails the test
        for t1 in range(1, n):
            _, _, unequal = build_VN(build_canonical(2, n, (t1, 2 * n - t1)), dm.Z, dm.e)
            vn_ok &= not unequal
    comm, dropped = 0.0, 0.0
    for (prob, _, _, prior), _ in scalar_suite():
        dm = build_data_matrices(normalize(prob)[0])
        T = cayley_T(dm.W)
        comm = max(comm, float(np.max(np.abs(T @ dm.Z - dm.Z @ T))) / max(1.0, np.abs(T).max()))
        sol = solve_cee(prob, prior_of(prior))
        dropped = max(dropped, sol.diagnostics["dropped_row_residual"])
    for (prob, *_), _ in matrix_suite():
        dm = build_data_matrices(normalize(prob)[0])
        T = cayley_T(dm.W)
        Zl = np.kron(dm.Z, np.eye(2))
        comm = max(comm, float(np.max(np.abs(T @ Zl - Zl @ T))) / max(1.0, np.abs(T).max()))
    elapsed = time.perf_counter() - t
    ok = vn_ok and comm < 1e-12 and dropped < 1e-10
    report(7, ok, f"VN test agrees with equal indices {vn_ok}; T commutator {comm:.1e}; dropped row {dropped:.1e}",
           elapsed)
    assert ok


def test_criterion_8_round_trips(report):
    t = time.perf_counter()
    om, nd = 0.0, 0.0
    for seed in range(N_ROUND):
        (prob, *_), _ = well_posed(random_scalar_case, seed, include_zero=bool(seed % 2))
        norm, rec = normalize(prob)
        u = omega_map(norm)
        back = omega_map(norm, omega_inverse(norm, u))
        om = max(om, float(np.max(np.abs(back - u), initial=0.0)) / max(1.0, np.abs(u).max(initial=0.0)))
        nd = max(nd, max(float(np.abs(a - b).max()) for a, b in
                         zip(denormalize_jets(norm, rec).jets, validate(prob).jets)) / jet_scale(prob))
    for seed in range(N_ROUND):
        (prob, *_), _ = well_posed(random_matrix_case, seed)
        norm, rec = normalize(prob)
        nd = max(nd, max(float(np.abs(a - b).max()) for a, b in
                         zip(denormalize_jets(norm, rec).jets, validate(prob).jets)) / jet_scale(prob))
    elapsed = time.perf_counter() - t
    ok = om < 1e-10 and nd < 1e-10
    report(8, ok, f"omega round trip {om:.1e}; normalize/denormalize {nd:.1e} ({N_ROUND} scalar + {N_ROUND} matrix)",
           elapsed)
    assert ok
