"""Workflows: shaping filters, simulation, covariance estimation, THREE
spectral estimation, sensitivity shaping and model reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.signal

from .errors import InfeasibleError, InputError, NumericalError
from .interp import InterpolationProblem, build_data_matrices, structured_W_from_covariance, validate
from .matrix import (
    MatrixCeeSolution,
    MatrixPrior,
    build_canonical,
    coeffs_to_state,
    matrix_degree_and_reduce,
    solve_matrix_cee,
    state_to_coeffs,
)
from .numerics import spectral_radius, stein_solve
from .poly import Polynomial, TruncatedSeries, rational_jet, roots, series_compose
from .scalar import CeeSolution, SpectralPrior, degree_and_reduce, solve_cee

log = logging.getLogger(__name__)

ROOT_MATCH_TOL = 1e-6


# ---------------------------------------------------------------- shaping filters


@dataclass
class ShapingFilter:
    """``V(z) = A(z)^{-1} Sigma(z) R`` in observer canonical form.

    ``A`` and ``Sigma`` are coefficient arrays ``(n, l, l)`` of
    ``z^n I + C_1 z^{n-1} + ... + C_n``. The scalar filter ``rho sigma / a``
    has ``l = 1``.
    """

    A: np.ndarray
    Sigma: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.Sigma = np.asarray(self.Sigma, dtype=float)
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.A.shape != self.Sigma.shape or self.A.ndim != 3:
            raise InputError("A and Sigma must both have shape (n, l, l)")
        F, _, _, _ = self.realization()
        if spectral_radius(F) >= 1.0:
            raise InputError("shaping filter is unstable (det A has zeros outside the open disc)")
        G = self.struct.J - coeffs_to_state(self.Sigma) @ self.struct.H
        if spectral_radius(G) > 1.0 + 1e-12:
            raise InputError("shaping filter is not minimum phase (det Sigma has zeros outside the disc)")

    @classmethod
    def scalar(cls, rho: float, sigma: Polynomial, a: Polynomial) -> "ShapingFilter":
        if sigma.degree != a.degree:
            raise InputError("sigma and a must have the same degree")
        return cls(a.tail()[:, None, None], sigma.tail()[:, None, None], [[rho]])

    @property
    def ell(self) -> int:
        return self.R.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.ell == 1

    @property
    def struct(self):
        return build_canonical(self.ell, self.n)

    def realization(self):
        """``(F, K, H, R)`` with ``x+ = F x + K w``, ``y = H x + R w``."""
        st = build_canonical(self.ell, self.n)
        A, S = coeffs_to_state(self.A), coeffs_to_state(self.Sigma)
        return st.J - A @ st.H, (S - A) @ self.R, st.H, self.R

    def __call__(self, z) -> np.ndarray:
        Ac = state_to_coeffs(coeffs_to_state(self.A), self.ell)
        Sc = state_to_coeffs(coeffs_to_state(self.Sigma), self.ell)
        n = self.n
        Az = sum(Ac[k] * z ** (n - k) for k in range(n + 1))
        Sz = sum(Sc[k] * z ** (n - k) for k in range(n + 1))
        return np.linalg.solve(Az, Sz @ self.R)


def simulate(filt: ShapingFilter, N: int, seed: int = 0) -> np.ndarray:
    """``N`` output samples driven by unit Gaussian white noise.

    The first ``ceil(10 / -ln(r))`` samples are discarded, with ``r`` the
    spectral radius of the state matrix (at least one sample).
    """
    F, K, H, R = filt.realization()
    r = spectral_radius(F)
    burn = 1 if r == 0.0 else max(1, math.ceil(10.0 / -math.log(r)))
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((burn + N, filt.ell))
    if filt.is_scalar:
        num = np.concatenate([[1.0], filt.Sigma[:, 0, 0]]) * R[0, 0]
        den = np.concatenate([[1.0], filt.A[:, 0, 0]])
        return scipy.signal.lfilter(num, den, w[:, 0])[burn:]
    x = np.zeros(F.shape[0])
    y = np.empty((burn + N, filt.ell))
    for t in range(burn + N):
        y[t] = H @ x + R @ w[t]
        x = F @ x + K @ w[t]
    return y[burn:]


def _block_toeplitz(C: np.ndarray) -> np.ndarray:
    K1, ell, _ = C.shape
    T = np.empty((K1 * ell, K1 * ell))
    for i in range(K1):
        for j in range(K1):
            T[i * ell : (i + 1) * ell, j * ell : (j + 1) * ell] = C[i - j] if i >= j else C[j - i].T
    return T


def estimate_covariances(y: np.ndarray, K: int) -> np.ndarray:
    """``C_k = 1/(N-k+1) sum_{t=k}^{N} y_t y_{t-k}'`` for a record ``y_0 .. y_N``.

    Scalar series return shape (K+1,), vector series (K+1, l, l).
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    Y = y[:, None] if scalar else y
    N = Y.shape[0] - 1
    if N <= K:
        raise InputError(f"record length {N + 1} too short for {K} lags")
    C = np.array([Y[k:].T @ Y[: N + 1 - k] / (N - k + 1) for k in range(K + 1)])
    if np.any(C):
        ev = np.linalg.eigvalsh(_block_toeplitz(C))
        if ev.min() <= 0:
            raise InfeasibleError("covariance estimates are not positive definite; use a longer record")
    return C[:, 0, 0] if scalar else C


def exact_covariances(filt: ShapingFilter, K: int) -> np.ndarray:
    """Stationary covariances ``C_k = E y(t+k) y(t)'`` from the state covariance."""
    F, Kg, H, R = filt.realization()
    P = stein_solve(F, Kg @ Kg.T)
    G = F @ P @ H.T + Kg @ R.T
    C = [H @ P @ H.T + R @ R.T]
    Fk = np.eye(F.shape[0])
    for _ in range(K):
        C.append(H @ Fk @ G)
        Fk = F @ Fk
    C = np.array(C)
    return C[:, 0, 0] if filt.is_scalar else C


def carath_jets(C: np.ndarray) -> np.ndarray:
    """Covariances -> Taylor coefficients ``(C_0/2, C_1, ...)`` of the Caratheodory function at 0."""
    W = np.array(C, dtype=complex)
    W[0] = 0.5 * W[0]
    return W


def covariance_data(C: np.ndarray) -> InterpolationProblem:
    C = np.asarray(C)
    ell = None if C.ndim == 1 else C.shape[1]
    return InterpolationProblem((0.0,), (carath_jets(C),), ell)


def filter_from_solution(sol) -> ShapingFilter:
    """Spectral factor of a solved problem in the data's original scale (base node at 0)."""
    if isinstance(sol, CeeSolution):
        return ShapingFilter.scalar(sol.original_rho, sol.prior.poly, sol.a)
    A, R = sol.original_system()
    K = np.eye(sol.ell) if sol.record.congruence is None else sol.record.congruence
    # Sigma = sigma I commutes with the congruence; a general prior is mapped like A
    Sigma = np.einsum("ij,kjl,lm->kim", np.linalg.inv(K), sol.prior.coeffs, K)
    return ShapingFilter(A[1:], Sigma, R)


# ---------------------------------------------------------------- THREE


@dataclass
class FilterBank:
    """First-order filter bank ``u(t) = Z u(t-1) + e y(t)`` with nodes and multiplicities."""

    nodes: tuple
    multiplicities: tuple

    def problem_shape(self, ell=None) -> InterpolationProblem:
        jets = tuple(np.zeros(m) if ell is None else np.zeros((m, ell, ell)) for m in self.multiplicities)
        return validate(InterpolationProblem(tuple(complex(z) for z in self.nodes), jets, ell))

    def matrices(self):
        data = build_data_matrices(self.problem_shape())
        return data.Z, data.e, data.blocks, list(validate(self.problem_shape()).nodes)

    def run(self, y: np.ndarray) -> np.ndarray:
        Z, e, _, _ = self.matrices()
        Y = np.asarray(y, dtype=float)
        Y = Y[:, None] if Y.ndim == 1 else Y
        ell = Y.shape[1]
        Zl, el = np.kron(Z, np.eye(ell)), np.kron(e[:, None], np.eye(ell))
        u = np.zeros(Zl.shape[0], dtype=complex)
        out = np.empty((Y.shape[0], Zl.shape[0]), dtype=complex)
        for t in range(Y.shape[0]):
            u = Zl @ u + el @ Y[t]
            out[t] = u
        return out

    def exact_covariance(self, filt: ShapingFilter) -> np.ndarray:
        """``E u u^*`` for the filter driven by unit white noise."""
        Z, e, _, _ = self.matrices()
        F, Kg, H, R = filt.realization()
        ell = filt.ell
        Zl, el = np.kron(Z, np.eye(ell)), np.kron(e[:, None], np.eye(ell))
        nx, nu = F.shape[0], Zl.shape[0]
        Aaug = np.block([[F, np.zeros((nx, nu))], [el @ H, Zl]])
        Baug = np.vstack([Kg, el @ R])
        Pi = stein_solve(Aaug, Baug @ Baug.conj().T)
        Cout = np.hstack([el @ H, Zl])
        D = el @ R
        S = Cout @ Pi @ Cout.conj().T + D @ D.conj().T
        return 0.5 * (S + S.conj().T)


def spectral_table(sol, points: int = 512) -> np.ndarray:
    """Rows ``(theta, |v|^2)`` (scalar) or ``(theta, s_1, ..., s_l)`` singular values of ``V``."""
    theta = np.linspace(0.0, np.pi, points)
    if isinstance(sol, CeeSolution):
        return np.column_stack([theta, sol.spectral_density(theta)])
    filt = filter_from_solution(sol)
    sv = np.array([np.linalg.svd(filt(np.exp(1j * t)), compute_uv=False) for t in theta])
    return np.column_stack([theta, sv])


def three_estimate(y, bank: FilterBank, prior=None, exact: ShapingFilter | None = None, rank_tol: float = 1e-2):
    """Estimate a spectral density from the covariance of the bank outputs.

    With ``exact`` given, the bank covariance is computed from that filter
    instead of from ``y`` (exact-data mode).
    Returns ``(solution, table)``.
    """
    if exact is not None:
        Su = bank.exact_covariance(exact)
        ell = None if exact.is_scalar else exact.ell
    else:
        Y = np.asarray(y, dtype=float)
        ell = None if Y.ndim == 1 else Y.shape[1]
        U = bank.run(Y)
        Su = U.T @ U.conj() / U.shape[0]
        Su = 0.5 * (Su + Su.conj().T)
    Z, e, blocks, nodes = bank.matrices()
    _, jets, resid = structured_W_from_covariance(Su, Z, e, blocks, nodes, ell)
    log.info("structured W residual %.3g", resid)
    if ell is not None:
        # E u u' pairs y(t-j) with y(t-k)', which yields the jets of the transposed function
        jets = [np.transpose(w, (0, 2, 1)) for w in jets]
    problem = InterpolationProblem(tuple(nodes), tuple(jets), ell)
    try:
        if ell is None:
            sol = solve_cee(problem, prior, rank_tol=rank_tol)
        else:
            sol = solve_matrix_cee(problem, prior, rank_tol=rank_tol)
    except InfeasibleError as exc:
        raise InfeasibleError(f"{exc}; estimated data are not Pick-feasible, use a longer record") from exc
    sol.diagnostics["structured_W_residual"] = resid
    return sol, spectral_table(sol)


# ---------------------------------------------------------------- sensitivity shaping


@dataclass
class PlantSpec:
    """Plant ``P = gain * num / den`` and the design data for ``S = 1/(1 + PC)``."""

    num: Polynomial
    den: Polynomial
    gamma: float
    spectral_zeros: Sequence[complex]
    gain: float = 1.0
    bands: Sequence[tuple] = ()

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise InputError("gamma must exceed 1")
        for lo, hi, _ in self.bands:
            if not 0.0 <= lo <= hi <= np.pi + 1e-12:
                raise InputError(f"band [{lo}, {hi}] outside [0, pi]")

    def constraints(self) -> list:
        """``(point, S-value, multiplicity)``; ``point`` is None for the zero at infinity."""
        out = []
        for rs, val in ((roots(self.den), 0.0), (roots(self.num), 1.0)):
            for z, m in _cluster(rs):
                if abs(abs(z) - 1.0) < 1e-9:
                    raise InputError(f"plant root {z} on the unit circle")
                if abs(z) > 1.0:
                    out.append((z, val, m))
        rel = self.den.degree - self.num.degree
        if rel < 0:
            raise InputError("improper plant")
        if rel > 0:
            out.append((None, 1.0, rel))
        return out


def _cluster(rs, tol=1e-7):
    rs = list(np.asarray(rs, dtype=complex))
    out = []
    while rs:
        z = rs.pop(0)
        same = [r for r in rs if abs(r - z) <= tol * max(1.0, abs(z))]
        for r in same:
            rs.remove(r)
        zz = np.mean([z] + same)
        if abs(zz.imag) <= tol:
            zz = complex(zz.real)
        out.append((zz, 1 + len(same)))
    return out


def _f_jet(point, s_jet: np.ndarray, gamma: float):
    """Node and jet of ``f(zeta) = (gamma + S(1/zeta)) / (gamma - S(1/zeta))``.

    ``s_jet`` holds the Taylor coefficients of ``S`` at ``point`` (or of
    ``S(1/zeta)`` at ``zeta = 0`` when ``point`` is None, i.e. infinity).
    """
    s_jet = np.asarray(s_jet, dtype=complex)
    m = len(s_jet)
    if point is None:
        zeta, s = 0.0, s_jet
    else:
        zeta = 1.0 / point
        inner = (TruncatedSeries([1.0], m - 1) / TruncatedSeries([zeta, 1.0], m - 1)).coeffs.copy()
        inner[0] = 0.0
        s = series_compose(TruncatedSeries(s_jet), TruncatedSeries(inner), m - 1).coeffs
    one = np.eye(1, m)[0]
    f = TruncatedSeries(gamma * one + s) / TruncatedSeries(gamma * one - s)
    return zeta, f.coeffs


@dataclass
class ShapingResult:
    S_num: Polynomial
    S_den: Polynomial
    C_num: Polynomial
    C_den: Polynomial
    solution: CeeSolution
    report: dict = field(default_factory=dict)

    def S(self, z):
        return self.S_num(z) / self.S_den(z)

    def C(self, z):
        return self.C_num(z) / self.C_den(z)


def _cancel(num: Polynomial, den: Polynomial, tol: float = ROOT_MATCH_TOL):
    """Remove common roots (matched within ``tol``) by polynomial deflation."""
    if num.degree < 0:
        return Polynomial([0.0]), Polynomial([1.0]), 0.0
    rn, rd = list(roots(num)), list(roots(den))
    common = []
    for r in list(rn):
        j = next((k for k, s in enumerate(rd) if abs(s - r) <= tol * max(1.0, abs(r))), None)
        if j is not None:
            common.append(0.5 * (r + rd.pop(j)))
    if not common:
        return num, den, 0.0
    c = Polynomial.from_roots(common)
    qn, rem_n = np.polydiv(num.coeffs[::-1], c.coeffs[::-1])
    qd, rem_d = np.polydiv(den.coeffs[::-1], c.coeffs[::-1])
    resid = max(np.abs(rem_n).max() / np.abs(num.coeffs).max(), np.abs(rem_d).max() / np.abs(den.coeffs).max())
    if resid > tol:
        raise NumericalError(f"common-factor cancellation residual {resid:.3g} exceeds {tol:g}")
    return Polynomial(qn[::-1]), Polynomial(qd[::-1]), float(resid)


def _reverse_n(p: Polynomial, n: int) -> np.ndarray:
    return p.padded(n)[::-1]


def sensitivity_shape(plant: PlantSpec, grid_points: int = 2048) -> ShapingResult:
    """Sensitivity design by degree-constrained interpolation in the Caratheodory plane."""
    gamma = plant.gamma
    nodes, jets = [], []
    for point, s0, m in plant.constraints():
        zeta, w = _f_jet(point, np.eye(1, m)[0] * s0, gamma)
        nodes.append(zeta)
        jets.append(w)
    problem = validate(InterpolationProblem(tuple(complex(z) for z in nodes), tuple(jets)))
    n = problem.n
    if len(plant.spectral_zeros) != n:
        raise InputError(f"{problem.n + 1} interpolation conditions require {n} spectral zeros, got {len(plant.spectral_zeros)}")
    sol = solve_cee(problem, SpectralPrior.from_zeros(plant.spectral_zeros) if n else None)
    f = sol.original_interpolant
    # S(z) = gamma (f(1/z) - 1) / (f(1/z) + 1)
    Nr, Dr = _reverse_n(f.num, n), _reverse_n(f.den, n)
    top, bot = gamma * (Nr - Dr), Nr + Dr
    lead = bot[-1]
    S_num, S_den = Polynomial.real(top / lead), Polynomial.real(bot / lead)
    # C = (1/S - 1) / P
    Cn = Polynomial.real(((S_den - S_num) * plant.den).coeffs)
    Cd = Polynomial.real((S_num * plant.num).coeffs * plant.gain)
    Cn, Cd, cres = _cancel(Cn, Cd)
    lc = Cd.coeffs[-1]
    Cn, Cd = Polynomial(Cn.coeffs / lc), Polynomial(Cd.coeffs / lc)
    res = ShapingResult(S_num, S_den, Cn, Cd, sol)
    res.report = shaping_report(res, plant, grid_points)
    res.report["cancellation_residual"] = cres
    return res


def shaping_report(res: ShapingResult, plant: PlantSpec, grid_points: int = 2048) -> dict:
    theta = np.linspace(0.0, np.pi, grid_points)
    mag = np.abs(res.S(np.exp(1j * theta)))
    db = 20 * np.log10(np.maximum(mag, 1e-300))
    bands = []
    for lo, hi, lim in plant.bands:
        sel = (theta >= lo) & (theta <= hi)
        worst = float(db[sel].max())
        bands.append({"band": [lo, hi], "limit_db": lim, "max_db": worst, "ok": bool(worst <= lim)})
    interp_err = 0.0
    for point, s0, m in plant.constraints():
        if point is None:
            n = res.S_den.degree
            num_r = Polynomial(_reverse_n(res.S_num, n))
            den_r = Polynomial(_reverse_n(res.S_den, n))
            jet = rational_jet(num_r, den_r, 0.0, m - 1).coeffs
        else:
            jet = rational_jet(res.S_num, res.S_den, point, m - 1).coeffs
        target = np.eye(1, m)[0] * s0
        interp_err = max(interp_err, float(np.max(np.abs(jet - target))))
    poles = roots(res.S_den)
    margin = float(1.0 - np.max(np.abs(poles))) if poles.size else 1.0
    hinf = float(mag.max())
    return {
        "hinf": hinf,
        "hinf_ok": bool(hinf < plant.gamma),
        "bands": bands,
        "S_interpolation_residual": interp_err,
        "S_stability_margin": margin,
        "S_stable": bool(margin > 0),
        "all_ok": bool(hinf < plant.gamma and margin > 0 and all(b["ok"] for b in bands)),
    }


def frequency_table(res: ShapingResult, points: int = 2048) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, points)
    Sz = res.S(np.exp(1j * theta))
    return np.column_stack([theta, 20 * np.log10(np.abs(Sz)), np.angle(Sz)])


# ---------------------------------------------------------------- model reduction


@dataclass
class ReductionResult:
    full: object
    reduced: object
    plan: object
    table: np.ndarray


def model_reduce_pipeline(problem: InterpolationProblem, prior=None, tol: float = 1e-2, points: int = 512) -> ReductionResult:
    """Solve, pick the order from ``rank P``, re-solve at reduced order and compare responses.

    The table has columns ``(theta, full, reduced)`` holding ``|v|^2`` in the
    scalar case and the largest singular value of ``V`` in the matrix case.
    """
    theta = np.linspace(0.0, np.pi, points)
    if problem.is_matrix:
        full = solve_matrix_cee(problem, prior, rank_tol=tol)
        plan = matrix_degree_and_reduce(full, tol)
        solver = solve_matrix_cee
    else:
        full = solve_cee(problem, prior, rank_tol=tol)
        plan = degree_and_reduce(full, tol)
        solver = solve_cee
    if plan.reduced_problem is None or plan.reduced_prior is None or plan.reduced_prior is full.prior:
        reduced = full
    else:
        reduced = solver(plan.reduced_problem, plan.reduced_prior, rank_tol=tol)

    def resp(sol):
        if isinstance(sol, CeeSolution):
            return sol.spectral_density(theta)
        filt = filter_from_solution(sol)
        return np.array([np.linalg.svd(filt(np.exp(1j * t)), compute_uv=False)[0] for t in theta])

    return ReductionResult(full, reduced, plan, np.column_stack([theta, resp(full), resp(reduced)]))
