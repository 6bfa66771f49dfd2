"""Scalar Covariance Extension Equation (CEE).

For a normalized interpolation problem and a monic Schur prior ``sigma``
the CEE

    P = Gamma (P - P h h' P) Gamma' + g g',   g = u + U sigma + U Gamma P h

has a unique PSD solution with ``h'Ph < 1``. It is found by tracking the
first column ``p = Ph`` along ``(u, U) -> (lam u, lam U)`` and then solving
a Stein equation for ``P``. The interpolant is ``f = b_* / (2 a_*)`` with

    a = (I - U)(Gamma p + sigma) - u,  b = (I + U)(Gamma p + sigma) + u,
    rho = sqrt(1 - h'p).
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InfeasibleError, InputError, NumericalError
from .interp import (
    DataMatrices,
    InterpolationProblem,
    NormalizationRecord,
    build_data_matrices,
    covariance_problem,
    denormalize_rational,
    normalize,
    pick_matrix,
    require_feasible,
    toeplitz_lower,
    validate,
)
from .numerics import HomotopyResult, HomotopyTask, davidenko_solve, memoized_residual, numerical_rank, stein_solve
from .poly import Polynomial, TruncatedSeries, is_schur, positivity_residual, rational_jet, roots

log = logging.getLogger(__name__)

IMAG_TOL = 1e-9


class SpectralPrior:
    """Monic Schur polynomial ``sigma(z) = z^n + sigma_1 z^{n-1} + ... + sigma_n``."""

    def __init__(self, sigma: Polynomial | Sequence[float]):
        if not isinstance(sigma, Polynomial):
            sigma = Polynomial.monic(np.asarray(sigma, dtype=float))
        sigma = Polynomial.real(sigma.coeffs)
        if abs(sigma.coeffs[-1] - 1.0) > 1e-12:
            raise InputError("prior sigma must be monic")
        ok, margin = is_schur(sigma)
        if not ok:
            raise InputError(f"prior sigma is not Schur (margin {margin:.3g})")
        self.poly = sigma
        self.n = sigma.degree
        self.vec = sigma.tail()
        self.margin = margin

    @classmethod
    def max_entropy(cls, n: int) -> "SpectralPrior":
        return cls(np.zeros(n))

    @classmethod
    def from_zeros(cls, zeros) -> "SpectralPrior":
        return cls(Polynomial.from_roots(zeros))

    @property
    def Gamma(self) -> np.ndarray:
        n = self.n
        G = np.eye(n, k=1)
        G[:, 0] = -self.vec
        return G

    @property
    def h(self) -> np.ndarray:
        h = np.zeros(self.n)
        h[0] = 1.0
        return h

    @property
    def full(self) -> np.ndarray:
        """``[1, sigma_1, ..., sigma_n]``."""
        return np.concatenate([[1.0], self.vec])

    @property
    def s(self) -> np.ndarray:
        """Coefficients of ``z^0 .. z^{n-1}`` of ``sigma(z) sigma(1/z)``."""
        x = self.full
        n = self.n
        return np.array([np.dot(x[: n + 1 - i], x[i:]) for i in range(n)])

    def zeros(self) -> np.ndarray:
        return roots(self.poly)

    def __repr__(self):
        return f"SpectralPrior({np.array2string(self.vec, precision=6)})"


@dataclass
class CeeParameters:
    u: np.ndarray
    U: np.ndarray
    source: str = "general"
    imag_residue: float = 0.0


def _realify(x: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    x = np.asarray(x)
    if not np.iscomplexobj(x):
        return x.astype(float), 0.0
    residue = float(np.max(np.abs(x.imag), initial=0.0))
    if residue > IMAG_TOL * max(1.0, float(np.max(np.abs(x.real), initial=0.0))):
        raise NumericalError(f"{what} has imaginary residue {residue:.3g}; data are not self-conjugate")
    return x.real.copy(), residue


def cayley_T(W: np.ndarray) -> np.ndarray:
    """``T = (W + I/2)^{-1} (W - I/2)``."""
    I = np.eye(W.shape[0])
    return np.linalg.solve(W + 0.5 * I, W - 0.5 * I)


def compute_uU(data: DataMatrices) -> CeeParameters:
    """``[u U] = [0 I_n] V^{-1} T V`` from the data matrices."""
    T = cayley_T(data.W)
    Y = np.linalg.solve(data.V, T @ data.V)
    u, r1 = _realify(Y[1:, 0], "u")
    U, r2 = _realify(Y[1:, 1:], "U")
    return CeeParameters(u=u, U=U, source="general", imag_residue=max(r1, r2))


def covariance_uU(c: Sequence[float]) -> CeeParameters:
    """``u`` from ``z^n/(z^n + c_1 z^{n-1} + ... + c_n) = 1 - sum u_k z^-k``, ``U`` strictly lower Toeplitz."""
    c = np.asarray(c, dtype=float)
    if abs(c[0] - 0.5) > 1e-14:
        raise InputError("covariance sequence must be normalized with c_0 = 1/2")
    n = len(c) - 1
    Tfull = np.eye(n + 1) + scipy_toeplitz_sym(c[1:])
    if np.min(np.linalg.eigvalsh(Tfull)) <= 0:
        raise InfeasibleError("covariance Toeplitz matrix is not positive definite")
    # series in w = 1/z: 1 / (1 + c_1 w + ... + c_n w^n)
    ser = TruncatedSeries(np.concatenate([[1.0], c[1:]]), n).reciprocal().coeffs
    u = -ser[1:]
    U = np.zeros((n, n))
    if n > 1:
        U = toeplitz_lower(np.concatenate([[0.0], u[:-1]]))
    return CeeParameters(u=u, U=U, source="covariance")


def scipy_toeplitz_sym(c: np.ndarray) -> np.ndarray:
    n = len(c)
    col = np.concatenate([[0.0], c])
    idx = np.abs(np.subtract.outer(np.arange(n + 1), np.arange(n + 1)))
    return col[idx]


# ---------------------------------------------------------------- diffeomorphism


def _cayley_series(w: np.ndarray) -> np.ndarray:
    if abs(w[0] + 0.5) < 1e-14:
        raise NumericalError("jet value -1/2 is a singularity of the Cayley transform")
    K = len(w) - 1
    num = TruncatedSeries(w - np.eye(1, K + 1)[0] * 0.5)
    den = TruncatedSeries(w + np.eye(1, K + 1)[0] * 0.5)
    return (num / den).coeffs


def _inverse_cayley_series(d: np.ndarray) -> np.ndarray:
    if abs(d[0] - 1.0) < 1e-14:
        raise NumericalError("d_j0 = 1 is a singularity of the inverse Cayley transform")
    K = len(d) - 1
    one = np.eye(1, K + 1)[0]
    return 0.5 * (TruncatedSeries(one + d) / TruncatedSeries(one - d)).coeffs


def _flatten_jets(jets) -> np.ndarray:
    return np.concatenate([np.asarray(w) for w in jets])[1:]


def _unflatten(vec: np.ndarray, mults, first) -> list:
    full = np.concatenate([[first], vec])
    out, pos = [], 0
    for nj in mults:
        out.append(full[pos : pos + nj])
        pos += nj
    return out


def _M_matrix(data: DataMatrices) -> np.ndarray:
    return np.linalg.inv(data.V)[1:, 1:]


def omega_map(problem: InterpolationProblem, w: np.ndarray | None = None) -> np.ndarray:
    """``u = M d(w)`` where ``d`` holds the Cayley-transformed jets.

    ``w`` is the length-n vector of all jet values except ``w_00 = 1/2``,
    in node order; it defaults to the problem's own jets.
    """
    data = build_data_matrices(problem)
    w = _flatten_jets(problem.jets) if w is None else np.asarray(w, dtype=complex)
    blocks = _unflatten(w, problem.multiplicities, 0.5)
    d = np.concatenate([_cayley_series(b) for b in blocks])[1:]
    u, _ = _realify(_M_matrix(data) @ d, "u")
    return u


def omega_inverse(problem: InterpolationProblem, u: np.ndarray) -> np.ndarray:
    """Inverse of :func:`omega_map` on the node structure of ``problem``."""
    data = build_data_matrices(problem)
    d = np.linalg.solve(_M_matrix(data), np.asarray(u, dtype=complex))
    blocks = _unflatten(d, problem.multiplicities, 0.0)
    return np.concatenate([_inverse_cayley_series(b) for b in blocks])[1:]


def L_map(problem: InterpolationProblem, u: np.ndarray) -> np.ndarray:
    """The linear map ``u -> U`` (depends only on nodes and multiplicities)."""
    data = build_data_matrices(problem)
    d = np.linalg.solve(_M_matrix(data), np.asarray(u, dtype=complex))
    blocks = _unflatten(d, problem.multiplicities, 0.0)
    T = scipy.linalg.block_diag(*[toeplitz_lower(b) for b in blocks])
    Y = np.linalg.solve(data.V, T @ data.V)
    U, _ = _realify(Y[1:, 1:], "U")
    return U


# ---------------------------------------------------------------- reduced equation


@functools.lru_cache(maxsize=64)
def _s_index(n1: int):
    i, j = np.meshgrid(np.arange(n1), np.arange(n1), indexing="ij")
    hank = i + j < n1
    toep = j >= i
    return hank, (i + j)[hank], toep, (j - i)[toep]


def S_matrix(x: np.ndarray) -> np.ndarray:
    """``S(x)`` with ``S(x)[i, j] = x_{i+j} + x_{j-i}`` (terms outside 0..n dropped)."""
    n1 = len(x)
    hank, hidx, toep, tidx = _s_index(n1)
    out = np.zeros((n1, n1), dtype=np.result_type(x, float))
    out[hank] += x[hidx]
    out[toep] += x[tidx]
    return out


def ab_of_p(p, lam, prior: SpectralPrior, params: CeeParameters):
    y = prior.Gamma @ p + prior.vec
    g1 = params.U @ y + params.u
    return y - lam * g1, y + lam * g1, g1


def reduced_residual(p, lam, prior: SpectralPrior, params: CeeParameters, full: bool = False):
    """Homotopy residual and its partials.

    Returns ``(H, dH/dp, dH/dlam)`` for
    ``H = [I_n 0] S(a) [1; b] - 2 (1 - h'p) s``. With ``full`` the dropped
    last row of the unreduced system is returned as a fourth element.
    """
    p = np.asarray(p, dtype=float)
    n = prior.n
    Gam = prior.Gamma
    a, b, g1 = ab_of_p(p, lam, prior, params)
    Sa = S_matrix(np.concatenate([[1.0], a]))
    Sb = S_matrix(np.concatenate([[1.0], b]))
    bfull = np.concatenate([[1.0], b])
    rho2 = 1.0 - p[0]
    H = (Sa @ bfull)[:n] - 2.0 * rho2 * prior.s
    Sp, Sm = (Sa + Sb)[:n, 1:], (Sa - Sb)[:n, 1:]
    Jp = Sp @ Gam + lam * Sm @ (params.U @ Gam)
    Jp[:, 0] += 2.0 * prior.s
    Jl = Sm @ g1
    if full:
        last = (Sa @ bfull)[n] - 2.0 * rho2 * prior.vec[-1] if n else 0.0
        return H, Jp, Jl, last
    return H, Jp, Jl


# ---------------------------------------------------------------- solution


class RationalInterpolant:
    """``f(z) = num(z) / den(z)``."""

    def __init__(self, num: Polynomial, den: Polynomial):
        self.num = num
        self.den = den

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def jet(self, z0, K: int) -> np.ndarray:
        return rational_jet(self.num, self.den, z0, K).coeffs

    def jet_residual(self, problem: InterpolationProblem) -> float:
        err = 0.0
        for z, w in zip(problem.nodes, problem.jets):
            err = max(err, float(np.max(np.abs(self.jet(z, len(w) - 1) - w))))
        return err

    def min_real_part(self, points: int = 512) -> float:
        th = 2 * np.pi * np.arange(points) / points
        return float(np.min(np.real(self(np.exp(1j * th)))))


@dataclass
class CeeSolution:
    P: np.ndarray
    p: np.ndarray
    a: Polynomial
    b: Polynomial
    rho: float
    prior: SpectralPrior
    params: CeeParameters
    problem: InterpolationProblem
    record: NormalizationRecord
    path: HomotopyResult | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.prior.n

    @property
    def interpolant(self) -> RationalInterpolant:
        """``f = b_* / (2 a_*)`` in normalized coordinates."""
        n = self.n
        return RationalInterpolant(Polynomial(0.5 * self.b.padded(n)[::-1]), Polynomial(self.a.padded(n)[::-1]))

    @property
    def original_interpolant(self) -> RationalInterpolant:
        f = self.interpolant
        if self.record.is_identity:
            return f
        num, den = denormalize_rational(f.num, f.den, self.record, self.n)
        return RationalInterpolant(num, den)

    def shaping_filter(self):
        """``(rho, sigma, a)`` of the minimum-phase factor ``rho sigma / a`` (normalized coordinates)."""
        return self.rho, self.prior.poly, self.a

    @property
    def original_rho(self) -> float:
        """Gain of the spectral factor of the unnormalized data (base node at 0 only)."""
        if self.record.alpha != 0.0:
            raise InputError("original-coordinate gain is only defined for a base node at 0")
        return self.rho / float(np.sqrt(self.record.scale))

    def spectral_density(self, theta) -> np.ndarray:
        """``|v(e^{i theta})|^2 = 2 Re f(e^{i theta})`` for the unnormalized data."""
        z = np.exp(1j * np.asarray(theta))
        if self.record.alpha == 0.0:
            return np.abs(self.original_rho * self.prior.poly(z) / self.a(z)) ** 2
        return 2.0 * np.real(self.original_interpolant(z))

    def pole_trajectory(self) -> tuple[np.ndarray, np.ndarray]:
        """Roots of ``a(p(lam), lam)`` along the homotopy path."""
        if self.path is None:
            return np.zeros(0), np.zeros((0, self.n))
        out = []
        for lam, p in zip(self.path.lambdas, self.path.path):
            a, _, _ = ab_of_p(p, lam, self.prior, self.params)
            out.append(np.sort_complex(roots(Polynomial.monic(a))))
        return self.path.lambdas, np.array(out)


def cee_residual(P, prior: SpectralPrior, params: CeeParameters) -> float:
    Gam, h = prior.Gamma, prior.h
    g = params.u + params.U @ prior.vec + params.U @ Gam @ P @ h
    R = P - Gam @ (P - np.outer(P @ h, h @ P)) @ Gam.T - np.outer(g, g)
    return float(np.max(np.abs(R), initial=0.0))


def recover(p, prior: SpectralPrior, params: CeeParameters):
    """Solve the Stein equation for ``P`` and recover ``(a, b, rho)``."""
    Gam = prior.Gamma
    g = params.u + params.U @ (prior.vec + Gam @ p)
    Gp = Gam @ p
    P = stein_solve(Gam, np.outer(g, g) - np.outer(Gp, Gp))
    P = 0.5 * (P + P.T)
    y = Gam @ (P @ prior.h) + prior.vec
    a = y - params.U @ y - params.u
    b = y + params.U @ y + params.u
    hp = float(P[0, 0])
    if hp >= 1.0:
        raise NumericalError(f"h'Ph = {hp:.6g} >= 1")
    return P, Polynomial.monic(a), Polynomial.monic(b), float(np.sqrt(1.0 - hp))


def _trivial(n: int, prior, params, problem, record, pick=None):
    P = np.zeros((n, n))
    return CeeSolution(
        P=P,
        p=np.zeros(n),
        a=prior.poly,
        b=prior.poly,
        rho=1.0,
        prior=prior,
        params=params,
        problem=problem,
        record=record,
    )


def path_admissible(p, lam, prior: SpectralPrior, params: CeeParameters) -> bool:
    """On the solution branch both ``a`` and ``b`` stay Schur for every ``lam``."""
    a, b, _ = ab_of_p(p, lam, prior, params)
    return is_schur(Polynomial.monic(a))[0] and is_schur(Polynomial.monic(b))[0]


def solve_parameters(params: CeeParameters, prior: SpectralPrior, step0: float = 0.05) -> tuple:
    """Track the reduced equation from ``p = 0`` and return ``(P, a, b, rho, path)``."""
    n = prior.n
    ev = memoized_residual(lambda p, lam: reduced_residual(p, lam, prior, params))
    task = HomotopyTask(
        residual=lambda p, lam: ev(p, lam)[0],
        jac_p=lambda p, lam: ev(p, lam)[1],
        jac_lam=lambda p, lam: ev(p, lam)[2],
        p0=np.zeros(n),
        step0=step0,
        scale=float(np.max(np.abs(prior.s))),
        admissible=lambda p, lam: path_admissible(p, lam, prior, params),
    )
    path = davidenko_solve(task)
    P, a, b, rho = recover(path.p, prior, params)
    return P, a, b, rho, path


def solve_cee(
    problem: InterpolationProblem,
    prior: SpectralPrior | None = None,
    rank_tol: float = 1e-2,
    step0: float = 0.05,
    params: CeeParameters | None = None,
) -> CeeSolution:
    """Solve the degree-constrained interpolation problem for one prior.

    The problem is validated, normalized (if needed) and Pick-tested. The
    default prior is the maximum-entropy choice ``sigma = z^n``.
    """
    if problem.is_matrix:
        raise InputError("matrix-valued data: use cee.matrix.solve_matrix_cee")
    problem = validate(problem)
    if problem.is_normalized:
        norm, record = problem, NormalizationRecord()
    else:
        norm, record = normalize(problem)
    n = norm.n
    if n == 0:
        raise InputError("at least two interpolation conditions are required (n >= 1)")
    prior = SpectralPrior.max_entropy(n) if prior is None else prior
    if prior.n != n:
        raise InputError(f"prior degree {prior.n} does not match n = {n}")
    pick = require_feasible(norm)
    data = build_data_matrices(norm)
    if params is None:
        params = compute_uU(data)
    if not np.any(params.u):
        sol = _trivial(n, prior, params, norm, record)
    else:
        P, a, b, rho, path = solve_parameters(params, prior, step0)
        sol = CeeSolution(P=P, p=P[:, 0].copy(), a=a, b=b, rho=rho, prior=prior, params=params,
                          problem=norm, record=record, path=path)
    sol.diagnostics = diagnose(sol, rank_tol)
    sol.diagnostics["pick_min_eig"] = pick.min_eig
    return sol


def diagnose(sol: CeeSolution, rank_tol: float = 1e-2) -> dict:
    rank, sv = numerical_rank(sol.P, rank_tol) if sol.P.size else (0, np.zeros(0))
    f = sol.interpolant
    H, _, _, last = reduced_residual(sol.p, 1.0, sol.prior, sol.params, full=True)
    return {
        "cee_residual": cee_residual(sol.P, sol.prior, sol.params),
        "reduced_residual": float(np.max(np.abs(H), initial=0.0)),
        "dropped_row_residual": float(abs(last)),
        "interpolation_residual": f.jet_residual(sol.problem),
        "positivity_residual": positivity_residual(sol.a, sol.b, sol.prior.poly, sol.rho),
        "hPh": float(sol.P[0, 0]) if sol.P.size else 0.0,
        "min_eig_P": float(np.min(np.linalg.eigvalsh(sol.P))) if sol.P.size else 0.0,
        "min_real_part": f.min_real_part(),
        "singular_values": sv,
        "degree": rank,
        "rank_tol": rank_tol,
        "schur_margin_a": is_schur(sol.a)[1],
        "schur_margin_b": is_schur(sol.b)[1],
    }


def solve_covariance(c: Sequence[float], prior: SpectralPrior | None = None, **kw) -> CeeSolution:
    """Rational covariance extension for a normalized sequence ``(1/2, c_1, ..., c_n)``."""
    c = np.asarray(c, dtype=float)
    params = covariance_uU(c)
    return solve_cee(covariance_problem(c), prior, params=params, **kw)


def lags_to_jet(r: Sequence[float]) -> np.ndarray:
    """Autocovariances ``(r_0, r_1, ...)`` -> normalized jet ``(1/2, r_1/r_0, ...)``."""
    r = np.asarray(r, dtype=float)
    if r[0] <= 0:
        raise InputError("r_0 must be positive")
    c = r / r[0]
    c[0] = 0.5
    return c


def path_pick_margins(sol: CeeSolution, lambdas=None) -> np.ndarray:
    """Minimum Pick eigenvalue of ``W(lam) = (I - lam T)^{-1} - I/2``."""
    data = build_data_matrices(sol.problem)
    T = cayley_T(data.W)
    I = np.eye(T.shape[0])
    lambdas = np.linspace(0, 1, 11) if lambdas is None else lambdas
    out = []
    for lam in lambdas:
        Wl = np.linalg.inv(I - lam * T) - 0.5 * I
        out.append(np.min(np.linalg.eigvalsh(pick_matrix(Wl, data.X))))
    return np.array(out)


# ---------------------------------------------------------------- degree


@dataclass
class ReductionPlan:
    degree: int
    singular_values: np.ndarray
    removed_zeros: np.ndarray
    kept_zeros: np.ndarray
    reduced_prior: SpectralPrior | None
    reduced_problem: InterpolationProblem | None
    warnings: list = field(default_factory=list)


def select_zeros(zeros: np.ndarray, remove: int) -> tuple[np.ndarray, np.ndarray, list]:
    """Drop ``remove`` zeros of smallest modulus, keeping conjugate pairs together."""
    zeros = np.asarray(zeros, dtype=complex)
    groups, used = [], set()
    for i in np.argsort(np.abs(zeros), kind="stable"):
        if i in used:
            continue
        used.add(i)
        g = [i]
        if abs(zeros[i].imag) > 1e-9:
            cands = [k for k in range(len(zeros)) if k not in used and abs(zeros[k] - np.conj(zeros[i])) < 1e-7]
            if cands:
                used.add(cands[0])
                g.append(cands[0])
        groups.append(g)
    removed, notes = [], []
    left = remove
    for g in groups:
        if len(g) <= left:
            removed.extend(g)
            left -= len(g)
        if left == 0:
            break
    if left:
        notes.append(f"conjugate pairing prevents removing exactly {remove} zeros; removed {remove - left}")
    keep = [i for i in range(len(zeros)) if i not in removed]
    return zeros[removed], zeros[keep], notes


def truncate_problem(problem: InterpolationProblem, count: int) -> InterpolationProblem:
    """Keep the first ``count`` interpolation conditions, never splitting a conjugate pair."""
    nodes, jets, left = [], [], count
    i = 0
    while i < len(problem.nodes) and left > 0:
        z = problem.nodes[i]
        pair = abs(z.imag) > 1e-12
        width = 2 if pair else 1
        take = min(len(problem.jets[i]), left // width)
        if take > 0:
            nodes.append(z)
            jets.append(problem.jets[i][:take])
            if pair:
                nodes.append(problem.nodes[i + 1])
                jets.append(problem.jets[i + 1][:take])
            left -= take * width
        i += 2 if pair else 1
    return InterpolationProblem(tuple(nodes), tuple(jets), problem.ell)


def degree_and_reduce(sol: CeeSolution, tol: float = 1e-2) -> ReductionPlan:
    """Numerical degree ``rank P`` and the reduced re-solve plan."""
    n = sol.n
    rank, sv = numerical_rank(sol.P, tol)
    zeros = sol.prior.zeros()
    if rank >= n:
        return ReductionPlan(rank, sv, np.zeros(0), zeros, sol.prior, sol.problem)
    removed, kept, notes = select_zeros(zeros, n - rank)
    reduced_problem = truncate_problem(sol.problem, len(kept) + 1)
    if reduced_problem.n != len(kept):
        notes.append(f"interpolation data support degree {reduced_problem.n}, prior has {len(kept)} zeros")
    prior = SpectralPrior.from_zeros(kept) if len(kept) else None
    return ReductionPlan(rank, sv, removed, kept, prior, reduced_problem, notes)


def algebraic_degree(c: Sequence[float], tol: float = 1e-9):
    """Hankel-rank (Kronecker) degree and the corresponding ``(a, b)``.

    The result ignores positivity: ``b/a`` need not be positive real.
    """
    c = np.asarray(c, dtype=float)
    n = len(c) - 1
    m = (n + 1) // 2
    if m == 0:
        return 0, np.zeros(0), np.zeros(0)
    Hm = np.array([[c[1 + i + j] for j in range(m)] for i in range(m)])
    d, _ = numerical_rank(Hm, tol) if np.any(Hm) else (0, None)
    if d == 0:
        return 0, np.zeros(0), np.zeros(0)
    if 2 * d > n:
        log.warning("too few lags to pin down a degree-%d model", d)
        d = n // 2
        if d == 0:
            return 0, np.zeros(0), np.zeros(0)
    Hd = np.array([[c[1 + i + j] for j in range(d)] for i in range(d)])
    # the Hankel solve yields (a_d, ..., a_1)
    a = np.linalg.solve(Hd, -c[d + 1 : 2 * d + 1])[::-1]
    Lt = toeplitz_lower(np.concatenate([[1.0], 2 * c[1:d]]))
    b = 2 * c[1 : d + 1] + Lt @ a
    ok = is_schur(Polynomial.monic(a))[0] and is_schur(Polynomial.monic(b))[0]
    if not ok:
        log.warning("algebraic-degree model is not positive real")
    return d, a, b


def random_schur(n: int, rng: np.random.Generator, rmax: float = 0.95) -> SpectralPrior:
    """Random real monic Schur polynomial: conjugate pairs and real roots with modulus < rmax."""
    zs = []
    while len(zs) < n:
        if n - len(zs) >= 2 and rng.random() < 0.6:
            r, th = rmax * np.sqrt(rng.random()), np.pi * rng.random()
            zs += [r * np.exp(1j * th), r * np.exp(-1j * th)]
        else:
            zs.append(rmax * (2 * rng.random() - 1))
    return SpectralPrior.from_zeros(zs)


def positive_degree_estimate(c: Sequence[float], samples: int = 16, seed: int = 0, tol: float = 1e-6) -> dict:
    """Heuristic upper bound on the positive degree: ``min rank P(sigma)`` over sampled priors.

    The sample is ``sigma = z^n`` followed by ``samples`` random Schur
    polynomials from a seeded generator.
    """
    c = np.asarray(c, dtype=float)
    n = len(c) - 1
    params = covariance_uU(c)
    if not np.any(params.u):
        return {"estimate": 0, "ranks": [0], "heuristic": True}
    rng = np.random.default_rng(seed)
    priors = [SpectralPrior.max_entropy(n)] + [random_schur(n, rng) for _ in range(samples)]
    ranks = []
    for pr in priors:
        P, *_ = solve_parameters(params, pr)
        ranks.append(numerical_rank(P, tol)[0])
    return {"estimate": int(min(ranks)), "ranks": ranks, "heuristic": True}


def levinson_durbin(c: Sequence[float]) -> tuple[np.ndarray, float]:
    """AR coefficients ``(a_1..a_n)`` and prediction-error variance for lags ``c``.

    ``c_0`` is taken as the zero-lag covariance itself.
    """
    c = np.asarray(c, dtype=float)
    n = len(c) - 1
    a = np.zeros(0)
    err = c[0]
    for k in range(1, n + 1):
        refl = -(c[k] + np.dot(a, c[k - 1 : 0 : -1])) / err
        a = np.concatenate([a + refl * a[::-1], [refl]])
        err *= 1.0 - refl**2
    return a, err


def numerator_from_filter(a: Polynomial, sigma: Polynomial) -> tuple[Polynomial, float]:
    """Monic ``b`` and ``rho`` with ``a b_* + b a_* = 2 rho^2 sigma sigma_*`` (so ``f(0) = 1/2``)."""
    n = a.degree
    af = a.padded(n)[::-1]
    sg = SpectralPrior(sigma)
    S = S_matrix(af)
    rhs = np.concatenate([sg.s, [sg.vec[-1]]])
    A = np.column_stack([S[:, 1:], -2.0 * rhs])
    x = np.linalg.solve(A, -S[:, 0])
    if x[-1] <= 0:
        raise NumericalError("filter does not define a positive spectral density")
    return Polynomial.monic(x[:-1]), float(np.sqrt(x[-1]))
