"""Matrix-valued Covariance Extension Equation.

The ``l x l`` interpolant is ``F(z) = 1/2 A_*(z)^{-1} B_*(z)`` with
``A_*(z) = I + A_1 z + ... + A_n z^n``. Matrices of size ``n l x l`` use the
observer canonical ordering: row ``i*n + k - 1`` holds row ``i`` of the
coefficient ``A_k`` (equal observability indices ``t_i = n``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError, UnequalIndicesError
from .interp import (
    InterpolationProblem,
    NormalizationRecord,
    build_data_matrices,
    normalize,
    pick_matrix,
    require_feasible,
    validate,
)
from .numerics import (
    HomotopyResult,
    HomotopyTask,
    davidenko_solve,
    memoized_residual,
    numerical_rank,
    spectral_radius,
    stein_solve,
)
from .poly import MatrixPolynomial, matrix_series_inverse, matrix_series_mul, matrix_shift
from .scalar import IMAG_TOL, SpectralPrior, cayley_T, select_zeros, truncate_problem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CanonicalStructure:
    """Observer canonical form ``H = diag(h_{t_i})``, ``J = diag(J_{t_i})`` and selectors ``N_k``."""

    ell: int
    n: int
    indices: tuple
    H: np.ndarray
    J: np.ndarray
    N: tuple

    @property
    def equal_indices(self) -> bool:
        return all(t == self.n for t in self.indices)

    @property
    def t(self) -> int:
        return max(self.indices)

    def D(self, z) -> np.ndarray:
        return np.diag([z**t for t in self.indices])

    def Pi(self, z) -> np.ndarray:
        out = np.zeros((self.ell, self.n * self.ell), dtype=complex)
        pos = 0
        for i, t in enumerate(self.indices):
            out[i, pos : pos + t] = [z ** (t - 1 - r) for r in range(t)]
            pos += t
        return out

    def identity_residual(self, z) -> float:
        """``|D(z) Pi(1/z) - sum_k N_k z^k|``."""
        lhs = self.D(z) @ self.Pi(1.0 / z)
        rhs = sum(Nk * z ** (k + 1) for k, Nk in enumerate(self.N))
        return float(np.max(np.abs(lhs - rhs)))


def build_canonical(ell: int, n: int, indices: Sequence[int] | None = None) -> CanonicalStructure:
    """Structural matrices for output dimension ``ell`` and state dimension ``n * ell``."""
    if ell < 1 or n < 1:
        raise InputError("ell and n must be positive")
    indices = tuple([n] * ell) if indices is None else tuple(int(t) for t in indices)
    if len(indices) != ell or sum(indices) != n * ell or min(indices) < 1:
        raise InputError(f"observability indices {indices} must be {ell} positive numbers summing to {n * ell}")
    H = scipy.linalg.block_diag(*[np.eye(1, t) for t in indices])
    J = scipy.linalg.block_diag(*[np.eye(t, k=1) for t in indices])
    t = max(indices)
    N = []
    for k in range(1, t + 1):
        Nk = np.zeros((ell, n * ell))
        pos = 0
        for i, ti in enumerate(indices):
            if k <= ti:
                Nk[i, pos + k - 1] = 1.0
            pos += ti
        N.append(Nk)
    struct = CanonicalStructure(ell, n, indices, H, J, tuple(N))
    for z in (0.7 + 0.2j, -1.3):
        if struct.identity_residual(z) > 1e-12:
            raise NumericalError("canonical structure identity D(z)Pi(1/z) = sum N_k z^k failed")
    return struct


def coeffs_to_state(C: np.ndarray) -> np.ndarray:
    """``(A_1, ..., A_n)`` with shape (n, l, l) -> canonical ``n l x l`` matrix."""
    C = np.asarray(C)
    n, ell, _ = C.shape
    return C.transpose(1, 0, 2).reshape(n * ell, ell)


def state_to_coeffs(X: np.ndarray, ell: int, lead: float = 1.0) -> np.ndarray:
    """Canonical matrix -> coefficients ``(lead*I, X_1, ..., X_n)`` with shape (n+1, l, l)."""
    n = X.shape[0] // ell
    out = np.empty((n + 1, ell, ell), dtype=X.dtype)
    out[0] = lead * np.eye(ell)
    out[1:] = X.reshape(ell, n, ell).transpose(1, 0, 2)
    return out


def _vec(X):
    return X.reshape(-1, order="F")


def _unvec(x, shape):
    return x.reshape(shape, order="F")


class MatrixPrior:
    """``Sigma(z) = z^n I + Sigma_1 z^{n-1} + ... + Sigma_n`` with ``det Sigma`` Schur."""

    def __init__(self, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise InputError("matrix prior coefficients must have shape (n, l, l)")
        self.coeffs = coeffs
        self.n, self.ell = coeffs.shape[0], coeffs.shape[1]
        self.struct = build_canonical(self.ell, self.n)
        self.state = coeffs_to_state(coeffs)
        r = spectral_radius(self.Gamma)
        if r >= 1.0:
            raise InputError(f"det Sigma(z) is not Schur (spectral radius {r:.6g})")
        self.scalar: SpectralPrior | None = None

    @classmethod
    def from_scalar(cls, sigma: SpectralPrior, ell: int) -> "MatrixPrior":
        pr = cls(np.einsum("k,ij->kij", sigma.vec, np.eye(ell)))
        pr.scalar = sigma
        return pr

    @property
    def Gamma(self) -> np.ndarray:
        return self.struct.J - self.state @ self.struct.H

    def full(self) -> np.ndarray:
        return state_to_coeffs(self.state, self.ell)

    def zeros(self) -> np.ndarray:
        return np.linalg.eigvals(self.Gamma)


@dataclass
class MatrixCeeParameters:
    u: np.ndarray
    U: np.ndarray
    T: np.ndarray
    That: np.ndarray
    L: np.ndarray
    imag_residue: float = 0.0

    def apply_U(self, Q: np.ndarray) -> np.ndarray:
        return _unvec(self.U @ _vec(Q), Q.shape)


def build_VN(struct: CanonicalStructure, Z: np.ndarray, e: np.ndarray):
    """``VN = [0; L]`` with ``V = [Ze x I, ..., Z^t e x I]``; returns ``(VN, L, invertible)``."""
    ell = struct.ell
    cols, v = [], np.asarray(e, dtype=complex)
    for _ in range(struct.t):
        v = Z @ v
        cols.append(np.kron(v[:, None], np.eye(ell)))
    V = np.hstack(cols)
    N = np.vstack(struct.N)
    VN = V @ N
    if np.max(np.abs(VN[:ell]), initial=0.0) > 1e-12 * max(1.0, np.abs(VN).max()):
        raise InputError("top block of VN is not zero: the first node must be at the origin")
    L = VN[ell:]
    s = np.linalg.svd(L, compute_uv=False)
    ok = bool(L.shape[0] == L.shape[1] and s[-1] > 1e-12 * s[0])
    return VN, L, ok


def compute_matrix_uU(problem: InterpolationProblem, struct: CanonicalStructure | None = None) -> MatrixCeeParameters:
    """``u = (VN)^+ T_hat`` and the operator ``U(Q) = (VN)^+ (sum_k Z^k x N_k Q) T_hat``."""
    ell, n = problem.ell, problem.n
    struct = build_canonical(ell, n) if struct is None else struct
    if not struct.equal_indices:
        raise UnequalIndicesError("unequal observability indices: VN is singular (indices must all equal n)")
    data = build_data_matrices(problem)
    VN, L, ok = build_VN(struct, data.Z, data.e)
    if not ok:
        raise UnequalIndicesError("L block of VN is singular")
    Linv = np.linalg.inv(L)
    T = cayley_T(data.W)
    That = T @ np.kron(data.e[:, None], np.eye(ell))
    u = Linv @ That[ell:]
    Zk = [np.linalg.matrix_power(data.Z, k) for k in range(1, n + 1)]
    dim = n * ell * ell
    Umat = np.zeros((dim, dim), dtype=complex)
    for c in range(dim):
        E = _unvec(np.eye(dim)[c], (n * ell, ell))
        M = sum(np.kron(Zk[k], struct.N[k] @ E) for k in range(n))
        Umat[:, c] = _vec(Linv @ (M @ That)[ell:])
    res = max(float(np.max(np.abs(u.imag), initial=0.0)), float(np.max(np.abs(Umat.imag), initial=0.0)))
    if res > IMAG_TOL * max(1.0, np.abs(u).max(), np.abs(Umat).max()):
        raise NumericalError(f"u/U have imaginary residue {res:.3g}; data are not self-conjugate")
    return MatrixCeeParameters(u=u.real.copy(), U=Umat.real.copy(), T=T, That=That, L=L, imag_residue=res)


# ---------------------------------------------------------------- reduced equation


def _pair(X: np.ndarray, Y: np.ndarray, rows: int) -> np.ndarray:
    """Coefficients ``z^0 .. z^{rows-1}`` of ``X(z) Y(1/z)'`` for reversed coefficient arrays.

    ``X`` and ``Y`` have shape (..., n+1, l, l); entry ``i`` is ``sum_m X_m Y_{m+i}'``.
    """
    n1 = X.shape[-3]
    out = np.zeros(X.shape[:-3] + (rows,) + X.shape[-2:], dtype=np.result_type(X, Y))
    for i in range(rows):
        out[..., i, :, :] = np.einsum("...mab,...mcb->...ac", X[..., : n1 - i, :, :], Y[..., i:, :, :])
    return out


def _stack(blocks: np.ndarray) -> np.ndarray:
    """(rows, l, l) -> (rows*l, l) block column."""
    r, ell, _ = blocks.shape[-3:]
    return blocks.reshape(blocks.shape[:-3] + (r * ell, ell))


def matrix_AB(p, lam, prior: MatrixPrior, params: MatrixCeeParameters):
    y = prior.Gamma @ p + prior.state
    g = params.u + params.apply_U(y)
    return y - lam * g, y + lam * g, g


def matrix_path_admissible(p, lam, prior: MatrixPrior, params: MatrixCeeParameters) -> bool:
    """``det A`` and ``det B`` stay stable on the solution branch."""
    A, B, _ = matrix_AB(p, lam, prior, params)
    J, H = prior.struct.J, prior.struct.H
    return spectral_radius(J - A @ H) < 1.0 and spectral_radius(J - B @ H) < 1.0


def matrix_reduced_residual(p, lam, prior: MatrixPrior, params: MatrixCeeParameters, full: bool = False):
    """Residual ``nl x l`` matrix and the vectorized partials ``(d vec H / d vec p, d vec H / d lam)``.

    With ``full`` the dropped last block row is returned as well.
    """
    ell, n = prior.ell, prior.n
    p = np.asarray(p, dtype=float).reshape(n * ell, ell)
    Gam, H = prior.Gamma, prior.struct.H
    A, B, g = matrix_AB(p, lam, prior, params)
    Ac, Bc, Sc = state_to_coeffs(A, ell), state_to_coeffs(B, ell), prior.full()
    RR = np.eye(ell) - H @ p
    ScR = Sc @ RR
    rows = n + 1 if full else n
    blocks = _pair(Ac, Bc, rows) + _pair(Bc, Ac, rows) - 2.0 * _pair(ScR, Sc, rows)
    res = _stack(blocks[:n])
    # Jacobian columns from directional derivatives along basis matrices
    dim = n * ell * ell
    I = np.eye(dim)
    GamK = np.kron(np.eye(ell), Gam)
    dA = (I - lam * params.U) @ GamK
    dB = (I + lam * params.U) @ GamK
    dAc = np.stack([state_to_coeffs(_unvec(dA[:, c], (n * ell, ell)), ell, 0.0) for c in range(dim)])
    dBc = np.stack([state_to_coeffs(_unvec(dB[:, c], (n * ell, ell)), ell, 0.0) for c in range(dim)])
    dRR = np.stack([-H @ _unvec(I[:, c], (n * ell, ell)) for c in range(dim)])
    Ab, Bb, Sb = (np.broadcast_to(X, (dim,) + X.shape) for X in (Ac, Bc, Sc))
    dSR = np.einsum("kab,cbd->ckad", Sc, dRR)
    dblk = _pair(dAc, Bb, n) + _pair(Ab, dBc, n) + _pair(dBc, Ab, n) + _pair(Bb, dAc, n) - 2.0 * _pair(dSR, Sb, n)
    Jp = np.stack([_vec(_stack(dblk[c])) for c in range(dim)], axis=1)
    gc = state_to_coeffs(g, ell, 0.0)
    dl = -_pair(gc, Bc, n) + _pair(Ac, gc, n) + _pair(gc, Ac, n) - _pair(Bc, gc, n)
    Jl = _vec(_stack(dl))
    if full:
        return res, Jp, Jl, blocks[n]
    return res, Jp, Jl


# ---------------------------------------------------------------- solution


class MatrixInterpolant:
    """``F(z) = 1/2 A_*(z)^{-1} B_*(z)`` from coefficient arrays (n+1, l, l)."""

    def __init__(self, Acoeffs: np.ndarray, Bcoeffs: np.ndarray, left: np.ndarray | None = None, right: np.ndarray | None = None):
        self.Ast = MatrixPolynomial(Acoeffs)
        self.Bst = MatrixPolynomial(Bcoeffs)
        ell = Acoeffs.shape[1]
        self.left = np.eye(ell) if left is None else left
        self.right = np.eye(ell) if right is None else right

    def __call__(self, z) -> np.ndarray:
        return 0.5 * self.left @ np.linalg.solve(self.Ast(z), self.Bst(z)) @ self.right

    def jet(self, z0, K: int) -> np.ndarray:
        a = matrix_shift(self.Ast.coeffs.astype(complex), z0)[: K + 1]
        b = matrix_shift(self.Bst.coeffs.astype(complex), z0)[: K + 1]
        a = np.concatenate([a, np.zeros((K + 1 - len(a),) + a.shape[1:])]) if len(a) < K + 1 else a
        b = np.concatenate([b, np.zeros((K + 1 - len(b),) + b.shape[1:])]) if len(b) < K + 1 else b
        f = 0.5 * matrix_series_mul(matrix_series_inverse(a, K), b, K)
        return np.einsum("ij,kjl,lm->kim", self.left, f, self.right)

    def jet_residual(self, problem: InterpolationProblem) -> float:
        err = 0.0
        for z, w in zip(problem.nodes, problem.jets):
            err = max(err, float(np.max(np.abs(self.jet(z, len(w) - 1) - w))))
        return err

    def min_hermitian_eig(self, points: int = 256) -> float:
        out = np.inf
        for th in 2 * np.pi * np.arange(points) / points:
            Fz = self(np.exp(1j * th))
            out = min(out, float(np.min(np.linalg.eigvalsh(Fz + Fz.conj().T))))
        return out


@dataclass
class MatrixCeeSolution:
    P: np.ndarray
    p: np.ndarray
    A: np.ndarray
    B: np.ndarray
    R: np.ndarray
    prior: MatrixPrior
    params: MatrixCeeParameters
    problem: InterpolationProblem
    record: NormalizationRecord
    path: HomotopyResult | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ell(self) -> int:
        return self.prior.ell

    @property
    def A_coeffs(self) -> np.ndarray:
        return state_to_coeffs(self.A, self.ell)

    @property
    def B_coeffs(self) -> np.ndarray:
        return state_to_coeffs(self.B, self.ell)

    @property
    def interpolant(self) -> MatrixInterpolant:
        return MatrixInterpolant(self.A_coeffs, self.B_coeffs)

    def original_system(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A coefficients, R)`` undoing a pure congruence normalization ``K F K'``.

        Returns the coefficients of ``A(z) = z^n I + A_1 z^{n-1} + ...`` and the
        symmetric square root ``R`` of the innovation covariance.
        """
        if self.record.alpha != 0.0:
            raise InputError("original-coordinate system is only defined for a base node at 0")
        K = self.record.congruence
        if K is None:
            return self.A_coeffs, self.R
        Ki = np.linalg.inv(K)
        A = np.einsum("ij,kjl,lm->kim", Ki, self.A_coeffs, K)
        RR = Ki @ self.R @ self.R.T @ Ki
        return A, np.real(scipy.linalg.sqrtm(0.5 * (RR + RR.T)))

    def pole_trajectory(self):
        if self.path is None:
            return np.zeros(0), np.zeros((0, self.P.shape[0]))
        struct = self.prior.struct
        out = []
        for lam, pv in zip(self.path.lambdas, self.path.path):
            p = _unvec(pv, self.p.shape)
            A, _, _ = matrix_AB(p, lam, self.prior, self.params)
            out.append(np.sort_complex(np.linalg.eigvals(struct.J - A @ struct.H)))
        return self.path.lambdas, np.array(out)


def matrix_cee_residual(P, prior: MatrixPrior, params: MatrixCeeParameters) -> float:
    Gam, H = prior.Gamma, prior.struct.H
    p = P @ H.T
    G = params.u + params.apply_U(Gam @ p + prior.state)
    R = P - Gam @ (P - p @ p.T) @ Gam.T - G @ G.T
    return float(np.max(np.abs(R), initial=0.0))


def spectral_identity_residual(A, B, R, prior: MatrixPrior) -> float:
    """All coefficients of ``A(z)B(1/z)' + B(z)A(1/z)' - 2 Sigma(z) R R' Sigma(1/z)'``."""
    ell, n = prior.ell, prior.n
    Ac, Bc, Sc = state_to_coeffs(A, ell), state_to_coeffs(B, ell), prior.full()
    D = _pair(Ac, Bc, n + 1) + _pair(Bc, Ac, n + 1) - 2.0 * _pair(Sc @ (R @ R.T), Sc, n + 1)
    return float(np.max(np.abs(D)))


def _recover(p, prior: MatrixPrior, params: MatrixCeeParameters):
    Gam, H = prior.Gamma, prior.struct.H
    Gp = Gam @ p
    G = params.u + params.apply_U(Gp + prior.state)
    P = stein_solve(Gam, G @ G.T - Gp @ Gp.T)
    P = 0.5 * (P + P.T)
    p = P @ H.T
    y = Gam @ p + prior.state
    Uy = params.apply_U(y)
    A = y - Uy - params.u
    B = y + Uy + params.u
    RR = np.eye(prior.ell) - H @ P @ H.T
    ev = np.linalg.eigvalsh(0.5 * (RR + RR.T))
    if ev.min() <= 0:
        raise NumericalError(f"HPH' is not below I (min eigenvalue of I - HPH' = {ev.min():.3g})")
    R = np.real(scipy.linalg.sqrtm(0.5 * (RR + RR.T)))
    return P, p, A, B, R


def solve_matrix_cee(
    problem: InterpolationProblem,
    prior: MatrixPrior | SpectralPrior | None = None,
    rank_tol: float = 1e-2,
    step0: float = 0.05,
) -> MatrixCeeSolution:
    """Matrix analogue of :func:`cee.scalar.solve_cee` (equal observability indices)."""
    if not problem.is_matrix:
        raise InputError("scalar data: use cee.scalar.solve_cee")
    problem = validate(problem)
    if problem.is_normalized:
        norm, record = problem, NormalizationRecord(congruence=np.eye(problem.ell))
    else:
        norm, record = normalize(problem)
    ell, n = norm.ell, norm.n
    if n == 0:
        raise InputError("at least two matrix interpolation conditions are required")
    if prior is None:
        prior = SpectralPrior.max_entropy(n)
    if isinstance(prior, SpectralPrior):
        prior = MatrixPrior.from_scalar(prior, ell)
    if prior.n != n or prior.ell != ell:
        raise InputError(f"prior shape (n={prior.n}, l={prior.ell}) does not match data (n={n}, l={ell})")
    pick = require_feasible(norm)
    params = compute_matrix_uU(norm, prior.struct)
    shape = (n * ell, ell)
    if not np.any(params.u):
        P = np.zeros((n * ell, n * ell))
        sol = MatrixCeeSolution(P, np.zeros(shape), prior.state.copy(), prior.state.copy(), np.eye(ell),
                                prior, params, norm, record)
    else:
        ev = memoized_residual(lambda pv, lam: matrix_reduced_residual(_unvec(pv, shape), lam, prior, params))
        task = HomotopyTask(
            residual=lambda pv, lam: _vec(ev(pv, lam)[0]),
            jac_p=lambda pv, lam: ev(pv, lam)[1],
            jac_lam=lambda pv, lam: ev(pv, lam)[2],
            p0=np.zeros(n * ell * ell),
            step0=step0,
            scale=float(np.max(np.abs(prior.full()))) ** 2,
            admissible=lambda pv, lam: matrix_path_admissible(_unvec(pv, shape), lam, prior, params),
        )
        path = davidenko_solve(task)
        P, p, A, B, R = _recover(_unvec(path.p, shape), prior, params)
        sol = MatrixCeeSolution(P, p, A, B, R, prior, params, norm, record, path)
    sol.diagnostics = matrix_diagnose(sol, rank_tol)
    sol.diagnostics["pick_min_eig"] = pick.min_eig
    sol.diagnostics["unique"] = prior.scalar is not None
    if sol.diagnostics["min_eig_P"] < -1e-10:
        raise NumericalError("endpoint P is not positive semidefinite; the path may have reached a non-admissible branch")
    return sol


def matrix_diagnose(sol: MatrixCeeSolution, rank_tol: float = 1e-2) -> dict:
    rank, sv = numerical_rank(sol.P, rank_tol)
    H = sol.prior.struct.H
    res, _, _, last = matrix_reduced_residual(sol.p, 1.0, sol.prior, sol.params, full=True)
    f = sol.interpolant
    return {
        "cee_residual": matrix_cee_residual(sol.P, sol.prior, sol.params),
        "reduced_residual": float(np.max(np.abs(res))),
        "dropped_row_residual": float(np.max(np.abs(last))),
        "spectral_identity_residual": spectral_identity_residual(sol.A, sol.B, sol.R, sol.prior),
        "interpolation_residual": f.jet_residual(sol.problem),
        "max_eig_HPH": float(np.max(np.linalg.eigvalsh(H @ sol.P @ H.T))),
        "min_eig_P": float(np.min(np.linalg.eigvalsh(sol.P))),
        "min_hermitian_eig": f.min_hermitian_eig(),
        "singular_values": sv,
        "degree": rank,
        "rank_tol": rank_tol,
    }


def path_pick_margins(sol: MatrixCeeSolution, lambdas=None) -> np.ndarray:
    data = build_data_matrices(sol.problem)
    T = cayley_T(data.W)
    I = np.eye(T.shape[0])
    lambdas = np.linspace(0, 1, 11) if lambdas is None else lambdas
    return np.array([np.min(np.linalg.eigvalsh(pick_matrix(np.linalg.inv(I - lam * T) - 0.5 * I, data.X, sol.ell)))
                     for lam in lambdas])


@dataclass
class MatrixReductionPlan:
    degree: int
    singular_values: np.ndarray
    reduced_index: int
    removed_zeros: np.ndarray
    kept_zeros: np.ndarray
    reduced_prior: MatrixPrior | None
    reduced_problem: InterpolationProblem | None
    warnings: list = field(default_factory=list)


def matrix_degree_and_reduce(sol: MatrixCeeSolution, tol: float = 1e-2) -> MatrixReductionPlan:
    """Numerical McMillan degree and a reduced plan with equal indices ``t = ceil(rank / l)``.

    For a prior ``sigma(z) I`` the ``n - t`` scalar spectral zeros of smallest
    modulus are removed, each appearing ``l`` times in ``det Sigma``.
    """
    ell, n = sol.ell, sol.prior.n
    rank, sv = numerical_rank(sol.P, tol)
    notes = []
    if rank % ell:
        notes.append(f"rank {rank} is not a multiple of l={ell}; rounding the reduced index up")
    t = -(-rank // ell)
    if t >= n:
        return MatrixReductionPlan(rank, sv, n, np.zeros(0), sol.prior.zeros(), sol.prior, sol.problem, notes)
    if sol.prior.scalar is None:
        notes.append("non-scalar prior: reduced prior must be chosen by the user")
        return MatrixReductionPlan(rank, sv, t, np.zeros(0), sol.prior.zeros(), None, None, notes)
    removed, kept, more = select_zeros(sol.prior.scalar.zeros(), n - t)
    notes += more
    reduced_prior = MatrixPrior.from_scalar(SpectralPrior.from_zeros(kept), ell) if len(kept) else None
    reduced = truncate_problem(sol.problem, len(kept) + 1)
    return MatrixReductionPlan(rank, sv, len(kept), np.repeat(removed, ell), np.repeat(kept, ell),
                               reduced_prior, reduced, notes)
