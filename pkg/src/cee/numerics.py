"""Dense linear-algebra kernels and the homotopy (Davidenko) path follower."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import NumericalError, PathFailure, UnequalIndicesError

log = logging.getLogger(__name__)

KRON_MAX_DIM = 32


def spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def stein_solve(A, Q, B=None) -> np.ndarray:
    """Solve ``X = A X B^* + Q`` (``B`` defaults to ``A``).

    Uses the vectorized Kronecker system for dimension <= 32 and falls back
    to scipy's discrete Lyapunov solver for larger symmetric problems.
    """
    A = np.atleast_2d(np.asarray(A))
    Q = np.atleast_2d(np.asarray(Q))
    symmetric = B is None
    B = A if B is None else np.atleast_2d(np.asarray(B))
    rA, rB = spectral_radius(A), spectral_radius(B)
    if rA * rB >= 1.0:
        raise NumericalError(f"Stein equation not uniquely solvable: spectral radii {rA:.6g}, {rB:.6g}")
    n, m = Q.shape
    dtype = np.result_type(A, B, Q, float)
    if n <= KRON_MAX_DIM and m <= KRON_MAX_DIM:
        K = np.eye(n * m, dtype=dtype) - np.kron(B.conj(), A)
        x = np.linalg.solve(K, Q.reshape(-1, order="F"))
        X = x.reshape((n, m), order="F")
    elif symmetric:
        X = scipy.linalg.solve_discrete_lyapunov(A, Q)
    else:
        raise NumericalError("non-symmetric Stein problems above dimension 32 are not supported")
    if symmetric and np.allclose(Q, Q.conj().T, rtol=0, atol=1e-14 * (1 + np.abs(Q).max())):
        X = 0.5 * (X + X.conj().T)
    if not np.iscomplexobj(A) and not np.iscomplexobj(B) and not np.iscomplexobj(Q):
        X = X.real
    return X


def stein_residual(X, A, Q, B=None) -> float:
    B = A if B is None else B
    return float(np.linalg.norm(X - A @ X @ np.conj(B).T - Q))


def numerical_rank(M, tol: float = 1e-2) -> tuple[int, np.ndarray]:
    """Count singular values above ``tol * s_max``; returns ``(rank, s)``."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0, s
    return int(np.sum(s > tol * s[0])), s


def pinv_tall_zero_top(M, ell: int, cond_max: float = 1e12) -> np.ndarray:
    """Left inverse ``[0 L^-1]`` of ``M = [0; L]`` whose top ``ell`` rows vanish."""
    M = np.asarray(M)
    top, L = M[:ell], M[ell:]
    if L.shape[0] != L.shape[1]:
        raise ValueError("bottom block must be square")
    if np.max(np.abs(top), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(M))):
        raise ValueError("top block of M is not zero")
    s = np.linalg.svd(L, compute_uv=False)
    if s.size and (s[-1] == 0.0 or s[0] / s[-1] > cond_max):
        raise UnequalIndicesError(
            "bottom block L of VN is singular; this happens if and only if the "
            "observability indices are not all equal"
        )
    out = np.zeros((L.shape[0], M.shape[0]), dtype=np.result_type(M, float))
    out[:, ell:] = np.linalg.inv(L)
    return out


@dataclass
class HomotopyTask:
    """Residual ``H(p, lam)`` with partials, tracked from ``lam = 0`` to 1.

    ``jac_p`` returns the square matrix dH/dp, ``jac_lam`` the vector dH/dlam.
    ``scale`` normalizes the corrector tolerance. ``admissible(p, lam)``, if
    given, rejects corrected points that left the solution branch; a step is
    also rejected when Newton fails to contract by ``contraction``. Each
    predictor moves ``p`` by at most ``max_move (1 + |p|)``, and ``min_step``
    bounds the arclength step ``h (1 + |dp/dlam|)``, so steep stretches of
    the path are resolved with small ``lam`` increments.
    """

    residual: Callable[[np.ndarray, float], np.ndarray]
    jac_p: Callable[[np.ndarray, float], np.ndarray]
    jac_lam: Callable[[np.ndarray, float], np.ndarray]
    p0: np.ndarray
    step0: float = 0.05
    min_step: float = 1e-6
    corrector_tol: float = 1e-12
    max_newton: int = 8
    max_steps: int = 20000
    rcond_min: float = 1e-12
    scale: float = 1.0
    contraction: float = 0.5
    max_move: float = 0.25
    admissible: Callable[[np.ndarray, float], bool] | None = None


@dataclass
class HomotopyResult:
    p: np.ndarray
    lambdas: np.ndarray
    path: np.ndarray
    residual_norm: float
    steps: int
    rejected: int
    max_step_residual: float = 0.0
    info: dict = field(default_factory=dict)


def memoized_residual(fun: Callable):
    """Wrap ``fun(p, lam)`` so repeated calls at the same point are evaluated once."""
    last: list = [None, None, None]

    def ev(p, lam):
        if last[0] is not None and last[1] == lam and np.array_equal(last[0], p):
            return last[2]
        out = fun(p, lam)
        last[:] = [np.array(p, copy=True), lam, out]
        return out

    return ev


def _solve_checked(J, r, lam, task, lams, path):
    lu, piv = scipy.linalg.lu_factor(J, check_finite=False)
    anorm = np.linalg.norm(J, 1)
    rcond = 0.0 if anorm == 0 else scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    if not np.isfinite(rcond) or rcond < task.rcond_min:
        raise PathFailure(f"Jacobian ill-conditioned (rcond={rcond:.3g})", lam, (lams, path))
    return scipy.linalg.lu_solve((lu, piv), r, check_finite=False)


def _correct(task, p, lam, tol, lams, path):
    """Newton on H(., lam) = 0. Returns (p, ||H||, converged)."""
    r = task.residual(p, lam)
    nr = np.linalg.norm(r)
    prev = None
    for _ in range(task.max_newton):
        if nr <= tol:
            return p, nr, True
        dp = _solve_checked(task.jac_p(p, lam), r, lam, task, lams, path)
        ndp = np.linalg.norm(dp)
        # a non-contracting Newton sequence signals a predictor outside the basin
        if prev is not None and ndp > task.contraction * prev and ndp > 1e-10 * (1.0 + np.linalg.norm(p)):
            return p, nr, False
        prev = ndp
        p = p - dp
        r = task.residual(p, lam)
        nr_new = np.linalg.norm(r)
        if not np.isfinite(nr_new):
            return p, nr_new, False
        if np.linalg.norm(dp) <= 1e-15 * (1.0 + np.linalg.norm(p)) and nr_new <= 1e3 * tol:
            return p, nr_new, True
        nr = nr_new
    return p, nr, nr <= tol


def davidenko_solve(task: HomotopyTask) -> HomotopyResult:
    """Follow ``H(p(lam), lam) = 0`` from ``p(0) = p0`` to ``lam = 1``.

    Euler predictor on ``dp/dlam = -[dH/dp]^-1 dH/dlam`` followed by a full
    Newton corrector; the step is halved when the corrector fails and
    regrown (up to ``step0``) after three consecutive successes.
    """
    tol = task.corrector_tol * max(1.0, task.scale)
    p = np.array(task.p0, dtype=float)
    lam = 0.0
    lams, path = [0.0], [p.copy()]
    p, nr, ok = _correct(task, p, 0.0, tol, lams, path)
    if not ok:
        raise PathFailure("start point does not satisfy H(p0, 0) = 0", 0.0, (lams, path))
    h = task.step0
    steps = rejected = streak = 0
    worst = nr
    while lam < 1.0:
        if steps + rejected >= task.max_steps:
            raise PathFailure("maximum step count exceeded", lam, (np.array(lams), np.array(path)))
        tangent = -_solve_checked(task.jac_p(p, lam), task.jac_lam(p, lam), lam, task, lams, path)
        speed = np.linalg.norm(tangent)
        h_eff = min(h, 1.0 - lam)
        if speed > 0:
            h_eff = min(h_eff, task.max_move * (1.0 + np.linalg.norm(p)) / speed)
        lam_new = 1.0 if h_eff >= 1.0 - lam else lam + h_eff
        p_try, nr, ok = _correct(task, p + h_eff * tangent, lam_new, tol, lams, path)
        if ok and task.admissible is not None and not task.admissible(p_try, lam_new):
            ok = False
        if not ok:
            rejected += 1
            streak = 0
            h = 0.5 * h_eff
            log.debug("corrector failed at lambda=%.6g, step -> %.3g", lam_new, h)
            if h * (1.0 + speed) < task.min_step:
                raise PathFailure("step size fell below minimum", lam, (np.array(lams), np.array(path)))
            continue
        p, lam = p_try, lam_new
        worst = max(worst, nr)
        steps += 1
        streak += 1
        lams.append(lam)
        path.append(p.copy())
        log.debug("step %d: lambda=%.6g h=%.3g |H|=%.3g", steps, lam, h_eff, nr)
        if streak >= 3 and h < task.step0:
            h = min(2.0 * h, task.step0)
            streak = 0
    # polish at the endpoint
    p, nr, _ = _correct(task, p, 1.0, 1e-3 * tol, lams, path)
    path[-1] = p.copy()
    log.info("homotopy finished: %d steps, %d rejected, |H(p,1)|=%.3g", steps, rejected, nr)
    return HomotopyResult(
        p=p,
        lambdas=np.array(lams),
        path=np.array(path),
        residual_norm=float(nr),
        steps=steps,
        rejected=rejected,
        max_step_residual=float(worst),
    )
