"""Interpolation data: validation, normalization, structural matrices and the Pick test.

A problem asks for a real Caratheodory function ``f`` (or an ``l x l``
matrix function ``F``) with prescribed Taylor jets ``f^(k)(z_j)/k!`` at
distinct nodes ``z_j`` of the open unit disc. After normalization the first
node is ``0`` and ``f(0) = 1/2`` (``F(0) = I/2``).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InfeasibleError, InputError
from .numerics import stein_solve
from .poly import Polynomial, TruncatedSeries, series_compose

NODE_TOL = 1e-12
CONJ_TOL = 1e-10


@dataclass(frozen=True)
class InterpolationProblem:
    """Nodes with Taylor jets.

    ``jets[j]`` has shape ``(n_j,)`` in the scalar case and ``(n_j, l, l)``
    in the matrix case; ``ell`` is ``None`` for scalar problems.
    """

    nodes: tuple
    jets: tuple
    ell: int | None = None
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(complex(z) for z in self.nodes))
        jets = []
        for w in self.jets:
            w = np.array(w, dtype=complex)
            if self.ell is None:
                w = w.reshape(-1)
            else:
                w = w.reshape(-1, self.ell, self.ell)
            w.setflags(write=False)
            jets.append(w)
        object.__setattr__(self, "jets", tuple(jets))
        if len(self.nodes) != len(self.jets):
            raise InputError("one jet per node is required")

    @property
    def is_matrix(self) -> bool:
        return self.ell is not None

    @property
    def multiplicities(self) -> tuple:
        return tuple(len(w) for w in self.jets)

    @property
    def n(self) -> int:
        return sum(self.multiplicities) - 1

    @property
    def is_normalized(self) -> bool:
        if not self.nodes or self.nodes[0] != 0:
            return False
        w00 = self.jets[0][0]
        target = 0.5 if self.ell is None else 0.5 * np.eye(self.ell)
        return bool(np.allclose(w00, target, rtol=0, atol=1e-13))

    def with_jets(self, jets) -> "InterpolationProblem":
        return InterpolationProblem(self.nodes, tuple(jets), self.ell, self.notes)


def covariance_problem(c: Sequence) -> InterpolationProblem:
    """Single node at 0 carrying the covariance jet ``(c_0, c_1, ..., c_n)``."""
    c = np.asarray(c)
    ell = None if c.ndim == 1 else c.shape[-1]
    return InterpolationProblem((0.0,), (c,), ell)


def _is_real(z) -> bool:
    return abs(complex(z).imag) <= NODE_TOL


def validate(problem: InterpolationProblem, autocomplete: bool = False) -> InterpolationProblem:
    """Check the disc, distinctness, multiplicities and conjugate closure.

    With ``autocomplete`` a non-real node lacking its conjugate partner gets
    one (with conjugated jets) and a note is recorded; otherwise it is an
    error.
    """
    nodes = list(problem.nodes)
    jets = [np.array(w) for w in problem.jets]
    notes = list(problem.notes)
    for z, w in zip(nodes, jets):
        if not abs(z) < 1.0:
            raise InputError(f"node {z} is not in the open unit disc")
        if len(w) < 1:
            raise InputError(f"node {z} has multiplicity < 1")
        if not np.all(np.isfinite(w)):
            raise InputError(f"node {z} has non-finite jet values")
    for i in range(len(nodes)):
        for k in range(i + 1, len(nodes)):
            if abs(nodes[i] - nodes[k]) <= NODE_TOL:
                raise InputError(f"nodes {nodes[i]} and {nodes[k]} coincide")
    i = 0
    while i < len(nodes):
        z, w = nodes[i], jets[i]
        scale = max(1.0, float(np.max(np.abs(w))))
        if _is_real(z):
            if np.max(np.abs(w.imag)) > CONJ_TOL * scale:
                raise InputError(f"real node {z.real} has non-real jet values")
        else:
            partner = [k for k, y in enumerate(nodes) if abs(y - np.conj(z)) <= NODE_TOL]
            if not partner:
                if not autocomplete:
                    raise InputError(f"node {z} has no conjugate partner")
                nodes.append(np.conj(z))
                jets.append(np.conj(w))
                notes.append(f"conjugate node {np.conj(z)} added")
            else:
                wk = jets[partner[0]]
                if wk.shape != w.shape or np.max(np.abs(wk - np.conj(w))) > CONJ_TOL * scale:
                    raise InputError(f"jets at {z} and its conjugate are not conjugate")
        i += 1
    # keep conjugate pairs adjacent, preserving first-appearance order
    order, seen = [], set()
    for i, z in enumerate(nodes):
        if i in seen:
            continue
        order.append(i)
        seen.add(i)
        if not _is_real(z):
            k = next(k for k, y in enumerate(nodes) if k not in seen and abs(y - np.conj(z)) <= NODE_TOL)
            order.append(k)
            seen.add(k)
    return InterpolationProblem(
        tuple(nodes[i] for i in order), tuple(jets[i] for i in order), problem.ell, tuple(notes)
    )


# ---------------------------------------------------------------- normalization


@dataclass(frozen=True)
class NormalizationRecord:
    """Data needed to undo :func:`normalize`.

    ``alpha`` is the base node sent to 0 by ``beta(z) = (z - alpha)/(1 - alpha z)``;
    ``scale`` multiplies scalar values, ``congruence`` is the matrix ``K`` in
    ``F_normalized = K F K'``.
    """

    alpha: float = 0.0
    scale: float = 1.0
    congruence: np.ndarray | None = None

    @property
    def is_identity(self) -> bool:
        if self.alpha != 0.0:
            return False
        if self.congruence is not None:
            return bool(np.allclose(self.congruence, np.eye(len(self.congruence)), rtol=0, atol=0))
        return self.scale == 1.0


def mobius(z, alpha: float):
    return (z - alpha) / (1.0 - alpha * z)


def mobius_inverse(zeta, alpha: float):
    return (zeta + alpha) / (1.0 + alpha * zeta)


def _map_series(z0, alpha, K, inverse=False) -> TruncatedSeries:
    """Series ``m(z0 + t) - m(z0)`` in t for ``m = beta`` or ``beta^-1``."""
    sgn = 1.0 if inverse else -1.0
    # m(x) = (x + sgn*alpha) / (1 + sgn*alpha*x)
    num = TruncatedSeries([z0 + sgn * alpha, 1.0], K)
    den = TruncatedSeries([1.0 + sgn * alpha * z0, sgn * alpha], K)
    s = (num / den).coeffs.copy()
    s[0] = 0.0
    return TruncatedSeries(s)


def _compose_jet(w: np.ndarray, inner: TruncatedSeries) -> np.ndarray:
    K = len(w) - 1
    if w.ndim == 1:
        return series_compose(TruncatedSeries(w), inner, K).coeffs
    out = np.zeros_like(w, dtype=complex)
    for a in range(w.shape[1]):
        for b in range(w.shape[2]):
            out[:, a, b] = series_compose(TruncatedSeries(w[:, a, b]), inner, K).coeffs
    return out


def _apply_values(w: np.ndarray, rec: NormalizationRecord, inverse=False) -> np.ndarray:
    if w.ndim == 1:
        return w / rec.scale if inverse else w * rec.scale
    K = rec.congruence
    if inverse:
        Ki = np.linalg.inv(K)
        return np.einsum("ij,kjl,ml->kim", Ki, w, Ki)
    return np.einsum("ij,kjl,ml->kim", K, w, K)


def normalize(problem: InterpolationProblem, base: int | None = None):
    """Move a real base node to 0 and rescale so its value is 1/2 (or I/2).

    Returns ``(normalized_problem, record)``. The scalar value is divided by
    ``2 w_00``; the matrix value undergoes the congruence
    ``K F K'`` with ``K = (2 W_00)^{-1/2}``.
    """
    problem = validate(problem)
    nodes = problem.nodes
    if base is None:
        cands = [i for i, z in enumerate(nodes) if abs(z) <= NODE_TOL]
        cands = cands or [i for i, z in enumerate(nodes) if _is_real(z)]
        if not cands:
            raise InputError("no real node available as normalization base")
        base = cands[0]
    if not _is_real(nodes[base]):
        raise InputError("normalization base must be a real node")
    alpha = float(nodes[base].real)
    w00 = problem.jets[base][0]
    if problem.ell is None:
        w00 = complex(w00)
        if not (w00.real > 0 and abs(w00.imag) <= CONJ_TOL):
            raise InputError(f"base value {w00} is not real positive")
        rec = NormalizationRecord(alpha=alpha, scale=1.0 / (2.0 * w00.real))
    else:
        W00 = np.real_if_close(w00, tol=1e6).real
        if not np.allclose(W00, W00.T, rtol=0, atol=1e-12 * max(1.0, np.abs(W00).max())):
            raise InputError("base value W_00 must be symmetric for a positivity-preserving congruence")
        W00 = 0.5 * (W00 + W00.T)
        ev = np.linalg.eigvalsh(W00)
        if ev.min() <= 0:
            raise InputError("base value W_00 is not positive definite")
        K = scipy.linalg.fractional_matrix_power(2.0 * W00, -0.5).real
        K = 0.5 * (K + K.T)
        rec = NormalizationRecord(alpha=alpha, congruence=K)
    order = [base] + [i for i in range(len(nodes)) if i != base]
    new_nodes, new_jets = [], []
    for i in order:
        z, w = nodes[i], problem.jets[i]
        zeta = mobius(z, alpha)
        if alpha != 0.0:
            w = _compose_jet(w, _map_series(zeta, alpha, len(w) - 1, inverse=True))
        w = _apply_values(w, rec)
        if abs(zeta) <= NODE_TOL:
            zeta = 0.0
        if _is_real(zeta):
            zeta = zeta.real
            w = w.real.astype(complex)
        new_nodes.append(zeta)
        new_jets.append(w)
    if problem.ell is None:
        new_jets[0] = new_jets[0].copy()
        new_jets[0][0] = 0.5
    else:
        new_jets[0] = new_jets[0].copy()
        new_jets[0][0] = 0.5 * np.eye(problem.ell)
    out = InterpolationProblem(tuple(new_nodes), tuple(new_jets), problem.ell, problem.notes)
    return out, rec


def denormalize_jets(problem: InterpolationProblem, rec: NormalizationRecord) -> InterpolationProblem:
    """Map jets given at normalized nodes back to the original coordinates."""
    nodes, jets = [], []
    for zeta, w in zip(problem.nodes, problem.jets):
        z = mobius_inverse(zeta, rec.alpha)
        w = _apply_values(np.asarray(w), rec, inverse=True)
        if rec.alpha != 0.0:
            w = _compose_jet(w, _map_series(z, rec.alpha, len(w) - 1, inverse=False))
        nodes.append(z)
        jets.append(w)
    return InterpolationProblem(tuple(nodes), tuple(jets), problem.ell, problem.notes)


def mobius_substitute(coeffs: np.ndarray, alpha: float, n: int) -> np.ndarray:
    """Coefficients of ``(1 - alpha z)^n p(beta(z))`` for ascending ``coeffs`` of degree <= n."""
    out = np.zeros((n + 1,) + coeffs.shape[1:], dtype=np.result_type(coeffs, float))
    lin = np.array([-alpha, 1.0])
    den = np.array([1.0, -alpha])
    for k in range(coeffs.shape[0]):
        basis = np.array([1.0])
        for _ in range(k):
            basis = np.convolve(basis, lin)
        for _ in range(n - k):
            basis = np.convolve(basis, den)
        out[: basis.size] += np.multiply.outer(basis, coeffs[k]) if coeffs.ndim > 1 else basis * coeffs[k]
    return out


def denormalize_rational(num: Polynomial, den: Polynomial, rec: NormalizationRecord, n: int):
    """Scalar interpolant ``num/den`` in normalized coordinates mapped back."""
    N = mobius_substitute(num.padded(n), rec.alpha, n) / rec.scale
    D = mobius_substitute(den.padded(n), rec.alpha, n)
    return Polynomial(N), Polynomial(D)


# ---------------------------------------------------------------- data matrices


@dataclass
class DataMatrices:
    Z: np.ndarray
    e: np.ndarray
    W: np.ndarray
    V: np.ndarray
    X: np.ndarray
    blocks: list = field(default_factory=list)
    ell: int | None = None

    @property
    def n(self) -> int:
        return self.Z.shape[0] - 1


def toeplitz_lower(col: np.ndarray) -> np.ndarray:
    """Lower-triangular (block) Toeplitz matrix with first (block) column ``col``."""
    col = np.asarray(col)
    m = col.shape[0]
    if col.ndim == 1:
        return scipy.linalg.toeplitz(col, np.zeros(m, dtype=col.dtype))
    ell = col.shape[1]
    out = np.zeros((m * ell, m * ell), dtype=col.dtype)
    for r in range(m):
        for c in range(r + 1):
            out[r * ell : (r + 1) * ell, c * ell : (c + 1) * ell] = col[r - c]
    return out


def build_data_matrices(problem: InterpolationProblem) -> DataMatrices:
    """Assemble ``Z``, ``e``, ``W``, ``V = [e, Ze, ..., Z^n e]`` and ``X = Z X Z^* + e e^*``."""
    n1 = problem.n + 1
    Z = np.zeros((n1, n1), dtype=complex)
    e = np.zeros(n1, dtype=complex)
    Wblocks, blocks = [], []
    pos = 0
    for z, w in zip(problem.nodes, problem.jets):
        nj = len(w)
        Zj = z * np.eye(nj) + np.eye(nj, k=-1)
        Z[pos : pos + nj, pos : pos + nj] = Zj
        e[pos] = 1.0
        Wblocks.append(toeplitz_lower(w))
        blocks.append((pos, nj))
        pos += nj
    W = scipy.linalg.block_diag(*Wblocks)
    V = np.empty((n1, n1), dtype=complex)
    v = e.copy()
    for k in range(n1):
        V[:, k] = v
        v = Z @ v
    cond = np.linalg.cond(V)
    if cond > 1e12:
        warnings.warn(f"reachability matrix V is ill-conditioned (cond={cond:.3g}); nodes are clustered")
    X = stein_solve(Z, np.outer(e, e.conj()))
    return DataMatrices(Z=Z, e=e, W=W, V=V, X=X, blocks=blocks, ell=problem.ell)


@dataclass
class PickResult:
    Sigma: np.ndarray
    feasible: bool
    min_eig: float


def pick_matrix(W: np.ndarray, X: np.ndarray, ell: int | None = None) -> np.ndarray:
    Xl = X if ell is None else np.kron(X, np.eye(ell))
    S = W @ Xl + Xl @ W.conj().T
    return 0.5 * (S + S.conj().T)


def pick_test(problem_or_data) -> PickResult:
    """Generalized Pick matrix ``W X + X W^*`` (Kronecker form for matrix data)."""
    data = problem_or_data
    if isinstance(data, InterpolationProblem):
        data = build_data_matrices(data)
    S = pick_matrix(data.W, data.X, data.ell)
    mn = float(np.min(np.linalg.eigvalsh(S)))
    return PickResult(Sigma=S, feasible=mn > 0.0, min_eig=mn)


def require_feasible(problem: InterpolationProblem) -> PickResult:
    res = pick_test(problem)
    if not res.feasible:
        raise InfeasibleError(f"Pick matrix is not positive definite (min eigenvalue {res.min_eig:.3g})")
    return res


def structured_W_from_covariance(Sigma_u, Z, e, blocks, nodes, ell: int | None = None, base: int = 0):
    """Least-squares ``W`` of block Toeplitz form with ``W X + X W^* = Sigma_u``.

    Real nodes carry real jets and conjugate node pairs carry conjugate
    jets. The constant term at the real ``base`` node is constrained
    symmetric (matrix case); its skew part, like an imaginary constant in
    the scalar case, is invisible to ``W X + X W^*``.

    Returns ``(W, jets, residual_norm)``.
    """
    Sigma_u = np.asarray(Sigma_u)
    scale = max(1.0, np.abs(Sigma_u).max())
    if not np.allclose(Sigma_u, Sigma_u.conj().T, rtol=0, atol=1e-10 * scale):
        raise InputError("Sigma_u is not Hermitian")
    L = 1 if ell is None else ell
    X = stein_solve(Z, np.outer(e, np.conj(e)))
    Xl = np.kron(X, np.eye(L))
    dim = Xl.shape[0]

    columns, params = [], []  # params: (block index, k, a, b, kind)
    handled = set()
    for j, (pos, nj) in enumerate(blocks):
        if j in handled:
            continue
        z = nodes[j]
        partner = None
        if not _is_real(z):
            partner = next(k for k in range(len(nodes)) if k != j and abs(nodes[k] - np.conj(z)) <= NODE_TOL)
            handled.add(partner)
        handled.add(j)
        for k in range(nj):
            for a in range(L):
                for b in range(L):
                    if j == base and k == 0 and ell is not None and b < a:
                        continue
                    kinds = ("re",) if partner is None else ("re", "im")
                    for kind in kinds:
                        E = np.zeros((dim, dim), dtype=complex)
                        coef = 1.0 if kind == "re" else 1j
                        _put(E, pos, nj, k, a, b, L, coef)
                        if partner is not None:
                            ppos = blocks[partner][0]
                            _put(E, ppos, nj, k, a, b, L, np.conj(coef))
                        if j == base and k == 0 and ell is not None and a != b:
                            _put(E, pos, nj, k, b, a, L, coef)
                        M = E @ Xl + Xl @ E.conj().T
                        columns.append(np.concatenate([M.real.ravel(), M.imag.ravel()]))
                        params.append((j, partner, k, a, b, kind))
    A = np.array(columns).T
    rhs = np.concatenate([Sigma_u.real.ravel(), Sigma_u.imag.ravel()])
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < A.shape[1]:
        raise InputError(f"structured least-squares system is rank deficient ({rank} < {A.shape[1]})")
    jets = [np.zeros((nj,) if ell is None else (nj, L, L), dtype=complex) for _, nj in blocks]
    for x, (j, partner, k, a, b, kind) in zip(sol, params):
        val = x if kind == "re" else 1j * x
        _jet_add(jets[j], k, a, b, val, ell)
        if partner is not None:
            _jet_add(jets[partner], k, a, b, np.conj(val), ell)
        if j == base and k == 0 and ell is not None and a != b:
            _jet_add(jets[j], k, b, a, val, ell)
    W = scipy.linalg.block_diag(*[toeplitz_lower(w) for w in jets])
    resid = float(np.linalg.norm(pick_matrix(W, X, ell) - Sigma_u))
    return W, jets, resid


def _put(E, pos, nj, k, a, b, L, coef):
    for r in range(k, nj):
        c = r - k
        E[(pos + r) * L + a, (pos + c) * L + b] += coef


def _jet_add(w, k, a, b, val, ell):
    if ell is None:
        w[k] += val
    else:
        w[k, a, b] += val


# ---------------------------------------------------------------- JSON


def _num(x) -> complex:
    if isinstance(x, dict):
        return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    return complex(float(x))


def problem_from_dict(d: dict) -> InterpolationProblem:
    """Parse ``{"nodes": [{"re", "im", "multiplicity", "jet"}], "ell": int}``.

    Jet entries are numbers or ``{"re", "im"}`` objects; in the matrix case
    each jet entry is an ``ell x ell`` nested list of those.
    """
    try:
        ell = d.get("ell")
        ell = None if ell in (None, 0, 1) and not d.get("matrix") else int(ell)
        nodes, jets = [], []
        for node in d["nodes"]:
            z = complex(float(node.get("re", 0.0)), float(node.get("im", 0.0)))
            raw = node["jet"]
            if ell is None:
                w = np.array([_num(x) for x in raw])
            else:
                w = np.array([[[_num(x) for x in row] for row in M] for M in raw])
                if w.shape[1:] != (ell, ell):
                    raise InputError(f"matrix jet at node {z} is not {ell}x{ell}")
            mult = int(node.get("multiplicity", len(w)))
            if mult != len(w):
                raise InputError(f"node {z}: multiplicity {mult} but {len(w)} jet values")
            nodes.append(z)
            jets.append(w)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed problem description: {exc}") from exc
    return validate(InterpolationProblem(tuple(nodes), tuple(jets), ell), autocomplete=True)


def load_problem(path) -> InterpolationProblem:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc
    return problem_from_dict(d)


def _cjson(x: complex):
    return {"re": float(np.real(x)), "im": float(np.imag(x))}


def problem_to_dict(problem: InterpolationProblem) -> dict:
    nodes = []
    for z, w in zip(problem.nodes, problem.jets):
        if problem.ell is None:
            jet = [_cjson(x) for x in w]
        else:
            jet = [[[_cjson(x) for x in row] for row in M] for M in w]
        nodes.append({"re": z.real, "im": z.imag, "multiplicity": len(w), "jet": jet})
    out = {"nodes": nodes}
    if problem.ell is not None:
        out["ell"] = problem.ell
    return out
