"""Polynomial, truncated power series and matrix polynomial arithmetic.

Coefficients are always stored in ascending powers. A monic degree-n
polynomial ``a(z) = z^n + a_1 z^{n-1} + ... + a_n`` therefore has
coefficient array ``[a_n, ..., a_1, 1]``, and its reversal
``a_*(z) = z^n a(1/z)`` has ``[1, a_1, ..., a_n]``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.linalg

TRIM_RTOL = 1e-13
REAL_TOL = 1e-10


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs))
    if c.ndim != 1:
        raise ValueError("coefficients must be one-dimensional")
    if not np.iscomplexobj(c):
        c = c.astype(float)
    return c


def _trim(c: np.ndarray) -> np.ndarray:
    if c.size == 0:
        return np.zeros(1, dtype=c.dtype)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1, dtype=c.dtype)
    k = c.size
    while k > 1 and abs(c[k - 1]) <= TRIM_RTOL * scale:
        k -= 1
    return c[:k].copy()


class Polynomial:
    """Immutable polynomial with ascending coefficients.

    Trailing (highest-power) coefficients below ``1e-13 * max|c|`` are
    dropped so that the representation, and hence the degree, is unique.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = _trim(_as_coeffs(coeffs))
        if np.iscomplexobj(c) and np.all(np.abs(c.imag) == 0.0):
            c = c.real.copy()
        c.setflags(write=False)
        self._c = c

    @classmethod
    def real(cls, coeffs) -> "Polynomial":
        """Constructor for real polynomials; rejects imaginary parts above 1e-10."""
        c = np.asarray(coeffs)
        if np.iscomplexobj(c):
            if np.max(np.abs(c.imag), initial=0.0) > REAL_TOL:
                raise ValueError("imaginary part exceeds 1e-10 for a real polynomial")
            c = c.real
        return cls(np.asarray(c, dtype=float))

    @classmethod
    def from_roots(cls, roots, real: bool = True) -> "Polynomial":
        c = np.array([1.0 + 0j])
        for r in np.atleast_1d(roots):
            c = np.convolve(c, [-r, 1.0])
        return cls.real(c) if real else cls(c)

    @classmethod
    def monic(cls, tail: Sequence) -> "Polynomial":
        """``z^n + t_1 z^{n-1} + ... + t_n`` from the tail ``(t_1, ..., t_n)``."""
        tail = np.asarray(tail)
        return cls(np.concatenate([tail[::-1], [1.0]]))

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        if self._c.size == 1 and self._c[0] == 0:
            return -1
        return self._c.size - 1

    def is_zero(self) -> bool:
        return self.degree < 0

    def tail(self, n: int | None = None) -> np.ndarray:
        """Inverse of :meth:`monic`: the coefficients below the leading one, descending."""
        n = self.degree if n is None else n
        c = np.zeros(n + 1, dtype=self._c.dtype)
        c[: self._c.size] = self._c
        return c[:n][::-1].copy()

    def padded(self, n: int) -> np.ndarray:
        if self.degree > n:
            raise ValueError(f"degree {self.degree} exceeds {n}")
        c = np.zeros(n + 1, dtype=self._c.dtype)
        c[: self._c.size] = self._c
        return c

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self._c)

    def __add__(self, other):
        return poly_arith(self, _coerce(other), "add")

    __radd__ = __add__

    def __sub__(self, other):
        return poly_arith(self, poly_arith(_coerce(other), None, "scale", -1.0), "add")

    def __mul__(self, other):
        if np.isscalar(other):
            return poly_arith(self, None, "scale", other)
        return poly_arith(self, _coerce(other), "mul")

    __rmul__ = __mul__

    def __neg__(self):
        return poly_arith(self, None, "scale", -1.0)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(tuple(self._c.tolist()))

    def __repr__(self):
        return f"Polynomial({np.array2string(self._c, precision=6)})"


def _coerce(p) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(np.atleast_1d(p))


def poly_arith(p: Polynomial, q: Polynomial | None, op: str, alpha=1.0) -> Polynomial:
    """Exact coefficient arithmetic: ``op`` is ``"add"``, ``"mul"`` or ``"scale"``."""
    if op == "add":
        n = max(p.coeffs.size, q.coeffs.size)
        dtype = np.result_type(p.coeffs, q.coeffs)
        c = np.zeros(n, dtype=dtype)
        c[: p.coeffs.size] += p.coeffs
        c[: q.coeffs.size] += q.coeffs
        return Polynomial(c)
    if op == "mul":
        return Polynomial(np.convolve(p.coeffs, q.coeffs))
    if op == "scale":
        return Polynomial(alpha * p.coeffs)
    raise ValueError(f"unknown op {op!r}")


def reverse(p: Polynomial, n: int | None = None) -> Polynomial:
    """Return ``z^n p(1/z)``."""
    n = p.degree if n is None else n
    if p.degree > n:
        raise ValueError(f"order {n} is below deg p = {p.degree}")
    return Polynomial(p.padded(n)[::-1])


def roots(p: Polynomial) -> np.ndarray:
    """Roots from the eigenvalues of the (balanced) companion matrix.

    A single Newton step is applied to any root whose relative residual
    exceeds 1e-8.
    """
    p = _coerce(p)
    if p.degree < 0:
        raise ValueError("the zero polynomial has no finite root set")
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    c = p.coeffs / p.coeffs[-1]
    n = p.degree
    comp = np.zeros((n, n), dtype=c.dtype)
    comp[0, :] = -c[:-1][::-1]
    comp[1:, :-1] = np.eye(n - 1)
    r = scipy.linalg.eigvals(comp, overwrite_a=True)
    dp = np.polynomial.polynomial.polyder(p.coeffs)
    scale = np.polynomial.polynomial.polyval(np.abs(r), np.abs(p.coeffs))
    res = np.polynomial.polynomial.polyval(r, p.coeffs)
    bad = np.abs(res) > 1e-8 * np.maximum(scale, 1e-300)
    if np.any(bad):
        d = np.polynomial.polynomial.polyval(r[bad], dp)
        ok = d != 0
        rb = r[bad]
        rb[ok] = rb[ok] - res[bad][ok] / d[ok]
        r[bad] = rb
    return r


def is_schur(p: Polynomial) -> tuple[bool, float]:
    """Whether all roots lie in the open unit disc; margin is ``1 - max|root|``."""
    p = _coerce(p)
    if p.degree <= 0:
        return True, 1.0
    rmax = float(np.max(np.abs(roots(p))))
    return rmax < 1.0, 1.0 - rmax


class TruncatedSeries:
    """Power series ``c_0 + c_1 t + ... + c_K t^K`` with arithmetic closed at order K."""

    __slots__ = ("_c",)

    def __init__(self, coeffs, order: int | None = None):
        c = _as_coeffs(coeffs)
        if order is not None:
            out = np.zeros(order + 1, dtype=c.dtype)
            m = min(order + 1, c.size)
            out[:m] = c[:m]
            c = out
        c = c.copy()
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.size - 1

    def __add__(self, other):
        K = min(self.order, other.order)
        return TruncatedSeries(self._c[: K + 1] + other._c[: K + 1])

    def __sub__(self, other):
        K = min(self.order, other.order)
        return TruncatedSeries(self._c[: K + 1] - other._c[: K + 1])

    def __mul__(self, other):
        if np.isscalar(other):
            return TruncatedSeries(other * self._c)
        K = min(self.order, other.order)
        return TruncatedSeries(np.convolve(self._c, other._c)[: K + 1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return TruncatedSeries(self._c / other)
        return self * other.reciprocal()

    def reciprocal(self) -> "TruncatedSeries":
        c = self._c
        if c[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        K = self.order
        out = np.zeros(K + 1, dtype=np.result_type(c, float))
        out[0] = 1.0 / c[0]
        for k in range(1, K + 1):
            out[k] = -np.dot(c[1 : k + 1], out[k - 1 :: -1][:k]) / c[0]
        return TruncatedSeries(out)

    def __repr__(self):
        return f"TruncatedSeries({np.array2string(self._c, precision=6)})"


def _shift(c: np.ndarray, z0) -> np.ndarray:
    """Coefficients of ``p(z0 + t)`` in powers of t (Horner in t)."""
    out = np.zeros(c.size, dtype=np.result_type(c, z0, float))
    for coef in c[::-1]:
        # out <- out * (z0 + t) + coef
        out[1:] = out[1:] * z0 + out[:-1]
        out[0] = out[0] * z0 + coef
    return out


def rational_jet(num: Polynomial, den: Polynomial, z0, K: int) -> TruncatedSeries:
    """Taylor coefficients ``f^(k)(z0)/k!``, k = 0..K, of ``f = num/den``."""
    num, den = _coerce(num), _coerce(den)
    d = _shift(den.coeffs, z0)
    if abs(d[0]) <= 1e-14 * np.max(np.abs(d)):
        raise ZeroDivisionError(f"denominator vanishes at z0={z0}")
    n = TruncatedSeries(_shift(num.coeffs, z0), K)
    return n / TruncatedSeries(d, K)


def laurent_expand(num: Polynomial, den: Polynomial, K: int) -> TruncatedSeries:
    """Expansion of ``num/den`` about infinity in powers of ``1/z``.

    Returns the coefficients of ``z^0, z^-1, ..., z^-K``. With
    ``n = deg den`` this is the series division of the reversed
    polynomials ``w^n num(1/w)`` by ``w^n den(1/w)``.
    """
    num, den = _coerce(num), _coerce(den)
    n = den.degree
    if num.degree > n:
        raise ValueError("improper ratio: deg num > deg den")
    if abs(den.coeffs[-1] - 1.0) > 1e-12:
        raise ValueError("denominator must be monic")
    rn = num.padded(n)[::-1]
    rd = den.coeffs[::-1]
    return TruncatedSeries(rn, K) / TruncatedSeries(rd, K)


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries, K: int) -> TruncatedSeries:
    """Truncated composition ``outer(inner(t))``; inner must have zero constant term."""
    if abs(inner.coeffs[0]) > 0:
        raise ValueError("inner series must have zero constant term")
    g = TruncatedSeries(inner.coeffs, K).coeffs
    acc = np.zeros(K + 1, dtype=np.result_type(outer.coeffs, g, float))
    for coef in outer.coeffs[: K + 1][::-1]:
        acc = np.convolve(acc, g)[: K + 1]
        acc[0] += coef
    return TruncatedSeries(acc)


def laurent_product(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Coefficients of ``p(z) q(1/z)`` for ascending arrays of length n+1.

    Index ``k`` of the result holds the coefficient of ``z^(k-n)``.
    """
    return np.convolve(p, q[::-1])


def positivity_residual(a: Polynomial, b: Polynomial, sigma: Polynomial, rho: float) -> float:
    """Max coefficient of ``a b* + b a* - 2 rho^2 sigma sigma*`` as a Laurent polynomial."""
    n = sigma.degree
    if a.degree != n or b.degree != n:
        raise ValueError("a, b and sigma must share one degree")
    ac, bc, sc = a.padded(n), b.padded(n), sigma.padded(n)
    lhs = laurent_product(ac, bc) + laurent_product(bc, ac)
    rhs = 2.0 * rho**2 * laurent_product(sc, sc)
    return float(np.max(np.abs(lhs - rhs)))


class MatrixPolynomial:
    """Square matrix polynomial ``C_0 + C_1 z + ... + C_t z^t`` (ascending)."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError("coefficients must have shape (t+1, l, l)")
        c = c.copy()
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def ell(self) -> int:
        return self._c.shape[1]

    @property
    def degree(self) -> int:
        return self._c.shape[0] - 1

    def __call__(self, z):
        out = np.zeros(self._c.shape[1:], dtype=np.result_type(self._c, z))
        for C in self._c[::-1]:
            out = out * z + C
        return out

    def det(self) -> Polynomial:
        """Determinant as a scalar polynomial (by sampling on a circle and FFT)."""
        ell, t = self.ell, self.degree
        m = ell * t + 1
        N = 1 << max(3, math.ceil(math.log2(m + 1)))
        zs = np.exp(2j * np.pi * np.arange(N) / N)
        vals = np.array([np.linalg.det(self(z)) for z in zs])
        c = (np.fft.fft(vals) / N)[:m]
        if not np.iscomplexobj(self._c):
            c = c.real
        return Polynomial(c)

    def reversed(self) -> "MatrixPolynomial":
        return MatrixPolynomial(self._c[::-1])


def matrix_series_inverse(coeffs: np.ndarray, K: int) -> np.ndarray:
    """Inverse of a matrix power series ``sum C_k t^k`` truncated at order K."""
    ell = coeffs.shape[1]
    C = np.zeros((K + 1, ell, ell), dtype=coeffs.dtype)
    m = min(K + 1, coeffs.shape[0])
    C[:m] = coeffs[:m]
    C0inv = np.linalg.inv(C[0])
    out = np.zeros_like(C, dtype=np.result_type(C, float))
    out[0] = C0inv
    for k in range(1, K + 1):
        acc = np.zeros((ell, ell), dtype=out.dtype)
        for j in range(1, k + 1):
            acc += C[j] @ out[k - j]
        out[k] = -C0inv @ acc
    return out


def matrix_series_mul(A: np.ndarray, B: np.ndarray, K: int) -> np.ndarray:
    ell = A.shape[1]
    out = np.zeros((K + 1, ell, ell), dtype=np.result_type(A, B))
    for i in range(min(K + 1, A.shape[0])):
        for j in range(min(K + 1 - i, B.shape[0])):
            out[i + j] += A[i] @ B[j]
    return out


def matrix_shift(coeffs: np.ndarray, z0) -> np.ndarray:
    """Coefficients of ``C(z0 + t)`` in powers of t for a matrix polynomial."""
    t1 = coeffs.shape[0]
    out = np.zeros(coeffs.shape, dtype=np.result_type(coeffs, z0, float))
    for C in coeffs[::-1]:
        out[1:] = out[1:] * z0 + out[:-1]
        out[0] = out[0] * z0 + C
    return out[:t1]
