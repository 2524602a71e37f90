"""Pairwise comparison matrices: construction, Perron root, consistency and sensitivity.

A pairwise comparison matrix (PCM) is a strictly positive square matrix. It is
reciprocal when ``a_ii = 1`` and ``a_ij * a_ji = 1``, and consistent when
``a_il * a_lj = a_ij`` for every triple. Consistent reciprocal matrices are exactly
the rank-1 matrices ``w w^{-T}`` and satisfy a family of closed-form identities
(``A^k = N^(k-1) A``, ``sinh(A) = sinh(N)/N * A``, ``perm(A) = N!``, ...), which
:func:`identity_residuals` measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DegenerateOrder,
    DerivativeNearZero,
    NoConvergence,
    NonPositiveWeight,
    NotAComparisonMatrix,
    OrderCapExceeded,
    OverflowRisk,
)

RECIPROCAL_RTOL = 1e-9
CONDITION_ORDER_CAP = 10
PERMANENT_ORDER_CAP = 12


@dataclass(frozen=True)
class ComparisonMatrix:
    entries: NDArray[np.float64]

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise NotAComparisonMatrix(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise NotAComparisonMatrix("comparison matrix entries must be finite and > 0")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def reciprocal(self) -> bool:
        a = self.entries
        return bool(
            np.allclose(np.diag(a), 1.0, rtol=0, atol=RECIPROCAL_RTOL)
            and np.allclose(a * a.T, 1.0, rtol=0, atol=RECIPROCAL_RTOL)
        )

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class EigenResult:
    lambda_max: float
    right_vector: NDArray[np.float64]
    iterations: int
    residual: float


def _entries(a) -> NDArray[np.float64]:
    if isinstance(a, ComparisonMatrix):
        return a.entries
    return ComparisonMatrix(a).entries


def from_weights(w: ArrayLike) -> ComparisonMatrix:
    """Consistent reciprocal matrix ``a_ij = w_i / w_j``."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveWeight("weights must be finite and strictly positive")
    return ComparisonMatrix(w[:, None] / w[None, :])


def triplet_matrix(alpha: float, beta: float, gamma: float) -> ComparisonMatrix:
    """The 3x3 reciprocal matrix with upper triangle ``(alpha, beta, gamma)``."""
    return ComparisonMatrix(
        [[1.0, alpha, beta], [1.0 / alpha, 1.0, gamma], [1.0 / beta, 1.0 / gamma, 1.0]]
    )


def perron_eigenvalue(
    a: ComparisonMatrix | ArrayLike, *, max_iter: int = 10_000, rtol: float = 1e-12
) -> EigenResult:
    """Perron root of a strictly positive matrix by power iteration.

    Starts from the all-ones vector, which has a nonzero component along the
    Perron vector of any positive matrix. Stops once the eigenvalue estimate
    changes by less than ``rtol`` (relative) and the residual
    ``||A v - lambda v||`` is at most ``1e-10 ||A||_F``.
    """
    a = _entries(a)
    n = a.shape[0]
    tol_res = 1e-10 * np.linalg.norm(a)
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        av = a @ v
        lam_new = float(np.linalg.norm(av))
        v_new = av / lam_new
        residual = float(np.linalg.norm(a @ v_new - lam_new * v_new))
        converged = abs(lam_new - lam) <= rtol * lam_new and residual <= tol_res
        lam, v = lam_new, v_new
        if converged:
            return EigenResult(lam, v, it, residual)
    raise NoConvergence(
        f"power iteration did not converge in {max_iter} iterations (residual {residual:.3e})"
    )


def consistency_degree(a: ComparisonMatrix | ArrayLike, tau: float = 1e-9) -> float:
    """Fraction of ordered triples (i, j, l) with ``|log(a_il a_lj / a_ij)| <= tau``."""
    log_a = np.log(_entries(a))
    # dev[i, l, j] = log a_il + log a_lj - log a_ij
    dev = log_a[:, :, None] + log_a[None, :, :] - log_a[:, None, :]
    return float(np.count_nonzero(np.abs(dev) <= tau)) / dev.size


def inconsistency(lambda_max: float, n: int) -> float:
    """Average perturbation ``(lambda_max - N) / (N - 1)``."""
    if n < 2:
        raise DegenerateOrder(f"inconsistency needs order >= 2, got {n}")
    return (lambda_max - n) / (n - 1)


def adjugate(m: ArrayLike) -> NDArray[np.float64]:
    """Adjugate by cofactor determinants (each via LU with partial pivoting)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return np.ones((1, 1))
    cof = np.empty_like(m)
    idx = np.arange(n)
    for i in range(n):
        rows = idx[idx != i]
        for j in range(n):
            cols = idx[idx != j]
            cof[i, j] = (-1) ** (i + j) * np.linalg.det(m[np.ix_(rows, cols)])
    return cof.T


def condition_number(a: ComparisonMatrix | ArrayLike, lam: float | None = None) -> float:
    """Eigenvalue condition number ``||adj(lam I - A)||_2 / |p_A'(lam)|``.

    ``p_A'(lam)`` is obtained as ``Tr adj(lam I - A)`` (Jacobi's formula). For a
    reciprocal matrix evaluated at ``lam = N`` this is ``N^(N-1)``. ``lam``
    defaults to the order N.
    """
    a = _entries(a)
    n = a.shape[0]
    if n > CONDITION_ORDER_CAP:
        raise OrderCapExceeded(f"condition number is capped at order {CONDITION_ORDER_CAP}")
    lam = float(n) if lam is None else float(lam)
    adj = adjugate(lam * np.eye(n) - a)
    dp = float(np.trace(adj))
    if abs(dp) < 1e-14:
        raise DerivativeNearZero(f"p'(lambda) = {dp:.3e}; lambda is not a simple eigenvalue")
    return float(np.linalg.norm(adj, 2)) / abs(dp)


def permanent(a: ComparisonMatrix | ArrayLike) -> float:
    """Ryser's formula, visiting column subsets in Gray-code order.

    Positive matrices are first balanced by a few Sinkhorn sweeps; row and
    column scalings factor out of the permanent exactly and the balanced
    matrix suffers far less cancellation in the alternating sum.
    """
    a = _entries(a) if isinstance(a, ComparisonMatrix) else np.asarray(a, dtype=float)
    n = a.shape[0]
    if n > PERMANENT_ORDER_CAP:
        raise OrderCapExceeded(f"permanent is capped at order {PERMANENT_ORDER_CAP}")
    log_scale = 0.0
    if np.all(a > 0):
        a = a.copy()
        for _ in range(20):
            r = a.sum(axis=1)
            a /= r[:, None]
            c = a.sum(axis=0)
            a /= c[None, :]
            log_scale += float(np.sum(np.log(r)) + np.sum(np.log(c)))
    row_sums = np.zeros(n)
    terms = []
    gray_prev = 0
    for k in range(1, 2**n):
        gray = k ^ (k >> 1)
        col = (gray ^ gray_prev).bit_length() - 1
        if gray & (1 << col):
            row_sums += a[:, col]
        else:
            row_sums -= a[:, col]
        gray_prev = gray
        sign = -1.0 if bin(gray).count("1") % 2 else 1.0
        terms.append(sign * float(np.prod(row_sums)))
    return (-1) ** n * math.fsum(terms) * math.exp(log_scale)


def matrix_sinh(a: ArrayLike, *, assume_consistent: bool = False) -> NDArray[np.float64]:
    """Matrix hyperbolic sine by its odd Taylor series.

    With ``assume_consistent`` the series collapses to ``sinh(N)/N * A``; the
    caller must have verified consistency.
    """
    a = np.asarray(a, dtype=float)
    if assume_consistent:
        n = a.shape[0]
        return math.sinh(n) / n * a
    a2 = a @ a
    term = a.copy()
    result = a.copy()
    k = 1
    while True:
        term = term @ a2 / ((2 * k) * (2 * k + 1))
        result = result + term
        k += 1
        if np.linalg.norm(term) < 1e-15 * np.linalg.norm(result) or k > 500:
            return result


def charpoly(a: ArrayLike) -> NDArray[np.float64]:
    """Characteristic polynomial coefficients, highest degree first (Faddeev-LeVerrier)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def numerical_rank(a: ArrayLike, rtol: float = 1e-10) -> int:
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    return int(np.count_nonzero(s > rtol * s[0]))


def identity_residuals(a: ComparisonMatrix | ArrayLike, k: int = 2) -> dict:
    """Deviations of ``A`` from the closed-form identities of consistent matrices.

    Returns a JSON-ready dict with

    * ``power_residual``: ``||A^k - N^(k-1) A||_F / ||N^(k-1) A||_F``
    * ``sinh_residual``: relative Frobenius gap between the series ``sinh(A)`` and ``sinh(N)/N A``
    * ``trace_residual``: ``|Tr sinh(A) - sinh(N)|`` (and ``trace_residual_rel``)
    * ``trace_rank_residual``: ``|Tr(A) - N rank(A)|``
    * ``charpoly_residuals``: ``|c_j|`` for the coefficients of degree <= N-2, relative to ``N``
    """
    a = _entries(a)
    n = a.shape[0]
    if k < 1:
        raise ValueError("power k must be >= 1")
    if n > 10 or k > 5:
        raise OrderCapExceeded("identity residuals are capped at N <= 10 and k <= 5")
    scale = float(n) ** (k - 1) * float(np.max(np.abs(a)))
    if not math.isfinite(scale) or scale > 1e300:
        raise OverflowRisk(f"N^(k-1) max|a| = {scale:.3e} overflows")

    target = float(n) ** (k - 1) * a
    power_residual = np.linalg.norm(np.linalg.matrix_power(a, k) - target) / np.linalg.norm(target)

    sinh_a = matrix_sinh(a)
    sinh_target = math.sinh(n) / n * a
    sinh_residual = np.linalg.norm(sinh_a - sinh_target) / np.linalg.norm(sinh_target)
    trace_gap = abs(float(np.trace(sinh_a)) - math.sinh(n))

    coeffs = charpoly(a)
    # degrees N-2 .. 0 sit at positions 2 .. N; leading terms are 1 and -N
    tail = np.abs(coeffs[2:]) / n ** np.arange(2, n + 1) if n >= 2 else np.zeros(0)

    return {
        "n": n,
        "power": k,
        "power_residual": float(power_residual),
        "sinh_residual": float(sinh_residual),
        "trace_residual": trace_gap,
        "trace_residual_rel": trace_gap / math.sinh(n),
        "trace_rank_residual": abs(float(np.trace(a)) - n * numerical_rank(a)),
        "charpoly_residuals": [float(x) for x in tail],
    }


def to_text(a: ComparisonMatrix | ArrayLike, delimiter: str = ",") -> str:
    a = _entries(a)
    return "".join(delimiter.join(repr(float(x)) for x in row) + "\n" for row in a)


def from_text(text: str, delimiter: str = ",") -> ComparisonMatrix:
    rows = [line.split(delimiter) for line in text.strip().splitlines() if line.strip()]
    return ComparisonMatrix([[float(x) for x in row] for row in rows])
