"""Dense matrix kernels with explicit truncation accounting.

Thin wrappers around LAPACK (via numpy, with a scipy fallback driver)
that own the conventions the decomposition code relies on: tail-scan
truncation, a numerical-rank cutoff for ``delta == 0``, deterministic
singular-vector signs, and reported truncation errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SVDResult",
    "QRResult",
    "svd_truncate_delta",
    "svd_truncate_rank",
    "qr_economic",
]


@dataclass(frozen=True, eq=False)
class SVDResult:
    """Truncated SVD ``m ~= u @ diag(s) @ vt``.

    ``trunc_error`` is the Frobenius norm of the discarded part, i.e.
    the square root of the sum of discarded squared singular values.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rank: int
    trunc_error: float


@dataclass(frozen=True, eq=False)
class QRResult:
    """Economic QR ``m = q @ r`` with the diagonal of ``r`` nonnegative."""

    q: np.ndarray
    r: np.ndarray


def _full_svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust.
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> None:
    # Deterministic output: largest-magnitude entry of each left singular
    # vector is made nonnegative, flipping the matching right vector too.
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0.0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]


def _check_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    return m


def svd_truncate_delta(m, delta: float) -> SVDResult:
    """SVD truncated to the smallest rank whose tail is within ``delta``.

    The kept rank is the smallest ``r`` such that the discarded singular
    values satisfy ``sum(s[r:]**2) <= delta**2``; ties therefore resolve
    to the more aggressive truncation.  ``delta >= norm(m)`` may yield
    rank 0 with empty factors.  ``delta == 0`` requests the numerical
    rank: singular values below ``max(m.shape) * eps * s[0]`` are
    discarded.
    """
    m = _check_matrix(m)
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    u, s, vt = _full_svd(m)
    sq = s * s
    if delta == 0.0:
        if s.size == 0 or s[0] == 0.0:
            rank = 0
        else:
            cut = max(m.shape) * np.finfo(np.float64).eps * s[0]
            rank = int(np.count_nonzero(s >= cut))
    else:
        # tails[r] = sum of squares of the singular values dropped at rank r
        tails = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
        rank = int(np.argmax(tails <= delta * delta))
    trunc_error = float(np.sqrt(max(float(np.sum(sq[rank:])), 0.0)))
    u = np.ascontiguousarray(u[:, :rank])
    vt = np.ascontiguousarray(vt[:rank, :])
    s = s[:rank].copy()
    _fix_signs(u, vt)
    return SVDResult(u=u, s=s, vt=vt, rank=rank, trunc_error=trunc_error)


def svd_truncate_rank(m, r: int) -> SVDResult:
    """Best approximation of rank ``min(r, min(m.shape))``.

    Exactly that many singular triplets are kept, zeros included, so the
    requested rank is honored whenever it is feasible.
    """
    m = _check_matrix(m)
    if r < 0:
        raise ValueError(f"target rank must be nonnegative, got {r}")
    u, s, vt = _full_svd(m)
    rank = int(min(r, min(m.shape)))
    sq = s * s
    trunc_error = float(np.sqrt(max(float(np.sum(sq[rank:])), 0.0)))
    u = np.ascontiguousarray(u[:, :rank])
    vt = np.ascontiguousarray(vt[:rank, :])
    s = s[:rank].copy()
    _fix_signs(u, vt)
    return SVDResult(u=u, s=s, vt=vt, rank=rank, trunc_error=trunc_error)


def qr_economic(m) -> QRResult:
    """Reduced QR with ``min(m.shape)`` orthonormal columns.

    The factorization is made unique by forcing the diagonal of ``r``
    nonnegative.
    """
    m = _check_matrix(m)
    q, r = np.linalg.qr(m, mode="reduced")
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    q = q * d
    r = d[:, None] * r
    return QRResult(q=q, r=r)
