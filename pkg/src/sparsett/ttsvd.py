"""Classical dense train construction and rounding.

These are the reference algorithms: sequential truncated SVDs over the
unfoldings for construction, and the orthogonalize-then-truncate sweep
pair for rounding an existing train.  Both honor the usual error
contract: the result is within ``eps`` of the input in relative
Frobenius norm.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import svd_truncate_delta
from .tensor import check_shape
from .ttformat import TTTensor, tt_right_orthogonalize, tt_zero

__all__ = ["tt_svd", "tt_rounding", "flops_ttsvd", "full_ranks"]


def tt_svd(a: np.ndarray, eps: float) -> TTTensor:
    """Decompose a dense tensor with per-step tolerance
    ``eps / sqrt(d-1) * norm(a)``, which keeps the total relative error
    within ``eps``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    dims = a.shape
    d = a.ndim
    if d == 0:
        raise ValueError("input must have at least one mode")
    if d == 1:
        return TTTensor([a.reshape(1, -1, 1)])
    delta = eps / math.sqrt(d - 1) * float(np.linalg.norm(a.ravel()))
    cores = []
    c = a
    r = 1
    for k in range(d - 1):
        m = c.reshape(r * dims[k], -1)
        res = svd_truncate_delta(m, delta)
        if res.rank == 0:
            return tt_zero(dims)
        cores.append(res.u.reshape(r, dims[k], res.rank))
        c = res.s[:, None] * res.vt
        r = res.rank
    cores.append(c.reshape(r, dims[-1], 1))
    return TTTensor(cores, copy=False)


def tt_rounding(t: TTTensor, eps: float) -> TTTensor:
    """Recompress a train to relative tolerance ``eps``.

    Right-to-left orthogonalization first, then a left-to-right sweep of
    truncated SVDs with the truncated factors carried into the next
    core.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    d = t.ndim
    if d == 1:
        return TTTensor([c.copy() for c in t.cores])
    orth = tt_right_orthogonalize(t)
    cores = [c.copy() for c in orth.cores]
    # After the sweep the first core carries the full norm.
    delta = eps / math.sqrt(d - 1) * float(np.linalg.norm(cores[0].ravel()))
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        res = svd_truncate_delta(cores[k].reshape(r0 * n, r1), delta)
        if res.rank == 0:
            return tt_zero(t.dims)
        cores[k] = res.u.reshape(r0, n, res.rank)
        carry = res.vt.T * res.s  # (r1, rank)
        cores[k + 1] = np.tensordot(carry, cores[k + 1], axes=(0, 0))
    return TTTensor(cores, copy=False)


def full_ranks(shape, ranks) -> tuple[int, ...]:
    """Normalize a rank vector to full length ``d+1`` with unit edges.

    Accepts either the interior ranks (length ``d-1``) or the full
    vector.
    """
    dims = check_shape(shape)
    d = len(dims)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) == d - 1:
        ranks = (1,) + ranks + (1,)
    if len(ranks) != d + 1:
        raise ValueError(
            f"rank vector must have length {d - 1} or {d + 1}, got {len(ranks)}"
        )
    if ranks[0] != 1 or ranks[-1] != 1:
        raise ValueError("edge ranks must be 1")
    if any(r < 0 for r in ranks):
        raise ValueError("ranks must be nonnegative")
    return ranks


def flops_ttsvd(shape, ranks, c_svd: float = 1.0) -> float:
    """Cost model for :func:`tt_svd`.

    One truncated SVD of an ``m x n`` matrix is charged
    ``c_svd * m * n * min(m, n)``; step ``k`` factorizes the
    ``(r_{k-1} n_k) x (n_{k+1} ... n_d)`` unfolding.
    """
    dims = check_shape(shape)
    d = len(dims)
    r = full_ranks(dims, ranks)
    total = 0
    for k in range(1, d):  # unfolding after modes 1..d-1 (1-based)
        rows = r[k - 1] * dims[k - 1]
        cols = math.prod(dims[k:])
        total += rows * cols * min(rows, cols)
    return c_svd * float(total)
