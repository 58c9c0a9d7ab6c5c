"""Tensor-train values: dense-core trains, operator trains, and the
structured (quasi-permutation) train a sparse tensor converts into.

A train with cores ``G[0] .. G[d-1]`` (each ``(r_prev, n_k, r_next)``,
edge ranks 1) represents

    a[i_0, .., i_{d-1}] = G[0][:, i_0, :] @ ... @ G[d-1][:, i_{d-1}, :]

Mode extents and bond ranks follow the same 0-based, last-index-fastest
conventions as :mod:`sparsett.tensor`.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse

from .errors import FormatError
from .linalg import qr_economic
from .tensor import (
    DENSE_CAP,
    FiberSet,
    SparseTensor,
    check_shape,
    delinearize,
    linearize,
)

__all__ = [
    "TTTensor",
    "TTMatrix",
    "QuasiPermMatrix",
    "StructuredTT",
    "tt_zero",
    "tt_entry",
    "tt_entries",
    "tt_rank1",
    "tt_scale",
    "tt_add",
    "tt_to_full",
    "tt_norm",
    "tt_right_orthogonalize",
    "as_quasi_perm",
    "structured_to_tt",
    "tensorize_matrix",
    "matrix_from_tensorized",
    "tt_split_mpo",
    "mpo_matvec",
    "mpo_to_dense",
]


class TTTensor:
    """Tensor in train format: a list of 3-way cores with matching bonds."""

    __slots__ = ("cores",)

    def __init__(self, cores, copy: bool = True):
        cores = [np.asarray(c, dtype=np.float64) for c in cores]
        if not cores:
            raise ValueError("a train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {k} must be 3-way, got shape {c.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("edge ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(
                    f"bond mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} vs {cores[k + 1].shape[0]}"
                )
        if copy:
            cores = [np.ascontiguousarray(c) for c in cores]
            for c in cores:
                c.setflags(write=False)
        object.__setattr__(self, "cores", tuple(cores))

    def __setattr__(self, name, value):
        raise AttributeError("TTTensor is immutable")

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def num_params(self) -> int:
        return sum(c.size for c in self.cores)

    def __repr__(self) -> str:
        return f"TTTensor(dims={self.dims}, ranks={self.ranks})"


def tt_zero(dims) -> TTTensor:
    """The zero tensor as a train of rank-1 zero cores."""
    dims = check_shape(dims)
    return TTTensor([np.zeros((1, n, 1)) for n in dims])


def tt_entry(t: TTTensor, idx) -> float:
    """Evaluate one entry by chaining the core slices."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != t.ndim:
        raise ValueError(f"index needs {t.ndim} coordinates, got {len(idx)}")
    for k, (i, n) in enumerate(zip(idx, t.dims)):
        if not 0 <= i < n:
            raise ValueError(f"index {i} out of range for mode {k}")
    v = t.cores[0][:, idx[0], :]
    for k in range(1, t.ndim):
        v = v @ t.cores[k][:, idx[k], :]
    return float(v[0, 0])


def tt_entries(t: TTTensor, coords, batch: int = 1024) -> np.ndarray:
    """Evaluate many entries; ``coords`` is ``(n, d)``, 0-based."""
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim != 2 or coords.shape[1] != t.ndim:
        raise ValueError(f"coords must be (n, {t.ndim})")
    out = np.empty(coords.shape[0])
    for lo in range(0, coords.shape[0], batch):
        c = coords[lo : lo + batch]
        v = t.cores[0][0, c[:, 0], :]
        for k in range(1, t.ndim):
            v = np.einsum("nr,rns->ns", v, t.cores[k][:, c[:, k], :])
        out[lo : lo + c.shape[0]] = v[:, 0]
    return out


def tt_rank1(vectors) -> TTTensor:
    """Train of the outer product of the given mode vectors."""
    cores = []
    for v in vectors:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("each factor must be a nonempty vector")
        cores.append(v.reshape(1, -1, 1))
    return TTTensor(cores)


def tt_scale(t: TTTensor, alpha: float) -> TTTensor:
    """Multiply by a scalar (absorbed into the first core)."""
    cores = list(t.cores)
    cores[0] = cores[0] * float(alpha)
    return TTTensor(cores)


def tt_add(a: TTTensor, b: TTTensor) -> TTTensor:
    """Entrywise sum via block-diagonal cores.

    Interior bond ranks add; no compression is attempted, so adding the
    zero train still grows every interior rank by 1.
    """
    if a.dims != b.dims:
        raise ValueError(f"dims differ: {a.dims} vs {b.dims}")
    d = a.ndim
    if d == 1:
        return TTTensor([a.cores[0] + b.cores[0]])
    cores = []
    for k in range(d):
        ca, cb = a.cores[k], b.cores[k]
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        if k == 0:
            cores.append(np.concatenate([ca, cb], axis=2))
        elif k == d - 1:
            cores.append(np.concatenate([ca, cb], axis=0))
        else:
            c = np.zeros((ra0 + rb0, n, ra1 + rb1))
            c[:ra0, :, :ra1] = ca
            c[ra0:, :, ra1:] = cb
            cores.append(c)
    return TTTensor(cores)


def tt_to_full(t: TTTensor, cap: int | None = DENSE_CAP) -> np.ndarray:
    """Contract the train into a dense tensor (size-guarded)."""
    size = math.prod(t.dims)
    if cap is not None and size > cap:
        raise ValueError(f"dense size {size} exceeds cap {cap}; raise cap explicitly")
    res = t.cores[0].reshape(t.dims[0], -1)
    for k in range(1, t.ndim):
        r, n, r1 = t.cores[k].shape
        res = res @ t.cores[k].reshape(r, n * r1)
        res = res.reshape(-1, r1)
    return res.reshape(t.dims)


def tt_norm(t: TTTensor) -> float:
    """Frobenius norm by contracting the train with itself."""
    w = np.ones((1, 1))
    for c in t.cores:
        w = np.einsum("ab,aic,bid->cd", w, c, c, optimize=True)
    return float(np.sqrt(max(w[0, 0], 0.0)))


def tt_right_orthogonalize(t: TTTensor) -> TTTensor:
    """Sweep QR factors right-to-left so cores ``1..d-1`` become
    right-orthonormal; the first core then carries the whole norm."""
    cores = [c.copy() for c in t.cores]
    for k in range(len(cores) - 1, 0, -1):
        r0, n, r1 = cores[k].shape
        fac = qr_economic(cores[k].reshape(r0, n * r1).T)
        q = fac.q.shape[1]
        cores[k] = np.ascontiguousarray(fac.q.T).reshape(q, n, r1)
        cores[k - 1] = np.einsum("abc,dc->abd", cores[k - 1], fac.r)
    return TTTensor(cores, copy=False)


class QuasiPermMatrix:
    """A zero-one matrix with exactly one 1 per column.

    Stored as the map from column to the row holding its 1, so products
    and factorizations reduce to integer index arithmetic.
    """

    __slots__ = ("n_rows", "n_cols", "col_to_row")

    def __init__(self, n_rows: int, n_cols: int, col_to_row):
        n_rows = int(n_rows)
        n_cols = int(n_cols)
        col_to_row = np.ascontiguousarray(col_to_row, dtype=np.int64)
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix extents must be nonnegative")
        if col_to_row.shape != (n_cols,):
            raise ValueError(f"col_to_row must have shape ({n_cols},)")
        if n_cols and (col_to_row.min() < 0 or col_to_row.max() >= n_rows):
            raise ValueError("column map points outside the row range")
        col_to_row.setflags(write=False)
        object.__setattr__(self, "n_rows", n_rows)
        object.__setattr__(self, "n_cols", n_cols)
        object.__setattr__(self, "col_to_row", col_to_row)

    def __setattr__(self, name, value):
        raise AttributeError("QuasiPermMatrix is immutable")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.n_rows, self.n_cols))
        m[self.col_to_row, np.arange(self.n_cols)] = 1.0
        return m

    def to_sparse(self) -> scipy.sparse.csc_matrix:
        data = np.ones(self.n_cols)
        indptr = np.arange(self.n_cols + 1)
        return scipy.sparse.csc_matrix(
            (data, self.col_to_row.copy(), indptr), shape=self.shape
        )

    def __repr__(self) -> str:
        return f"QuasiPermMatrix(shape={self.shape})"


def as_quasi_perm(m) -> QuasiPermMatrix | None:
    """Recognize a quasi-permutation matrix; ``None`` if it is not one."""
    if isinstance(m, QuasiPermMatrix):
        return m
    if scipy.sparse.issparse(m):
        c = m.tocsc()
    else:
        c = scipy.sparse.csc_matrix(np.asarray(m, dtype=np.float64))
    if np.any(np.diff(c.indptr) != 1):
        return None
    if c.nnz and not np.all(c.data == 1.0):
        return None
    return QuasiPermMatrix(c.shape[0], c.shape[1], c.indices.astype(np.int64))


class StructuredTT:
    """The exact train of a sparse tensor, kept in index form.

    All interior bonds equal the fiber count ``R``.  Every non-pivot
    core is a quasi-permutation in the appropriate unfolding (columns
    left of the pivot, transposed rows right of it) and is stored as an
    index map; the pivot core holds one fiber per diagonal slice and is
    stored sparsely.  Nothing of size ``R * n * R`` is materialized.
    """

    __slots__ = ("fibers",)

    def __init__(self, fibers: FiberSet):
        if not isinstance(fibers, FiberSet):
            raise TypeError("StructuredTT is built from a FiberSet")
        object.__setattr__(self, "fibers", fibers)

    def __setattr__(self, name, value):
        raise AttributeError("StructuredTT is immutable")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.fibers.shape

    @property
    def pivot(self) -> int:
        return self.fibers.pivot

    @property
    def num_fibers(self) -> int:
        return self.fibers.num_fibers

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def ranks(self) -> tuple[int, ...]:
        d = self.ndim
        return (1,) + (self.num_fibers,) * (d - 1) + (1,)

    def mode_index(self, k: int) -> np.ndarray:
        """Per-fiber coordinate of non-pivot mode ``k`` (length ``R``)."""
        if k == self.pivot or not 0 <= k < self.ndim:
            raise ValueError(f"mode {k} is the pivot or out of range")
        col = k if k < self.pivot else k - 1
        return self.fibers.fixed_coords[:, col]

    def perm_core(self, k: int) -> QuasiPermMatrix:
        """Mode-``k`` core as the quasi-permutation unfolding it is.

        Left of the pivot this is the column unfolding
        ``(r_prev * n_k, R)``; right of it, the transposed row unfolding
        ``(n_k * r_next, R)``.
        """
        d = self.ndim
        r = self.num_fibers
        n = self.shape[k]
        ik = self.mode_index(k)
        beta = np.arange(r, dtype=np.int64)
        if k < self.pivot:
            prev = beta if k > 0 else np.zeros(r, np.int64)
            return QuasiPermMatrix((r if k > 0 else 1) * n, r, prev * n + ik)
        nxt = beta if k < d - 1 else np.zeros(r, np.int64)
        r_next = r if k < d - 1 else 1
        return QuasiPermMatrix(n * r_next, r, ik * r_next + nxt)

    @property
    def perm_cores(self) -> list[QuasiPermMatrix]:
        return [self.perm_core(k) for k in range(self.ndim) if k != self.pivot]

    @property
    def fiber_core(self) -> scipy.sparse.csr_matrix:
        """Pivot slices stacked as a sparse ``(R, n_pivot)`` matrix."""
        f = self.fibers
        return scipy.sparse.csr_matrix(
            (f.values.copy(), f.pivot_index.copy(), f.indptr.copy()),
            shape=(max(f.num_fibers, 0), self.shape[self.pivot]),
        )

    def __repr__(self) -> str:
        return (
            f"StructuredTT(shape={self.shape}, pivot={self.pivot}, "
            f"fibers={self.num_fibers})"
        )


def structured_to_tt(s: StructuredTT, cap: int | None = DENSE_CAP) -> TTTensor:
    """Materialize the structured train with explicit dense cores.

    Interior ranks all equal the fiber count, so this is only for small
    instances; the total core size is guarded by ``cap``.
    """
    d = s.ndim
    r = s.num_fibers
    dims = s.shape
    if r == 0:
        return tt_zero(dims)
    total = sum(
        (r if k > 0 else 1) * dims[k] * (r if k < d - 1 else 1) for k in range(d)
    )
    if cap is not None and total > cap:
        raise ValueError(f"core size {total} exceeds cap {cap}; raise cap explicitly")
    beta = np.arange(r)
    cores: list[np.ndarray] = []
    for k in range(d):
        r0 = r if k > 0 else 1
        r1 = r if k < d - 1 else 1
        core = np.zeros((r0, dims[k], r1))
        if k == s.pivot:
            f = s.fibers
            per_entry = np.repeat(beta, np.diff(f.indptr))
            left = per_entry if k > 0 else np.zeros(f.nnz, np.int64)
            right = per_entry if k < d - 1 else np.zeros(f.nnz, np.int64)
            core[left, f.pivot_index, right] = f.values
        else:
            ik = s.mode_index(k)
            left = beta if k > 0 else np.zeros(r, np.int64)
            right = beta if k < d - 1 else np.zeros(r, np.int64)
            core[left, ik, right] = 1.0
        cores.append(core)
    return TTTensor(cores, copy=False)


def _check_factors(dims, total: int, what: str) -> tuple[int, ...]:
    dims = check_shape(dims)
    if math.prod(dims) != total:
        raise ValueError(
            f"{what} {dims} do not factor the matrix extent {total}"
        )
    return dims


def tensorize_matrix(m, row_dims, col_dims) -> SparseTensor:
    """Fuse a sparse matrix into a ``d``-way tensor, pairing the ``i``-th
    row factor with the ``i``-th column factor.

    Fused coordinates are row-major within each pair:
    ``f_i = x_i * col_dims[i] + y_i``, matching the vectorization
    convention, so the inverse mapping is exact.
    """
    if not scipy.sparse.issparse(m):
        m = scipy.sparse.coo_matrix(np.asarray(m, dtype=np.float64))
    m = m.tocsr().tocoo()  # coalesce duplicates before fusing
    row_dims = _check_factors(row_dims, m.shape[0], "row factors")
    col_dims = _check_factors(col_dims, m.shape[1], "column factors")
    if len(row_dims) != len(col_dims):
        raise ValueError("row and column factorizations need equal length")
    x = delinearize(row_dims, m.row.astype(np.int64))
    y = delinearize(col_dims, m.col.astype(np.int64))
    fused = x * np.asarray(col_dims, dtype=np.int64) + y
    dims = tuple(a * b for a, b in zip(row_dims, col_dims))
    return SparseTensor(dims, fused, m.data)


def matrix_from_tensorized(t: SparseTensor, row_dims, col_dims) -> scipy.sparse.csr_matrix:
    """Inverse of :func:`tensorize_matrix`."""
    row_dims = check_shape(row_dims)
    col_dims = check_shape(col_dims)
    dims = tuple(a * b for a, b in zip(row_dims, col_dims))
    if t.shape != dims:
        raise ValueError(f"tensor shape {t.shape} does not match fused dims {dims}")
    cd = np.asarray(col_dims, dtype=np.int64)
    x = t.coords // cd
    y = t.coords % cd
    rows = linearize(row_dims, x)
    cols = linearize(col_dims, y)
    return scipy.sparse.csr_matrix(
        (t.values, (rows, cols)),
        shape=(math.prod(row_dims), math.prod(col_dims)),
    )


class TTMatrix:
    """Operator train: 4-way cores ``(r_prev, m_k, n_k, r_next)``."""

    __slots__ = ("cores",)

    def __init__(self, cores, copy: bool = True):
        cores = [np.asarray(c, dtype=np.float64) for c in cores]
        if not cores:
            raise ValueError("an operator train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 4:
                raise ValueError(f"core {k} must be 4-way, got shape {c.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ValueError("edge ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[3] != cores[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between cores {k} and {k + 1}")
        if copy:
            cores = [np.ascontiguousarray(c) for c in cores]
            for c in cores:
                c.setflags(write=False)
        object.__setattr__(self, "cores", tuple(cores))

    def __setattr__(self, name, value):
        raise AttributeError("TTMatrix is immutable")

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def row_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def col_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[3] for c in self.cores)

    @property
    def num_params(self) -> int:
        return sum(c.size for c in self.cores)

    def __repr__(self) -> str:
        return (
            f"TTMatrix(row_dims={self.row_dims}, col_dims={self.col_dims}, "
            f"ranks={self.ranks})"
        )


def tt_split_mpo(t: TTTensor, row_dims, col_dims) -> TTMatrix:
    """Split the fused modes of a train back into (row, col) leg pairs."""
    row_dims = check_shape(row_dims)
    col_dims = check_shape(col_dims)
    dims = tuple(a * b for a, b in zip(row_dims, col_dims))
    if t.dims != dims:
        raise ValueError(f"train dims {t.dims} do not match fused dims {dims}")
    cores = []
    for c, mk, nk in zip(t.cores, row_dims, col_dims):
        r0, _, r1 = c.shape
        cores.append(c.reshape(r0, mk, nk, r1))
    return TTMatrix(cores)


def mpo_matvec(m: TTMatrix, v: TTTensor) -> TTTensor:
    """Apply an operator train to a train; bond ranks multiply."""
    if m.col_dims != v.dims:
        raise ValueError(f"operator col dims {m.col_dims} do not match {v.dims}")
    cores = []
    for a, b in zip(m.cores, v.cores):
        ra0, mk, nk, ra1 = a.shape
        rb0, _, rb1 = b.shape
        c = np.einsum("amnb,cnd->acmbd", a, b, optimize=True)
        cores.append(c.reshape(ra0 * rb0, mk, ra1 * rb1))
    return TTTensor(cores, copy=False)


def mpo_to_dense(m: TTMatrix, cap: int | None = DENSE_CAP) -> np.ndarray:
    """Contract an operator train into an ordinary matrix (size-guarded)."""
    fused = TTTensor(
        [c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3]) for c in m.cores],
        copy=False,
    )
    full = tt_to_full(fused, cap=cap)
    d = m.ndim
    interleaved = full.reshape(
        tuple(x for pair in zip(m.row_dims, m.col_dims) for x in pair)
    )
    perm = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
    return np.transpose(interleaved, perm).reshape(
        math.prod(m.row_dims), math.prod(m.col_dims)
    )
