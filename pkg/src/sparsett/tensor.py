"""Sparse tensors in coordinate form and index-space operations on them.

Conventions used throughout the package:

* Dense tensors are C-ordered ``numpy.ndarray`` objects, so ``vectorize``
  makes the *last* index vary fastest.
* Coordinates and mode numbers in the Python API are 0-based.  The text
  file formats are 1-based; :mod:`sparsett.formats` converts at that
  boundary.
* Values are float64.  Explicit zeros are dropped on construction and
  duplicate coordinates are rejected, never summed.
"""

from __future__ import annotations

import math
import operator

import numpy as np
import scipy.sparse

from .errors import FormatError

__all__ = [
    "DENSE_CAP",
    "SparseTensor",
    "FiberSet",
    "check_shape",
    "size_of",
    "linearize",
    "delinearize",
    "vectorize",
    "reshape",
    "unfold",
    "contract",
    "tensor_times_matrix",
    "frobenius_norm",
    "extract_nonzero_fibers",
]

# Guard for any operation that materializes a dense array.
DENSE_CAP = 10_000_000

_INT63 = 2**63


def check_shape(shape) -> tuple[int, ...]:
    """Validate a shape and return it as a tuple of Python ints.

    Every extent must be a positive integer and the total size must fit
    in signed 64-bit index arithmetic.
    """
    items = tuple(shape)
    try:
        dims = tuple(operator.index(n) for n in items)
    except TypeError:
        raise TypeError(f"shape extents must be integers, got {items}") from None
    if len(dims) == 0:
        raise ValueError("shape needs at least one mode")
    if any(n < 1 for n in dims):
        raise ValueError(f"shape extents must be positive, got {dims}")
    size = 1
    for n in dims:
        size *= n
        if size >= _INT63:
            raise ValueError(f"shape {dims} overflows 64-bit indexing")
    return dims


def size_of(shape) -> int:
    """Total number of entries of a dense tensor with this shape."""
    return math.prod(check_shape(shape))


def _strides(dims) -> np.ndarray:
    # C-order strides: last mode fastest.
    s = np.ones(len(dims), dtype=np.int64)
    for k in range(len(dims) - 2, -1, -1):
        s[k] = s[k + 1] * dims[k + 1]
    return s


def linearize(shape, coords: np.ndarray) -> np.ndarray:
    """Map multi-indices (rows of ``coords``) to C-order linear indices."""
    dims = check_shape(shape)
    coords = np.asarray(coords, dtype=np.int64)
    return coords @ _strides(dims)


def delinearize(shape, lin: np.ndarray) -> np.ndarray:
    """Inverse of :func:`linearize`; returns an ``(n, d)`` coordinate array."""
    dims = check_shape(shape)
    lin = np.asarray(lin, dtype=np.int64)
    out = np.empty((lin.shape[0], len(dims)), dtype=np.int64)
    rem = lin
    strides = _strides(dims)
    for k in range(len(dims)):
        out[:, k] = rem // strides[k]
        rem = rem % strides[k]
    return out


class SparseTensor:
    """Immutable COO tensor.

    Entries are kept sorted by linearized coordinate, which makes the
    representation canonical: two tensors with the same entries compare
    equal array-wise regardless of input order.

    Parameters
    ----------
    shape:
        Mode extents.
    coords:
        Integer array of shape ``(nnz, d)``, 0-based.
    values:
        Float array of shape ``(nnz,)``.  Entries equal to zero are
        dropped; duplicate coordinates raise :class:`FormatError`.
    """

    __slots__ = ("shape", "coords", "values")

    def __init__(self, shape, coords, values):
        dims = check_shape(shape)
        coords = np.ascontiguousarray(coords, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if coords.size == 0:
            coords = coords.reshape(0, len(dims))
        if coords.ndim != 2 or coords.shape[1] != len(dims):
            raise FormatError(
                f"coords must be (nnz, {len(dims)}), got {coords.shape}"
            )
        if values.shape != (coords.shape[0],):
            raise FormatError(
                f"values must be ({coords.shape[0]},), got {values.shape}"
            )
        if coords.shape[0]:
            if coords.min() < 0 or (coords >= np.asarray(dims)).any():
                bad = np.argmax(
                    (coords < 0).any(axis=1) | (coords >= np.asarray(dims)).any(axis=1)
                )
                raise FormatError(
                    f"coordinate {tuple(coords[bad])} out of range for shape {dims}"
                )
        if not np.isfinite(values).all():
            raise FormatError("tensor values must be finite")

        keep = values != 0.0
        coords = coords[keep]
        values = values[keep]
        lin = linearize(dims, coords)
        order = np.argsort(lin, kind="stable")
        lin = lin[order]
        dup = np.flatnonzero(lin[1:] == lin[:-1])
        if dup.size:
            where = tuple(coords[order[dup[0] + 1]])
            raise FormatError(f"duplicate coordinate {where}")
        coords = np.ascontiguousarray(coords[order])
        values = np.ascontiguousarray(values[order])
        coords.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "shape", dims)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SparseTensor is immutable")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def nnz(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def __repr__(self) -> str:
        return f"SparseTensor(shape={self.shape}, nnz={self.nnz})"

    @classmethod
    def from_dense(cls, a) -> "SparseTensor":
        a = np.ascontiguousarray(a, dtype=np.float64)
        coords = np.argwhere(a != 0.0)
        return cls(a.shape, coords, a[tuple(coords.T)])

    def to_dense(self, cap: int | None = DENSE_CAP) -> np.ndarray:
        if cap is not None and self.size > cap:
            raise ValueError(
                f"dense size {self.size} exceeds cap {cap}; raise cap explicitly"
            )
        out = np.zeros(self.size)
        out[linearize(self.shape, self.coords)] = self.values
        return out.reshape(self.shape)


def vectorize(t):
    """Flatten to one mode, last index fastest.

    Accepts a :class:`SparseTensor` (returns a 1-way sparse tensor) or a
    dense array (returns a 1-d array).
    """
    if isinstance(t, SparseTensor):
        lin = linearize(t.shape, t.coords)
        return SparseTensor((t.size,), lin[:, None], t.values)
    return np.ascontiguousarray(t).reshape(-1)


def reshape(t, new_shape):
    """Regroup indices so that vectorizations agree entry-for-entry.

    Pure index arithmetic on sparse input; values are untouched.
    """
    dims = check_shape(new_shape)
    if isinstance(t, SparseTensor):
        if math.prod(dims) != t.size:
            raise ValueError(f"cannot reshape size {t.size} to {dims}")
        lin = linearize(t.shape, t.coords)
        return SparseTensor(dims, delinearize(dims, lin), t.values)
    t = np.ascontiguousarray(t)
    if math.prod(dims) != t.size:
        raise ValueError(f"cannot reshape size {t.size} to {dims}")
    return t.reshape(dims)


def unfold(t, k: int):
    """Matricize with the first ``k`` modes as rows.

    ``k`` counts modes, so valid values are ``1 .. d-1``.  Sparse input
    yields ``scipy.sparse.csr_matrix``, dense input a 2-d array.
    """
    d = t.ndim
    if not 1 <= k <= d - 1:
        raise ValueError(f"unfold split must be in 1..{d - 1}, got {k}")
    if isinstance(t, SparseTensor):
        rows = linearize(t.shape[:k], t.coords[:, :k])
        cols = linearize(t.shape[k:], t.coords[:, k:])
        m = math.prod(t.shape[:k])
        n = math.prod(t.shape[k:])
        return scipy.sparse.csr_matrix(
            (t.values, (rows, cols)), shape=(m, n)
        )
    t = np.ascontiguousarray(t)
    return t.reshape(math.prod(t.shape[:k]), math.prod(t.shape[k:]))


def _as_dense(t, cap: int = DENSE_CAP) -> np.ndarray:
    if isinstance(t, SparseTensor):
        return t.to_dense(cap)
    return np.asarray(t, dtype=np.float64)


def contract(a, k1: int, b, k2: int) -> np.ndarray:
    """Contract mode ``k1`` of ``a`` with mode ``k2`` of ``b``.

    The result carries ``a``'s leading modes, then all of ``b``'s
    remaining modes, then ``a``'s trailing modes:

        c[i_1..i_{k1-1}, j_1..j_{k2-1}, j_{k2+1}.., i_{k1+1}..]
            = sum_m a[.., m, ..] * b[.., m, ..]
    """
    a = _as_dense(a)
    b = _as_dense(b)
    if not 0 <= k1 < a.ndim or not 0 <= k2 < b.ndim:
        raise ValueError(f"contraction modes ({k1}, {k2}) out of range")
    if a.shape[k1] != b.shape[k2]:
        raise ValueError(
            f"contracted extents differ: {a.shape[k1]} vs {b.shape[k2]}"
        )
    res = np.tensordot(a, b, axes=(k1, k2))
    # tensordot orders axes [a w/o k1, b w/o k2]; move b's block inward.
    da, db = a.ndim, b.ndim
    perm = (
        list(range(k1))
        + list(range(da - 1, da - 1 + db - 1))
        + list(range(k1, da - 1))
    )
    return np.transpose(res, perm)


def tensor_times_matrix(a, k: int, m) -> np.ndarray:
    """Mode-``k`` product: contract mode ``k`` of ``a`` with the rows of ``m``.

    Equivalent to ``contract(a, k, m, 0)``; the surviving matrix mode
    takes position ``k`` of the result.
    """
    a = _as_dense(a)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("second operand must be a matrix")
    res = np.tensordot(a, m, axes=(k, 0))
    return np.moveaxis(res, -1, k)


def frobenius_norm(t) -> float:
    """Frobenius norm of a sparse or dense tensor."""
    if isinstance(t, SparseTensor):
        return float(np.linalg.norm(t.values))
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))


class FiberSet:
    """Nonzero mode-``pivot`` fibers of a sparse tensor.

    A fiber is the 1-d slice obtained by fixing every coordinate except
    the pivot one.  Only fibers holding at least one nonzero are stored.
    Fixed tuples are kept in lexicographic order; within a fiber the
    pivot coordinates are ascending.  Storage is CSR-like: fiber ``i``
    owns entries ``indptr[i]:indptr[i+1]``.
    """

    __slots__ = ("shape", "pivot", "fixed_coords", "indptr", "pivot_index", "values")

    def __init__(self, shape, pivot, fixed_coords, indptr, pivot_index, values):
        dims = check_shape(shape)
        d = len(dims)
        if not 0 <= pivot < d:
            raise ValueError(f"pivot {pivot} out of range for {d} modes")
        fixed_coords = np.ascontiguousarray(fixed_coords, dtype=np.int64)
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        pivot_index = np.ascontiguousarray(pivot_index, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        r = fixed_coords.shape[0] if fixed_coords.size else 0
        fixed_coords = fixed_coords.reshape(r, d - 1) if d > 1 else fixed_coords.reshape(r, 0)
        if indptr.shape != (r + 1,) or indptr[0] != 0 or indptr[-1] != values.shape[0]:
            raise ValueError("inconsistent fiber index pointers")
        if (np.diff(indptr) < 1).any():
            raise ValueError("every stored fiber must hold at least one nonzero")
        if r > 1:
            rest_dims = dims[:pivot] + dims[pivot + 1 :]
            keys = linearize(rest_dims, fixed_coords) if rest_dims else np.zeros(r, np.int64)
            if (np.diff(keys) <= 0).any():
                raise ValueError("fixed tuples must be strictly increasing")
        for a in (fixed_coords, indptr, pivot_index, values):
            a.setflags(write=False)
        object.__setattr__(self, "shape", dims)
        object.__setattr__(self, "pivot", int(pivot))
        object.__setattr__(self, "fixed_coords", fixed_coords)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "pivot_index", pivot_index)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("FiberSet is immutable")

    @property
    def num_fibers(self) -> int:
        return self.fixed_coords.shape[0]

    @property
    def nnz(self) -> int:
        return self.values.shape[0]

    def __iter__(self):
        for i in range(self.num_fibers):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            yield tuple(self.fixed_coords[i]), (self.pivot_index[lo:hi], self.values[lo:hi])

    def to_tensor(self) -> SparseTensor:
        """Reassemble the original tensor (index regrouping only)."""
        d = len(self.shape)
        n = self.nnz
        coords = np.empty((n, d), dtype=np.int64)
        rest = [k for k in range(d) if k != self.pivot]
        per_entry = np.repeat(np.arange(self.num_fibers), np.diff(self.indptr))
        coords[:, rest] = self.fixed_coords[per_entry]
        coords[:, self.pivot] = self.pivot_index
        return SparseTensor(self.shape, coords, self.values)


def extract_nonzero_fibers(t: SparseTensor, pivot: int) -> FiberSet:
    """Group the nonzeros of ``t`` into mode-``pivot`` fibers.

    Grouping is done by sorting with the pivot coordinate rotated to the
    fastest position, so the fixed tuples come out in lexicographic
    order.  The number of fibers is bounded by ``nnz`` and by the number
    of possible fixed tuples.
    """
    d = t.ndim
    if not 0 <= pivot < d:
        raise ValueError(f"pivot {pivot} out of range for {d} modes")
    rest = [k for k in range(d) if k != pivot]
    fixed = t.coords[:, rest]
    # lexsort: last key is primary.
    keys = (t.coords[:, pivot],) + tuple(fixed[:, k] for k in range(d - 2, -1, -1))
    order = np.lexsort(keys)
    fixed = fixed[order]
    boundary = np.ones(t.nnz, dtype=bool)
    if t.nnz > 1:
        boundary[1:] = (fixed[1:] != fixed[:-1]).any(axis=1)
    starts = np.flatnonzero(boundary)
    indptr = np.concatenate([starts, [t.nnz]]) if t.nnz else np.zeros(1, np.int64)
    return FiberSet(
        t.shape,
        pivot,
        fixed[starts] if t.nnz else np.zeros((0, max(d - 1, 0)), np.int64),
        indptr,
        t.coords[order, pivot],
        t.values[order],
    )
