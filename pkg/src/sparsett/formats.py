"""File formats: COO text tensors, MatrixMarket matrices, JSON run
reports, and train archives.

Text formats are 1-based on disk; everything is converted to the
package's 0-based convention on ingestion.  The COO writer prints 17
significant digits so write/read round-trips are bit-exact for float64.
"""

from __future__ import annotations

import json
import warnings
from typing import Any

import numpy as np
import scipy.io
import scipy.sparse

from .errors import FormatError
from .fasttt import DecompositionReport
from .tensor import SparseTensor, check_shape
from .ttformat import TTTensor

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "write_coo",
    "ingest_coo",
    "ingest_matrix_market",
    "report_document",
    "write_report",
    "save_tt",
    "load_tt",
]

REPORT_SCHEMA_VERSION = 1


def write_coo(t: SparseTensor, path) -> None:
    """Write a sparse tensor as text: a shape header, then one line per
    nonzero with 1-based coordinates."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# shape " + " ".join(str(n) for n in t.shape) + "\n")
        for c, v in zip(t.coords, t.values):
            fh.write(" ".join(str(i + 1) for i in c) + f" {v:.17g}\n")


def ingest_coo(path) -> SparseTensor:
    """Read the COO text format written by :func:`write_coo`.

    The first line must be ``# shape n1 n2 ... nd``; each following
    nonempty line holds ``d`` 1-based coordinates and a value.  Parse
    problems raise :class:`FormatError` naming the line; duplicate
    coordinates are an error; a file with no entries yields the zero
    tensor with a warning.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise FormatError(f"{path}: empty file, missing shape header")
    head = lines[0].split()
    if len(head) < 3 or head[0] != "#" or head[1] != "shape":
        raise FormatError(f"{path}:1: expected header '# shape n1 ... nd'")
    try:
        dims = check_shape(int(tok) for tok in head[2:])
    except ValueError as exc:
        raise FormatError(f"{path}:1: bad shape header: {exc}") from None
    d = len(dims)
    coords: list[list[int]] = []
    values: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok:
            continue
        if len(tok) != d + 1:
            raise FormatError(
                f"{path}:{lineno}: expected {d} indices and a value, "
                f"got {len(tok)} fields"
            )
        try:
            idx = [int(s) for s in tok[:d]]
            val = float(tok[d])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: unparsable entry {line.strip()!r}") from None
        for k, i in enumerate(idx):
            if not 1 <= i <= dims[k]:
                raise FormatError(
                    f"{path}:{lineno}: index {i} out of range 1..{dims[k]} in mode {k + 1}"
                )
        if not np.isfinite(val):
            raise FormatError(f"{path}:{lineno}: non-finite value {tok[d]}")
        coords.append([i - 1 for i in idx])
        values.append(val)
    if not values:
        warnings.warn(f"{path}: no entries, reading the zero tensor", stacklevel=2)
    try:
        return SparseTensor(dims, np.asarray(coords, np.int64).reshape(len(values), d), values)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def ingest_matrix_market(path) -> scipy.sparse.coo_matrix:
    """Read a coordinate-format real MatrixMarket file.

    ``general`` and ``symmetric`` storage are supported (the symmetric
    half is expanded); any other variant is rejected by name.
    """
    with open(path, "r", encoding="ascii") as fh:
        banner = fh.readline().split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        raise FormatError(f"{path}:1: not a MatrixMarket file")
    obj, fmt, field, symmetry = (s.lower() for s in banner[1:])
    if obj != "matrix":
        raise FormatError(f"{path}: unsupported MatrixMarket object {obj!r}")
    if fmt != "coordinate":
        raise FormatError(f"{path}: unsupported MatrixMarket format {fmt!r} (need coordinate)")
    if field != "real":
        raise FormatError(f"{path}: unsupported MatrixMarket field {field!r} (need real)")
    if symmetry not in ("general", "symmetric"):
        raise FormatError(
            f"{path}: unsupported MatrixMarket symmetry {symmetry!r} "
            "(need general or symmetric)"
        )
    try:
        m = scipy.io.mmread(path)
    except Exception as exc:
        raise FormatError(f"{path}: {exc}") from None
    return scipy.sparse.coo_matrix(m, dtype=np.float64)


def report_document(
    report: DecompositionReport,
    method: str = "fasttt",
    source: str | None = None,
    threads: int = 1,
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Flatten a run report into the versioned JSON document schema.

    The pivot is recorded 1-based (``p``) to match the 1-based text
    formats; rank vectors use the short keys ``r_tilde`` and ``r``.
    """
    size = 1
    for n in report.shape:
        size *= n
    doc: dict[str, Any] = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "generator": "sparsett",
        "method": method,
        "source": source,
        "shape": list(report.shape),
        "nnz": report.nnz,
        "sigma": report.nnz / size,
        "eps": report.eps,
        "mode": report.mode,
        "p": report.pivot + 1,
        "R": report.num_fibers,
        "r_tilde": list(report.ranks_lossless),
        "r": list(report.ranks),
        "eps_actual": report.eps_actual,
        "eps_actual_method": report.eps_actual_method,
        "eps_actual_inner_identity": report.eps_actual_inner,
        "flops_fasttt_model": report.flops_fasttt_model,
        "flops_ttsvd_model": report.flops_ttsvd_model,
        "wall_time_s": report.wall_time_s,
        "cpu_time_s": report.cpu_time_s,
        "threads": threads,
        "warnings": list(report.warnings),
    }
    if extra:
        doc.update(extra)
    return doc


def write_report(doc: dict[str, Any], path) -> None:
    """Write a report document as JSON; non-finite numbers are rejected."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def save_tt(t: TTTensor, path, **metadata) -> None:
    """Archive a train as an ``.npz`` file (one array per core)."""
    arrays = {f"core_{k}": c for k, c in enumerate(t.cores)}
    meta = {f"meta_{k}": np.asarray(v) for k, v in metadata.items()}
    np.savez(path, num_cores=np.asarray(t.ndim), **arrays, **meta)


def load_tt(path) -> TTTensor:
    """Load a train archived by :func:`save_tt`."""
    with np.load(path) as data:
        d = int(data["num_cores"])
        return TTTensor([data[f"core_{k}"] for k in range(d)])
