"""Command-line interface.

Subcommands: ``decompose`` (one input, one report), ``bench`` (a
manifest of cases, with optional process-level parallelism), and the
generators ``gen-fdm`` / ``gen-random``.

Exit codes: 0 on success (and error within tolerance), 1 when the
decomposition violates its error contract, 2 on input problems.
User-facing indices (``--p``, report field ``p``, file formats) are
1-based; the Python API underneath is 0-based.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy.io

from .errors import ContractViolationError, FormatError
from .fasttt import fasttt
from .formats import (
    REPORT_SCHEMA_VERSION,
    ingest_coo,
    ingest_matrix_market,
    report_document,
    save_tt,
    write_coo,
    write_report,
)
from .generators import gen_fdm, gen_random_sparse
from .tensor import SparseTensor, frobenius_norm
from .ttformat import tensorize_matrix, tt_to_full
from .ttsvd import flops_ttsvd, tt_svd

__all__ = ["main"]

# Densification guard for --method ttsvd (entries, not bytes).
_TTSVD_DENSE_CAP = 150_000_000


def _int_tuple(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    try:
        return tuple(int(tok) for tok in str(text).replace(",", " ").split())
    except ValueError:
        raise FormatError(f"expected comma-separated integers, got {text!r}") from None


def _load_input(path: str, row_dims, col_dims):
    """Read a tensor from ``.coo`` text or a MatrixMarket file.

    Matrix inputs are fused into a tensor and need ``--row-dims`` and
    ``--col-dims``.  Returns ``(tensor, matrix_dims_or_None)``.
    """
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        if row_dims is None or col_dims is None:
            raise FormatError(
                f"{path}: matrix input needs --row-dims and --col-dims"
            )
        rd = _int_tuple(row_dims)
        cd = _int_tuple(col_dims)
        matrix = ingest_matrix_market(path)
        return tensorize_matrix(matrix, rd, cd), (rd, cd)
    return ingest_coo(path), None


def _decompose_once(tensor: SparseTensor, args) -> tuple[dict, float, object]:
    """Run one decomposition; returns (document, eps_used, train)."""
    eps = args.eps if args.eps is not None else 1e-14
    mode = "fixed_rank" if args.mode == "fixed" else args.mode
    ranks = _int_tuple(args.ranks) if args.ranks else None
    if mode == "fixed_rank" and ranks is None:
        raise FormatError("--mode fixed needs --ranks")
    if ranks is not None and len(ranks) == 1:
        ranks = ranks[0]
    if args.method == "fasttt":
        pivot = args.p - 1 if args.p is not None else None
        tt, report = fasttt(tensor, eps=eps, pivot=pivot, mode=mode, fixed_ranks=ranks)
        doc = report_document(
            report, method="fasttt", source=args.input, threads=args.threads
        )
        return doc, eps, tt
    # Reference method: densify and run the classical construction.
    wall0 = time.perf_counter()
    cpu0 = time.process_time()
    dense = tensor.to_dense(cap=_TTSVD_DENSE_CAP)
    tt = tt_svd(dense, eps)
    norm = float(np.linalg.norm(dense.ravel()))
    err = float(np.linalg.norm((dense - tt_to_full(tt, cap=None)).ravel()))
    eps_actual = err / norm if norm else 0.0
    size = dense.size
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "generator": "sparsett",
        "method": "ttsvd",
        "source": args.input,
        "shape": list(tensor.shape),
        "nnz": tensor.nnz,
        "sigma": tensor.nnz / size,
        "eps": eps,
        "mode": "static",
        "r": list(tt.ranks[1:-1]),
        "eps_actual": eps_actual,
        "eps_actual_method": "dense",
        "flops_ttsvd_model": flops_ttsvd(tensor.shape, tt.ranks),
        "wall_time_s": time.perf_counter() - wall0,
        "cpu_time_s": time.process_time() - cpu0,
        "threads": args.threads,
        "warnings": [],
    }
    return doc, eps, tt


def cmd_decompose(args) -> int:
    tensor, matrix_dims = _load_input(args.input, args.row_dims, args.col_dims)
    doc, eps, tt = _decompose_once(tensor, args)
    for note in doc.get("warnings", []):
        print(f"warning: {note}", file=sys.stderr)
    print(f"method       {doc['method']}")
    print(f"shape        {tuple(doc['shape'])}  nnz {doc['nnz']}  sigma {doc['sigma']:.3e}")
    if "p" in doc:
        print(f"pivot p      {doc['p']}   fibers R {doc['R']}")
        print(f"r_tilde      {doc['r_tilde']}")
    print(f"r            {doc['r']}")
    print(f"eps          {doc['eps']:.3e}   eps_actual {doc['eps_actual']:.3e}")
    print(f"cpu_time_s   {doc['cpu_time_s']:.3f}")
    if args.report:
        write_report(doc, args.report)
    if args.save_tt:
        meta = {}
        if matrix_dims:
            meta = {"row_dims": list(matrix_dims[0]), "col_dims": list(matrix_dims[1])}
        save_tt(tt, args.save_tt, **meta)
    if args.mode == "fixed" and args.eps is None:
        return 0  # no error contract was requested
    return 0 if doc["eps_actual"] <= eps + 1e-12 else 1


def _run_case(case: dict) -> dict:
    """One benchmark case; never raises, failures are recorded."""
    name = case.get("name") or Path(case.get("file", "case")).stem
    result: dict = {"name": name, "ok": False}
    try:
        ns = argparse.Namespace(
            input=case["file"],
            method="fasttt",
            eps=case.get("eps"),
            p=case.get("p"),
            mode=case.get("mode", "static"),
            ranks=case.get("ranks"),
            row_dims=case.get("row_dims"),
            col_dims=case.get("col_dims"),
            threads=1,
            report=None,
            save_tt=None,
        )
        tensor, _ = _load_input(ns.input, ns.row_dims, ns.col_dims)
        doc, eps, _ = _decompose_once(tensor, ns)
        result["report"] = doc
        result["fasttt_cpu_s"] = doc["cpu_time_s"]
        if case.get("compare_ttsvd", True):
            cpu0 = time.process_time()
            dense = tensor.to_dense(cap=_TTSVD_DENSE_CAP)
            ref = tt_svd(dense, eps)
            ttsvd_cpu = time.process_time() - cpu0
            result["ttsvd_cpu_s"] = ttsvd_cpu
            result["ttsvd_r"] = list(ref.ranks[1:-1])
            if doc["cpu_time_s"] > 0:
                result["speedup"] = ttsvd_cpu / doc["cpu_time_s"]
            result["flop_ratio"] = (
                flops_ttsvd(tensor.shape, ref.ranks) / doc["flops_fasttt_model"]
                if doc.get("flops_fasttt_model")
                else None
            )
        result["ok"] = True
    except Exception as exc:  # recorded, the run continues
        result["error"] = f"{type(exc).__name__}: {exc}"
    return result


def cmd_bench(args) -> int:
    with open(args.manifest, "r", encoding="ascii") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.manifest}: {exc}") from None
    cases = manifest.get("cases")
    if not isinstance(cases, list) or not cases:
        raise FormatError(f"{args.manifest}: manifest needs a nonempty 'cases' list")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_run_case, cases))
    else:
        results = [_run_case(c) for c in cases]
    header = f"{'case':<20} {'ok':<4} {'cpu_s':>9} {'speedup':>9} {'flops x':>9}"
    print(header)
    print("-" * len(header))
    for res in results:
        if res["ok"]:
            speed = res.get("speedup")
            ratio = res.get("flop_ratio")
            print(
                f"{res['name']:<20} {'yes':<4} {res['fasttt_cpu_s']:>9.3f} "
                f"{speed if speed is not None else float('nan'):>9.2f} "
                f"{ratio if ratio is not None else float('nan'):>9.2f}"
            )
            write_report(res["report"], out_dir / f"{res['name']}.json")
        else:
            print(f"{res['name']:<20} {'no':<4}  {res['error']}")
    summary = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "cases": [
            {k: v for k, v in res.items() if k != "report"} for res in results
        ],
    }
    with open(out_dir / "summary.json", "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return 0 if all(res["ok"] for res in results) else 1


def cmd_gen_fdm(args) -> int:
    grid = _int_tuple(args.grid)
    if len(grid) != 3:
        raise FormatError(f"--grid needs three extents, got {args.grid!r}")
    matrix = gen_fdm(*grid, coeffs=args.coeffs, seed=args.seed)
    scipy.io.mmwrite(args.out, matrix, precision=17)
    print(f"wrote {args.out}: {matrix.shape[0]} x {matrix.shape[1]}, nnz {matrix.nnz}")
    return 0


def cmd_gen_random(args) -> int:
    shape = _int_tuple(args.shape)
    tensor = gen_random_sparse(
        shape, args.density, seed=args.seed, fill_last_mode=args.fill_last_mode
    )
    write_coo(tensor, args.out)
    print(f"wrote {args.out}: shape {tensor.shape}, nnz {tensor.nnz}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsett",
        description="Tensor-train decomposition of sparse tensors and matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="decompose one tensor or matrix")
    dec.add_argument("--in", dest="input", required=True, help=".coo or .mtx input")
    dec.add_argument("--method", choices=("fasttt", "ttsvd"), default="fasttt")
    dec.add_argument("--eps", type=float, default=None, help="relative error budget (default 1e-14)")
    dec.add_argument("--p", type=int, default=None, help="pivot mode, 1-based (default: auto)")
    dec.add_argument("--mode", choices=("static", "dynamic", "fixed"), default="static")
    dec.add_argument("--ranks", default=None, help="interior rank targets for --mode fixed")
    dec.add_argument("--row-dims", default=None, help="row factorization for matrix input")
    dec.add_argument("--col-dims", default=None, help="column factorization for matrix input")
    dec.add_argument("--report", default=None, help="write a JSON report here")
    dec.add_argument("--save-tt", default=None, help="write the train as .npz here")
    dec.add_argument("--threads", type=int, default=1, help="recorded in the report")
    dec.set_defaults(func=cmd_decompose)

    ben = sub.add_parser("bench", help="run a manifest of benchmark cases")
    ben.add_argument("--manifest", required=True, help="JSON manifest with a 'cases' list")
    ben.add_argument("--out", default="bench-out", help="directory for reports")
    ben.add_argument(
        "--threads", type=int, default=1,
        help="independent cases run in this many processes",
    )
    ben.set_defaults(func=cmd_bench)

    gfd = sub.add_parser("gen-fdm", help="generate a finite-difference matrix (.mtx)")
    gfd.add_argument("--grid", required=True, help="n,m,k grid extents")
    gfd.add_argument("--coeffs", choices=("laplacian", "random"), default="laplacian")
    gfd.add_argument("--seed", type=int, default=None)
    gfd.add_argument("--out", required=True)
    gfd.set_defaults(func=cmd_gen_fdm)

    grd = sub.add_parser("gen-random", help="generate a random sparse tensor (.coo)")
    grd.add_argument("--shape", required=True, help="comma-separated extents")
    grd.add_argument("--density", type=float, required=True)
    grd.add_argument("--seed", type=int, default=None)
    grd.add_argument("--fill-last-mode", action="store_true",
                     help="sample whole last-mode columns instead of scattered entries")
    grd.add_argument("--out", required=True)
    grd.set_defaults(func=cmd_gen_random)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractViolationError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
