"""sparsett: tensor-train decomposition of large sparse tensors and
matrices directly from their nonzeros."""

from .errors import ContractViolationError, FormatError
from .fasttt import (
    DecompositionReport,
    TruncationBudget,
    build_structured_tt,
    depar_general,
    depar_quasi_perm,
    dynamic_tt_rounding,
    efficient_tt_rounding,
    fasttt,
    fixed_rank_rounding,
    float_ops,
    flops_fasttt,
    parallel_vector_round,
    select_p,
    sparse_inner_error,
    tt_relative_error,
)
from .formats import (
    ingest_coo,
    ingest_matrix_market,
    load_tt,
    report_document,
    save_tt,
    write_coo,
    write_report,
)
from .generators import gen_fdm, gen_random_sparse
from .linalg import QRResult, SVDResult, qr_economic, svd_truncate_delta, svd_truncate_rank
from .tensor import (
    DENSE_CAP,
    FiberSet,
    SparseTensor,
    contract,
    extract_nonzero_fibers,
    frobenius_norm,
    reshape,
    tensor_times_matrix,
    unfold,
    vectorize,
)
from .ttformat import (
    QuasiPermMatrix,
    StructuredTT,
    TTMatrix,
    TTTensor,
    as_quasi_perm,
    matrix_from_tensorized,
    mpo_matvec,
    mpo_to_dense,
    structured_to_tt,
    tensorize_matrix,
    tt_add,
    tt_entries,
    tt_entry,
    tt_norm,
    tt_rank1,
    tt_right_orthogonalize,
    tt_scale,
    tt_split_mpo,
    tt_to_full,
    tt_zero,
)
from .ttsvd import flops_ttsvd, full_ranks, tt_rounding, tt_svd

__version__ = "0.1.0"

__all__ = [
    "ContractViolationError",
    "FormatError",
    "DecompositionReport",
    "TruncationBudget",
    "build_structured_tt",
    "depar_general",
    "depar_quasi_perm",
    "dynamic_tt_rounding",
    "efficient_tt_rounding",
    "fasttt",
    "fixed_rank_rounding",
    "float_ops",
    "flops_fasttt",
    "parallel_vector_round",
    "select_p",
    "sparse_inner_error",
    "tt_relative_error",
    "ingest_coo",
    "ingest_matrix_market",
    "load_tt",
    "report_document",
    "save_tt",
    "write_coo",
    "write_report",
    "gen_fdm",
    "gen_random_sparse",
    "QRResult",
    "SVDResult",
    "qr_economic",
    "svd_truncate_delta",
    "svd_truncate_rank",
    "DENSE_CAP",
    "FiberSet",
    "SparseTensor",
    "contract",
    "extract_nonzero_fibers",
    "frobenius_norm",
    "reshape",
    "tensor_times_matrix",
    "unfold",
    "vectorize",
    "QuasiPermMatrix",
    "StructuredTT",
    "TTMatrix",
    "TTTensor",
    "as_quasi_perm",
    "matrix_from_tensorized",
    "mpo_matvec",
    "mpo_to_dense",
    "structured_to_tt",
    "tensorize_matrix",
    "tt_add",
    "tt_entries",
    "tt_entry",
    "tt_norm",
    "tt_rank1",
    "tt_right_orthogonalize",
    "tt_scale",
    "tt_split_mpo",
    "tt_to_full",
    "tt_zero",
    "flops_ttsvd",
    "full_ranks",
    "tt_rounding",
    "tt_svd",
    "__version__",
]
