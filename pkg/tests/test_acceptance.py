"""End-to-end acceptance gate.

Each test prints one pass/fail line for its numbered criterion; run with
``pytest -rA tests/test_acceptance.py`` to see all of them.
"""

import math
import time

import numpy as np
import pytest
import scipy.sparse

from sparsett import (
    QuasiPermMatrix,
    depar_general,
    depar_quasi_perm,
    fasttt,
    flops_fasttt,
    flops_ttsvd,
    float_ops,
    gen_fdm,
    gen_random_sparse,
    select_p,
    sparse_inner_error,
    tensorize_matrix,
    tt_svd,
    tt_to_full,
)
from sparsett.tensor import SparseTensor, delinearize


def _verdict(num: int, ok: bool, detail: str) -> None:
    print(f"acceptance criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def build_suite(seed=20260816, count=200, cap=50_000):
    """200 randomized sparse tensors: d in 3..6, extents in 2..10,
    density cycling over {0.005, 0.05, 0.3}, dense size capped so the
    classical oracle stays cheap."""
    rng = np.random.default_rng(seed)
    sigmas = (0.005, 0.05, 0.3)
    out = []
    for i in range(count):
        while True:
            d = int(rng.integers(3, 7))
            dims = tuple(int(x) for x in rng.integers(2, 11, d))
            if math.prod(dims) <= cap:
                break
        size = math.prod(dims)
        nnz = int(sigmas[i % 3] * size)
        lin = np.sort(rng.permutation(size)[:nnz].astype(np.int64))
        vals = rng.uniform(0.0, 1.0, nnz)
        vals[vals == 0.0] = 0.5
        out.append(SparseTensor(dims, delinearize(dims, lin), vals))
    return out


def check_lossless_rank_bound(t: SparseTensor, report) -> int:
    """Criterion 4 bound on one run; returns the number of bonds checked."""
    d = t.ndim
    left = 1
    for k in range(1, d):
        left *= t.shape[k - 1]
        outer = left if k <= report.pivot else t.size // left
        assert report.ranks_lossless[k - 1] <= min(report.num_fibers, outer), (
            t.shape,
            report.pivot,
            report.ranks_lossless,
        )
    return d - 1


@pytest.fixture(scope="module")
def suite():
    return build_suite()


@pytest.fixture(scope="module")
def suite_runs(suite):
    """Near-lossless run of every suite tensor, shared by criteria 1-4."""
    return [(t, *fasttt(t, eps=1e-14)) for t in suite]


@pytest.fixture(scope="module")
def fdm_runs():
    """The 20x20x20 stencil matrices, tensorized and decomposed, plus the
    classical construction timed on the random-coefficient case."""
    dims = (20, 20, 20)
    lap = tensorize_matrix(gen_fdm(20, 20, 20), dims, dims)
    lap_tt, lap_rep = fasttt(lap, eps=1e-14, pivot=1)
    rnd = tensorize_matrix(
        gen_fdm(20, 20, 20, coeffs="random", seed=1234), dims, dims
    )
    rnd_tt, rnd_rep = fasttt(rnd, eps=1e-14, pivot=1)
    dense = rnd.to_dense(cap=100_000_000)
    cpu0 = time.process_time()
    ref = tt_svd(dense, 1e-14)
    ttsvd_cpu = time.process_time() - cpu0
    del dense
    return {
        "lap_rep": lap_rep,
        "rnd_rep": rnd_rep,
        "ttsvd_ranks": ref.ranks,
        "ttsvd_cpu": ttsvd_cpu,
    }


def test_criterion_01_lossless_conversion(suite_runs):
    worst_stable = 0.0
    worst_inner = 0.0
    for t, tt, rep in suite_runs:
        worst_stable = max(worst_stable, rep.eps_actual)
        worst_inner = max(worst_inner, sparse_inner_error(t, tt))
    # The inner-product identity is exact algebra but is evaluated in
    # float64, where its cancellation noise floor sits near 1e-8; it is
    # checked against that floor while the stable train-difference
    # measure certifies the 1e-11 bound itself.
    ok = worst_stable <= 1e-11 and worst_inner <= 1e-6
    _verdict(
        1,
        ok,
        f"200 tensors at eps=1e-14: worst relative error {worst_stable:.2e} "
        f"(bound 1e-11); inner-identity worst {worst_inner:.2e} "
        f"(float64 noise floor 1e-6)",
    )


def test_criterion_02_oracle_rank_equality(suite_runs):
    mismatched = []
    flagged = []
    for t, tt, rep in suite_runs:
        oracle = tt_svd(t.to_dense(cap=None), 1e-14)
        if tt.ranks == oracle.ranks:
            continue
        # ranks differ: flag the fixture if some unfolding singular
        # value sits in the band around the truncation thresholds where
        # the two tie-break rules may legitimately disagree
        dense = t.to_dense(cap=None)
        norm = np.linalg.norm(dense)
        band_lo, band_hi = 1e-16 * norm, 1e-13 * norm
        degenerate = False
        for k in range(1, t.ndim):
            if tt.ranks[k] == oracle.ranks[k]:
                continue
            sigma = np.linalg.svd(
                dense.reshape(math.prod(t.shape[:k]), -1), compute_uv=False
            )
            if np.any((sigma >= band_lo) & (sigma <= band_hi)):
                degenerate = True
        if degenerate:
            flagged.append((t.shape, tt.ranks, oracle.ranks))
        else:
            mismatched.append((t.shape, tt.ranks, oracle.ranks))
    ok = not mismatched
    _verdict(
        2,
        ok,
        f"interior ranks equal the classical construction on "
        f"{len(suite_runs) - len(flagged) - len(mismatched)}/200 tensors; "
        f"{len(flagged)} degenerate fixture(s) flagged; "
        f"{len(mismatched)} hard mismatch(es): {mismatched[:3]}",
    )


def test_criterion_03_error_bound(suite):
    violations = []
    runs = 0
    for t in suite:
        for eps in (0.5, 0.1, 0.01):
            for mode in ("static", "dynamic"):
                _, rep = fasttt(t, eps=eps, mode=mode)
                runs += 1
                if rep.eps_actual > eps + 1e-12:
                    violations.append((t.shape, eps, mode, rep.eps_actual))
                check_lossless_rank_bound(t, rep)
    ok = not violations
    _verdict(
        3,
        ok,
        f"{runs} rounded runs (eps in {{0.5, 0.1, 0.01}} x static/dynamic): "
        f"{len(violations)} violation(s) of eps_actual <= eps"
        + (f": {violations[:3]}" if violations else ""),
    )


def test_criterion_04_rank_upper_bound(suite_runs):
    bonds = 0
    for t, _, rep in suite_runs:
        bonds += check_lossless_rank_bound(t, rep)
    rng = np.random.default_rng(4)
    for _ in range(100):
        rows = int(rng.integers(1, 101))
        cols = int(rng.integers(1, 2001))
        q = QuasiPermMatrix(rows, cols, rng.integers(0, rows, cols))
        n, _ = depar_quasi_perm(q)
        assert n.n_cols <= rows
    _verdict(
        4,
        True,
        f"r_tilde_k <= min(R, prod n) held on {bonds} bonds across the "
        f"suite; beta <= n_rows held on 100 quasi-permutation inputs",
    )


def test_criterion_05_fdm_laplacian(fdm_runs):
    rep = fdm_runs["lap_rep"]
    ok = rep.ranks == (2, 2) and rep.eps_actual <= 1e-12
    _verdict(
        5,
        ok,
        f"20^3 Laplacian tensorized 6-way: final ranks {rep.ranks} "
        f"(required (2, 2)), eps_actual {rep.eps_actual:.2e} (bound 1e-12); "
        f"informational R={rep.num_fibers} (reference 1920), "
        f"r_tilde={rep.ranks_lossless} (reference (58, 58))",
    )


def test_criterion_06_fdm_random_coefficients(fdm_runs):
    rep = fdm_runs["rnd_rep"]
    ok = rep.ranks == (58, 58) and rep.eps_actual <= 5e-14
    _verdict(
        6,
        ok,
        f"20^3 random-coefficient stencil: final ranks {rep.ranks} "
        f"(required (58, 58)), eps_actual {rep.eps_actual:.2e} (bound 5e-14)",
    )


def test_criterion_07_flop_model():
    shape = (10, 20, 20, 10, 15, 20, 3)
    size = math.prod(shape)
    f_tts = flops_ttsvd(shape, (10,) * 6)

    def upper_bounds(pivot0, fibers):
        d = len(shape)
        left = 1
        out = []
        for k in range(1, d):
            left *= shape[k - 1]
            out.append(
                min(fibers, left) if k <= pivot0 else min(fibers, size // left)
            )
        return tuple(out)

    cases = []
    for sigma, reference in ((0.001, 8e8), (0.01, 5.7e9)):
        fibers = int(sigma * size) // 3
        rt = upper_bounds(6, fibers)
        r = tuple(min(10, x) for x in rt)
        cases.append((sigma, flops_fasttt(shape, 6, rt, r), reference))

    checks = [(f_tts, 8e9)] + [(got, ref) for _, got, ref in cases]
    devs = [abs(got - ref) / ref for got, ref in checks]
    ok = all(dev <= 0.05 for dev in devs)
    _verdict(
        7,
        ok,
        f"worked example: f_ttsvd={f_tts:.4g} (vs 8e9, dev {devs[0]:.2%}), "
        f"f_fasttt(sigma=0.001)={cases[0][1]:.4g} (vs 8e8, dev {devs[1]:.2%}), "
        f"f_fasttt(sigma=0.01)={cases[1][1]:.4g} (vs 5.7e9, dev {devs[2]:.2%}); "
        f"ratios {f_tts / cases[0][1]:.2f} (~10) and {f_tts / cases[1][1]:.2f} (~1.4)",
    )


def test_criterion_08_pivot_selection():
    shape = (10, 20, 20, 10, 15, 20, 3)
    t = gen_random_sparse(shape, 0.001, seed=42, fill_last_mode=True)
    chosen = select_p(t, target_ranks=100)
    ok = chosen + 1 == 7
    _verdict(
        8,
        ok,
        f"image-shape fixture (nnz={t.nnz}, whole-pixel groups, target rank "
        f"100): select_p chose mode {chosen + 1} (1-based; required 7)",
    )


def test_criterion_09_speedup_soft(fdm_runs):
    rep = fdm_runs["rnd_rep"]
    speedup = fdm_runs["ttsvd_cpu"] / rep.cpu_time_s
    line = (
        f"FastTT {rep.cpu_time_s:.2f}s CPU vs classical {fdm_runs['ttsvd_cpu']:.2f}s "
        f"on the 20^3 random-coefficient case: {speedup:.1f}x (floor 2x, soft)"
    )
    if speedup < 2.0:
        print(
            f"acceptance criterion 9: DIAGNOSTIC - {line}; environment-dependent "
            f"soft criterion, not failing the gate"
        )
    else:
        _verdict(9, True, line)


def test_criterion_10_depar_equivalence():
    rng = np.random.default_rng(10)
    quasi_flops = 0.0
    for _ in range(100):
        rows = int(rng.integers(1, 101))
        cols = int(rng.integers(1, 2001))
        q = QuasiPermMatrix(rows, cols, rng.integers(0, rows, cols))
        float_ops.reset()
        nq, tq = depar_quasi_perm(q)
        quasi_flops += float_ops.count
        ng, tg = depar_general(q.to_dense())
        assert nq.n_cols == ng.shape[1]
        assert np.array_equal(nq.to_dense() @ tq.to_dense(), q.to_dense())
        assert np.array_equal(ng @ tg, q.to_dense())
    _verdict(
        10,
        quasi_flops == 0.0,
        f"100 quasi-permutation matrices up to 100x2000: identical column "
        f"counts, exact N.T=M on both routes, {quasi_flops:.0f} float ops "
        f"in the index-only route",
    )


def test_criterion_11_dynamic_vs_static():
    # Kronecker product of two seeded sparse symmetric factors: one bond
    # of the fused tensor is exactly compressible, so the two budget
    # strategies spend the allowance differently (the published pattern)
    def sym_factor(seed):
        m = scipy.sparse.random(36, 36, density=0.15, random_state=seed, format="coo")
        m.data = m.data * 2.0 - 1.0
        return scipy.sparse.coo_matrix((m + m.T) * 0.5)

    a = scipy.sparse.coo_matrix(scipy.sparse.kron(sym_factor(7), sym_factor(107)))
    assert (abs(a - a.T) > 0).nnz == 0
    dims = (6, 6, 6, 6)
    t = tensorize_matrix(a, dims, dims)
    results = {}
    for mode in ("static", "dynamic"):
        tt, rep = fasttt(t, eps=0.5, pivot=1, mode=mode)
        results[mode] = (tt.num_params, rep.ranks, rep.eps_actual)
    (p_s, r_s, e_s), (p_d, r_d, e_d) = results["static"], results["dynamic"]
    ok = p_s != p_d and e_s <= 0.5 and e_d <= 0.5
    _verdict(
        11,
        ok,
        f"1296^2 symmetric fixture at eps=0.5: static {p_s} parameters "
        f"(ranks {r_s}, eps_actual {e_s:.3f}) vs dynamic {p_d} parameters "
        f"(ranks {r_d}, eps_actual {e_d:.3f})",
    )
