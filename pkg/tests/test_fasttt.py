import math

import numpy as np
import pytest

from sparsett import (
    ContractViolationError,
    QuasiPermMatrix,
    SparseTensor,
    TruncationBudget,
    as_quasi_perm,
    build_structured_tt,
    depar_general,
    depar_quasi_perm,
    dynamic_tt_rounding,
    efficient_tt_rounding,
    fasttt,
    fixed_rank_rounding,
    flops_fasttt,
    float_ops,
    parallel_vector_round,
    select_p,
    sparse_inner_error,
    structured_to_tt,
    tt_relative_error,
    tt_svd,
    tt_to_full,
)
from sparsett.fasttt import _lossless_bond_ranks
from conftest import rand_sparse


class TestDeparGeneral:
    def test_planted_parallel_classes(self, rng):
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        w = rng.standard_normal(6)
        m = np.column_stack([u, 2.0 * u, v, np.zeros(6), -3.0 * v, w])
        n, t = depar_general(m)
        assert n.shape == (6, 3)
        assert np.array_equal(n[:, 0], u)
        assert np.array_equal(n[:, 1], v)
        assert np.array_equal(n[:, 2], w)
        assert np.allclose(n @ t, m, atol=1e-12)
        assert np.array_equal(t[:, 3], np.zeros(3))

    def test_zero_matrix(self):
        n, t = depar_general(np.zeros((4, 3)))
        assert n.shape == (4, 0)
        assert t.shape == (0, 3)

    def test_no_parallel_columns(self, rng):
        m = rng.standard_normal((8, 5))
        n, t = depar_general(m)
        assert n.shape == (8, 5)
        assert np.allclose(n @ t, m, atol=1e-12)

    def test_scaling_within_tolerance(self, rng):
        u = rng.standard_normal(50)
        m = np.column_stack([u, u * (1.0 + 1e-14)])
        n, _ = depar_general(m, tol=1e-12)
        assert n.shape[1] == 1

    def test_counts_float_work(self, rng):
        float_ops.reset()
        depar_general(rng.standard_normal((10, 6)))
        assert float_ops.count > 0


class TestDeparQuasiPerm:
    def test_exact_factorization(self, rng):
        q = QuasiPermMatrix(9, 14, rng.integers(0, 9, 14))
        n, t = depar_quasi_perm(q)
        assert isinstance(n, QuasiPermMatrix)
        assert isinstance(t, QuasiPermMatrix)
        assert np.array_equal(n.to_dense() @ t.to_dense(), q.to_dense())

    def test_kept_rows_ascending_and_bounded(self, rng):
        q = QuasiPermMatrix(7, 30, rng.integers(0, 7, 30))
        n, _ = depar_quasi_perm(q)
        assert np.all(np.diff(n.col_to_row) > 0)
        assert n.n_cols <= q.n_rows
        assert n.n_cols == np.unique(q.col_to_row).size

    def test_no_float_work(self, rng):
        q = QuasiPermMatrix(40, 200, rng.integers(0, 40, 200))
        float_ops.reset()
        depar_quasi_perm(q)
        assert float_ops.count == 0.0

    def test_agrees_with_general_route(self, rng):
        for _ in range(10):
            rows = int(rng.integers(2, 25))
            cols = int(rng.integers(1, 60))
            q = QuasiPermMatrix(rows, cols, rng.integers(0, rows, cols))
            nq, tq = depar_quasi_perm(q)
            ng, tg = depar_general(q.to_dense())
            assert nq.n_cols == ng.shape[1]
            assert np.allclose(ng @ tg, q.to_dense(), atol=1e-13)

    def test_rejects_plain_matrix(self):
        with pytest.raises(TypeError):
            depar_quasi_perm(np.eye(3))


def dense_parallel_round(s):
    """Reference rounding that runs the general deparallelisation on
    materialized cores, checking the quasi-permutation property of every
    matrix it hands over."""
    tt = structured_to_tt(s)
    cores = [c.copy() for c in tt.cores]
    d, pv = tt.ndim, s.pivot
    for k in range(pv):
        r0, n, r1 = cores[k].shape
        m = cores[k].reshape(r0 * n, r1)
        assert as_quasi_perm(m) is not None
        n_fac, t_fac = depar_general(m)
        cores[k] = n_fac.reshape(r0, n, n_fac.shape[1])
        cores[k + 1] = np.tensordot(t_fac, cores[k + 1], axes=(1, 0))
    for k in range(d - 1, pv, -1):
        r0, n, r1 = cores[k].shape
        m = cores[k].reshape(r0, n * r1).T
        assert as_quasi_perm(m) is not None
        n_fac, t_fac = depar_general(m)
        cores[k] = np.ascontiguousarray(n_fac.T).reshape(n_fac.shape[1], n, r1)
        cores[k - 1] = np.einsum("abc,jc->abj", cores[k - 1], t_fac)
    from sparsett import TTTensor

    return TTTensor(cores, copy=False)


class TestParallelVectorRound:
    def test_lossless_every_pivot(self, rng):
        shapes = [(4, 5, 6), (3, 3, 3, 3), (2, 6, 3, 4), (8, 9)]
        for shape in shapes:
            t = rand_sparse(rng, shape, 0.15)
            dense = t.to_dense()
            for pivot in range(len(shape)):
                tt = parallel_vector_round(build_structured_tt(t, pivot))
                assert np.array_equal(tt_to_full(tt), dense)

    def test_rank_bounds(self, rng):
        # deparallelisation caps each bond by the fiber count and by the
        # dense extent of the side away from the pivot (it is not rank
        # revealing, so the minimal-TT bound does not apply here)
        t = rand_sparse(rng, (4, 3, 5, 2), 0.2)
        d = t.ndim
        for pivot in range(d):
            s = build_structured_tt(t, pivot)
            tt = parallel_vector_round(s)
            r = s.num_fibers
            for k in range(1, d):
                if k <= pivot:
                    outer = math.prod(t.shape[:k])
                else:
                    outer = math.prod(t.shape[k:])
                assert tt.ranks[k] <= min(r, outer)

    def test_side_cores_orthonormal(self, rng):
        t = rand_sparse(rng, (4, 4, 4), 0.2)
        for pivot in range(3):
            tt = parallel_vector_round(build_structured_tt(t, pivot))
            for k in range(pivot):
                r0, n, r1 = tt.cores[k].shape
                m = tt.cores[k].reshape(r0 * n, r1)
                assert np.array_equal(m.T @ m, np.eye(r1))
            for k in range(pivot + 1, 3):
                r0, n, r1 = tt.cores[k].shape
                m = tt.cores[k].reshape(r0, n * r1)
                assert np.array_equal(m @ m.T, np.eye(r0))

    def test_matches_general_route_ranks(self, rng):
        t = rand_sparse(rng, (4, 3, 4), 0.25)
        for pivot in range(3):
            s = build_structured_tt(t, pivot)
            fast = parallel_vector_round(s)
            ref = dense_parallel_round(s)
            assert fast.ranks == ref.ranks
            assert np.allclose(tt_to_full(ref), t.to_dense(), atol=1e-13)

    def test_empty_tensor(self):
        t = SparseTensor((3, 4, 2), np.zeros((0, 3), dtype=np.int64), np.zeros(0))
        tt = parallel_vector_round(build_structured_tt(t, 1))
        assert np.array_equal(tt_to_full(tt), np.zeros((3, 4, 2)))

    def test_single_entry(self):
        t = SparseTensor((3, 4, 2), np.array([[1, 2, 0]]), np.array([5.0]))
        tt = parallel_vector_round(build_structured_tt(t, 0))
        assert tt.ranks == (1, 1, 1, 1)
        full = tt_to_full(tt)
        assert full[1, 2, 0] == 5.0
        assert np.count_nonzero(full) == 1

    def test_no_float_work(self, rng):
        t = rand_sparse(rng, (5, 5, 5), 0.2)
        s = build_structured_tt(t, 1)
        float_ops.reset()
        parallel_vector_round(s)
        assert float_ops.count == 0.0


class TestTruncationBudget:
    def test_defaults(self):
        b = TruncationBudget()
        assert b.eps == 1e-14
        assert b.mode == "static"

    def test_validation(self):
        with pytest.raises(ValueError):
            TruncationBudget(mode="bogus")
        with pytest.raises(ValueError):
            TruncationBudget(eps=-1.0)
        with pytest.raises(ValueError):
            TruncationBudget(mode="fixed_rank")
        with pytest.raises(ValueError):
            TruncationBudget(delta_left=-0.1)


class TestRoundingModes:
    @pytest.fixture
    def exact_train(self, rng):
        t = rand_sparse(rng, (5, 4, 6, 3), 0.2)
        pivot = 1
        return t, pivot, parallel_vector_round(build_structured_tt(t, pivot))

    def test_static_error_contract(self, exact_train):
        t, pivot, tt = exact_train
        dense = t.to_dense()
        norm = np.linalg.norm(dense)
        for eps in (0.5, 0.1, 0.01, 1e-14):
            out = efficient_tt_rounding(
                tt, TruncationBudget(eps=eps, pivot=pivot, mode="static")
            )
            rel = np.linalg.norm(tt_to_full(out) - dense) / norm
            assert rel <= eps + 1e-12

    def test_dynamic_error_contract(self, exact_train):
        t, pivot, tt = exact_train
        dense = t.to_dense()
        norm = np.linalg.norm(dense)
        for eps in (0.5, 0.1, 0.01, 1e-14):
            out = dynamic_tt_rounding(
                tt, TruncationBudget(eps=eps, pivot=pivot, mode="dynamic")
            )
            rel = np.linalg.norm(tt_to_full(out) - dense) / norm
            assert rel <= eps + 1e-12

    def test_near_lossless_matches_oracle_ranks(self, exact_train):
        t, pivot, tt = exact_train
        out = efficient_tt_rounding(
            tt, TruncationBudget(eps=1e-14, pivot=pivot, mode="static")
        )
        oracle = tt_svd(t.to_dense(), 1e-14)
        assert out.ranks == oracle.ranks

    def test_huge_budget_gives_zero_train(self, exact_train):
        t, pivot, tt = exact_train
        out = efficient_tt_rounding(
            tt, TruncationBudget(eps=1.5, pivot=pivot, mode="static")
        )
        assert np.array_equal(tt_to_full(out), np.zeros(t.shape))

    def test_fixed_rank_targets(self, exact_train):
        t, pivot, tt = exact_train
        lossless = tt.ranks[1:-1]
        out = fixed_rank_rounding(
            tt,
            TruncationBudget(pivot=pivot, mode="fixed_rank", fixed_ranks=lossless),
        )
        assert np.allclose(
            tt_to_full(out), t.to_dense(), atol=1e-12 * np.linalg.norm(t.values)
        )
        out = fixed_rank_rounding(
            tt, TruncationBudget(pivot=pivot, mode="fixed_rank", fixed_ranks=1)
        )
        assert all(r == 1 for r in out.ranks[1:-1])

    def test_fixed_rank_clamps(self, exact_train):
        t, pivot, tt = exact_train
        out = fixed_rank_rounding(
            tt, TruncationBudget(pivot=pivot, mode="fixed_rank", fixed_ranks=999)
        )
        assert all(
            r <= rt for r, rt in zip(out.ranks, tt.ranks)
        )

    def test_fixed_rank_error_above_unfolding_tail(self, exact_train):
        # no rank-r train can beat the best rank-r approximation of any
        # unfolding, so the achieved error must dominate that tail
        t, pivot, tt = exact_train
        dense = t.to_dense()
        out = fixed_rank_rounding(
            tt, TruncationBudget(pivot=pivot, mode="fixed_rank", fixed_ranks=2)
        )
        err = np.linalg.norm(tt_to_full(out) - dense)
        for k in range(1, t.ndim):
            m = dense.reshape(math.prod(t.shape[:k]), -1)
            sigma = np.linalg.svd(m, compute_uv=False)
            r_k = out.ranks[k]
            tail = np.sqrt((sigma[r_k:] ** 2).sum())
            assert err >= tail - 1e-10

    def test_mode_mismatch_rejected(self, exact_train):
        _, pivot, tt = exact_train
        with pytest.raises(ValueError):
            efficient_tt_rounding(tt, TruncationBudget(pivot=pivot, mode="dynamic"))
        with pytest.raises(ValueError):
            dynamic_tt_rounding(tt, TruncationBudget(pivot=pivot, mode="static"))
        with pytest.raises(ValueError):
            fixed_rank_rounding(tt, TruncationBudget(pivot=pivot, mode="static"))

    def test_pivot_mismatch_raises(self, exact_train):
        _, pivot, tt = exact_train
        bad = TruncationBudget(eps=0.1, pivot=pivot + 1, mode="static")
        with pytest.raises(ContractViolationError):
            efficient_tt_rounding(tt, bad)


class TestFastTTDriver:
    def test_near_lossless_and_report(self, rng):
        t = rand_sparse(rng, (5, 6, 4), 0.2)
        tt, rep = fasttt(t)
        dense = t.to_dense()
        rel = np.linalg.norm(tt_to_full(tt) - dense) / np.linalg.norm(dense)
        assert rel <= 1e-11
        assert rep.eps_actual <= 1e-11
        assert rep.eps_actual_method == "tt_difference"
        assert rep.shape == t.shape
        assert rep.nnz == t.nnz
        assert rep.ranks == tt.ranks[1:-1]
        assert len(rep.ranks_lossless) == t.ndim - 1
        assert rep.flops_fasttt_model >= 0.0
        assert rep.flops_ttsvd_model > 0.0

    def test_eps_none_and_zero_mean_lossless_intent(self, rng):
        t = rand_sparse(rng, (4, 4, 4), 0.25)
        for eps in (None, 0.0):
            _, rep = fasttt(t, eps=eps)
            assert rep.eps == 1e-14
            assert rep.eps_actual <= 1e-11

    def test_pivot_invariance(self, rng):
        t = rand_sparse(rng, (4, 3, 2, 5), 0.2)
        dense = t.to_dense()
        norm = np.linalg.norm(dense)
        fulls = []
        for pivot in range(4):
            tt, rep = fasttt(t, pivot=pivot)
            assert rep.pivot == pivot
            fulls.append(tt_to_full(tt))
        for full in fulls:
            assert np.linalg.norm(full - dense) / norm <= 1e-11
        for a in fulls:
            for b in fulls:
                assert np.linalg.norm(a - b) / norm <= 1e-11

    def test_rank_equality_with_classical_oracle(self, rng):
        for shape, density in [((5, 4, 6), 0.15), ((3, 5, 3, 4), 0.1)]:
            t = rand_sparse(rng, shape, density)
            tt, _ = fasttt(t)
            oracle = tt_svd(t.to_dense(), 1e-14)
            assert tt.ranks == oracle.ranks

    def test_moderate_eps_contract(self, rng):
        t = rand_sparse(rng, (6, 5, 4), 0.3)
        dense = t.to_dense()
        norm = np.linalg.norm(dense)
        for mode in ("static", "dynamic"):
            for eps in (0.3, 0.05):
                tt, rep = fasttt(t, eps=eps, mode=mode)
                rel = np.linalg.norm(tt_to_full(tt) - dense) / norm
                assert rel <= eps + 1e-12
                assert rep.eps_actual <= eps + 1e-12
                assert rep.mode == mode

    def test_fixed_mode_alias(self, rng):
        t = rand_sparse(rng, (4, 5, 4), 0.2)
        tt, rep = fasttt(t, eps=None, mode="fixed", fixed_ranks=(2, 2))
        assert rep.mode == "fixed_rank"
        assert all(r <= 2 for r in tt.ranks[1:-1])

    def test_empty_input(self):
        t = SparseTensor((3, 4, 5), np.zeros((0, 3), dtype=np.int64), np.zeros(0))
        tt, rep = fasttt(t)
        assert np.array_equal(tt_to_full(tt), np.zeros((3, 4, 5)))
        assert rep.eps_actual == 0.0
        assert rep.warnings

    def test_rejects_dense_array(self, rng):
        with pytest.raises(TypeError):
            fasttt(rng.standard_normal((3, 3)))


def modeled_cost(shape, pivot0, rt, r, c=1.0):
    d = len(shape)
    p = pivot0 + 1
    n = [None] + list(shape)
    frt = [1] + list(rt) + [1]
    fr = [1] + list(r) + [1]

    def f(m, nn):
        return m * nn * min(m, nn)

    total = f(frt[p - 1] * n[p], frt[p])
    for i in range(p + 1, d):
        total += f(fr[i - 1] * n[i], frt[i])
    for i in range(2, p + 1):
        total += f(frt[i - 1], n[i] * fr[i])
    return c * total


def brute_select(a: SparseTensor, target=None) -> int:
    d = a.ndim
    if d == 1:
        return 0
    size = math.prod(a.shape)
    best, best_p = math.inf, 0
    for pivot in range(d):
        fixed = {tuple(np.delete(c, pivot)) for c in a.coords}
        fibers = len(fixed)
        rt, r = [], []
        for k in range(1, d):
            left = math.prod(a.shape[:k])
            right = size // left
            bound = min(fibers, left if k <= pivot else right)
            rt.append(bound)
            feas = min(bound, left, right)
            if target is not None:
                feas = min(feas, target[k - 1])
            r.append(feas)
        cost = modeled_cost(a.shape, pivot, rt, r)
        if cost < best:
            best, best_p = cost, pivot
    return best_p


class TestSelectP:
    def test_single_mode(self):
        t = SparseTensor((5,), np.array([[2]]), np.array([1.0]))
        assert select_p(t) == 0

    def test_matches_independent_model(self, rng):
        shapes = [(4, 9, 3), (2, 12, 2, 6), (7, 3, 5), (3, 4, 5, 2, 3)]
        for i, shape in enumerate(shapes):
            t = rand_sparse(np.random.default_rng(100 + i), shape, 0.08)
            assert select_p(t) == brute_select(t)

    def test_target_ranks_respected(self, rng):
        t = rand_sparse(rng, (4, 8, 3, 5), 0.1)
        assert select_p(t, target_ranks=(2, 2, 2)) == brute_select(t, (2, 2, 2))

    def test_tie_goes_to_smaller_index(self):
        coords = np.array(
            [[i, j, k] for i in range(3) for j in range(3) for k in range(3)]
        )
        t = SparseTensor((3, 3, 3), coords, np.arange(1.0, 28.0))
        assert select_p(t) == 0

    def test_precise_uses_measured_ranks(self, rng):
        t = rand_sparse(rng, (5, 4, 6), 0.15)
        p = select_p(t, precise=True)
        costs = []
        for pivot in range(3):
            s = build_structured_tt(t, pivot)
            rt = _lossless_bond_ranks(s)
            r = [
                min(
                    rt[k - 1],
                    math.prod(t.shape[:k]),
                    math.prod(t.shape[k:]),
                )
                for k in range(1, 3)
            ]
            costs.append(modeled_cost(t.shape, pivot, rt, r))
        assert p == int(np.argmin(costs))


class TestFlopsModel:
    def test_two_mode_hand_count(self):
        # single SVD of the (rt0 * n1) x rt1 spine with rt0 = 1
        got = flops_fasttt((6, 8), pivot=0, ranks_lossless=(5,), ranks_final=(2,))
        assert got == 6 * 5 * 5

    def test_last_pivot_hand_count(self):
        # pivot at the last of two modes: spine SVD plus one left-side step
        got = flops_fasttt((6, 8), pivot=1, ranks_lossless=(5,), ranks_final=(2,))
        want = (5 * 8) * 1 * 1 + 5 * (8 * 1) * 5
        assert got == want

    def test_single_mode_is_free(self):
        assert flops_fasttt((9,), 0, (), ()) == 0.0

    def test_c_svd_scales(self):
        a = flops_fasttt((4, 5, 6), 1, (3, 3), (2, 2))
        b = flops_fasttt((4, 5, 6), 1, (3, 3), (2, 2), c_svd=3.0)
        assert b == 3.0 * a


class TestErrorMeasures:
    def test_tt_relative_error_matches_dense(self, rng):
        t = rand_sparse(rng, (5, 5, 5), 0.2)
        tt, _ = fasttt(t)
        rounded, _ = fasttt(t, eps=0.3)
        got = tt_relative_error(tt, rounded)
        dense = t.to_dense()
        want = np.linalg.norm(tt_to_full(rounded) - dense) / np.linalg.norm(dense)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-12)

    def test_inner_identity_agrees(self, rng):
        t = rand_sparse(rng, (6, 5, 4), 0.3)
        rounded, _ = fasttt(t, eps=0.2)
        dense = t.to_dense()
        want = np.linalg.norm(tt_to_full(rounded) - dense) / np.linalg.norm(dense)
        got = sparse_inner_error(t, rounded)
        assert got == pytest.approx(want, abs=1e-6)

    def test_exact_train_measures_zero(self, rng):
        t = rand_sparse(rng, (4, 4, 4), 0.3)
        tt = parallel_vector_round(build_structured_tt(t, 1))
        exact, _ = fasttt(t)
        assert tt_relative_error(tt, exact) <= 1e-12
