from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verstring.errors import InvariantViolation, RankOutOfRange
from verstring.slab import (
    CellCode,
    RankSpaceSegments,
    build_slab_index,
    cell_access,
    cell_predecessor,
    default_delta,
    sweep_grid,
    verify_grid_properties,
)
from verstring.testkit import inject_double_update, naive_slab_select, naive_slab_sum, random_rank_space


def _all_selects(idx, rs, P):
    for i in range(1, rs.ncols + 1):
        for j in range(1, int(P[i - 1, -1]) + 1):
            yield i, j


@pytest.mark.parametrize("delta", [2, 3, 4, 8, 16])
@pytest.mark.parametrize("seed", range(4))
def test_grid_and_selects_match_brute_force(delta, seed):
    rng = np.random.default_rng([seed, delta])
    rs = random_rank_space(rng, int(rng.integers(1, 300)), delta)
    P = sweep_grid(rs)
    direct = build_slab_index(rs, backend="direct")
    memo = build_slab_index(rs, backend="memoized")
    assert verify_grid_properties(direct, rs).ok
    assert np.array_equal(direct.grid(), P)
    assert np.array_equal(memo.grid(), P)
    cols, ranks = zip(*_all_selects(direct, rs, P)) if P[:, -1].any() else ((), ())
    want = [naive_slab_select(rs, i, j) for i, j in zip(cols, ranks)]
    assert direct.select_many(cols, ranks).tolist() == want
    assert memo.select_many(cols, ranks).tolist() == want
    for i in rng.integers(1, rs.ncols + 1, 30).tolist():
        for j in range(rs.d + 1):
            assert direct.slab_sum(i, j) == naive_slab_sum(rs, i, j) == memo.slab_sum(i, j)


def test_answer_group_relative_to_predecessor():
    """The answer sits in the predecessor's group or up to two above, never below."""
    offsets = set()
    for seed in range(30):
        rng = np.random.default_rng(seed)
        rs = random_rank_space(rng, int(rng.integers(50, 400)), int(rng.choice([4, 8, 16])))
        idx = build_slab_index(rs)
        P = sweep_grid(rs)
        for i, j in _all_selects(idx, rs, P):
            _, pred, grp = idx.slab_select_detail(i, j)
            offsets.add(grp - max(pred, 0))
    assert offsets <= {0, 1, 2}
    assert 2 in offsets


def test_row_groups_partition_rows():
    rng = np.random.default_rng(7)
    rs = random_rank_space(rng, 500, 16)
    idx = build_slab_index(rs)
    P = sweep_grid(rs)
    for blk in range(-(-rs.ncols // idx.b)):
        groups = idx.row_groups(blk)
        assert groups[0][0] == 1 and groups[-1][1] == idx.d
        assert all(a[1] + 1 == b[0] for a, b in zip(groups, groups[1:]))
        first = blk * idx.b
        for lo, _, rep in groups:
            assert rep == P[first, lo - 1]


def test_cell_code_reproduces_grid():
    rng = np.random.default_rng(11)
    rs = random_rank_space(rng, 300, 8)
    idx = build_slab_index(rs, backend="memoized")
    P = sweep_grid(rs)
    d = idx.d
    seen = {}
    for i in rng.integers(1, rs.ncols + 1, 80).tolist():
        for j in range(1, d + 1):
            code = idx.cell_code(i, j)
            lo, hi = code.rows
            cs = (i - 1) // d * d + 1
            rep = next(r for a, _, r in idx.row_groups(idx.block_of(i)) if a == lo)
            assert rep + cell_access(code, i - cs + 1, j - lo + 1) == P[i - 1, j - 1]
            pid = idx.cell_pattern_id(i, j)
            # equal update patterns share one memo table
            assert seen.setdefault(code.pattern(), pid) == pid
            assert code.pack() >= 0


def test_cell_helpers():
    code = CellCode(leftcol=(0, 1, 1), updates=(2, 0, -1))
    assert code.height == 3 and code.width == 4
    assert [cell_access(code, 2, r) for r in (1, 2, 3)] == [0, 2, 2]
    assert [cell_access(code, 4, r) for r in (1, 2, 3)] == [-1, 1, 1]
    assert cell_predecessor(code, 2, 2) == 2
    with pytest.raises(IndexError):
        cell_access(code, 5, 1)


def test_fault_injection_breaks_adjacency():
    rng = np.random.default_rng(5)
    bad = inject_double_update(random_rank_space(rng, 100, 4), rng)
    with pytest.raises(InvariantViolation):
        bad.check()
    assert np.abs(np.diff(sweep_grid(bad), axis=0)).max() >= 2


@pytest.mark.parametrize(
    "pairs",
    [[(2, 1)], [(1, 3), (3, 5)], [(1, 9)], [(1, 3), (4, 6)]],
)
def test_invalid_rank_space(pairs):
    with pytest.raises(InvariantViolation):
        RankSpaceSegments.from_pairs(pairs, 2).check()


def test_errors_and_edges():
    rs = RankSpaceSegments.from_pairs([(1, 3)], 2)
    idx = build_slab_index(rs)
    assert idx.crossing(2) == 1 and idx.crossing(4) == 0
    assert idx.slab_select(2, 1) == 1
    with pytest.raises(RankOutOfRange):
        idx.slab_select(4, 1)
    with pytest.raises(IndexError):
        idx.slab_sum(5, 1)
    empty = build_slab_index(RankSpaceSegments.from_pairs([], 2))
    assert empty.grid().shape[0] == 0
    with pytest.raises(ValueError):
        build_slab_index(rs, backend="bogus")


def test_default_delta_grows_slowly():
    assert default_delta(2) == 2
    assert default_delta(1 << 16) == 4
    assert default_delta(1 << 20) <= 5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 120), st.sampled_from([2, 4, 8, 16]), st.integers(0, 2**32 - 1))
def test_select_property(m, delta, seed):
    rng = np.random.default_rng(seed)
    rs = random_rank_space(rng, m, delta)
    direct = build_slab_index(rs)
    memo = build_slab_index(rs, backend="memoized")
    P = sweep_grid(rs)
    for i in rng.integers(1, rs.ncols + 1, 20).tolist():
        for j in range(1, int(P[i - 1, -1]) + 1):
            want = naive_slab_select(rs, i, j)
            assert direct.slab_select(i, j) == want == memo.slab_select(i, j)
