from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_STRINGS, codes
from verstring.errors import InvalidVersion, RankOutOfRange
from verstring.persistent import IndexConfig, build, prefix_select_build, prefix_tree
from verstring.testkit import GeneratorConfig, gen_version_tree, materialize_all
from verstring.version_tree import parse_version_tree


@pytest.mark.parametrize("backend", ["direct", "memoized"])
def test_golden_access(golden_tree, backend):
    idx = build(golden_tree, IndexConfig(backend=backend))
    assert [idx.string(v) for v in range(8)] == [codes(s) for s in GOLDEN_STRINGS]
    assert idx.access(6, 2) == ord("b") and idx.access(4, 1) == ord("c")
    assert idx.substring(6, 2, 2) == codes("bb")
    assert idx.time_of(5) == 16
    idx.check_lengths()


def test_errors(golden_tree):
    idx = build(golden_tree)
    with pytest.raises(InvalidVersion):
        idx.length(8)
    with pytest.raises(InvalidVersion):
        idx.access(-1, 1)
    with pytest.raises(RankOutOfRange):
        idx.access(0, 1)
    with pytest.raises(RankOutOfRange):
        idx.substring(6, 2, 3)
    with pytest.raises(RankOutOfRange):
        idx.access_many([6], [4])
    with pytest.raises(InvalidVersion):
        idx.access_many([9], [1])
    assert idx.substring(6, 4, 0) == []
    with pytest.raises(ValueError):
        IndexConfig(backend="x")
    with pytest.raises(ValueError):
        IndexConfig(delta=1)


def test_root_and_single_char_trees():
    assert build(parse_version_tree("1\n")).length(0) == 0
    idx = build(parse_version_tree("2\n1 0 insert 0 'z'\n"))
    assert idx.string(1) == [ord("z")] and idx.access_many([1], [1]).tolist() == [ord("z")]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**31), st.sampled_from([0.0, 0.9, 1.0]),
       st.sampled_from([None, 2, 16]), st.sampled_from(["direct", "memoized"]))
def test_access_many_matches_naive(n, seed, bias, delta, backend):
    tree = gen_version_tree(GeneratorConfig(n=n, seed=seed, path_bias=bias, p_replace=0.15))
    idx = build(tree, IndexConfig(delta=delta, backend=backend))
    strings = materialize_all(tree)
    vs = [v for v in range(n) for _ in strings[v]]
    js = [j for v in range(n) for j in range(1, len(strings[v]) + 1)]
    assert idx.access_many(vs, js).tolist() == [c for s in strings for c in s]


def test_prefix_select_small():
    ps = prefix_select_build([3, 1, 2, 5, 6, 4])
    assert ps.prefix_select(1, 1) == 1
    assert ps.prefix_select(3, 1) == 2
    assert ps.prefix_select(3, 3) == 1
    assert ps.prefix_select(6, 4) == 6
    assert ps.prefix_select_many([6, 6], [5, 6]).tolist() == [4, 5]
    with pytest.raises(RankOutOfRange):
        ps.prefix_select(3, 4)
    with pytest.raises(RankOutOfRange):
        ps.prefix_select_many([7], [1])


def test_prefix_tree_is_a_path():
    tree = prefix_tree([30, 10, 20])
    assert list(tree.parent) == [-1, 0, 1, 2]
    assert tree.lengths == (0, 1, 2, 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-10**9, 10**9), min_size=1, max_size=200, unique=True))
def test_prefix_select_matches_sort(values):
    ps = prefix_select_build(values)
    arr = np.array(values)
    for i in range(1, len(values) + 1):
        order = np.argsort(arr[:i]) + 1
        assert ps.prefix_select_many(np.full(i, i), np.arange(1, i + 1)).tolist() == order.tolist()
