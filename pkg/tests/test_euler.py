from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_STRINGS, codes
from verstring.errors import ValidationError
from verstring.euler import MarkedSequence, SegmentSet, dump_segments, reduce, unmarked_intervals
from verstring.testkit import GeneratorConfig, gen_version_tree, materialize_all, naive_crossing
from verstring.version_tree import normalize_replaces

GOLDEN_INTERVALS = {
    1: [(1, 2), (6, 9), (11, 13)],
    2: [(2, 6)],
    4: [(4, 4)],
    5: [(8, 12)],
    6: [(9, 11)],
}

GOLDEN_SEGMENTS = """1 4 1 97
11 18 1 97
21 26 1 97
15 24 2 98
17 22 3 98
3 12 4 99
7 8 5 99
"""


def test_golden_unmarked_intervals(golden_tree):
    for e, want in GOLDEN_INTERVALS.items():
        assert unmarked_intervals(golden_tree, e) == want


def test_golden_segments(golden_tree):
    segs, start = reduce(golden_tree)
    assert dump_segments(segs) == GOLDEN_SEGMENTS
    assert len(segs) <= 7
    assert start.tolist() == [0, 1, 2, 3, 4, 8, 9, 10]
    for v, s in enumerate(GOLDEN_STRINGS):
        assert segs.label[naive_crossing(segs, 2 * int(start[v]))].tolist() == codes(s)


@pytest.mark.parametrize("e", [3, 7])
def test_intervals_need_insert_edge(golden_tree, e):
    with pytest.raises(ValidationError):
        unmarked_intervals(golden_tree, e)


def test_reduce_rejects_replaces():
    tree = gen_version_tree(GeneratorConfig(n=30, seed=2, p_replace=0.9))
    if tree.has_replaces():
        with pytest.raises(ValidationError):
            reduce(tree)


def test_on_step_sees_version_strings(golden_tree):
    segs, start = reduce(golden_tree)
    at_time = {}
    reduce(golden_tree, on_step=lambda t, seq: at_time.setdefault(t, seq.unmarked_chars()))
    assert sorted(at_time) == list(range(2 * golden_tree.n - 1))
    for v, s in enumerate(GOLDEN_STRINGS):
        assert at_time[int(start[v])] == codes(s)
    assert at_time[2 * golden_tree.n - 2] == []


def test_marked_sequence_ops():
    seq = MarkedSequence(seed=3)
    a = seq.insert_after(0, 1)
    b = seq.insert_after(1, 2)
    c = seq.insert_after(0, 3)
    assert seq.unmarked_chars() == [3, 1, 2]
    seq.mark(a)
    assert seq.unmarked_chars() == [3, 2] and len(seq) == 3
    assert seq.find_unmarked(2) == b
    seq.unmark(a)
    assert seq.find_unmarked(1) == c
    with pytest.raises(IndexError):
        seq.find_unmarked(4)


def test_segment_set_sorts_rows():
    s = SegmentSet.from_rows([(5, 6, 2, 1), (1, 2, 2, 2), (3, 4, 1, 3)])
    assert s.rows() == [(3, 4, 1, 3), (1, 2, 2, 2), (5, 6, 2, 1)]
    assert s.crossing(2).tolist() == [1]


def _check_tree(tree):
    flat, remap = normalize_replaces(tree)
    segs, start = reduce(flat)
    assert len(segs) <= max(flat.n - 1, 0)
    assert start[0] == 0 and len(set(start.tolist())) == flat.n
    # start times increase along every root path
    par = np.asarray(flat.parent[1:], dtype=np.int64)
    assert np.all(start[1:] > start[par])
    assert np.all(segs.x1 % 2 == 1) and np.all(segs.x2 % 2 == 0)
    assert np.all(segs.x1 < segs.x2)
    # every odd/even endpoint lies inside the tour
    assert np.all(segs.x1 >= 1) and np.all(segs.x2 <= 2 * (2 * flat.n - 2))
    strings = materialize_all(tree)
    for v in range(tree.n):
        got = segs.label[naive_crossing(segs, 2 * int(start[remap[v]]))].tolist()
        assert got == strings[v]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 120), st.integers(0, 2**31), st.sampled_from([0.0, 0.5, 1.0]),
       st.sampled_from([0.0, 0.2]))
def test_reduction_spells_every_version(n, seed, bias, p_replace):
    _check_tree(gen_version_tree(GeneratorConfig(n=n, seed=seed, path_bias=bias, p_replace=p_replace)))


def test_no_two_segments_overlap_on_a_row():
    for seed in range(10):
        segs, _ = reduce(normalize_replaces(gen_version_tree(GeneratorConfig(n=200, seed=seed)))[0])
        for y in np.unique(segs.y):
            k = np.flatnonzero(segs.y == y)
            assert np.all(segs.x1[k][1:] > segs.x2[k][:-1])
