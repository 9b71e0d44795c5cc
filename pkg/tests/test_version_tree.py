from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_STRINGS, GOLDEN_TEXT, codes
from verstring.errors import InvalidVersion, SyntaxErrorAt, ValidationError
from verstring.testkit import GeneratorConfig, gen_version_tree, materialize_all
from verstring.version_tree import (
    Delete,
    Insert,
    Replace,
    VersionTree,
    apply_op,
    materialize_naive,
    normalize_replaces,
    parse_version_tree,
    serialize_version_tree,
    validate,
)


def test_golden_strings(golden_tree):
    assert [materialize_naive(golden_tree, v) for v in range(8)] == [codes(s) for s in GOLDEN_STRINGS]
    assert golden_tree.lengths == (0, 1, 2, 1, 2, 2, 3, 2)


def test_text_round_trip_is_fixed_point(golden_tree):
    text = serialize_version_tree(golden_tree)
    assert text == GOLDEN_TEXT
    assert parse_version_tree(text) == golden_tree


def test_root_only_tree():
    t = parse_version_tree("1\n")
    assert t.n == 1 and materialize_naive(t, 0) == []


def test_codepoint_and_quoted_chars_agree():
    a = parse_version_tree("2\n1 0 insert 0 'x'\n")
    b = parse_version_tree("2\n1 0 insert 0 120\n")
    assert a == b


@pytest.mark.parametrize(
    "text",
    [
        "",
        "0\n",
        "2\n",
        "2\n1 0 insert 0\n",
        "2\n1 0 frobnicate 0 'a'\n",
        "2\n2 0 insert 0 'a'\n",
        "2\n1 1 insert 0 'a'\n",
        "2\n1 0 delete 1 'a'\n",
        "3\n1 0 insert 0 'a'\n",
    ],
)
def test_syntax_errors(text):
    with pytest.raises(SyntaxErrorAt):
        parse_version_tree(text)


@pytest.mark.parametrize(
    "ops",
    [
        [Delete(1)],
        [Insert(1, 97)],
        [Replace(1, 97)],
        [Insert(0, 97), Delete(2)],
    ],
)
def test_validation_rejects_out_of_range_edits(ops):
    parent = tuple([-1] + list(range(len(ops))))
    with pytest.raises(ValidationError):
        validate(VersionTree(parent, tuple([None] + ops)))


def test_check_id():
    t = parse_version_tree(GOLDEN_TEXT)
    with pytest.raises(InvalidVersion):
        t.check_id(8)


def test_apply_op_in_place():
    s = [1, 2, 3]
    apply_op(s, Insert(0, 9))
    apply_op(s, Delete(2))
    apply_op(s, Replace(3, 7))
    assert s == [9, 2, 7]


def test_normalize_replaces_preserves_strings():
    for seed in range(20):
        tree = gen_version_tree(GeneratorConfig(n=60, seed=seed, p_replace=0.4))
        flat, remap = normalize_replaces(tree)
        assert not flat.has_replaces()
        want = materialize_all(tree)
        got = materialize_all(flat)
        assert [got[remap[v]] for v in range(tree.n)] == want


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 80), st.integers(0, 10_000), st.floats(0, 1), st.integers(1, 300))
def test_generated_trees_round_trip(n, seed, bias, alphabet):
    tree = gen_version_tree(GeneratorConfig(n=n, seed=seed, path_bias=bias, alphabet=alphabet))
    validate(tree)
    assert parse_version_tree(serialize_version_tree(tree)) == tree
