from __future__ import annotations

import numpy as np
import pytest

from verstring.errors import ValidationError
from verstring.testkit import (
    PROFILES,
    SEED_ENV,
    GeneratorConfig,
    PersistentTreap,
    baseline_persistent_bst,
    gen_version_tree,
    materialize_all,
    profile_config,
    resolve_seed,
)
from verstring.version_tree import materialize_naive


def test_generator_is_seeded():
    a = gen_version_tree(GeneratorConfig(n=100, seed=3))
    b = gen_version_tree(GeneratorConfig(n=100, seed=3))
    c = gen_version_tree(GeneratorConfig(n=100, seed=4))
    assert a == b and a != c


def test_path_profile_is_a_path():
    tree = gen_version_tree(profile_config("path", 200, seed=1))
    assert list(tree.parent[1:]) == list(range(199))


def test_profiles_exist():
    assert set(PROFILES) >= {"default", "long", "path", "bushy"}
    with pytest.raises(ValueError):
        profile_config("nope", 10)


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "77")
    assert resolve_seed(5) == 77
    monkeypatch.delenv(SEED_ENV)
    assert resolve_seed(5) == 5


def test_materialize_all_matches_single():
    tree = gen_version_tree(GeneratorConfig(n=150, seed=8, p_replace=0.2))
    allv = materialize_all(tree)
    assert all(allv[v] == materialize_naive(tree, v) for v in range(0, 150, 7))


def test_treap_is_persistent():
    t = PersistentTreap(seed=2)
    r0 = 0
    r1 = t.insert(r0, 0, 1)
    r2 = t.insert(r1, 1, 2)
    r3 = t.replace(r2, 1, 9)
    r4 = t.delete(r3, 2)
    assert [t.to_list(r) for r in (r0, r1, r2, r3, r4)] == [[], [1], [1, 2], [9, 2], [9]]


@pytest.mark.parametrize("profile", ["default", "long", "bushy"])
def test_baseline_matches_naive(profile):
    tree = gen_version_tree(profile_config(profile, 400, seed=6))
    base = baseline_persistent_bst(tree)
    strings = materialize_all(tree)
    assert all(base.string(v) == strings[v] for v in range(tree.n))
    vs = np.array([v for v in range(tree.n) for _ in strings[v]])
    js = np.array([j for v in range(tree.n) for j in range(1, len(strings[v]) + 1)])
    assert base.access_many(vs, js).tolist() == [c for s in strings for c in s]
    assert base.node_count > 0


def test_invalid_generator_config():
    with pytest.raises((ValueError, ValidationError)):
        GeneratorConfig(n=0)
