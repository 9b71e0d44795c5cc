"""Invariant suites shared by ``verstring selftest`` and the test-suite.

Each suite runs ``iterations`` seeded cases and stops at the first broken
property, reporting its name and a counterexample.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .euler import reduce
from .packed import PackedSequence
from .persistent import IndexConfig, build, prefix_select_build
from .segindex import build_segment_index
from .serialize import dumps, loads
from .slab import build_slab_index, sweep_grid, verify_grid_properties
from .testkit import (
    GeneratorConfig,
    gen_version_tree,
    inject_double_update,
    materialize_all,
    naive_crossing,
    naive_node_crossing,
    naive_slab_select,
    naive_slab_sum,
    random_rank_space,
    random_segments,
)
from .version_tree import normalize_replaces, parse_version_tree, serialize_version_tree


class PropertyFailure(AssertionError):
    def __init__(self, prop: str, detail):
        super().__init__(f"{prop}: {detail}")
        self.prop = prop
        self.detail = detail


def require(ok: bool, prop: str, detail=None) -> None:
    if not ok:
        raise PropertyFailure(prop, detail)


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failure: PropertyFailure | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failure is None

    def line(self) -> str:
        if self.ok:
            return f"PASS {self.name} ({self.cases} cases, {self.seconds:.2f}s)"
        return f"FAIL {self.name}: property '{self.failure.prop}' violated: {self.failure.detail}"


@dataclass
class SelftestConfig:
    iterations: int = 5
    max_n: int = 300
    seed: int = 0
    inject_fault: bool = False
    deltas: tuple = field(default=(2, 4, 8, 16))


def _tree_cfg(rng: np.random.Generator, max_n: int, seed: int) -> GeneratorConfig:
    n = int(rng.integers(1, max(2, max_n) + 1))
    return GeneratorConfig(
        n=n,
        seed=seed,
        p_insert=float(rng.uniform(0.4, 0.9)),
        p_delete=float(rng.uniform(0.05, 0.4)),
        p_replace=float(rng.choice([0.0, 0.1, 0.3])),
        path_bias=float(rng.choice([0.0, 0.5, 0.95, 1.0])),
        alphabet=int(rng.choice([2, 4, 26])),
    )


def suite_tree_format(rng, cfg: SelftestConfig, case: int) -> None:
    tree = gen_version_tree(_tree_cfg(rng, cfg.max_n, cfg.seed + case))
    text = serialize_version_tree(tree)
    back = parse_version_tree(text)
    require(back == tree, "parse_serialize_fixed_point", f"seed {cfg.seed + case}")
    require(serialize_version_tree(back) == text, "parse_serialize_fixed_point", "text differs")


def suite_euler(rng, cfg: SelftestConfig, case: int) -> None:
    tree = gen_version_tree(_tree_cfg(rng, cfg.max_n, cfg.seed + case))
    flat, remap = normalize_replaces(tree)
    segs, start = reduce(flat)
    strings = materialize_all(tree)
    require(len(segs) <= max(flat.n - 1, 0), "segment_count_bound", {"segments": len(segs), "nodes": flat.n})
    for v in range(tree.n):
        hits = naive_crossing(segs, 2 * int(start[remap[v]]))
        got = segs.label[hits].tolist()
        require(got == strings[v], "crossing_spells_version", {"version": v, "got": got, "want": strings[v]})


def suite_rank_select(rng, cfg: SelftestConfig, case: int) -> None:
    sigma = int(rng.integers(1, 66))
    n = int(rng.integers(0, 4 * cfg.max_n + 1))
    sym = rng.integers(0, sigma, n)
    seq = PackedSequence(sym, sigma, sample_rate=int(rng.choice([1, 7, 64, 200])))
    pos = rng.integers(0, n + 1, 50)
    for c in rng.integers(0, sigma, 5).tolist():
        for i in pos.tolist():
            want = int(np.count_nonzero(sym[:i] == c))
            require(seq.rank(i, c) == want, "rank", {"i": i, "c": c, "want": want})
        occ = np.flatnonzero(sym == c)
        for k in rng.integers(0, len(occ), 5).tolist() if len(occ) else []:
            require(seq.select(k + 1, c) == occ[k] + 1, "select", {"k": k + 1, "c": c})
    for i in pos[pos >= 1].tolist():
        require(seq.access(i) == sym[i - 1], "access", {"i": i})


def suite_slab_grid(rng, cfg: SelftestConfig, case: int) -> None:
    m = int(rng.integers(1, cfg.max_n + 1))
    delta = int(cfg.deltas[case % len(cfg.deltas)])
    rs = random_rank_space(rng, m, delta)
    if cfg.inject_fault and m >= 4:
        rs = inject_double_update(rs, rng)
    # raw grid first: it does not depend on the built structure
    P = sweep_grid(rs)
    jump = np.abs(np.diff(P, axis=0))
    require(not np.any(jump > 1), "adjacent_columns",
            {"column": int(np.argwhere(jump > 1)[0][0]) + 1} if np.any(jump > 1) else None)
    direct = build_slab_index(rs, backend="direct")
    memo = build_slab_index(rs, backend="memoized")
    rep = verify_grid_properties(direct, rs)
    for name in rep.failures():
        require(False, name, rep.results[name][1])
    g = direct.grid()
    require(np.array_equal(g, P), "slab_sum_matches_sweep", None)
    require(np.array_equal(memo.grid(), g), "backends_agree", None)
    cols = rng.integers(1, rs.ncols + 1, 40)
    for i in cols.tolist():
        for j in (0, 1, rs.d // 2, rs.d):
            if j >= 0:
                require(direct.slab_sum(i, j) == naive_slab_sum(rs, i, j), "slab_sum", {"i": i, "j": j})
        for j in range(1, int(P[i - 1, -1]) + 1):
            want = naive_slab_select(rs, i, j)
            require(direct.slab_select(i, j) == want == memo.slab_select(i, j), "slab_select",
                    {"i": i, "j": j, "want": want})


def suite_descent(rng, cfg: SelftestConfig, case: int) -> None:
    m = int(rng.integers(2, min(cfg.max_n, 500) + 2))
    segs = random_segments(rng, m)
    idx = build_segment_index(segs, delta=int(cfg.deltas[case % len(cfg.deltas)]))
    cache: dict = {}
    for x in rng.integers(0, 2 * m + 2, 10).tolist():
        total = idx.count_crossing(x)
        require(total == len(naive_crossing(segs, x)), "crossing_count", {"x": x})
        for j in range(1, total + 1):
            for v, col, _, k, ccol, _ in idx.trace(x, j):
                child = idx.child(v, k)
                want = naive_node_crossing(idx, v, col, slab=k, cache=cache)
                if child is None:
                    require(len(want) >= 1, "leaf_reached", {"node": v, "slab": k})
                    continue
                got = naive_node_crossing(idx, child, ccol, cache=cache)
                require(got == want, "child_crossing_set_preserved", {"node": v, "x": x, "j": j, "slab": k})


def suite_access(rng, cfg: SelftestConfig, case: int) -> None:
    tree = gen_version_tree(_tree_cfg(rng, cfg.max_n, cfg.seed + case))
    idx = build(tree, IndexConfig(delta=int(cfg.deltas[case % len(cfg.deltas)]),
                                  backend="memoized" if case % 2 else "direct"))
    strings = materialize_all(tree)
    vs = [v for v in range(tree.n) for _ in strings[v]]
    js = [j for v in range(tree.n) for j in range(1, len(strings[v]) + 1)]
    if vs:
        got = idx.access_many(vs, js).tolist()
        want = [strings[v][j - 1] for v, j in zip(vs, js)]
        bad = next((t for t in range(len(vs)) if got[t] != want[t]), None)
        require(bad is None, "access_matches_oracle", None if bad is None else {"v": vs[bad], "j": js[bad]})
    for v in range(tree.n):
        require(idx.length(v) == len(strings[v]), "length", {"v": v})
        require(idx.string(v) == strings[v], "substring_matches_oracle", {"v": v})


def suite_prefix_select(rng, cfg: SelftestConfig, case: int) -> None:
    n = int(rng.integers(1, cfg.max_n + 1))
    values = rng.choice(10 * n + 10, n, replace=False)
    ps = prefix_select_build(values.tolist())
    for _ in range(50):
        i = int(rng.integers(1, n + 1))
        j = int(rng.integers(1, i + 1))
        want = int(np.argsort(values[:i], kind="stable")[j - 1]) + 1
        require(ps.prefix_select(i, j) == want, "prefix_select_matches_sort", {"i": i, "j": j})


def suite_serialization(rng, cfg: SelftestConfig, case: int) -> None:
    tree = gen_version_tree(_tree_cfg(rng, cfg.max_n, cfg.seed + case))
    idx = build(tree, IndexConfig(backend="memoized" if case % 2 else "direct"))
    blob = dumps(idx)
    back = loads(blob)
    require(dumps(back) == blob, "byte_exact_round_trip", None)
    lengths = np.asarray(tree.lengths)
    vs = np.flatnonzero(lengths > 0)
    if len(vs):
        v = rng.choice(vs, 200)
        j = (rng.random(200) * lengths[v]).astype(np.int64) + 1
        require(np.array_equal(idx.access_many(v, j), back.access_many(v, j)), "answers_survive_round_trip", None)


SUITES: dict[str, Callable] = {
    "tree-format": suite_tree_format,
    "euler-reduction": suite_euler,
    "rank-select": suite_rank_select,
    "slab-grid": suite_slab_grid,
    "descent": suite_descent,
    "access": suite_access,
    "prefix-select": suite_prefix_select,
    "serialization": suite_serialization,
}


def run_suite(name: str, cfg: SelftestConfig) -> SuiteResult:
    fn = SUITES[name]
    res = SuiteResult(name)
    t0 = time.perf_counter()
    for case in range(cfg.iterations):
        rng = np.random.default_rng([cfg.seed, case, list(SUITES).index(name)])
        try:
            fn(rng, cfg, case)
        except PropertyFailure as exc:
            res.failure = exc
            break
        res.cases += 1
    res.seconds = time.perf_counter() - t0
    return res


def run_all(cfg: SelftestConfig, names=None) -> list[SuiteResult]:
    return [run_suite(n, cfg) for n in (names or SUITES)]
