"""Random instances, brute-force oracles and the baseline index.

Everything here is deliberately simple and independent of the index
internals, so it can serve as ground truth in tests and in ``selftest``.
"""

from __future__ import annotations

import os
import random
from array import array
from dataclasses import dataclass

import numpy as np

from ._jit import kernel
from .errors import InvalidVersion, RankOutOfRange, ValidationError
from .euler import SegmentSet
from .slab import SL_Q, RankSpaceSegments
from .version_tree import Delete, Insert, Replace, VersionTree, apply_op

SEED_ENV = "VERSTRING_SEED"


def resolve_seed(seed: int | None) -> int:
    """``VERSTRING_SEED`` wins over ``seed``; fall back to 0."""
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        return int(env)
    return 0 if seed is None else int(seed)


# -- version tree generation ----------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 100  # number of nodes, root included
    seed: int = 0
    p_insert: float = 0.6
    p_delete: float = 0.3
    p_replace: float = 0.1
    path_bias: float = 0.5  # chance a new node hangs off the previous one
    alphabet: int = 26  # labels drawn from 'a' .. 'a' + alphabet - 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if min(self.p_insert, self.p_delete, self.p_replace) < 0 or self.p_insert <= 0:
            raise ValueError("operation weights must be non-negative, insert positive")
        if not 0 <= self.path_bias <= 1:
            raise ValueError("path_bias must be in [0, 1]")
        if self.alphabet < 1:
            raise ValueError("alphabet must be positive")


# named generator presets; "long" keeps strings long enough for timing to mean something
PROFILES = {
    "default": {},
    "long": {"p_insert": 0.7, "p_delete": 0.2, "p_replace": 0.1, "path_bias": 0.95},
    "path": {"p_insert": 0.6, "p_delete": 0.3, "p_replace": 0.1, "path_bias": 1.0},
    "bushy": {"path_bias": 0.0},
}


def profile_config(name: str, n: int, seed: int | None = None) -> GeneratorConfig:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {', '.join(PROFILES)}")
    return GeneratorConfig(n=n, seed=resolve_seed(seed), **PROFILES[name])


def gen_version_tree(cfg: GeneratorConfig) -> VersionTree:
    rng = random.Random(cfg.seed)
    parent = [-1]
    ops: list = [None]
    lengths = [0]
    base = ord("a") if cfg.alphabet <= 26 else 0x20
    weights = (cfg.p_insert, cfg.p_delete, cfg.p_replace)
    for v in range(1, cfg.n):
        p = v - 1 if rng.random() < cfg.path_bias else rng.randrange(v)
        ln = lengths[p]
        kind = rng.choices("idr", weights)[0] if ln else "i"
        ch = base + rng.randrange(cfg.alphabet)
        if kind == "i":
            op = Insert(rng.randint(0, ln), ch)
            ln += 1
        elif kind == "d":
            op = Delete(rng.randint(1, ln))
            ln -= 1
        else:
            op = Replace(rng.randint(1, ln), ch)
        parent.append(p)
        ops.append(op)
        lengths.append(ln)
    return VersionTree(tuple(parent), tuple(ops))


def materialize_all(tree: VersionTree) -> list[list[int]]:
    """Every version's string, by replaying edits along the tree (copy per child)."""
    out: list[list[int]] = [[] for _ in range(tree.n)]
    for v in tree.bfs_order[1:]:
        s = list(out[tree.parent[v]])
        apply_op(s, tree.ops[v])
        out[v] = s
    return out


# -- segment oracles ------------------------------------------------------------


def naive_crossing(segs: SegmentSet, x: int) -> np.ndarray:
    """Segment indices crossing ``x``, ordered by height."""
    idx = np.flatnonzero((segs.x1 <= x) & (x <= segs.x2))
    return idx[np.argsort(segs.y[idx], kind="stable")]


def naive_segment_select(segs: SegmentSet, x: int, j: int) -> tuple[int, int, int, int]:
    hits = naive_crossing(segs, x)
    if not 1 <= j <= len(hits):
        raise RankOutOfRange(f"{len(hits)} segments cross {x}, asked for #{j}")
    k = int(hits[j - 1])
    return int(segs.x1[k]), int(segs.x2[k]), int(segs.y[k]), int(segs.label[k])


def naive_slab_sum(rs: RankSpaceSegments, i: int, j: int) -> int:
    """Segments in slabs ``1..j`` crossing column ``i``."""
    return int(np.count_nonzero((rs.x1 <= i) & (i <= rs.x2) & (rs.slab <= j)))


def naive_slab_select(rs: RankSpaceSegments, i: int, j: int) -> int:
    """Smallest slab ``k`` with ``slab_sum(i, k) >= j``; 0 if none."""
    hit = (rs.x1 <= i) & (i <= rs.x2)
    counts = np.bincount(rs.slab[hit], minlength=rs.d + 1)
    acc = np.cumsum(counts)
    k = int(np.searchsorted(acc, j))
    return k if k <= rs.d else 0


def random_rank_space(rng: np.random.Generator, m: int, delta: int) -> RankSpaceSegments:
    """``m`` segments on odd columns below ``4m`` (so update columns never clash), random heights."""
    cols = 2 * (rng.permutation(2 * m) + 1) - 1
    a, b = cols[:m], cols[m:]
    return RankSpaceSegments(np.minimum(a, b), np.maximum(a, b), rng.permutation(m) + 1, delta)


def random_segments(rng: np.random.Generator, m: int, label_range: int = 26) -> SegmentSet:
    """Segments with distinct endpoints in ``1..2m`` and distinct heights, labeled randomly."""
    cols = rng.permutation(2 * m) + 1
    a, b = cols[:m], cols[m:]
    rows = zip(np.minimum(a, b).tolist(), np.maximum(a, b).tolist(),
               (rng.permutation(m) + 1).tolist(), (97 + rng.integers(0, label_range, m)).tolist())
    return SegmentSet.from_rows(rows)


def node_local_segments(index, v: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(height_ranks, lx1, lx2)`` of internal node ``v`` in its own rank space.

    Recomputed from the leaf table alone: the node's segments are the height
    ranks below it, and endpoint ``t`` (1-based, x-order) maps to column ``2t - 1``.
    """
    lo, hi = index.node_range(v)
    ranks = np.arange(lo, hi)
    ends = np.concatenate([index.seg_x1[lo:hi], index.seg_x2[lo:hi]])
    col = np.empty(len(ends), dtype=np.int64)
    col[np.argsort(ends, kind="stable")] = 2 * np.arange(1, len(ends) + 1) - 1
    return ranks, col[: hi - lo], col[hi - lo :]


def naive_node_crossing(index, v: int, col: int, slab: int | None = None, cache: dict | None = None) -> set[int]:
    """Height ranks of node ``v``'s segments crossing local ``col`` (optionally only slab ``slab``)."""
    if cache is None:
        cache = {}
    if v not in cache:
        cache[v] = node_local_segments(index, v)
    ranks, lx1, lx2 = cache[v]
    hit = (lx1 <= col) & (col <= lx2)
    if slab is not None:
        q = int(index.slab_index(v).meta[SL_Q])
        hit &= (ranks - ranks[0]) // q + 1 == slab
    return set(ranks[hit].tolist())


# -- fault injection ------------------------------------------------------------


def inject_double_update(rs: RankSpaceSegments, rng: np.random.Generator | None = None) -> RankSpaceSegments:
    """Start two segments of one slab in the same column.

    That column then receives two updates, so the prefix grid jumps by 2
    between neighbouring columns.
    """
    rng = rng or np.random.default_rng(0)
    slab = rs.slab
    for s in rng.permutation(np.unique(slab)):
        members = np.flatnonzero(slab == s)
        for a in members:
            for b in members:
                if a != b and rs.x1[a] < rs.x1[b] < rs.x2[a]:
                    x1 = rs.x1.copy()
                    x1[a] = rs.x1[b]
                    return RankSpaceSegments(x1, rs.x2.copy(), rs.y.copy(), rs.delta)
    raise ValidationError("no slab with two overlapping segments to corrupt")


# -- baseline: path-copying treap -----------------------------------------------


@kernel
def _treap_access_many(left, right, size, char, roots, vs, js, out):
    for t in range(vs.shape[0]):
        x = roots[vs[t]]
        j = js[t]
        while True:
            ls = size[left[x]]
            if j <= ls:
                x = left[x]
            elif j == ls + 1:
                out[t] = char[x]
                break
            else:
                j -= ls + 1
                x = right[x]


class PersistentTreap:
    """Fully persistent sequence by path copying; one root per version.

    Uses ``O(log n)`` fresh nodes per edit in expectation.
    """

    def __init__(self, seed: int = 1):
        self._rng = random.Random(seed)
        self.left = array("q", [0])
        self.right = array("q", [0])
        self.size = array("q", [0])
        self.char = array("q", [0])
        self.prio = array("q", [0])

    def _new(self, l: int, r: int, c: int, p: int) -> int:
        self.left.append(l)
        self.right.append(r)
        self.size.append(1 + self.size[l] + self.size[r])
        self.char.append(c)
        self.prio.append(p)
        return len(self.left) - 1

    def _copy(self, x: int, l: int, r: int) -> int:
        return self._new(l, r, self.char[x], self.prio[x])

    def _split(self, x: int, k: int) -> tuple[int, int]:
        if x == 0:
            return 0, 0
        ls = self.size[self.left[x]]
        if k <= ls:
            a, b = self._split(self.left[x], k)
            return a, self._copy(x, b, self.right[x])
        a, b = self._split(self.right[x], k - ls - 1)
        return self._copy(x, self.left[x], a), b

    def _merge(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return a or b
        if self.prio[a] > self.prio[b]:
            return self._copy(a, self.left[a], self._merge(self.right[a], b))
        return self._copy(b, self._merge(a, self.left[b]), self.right[b])

    def insert(self, root: int, k: int, c: int) -> int:
        """New root with ``c`` placed after the first ``k`` characters."""
        p = self._rng.getrandbits(62)
        return self._insert(root, k, c, p)

    def _insert(self, x: int, k: int, c: int, p: int) -> int:
        if x == 0 or p > self.prio[x]:
            a, b = self._split(x, k)
            return self._new(a, b, c, p)
        ls = self.size[self.left[x]]
        if k <= ls:
            return self._copy(x, self._insert(self.left[x], k, c, p), self.right[x])
        return self._copy(x, self.left[x], self._insert(self.right[x], k - ls - 1, c, p))

    def delete(self, x: int, k: int) -> int:
        ls = self.size[self.left[x]]
        if k == ls + 1:
            return self._merge(self.left[x], self.right[x])
        if k <= ls:
            return self._copy(x, self.delete(self.left[x], k), self.right[x])
        return self._copy(x, self.left[x], self.delete(self.right[x], k - ls - 1))

    def replace(self, x: int, k: int, c: int) -> int:
        ls = self.size[self.left[x]]
        if k == ls + 1:
            return self._new(self.left[x], self.right[x], c, self.prio[x])
        if k <= ls:
            return self._copy(x, self.replace(self.left[x], k, c), self.right[x])
        return self._copy(x, self.left[x], self.replace(self.right[x], k - ls - 1, c))

    def to_list(self, x: int) -> list[int]:
        out, stack = [], []
        while stack or x:
            while x:
                stack.append(x)
                x = self.left[x]
            x = stack.pop()
            out.append(self.char[x])
            x = self.right[x]
        return out

    @property
    def node_count(self) -> int:
        return len(self.left) - 1


class BaselineIndex:
    """Path-copying treap over every version, with a compiled batch access."""

    def __init__(self, tree: VersionTree, seed: int = 1):
        self.treap = PersistentTreap(seed)
        roots = [0] * tree.n
        tr = self.treap
        for v in tree.bfs_order[1:]:
            r = roots[tree.parent[v]]
            op = tree.ops[v]
            if isinstance(op, Insert):
                roots[v] = tr.insert(r, op.k, op.char)
            elif isinstance(op, Delete):
                roots[v] = tr.delete(r, op.k)
            else:
                roots[v] = tr.replace(r, op.k, op.char)
        self.roots = np.array(roots, dtype=np.int64)
        self._arrays = tuple(np.frombuffer(a, dtype=np.int64) for a in (tr.left, tr.right, tr.size, tr.char))

    def length(self, v: int) -> int:
        if not 0 <= v < len(self.roots):
            raise InvalidVersion(f"version {v} out of range")
        return int(self._arrays[2][self.roots[v]])

    def access(self, v: int, j: int) -> int:
        if not 1 <= j <= self.length(v):
            raise RankOutOfRange(f"position {j} outside version {v}")
        return int(self.access_many([v], [j])[0])

    def access_many(self, vs, js) -> np.ndarray:
        vs = np.ascontiguousarray(vs, dtype=np.int64)
        js = np.ascontiguousarray(js, dtype=np.int64)
        out = np.empty(len(vs), dtype=np.int64)
        _treap_access_many(*self._arrays, self.roots, vs, js, out)
        return out

    def string(self, v: int) -> list[int]:
        return self.treap.to_list(int(self.roots[v]))

    @property
    def node_count(self) -> int:
        return self.treap.node_count


def baseline_persistent_bst(tree: VersionTree, seed: int = 1) -> BaselineIndex:
    return BaselineIndex(tree, seed)
