"""Random access into every version of a persistent string.

``build`` splits replace edges, then indexes the segments of the Euler
reduction.  ``S(v)[j]`` is the label of the ``j``-th
lowest segment crossing ``x = 2 * start(v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import packed
from .errors import InvalidVersion, RankOutOfRange, ValidationError
from .euler import reduce
from .segindex import SegmentIndex, build_segment_index
from .version_tree import Insert, VersionTree, normalize_replaces, validate


@dataclass(frozen=True)
class IndexConfig:
    delta: int | None = None  # None: derived from the segment count
    sample_rate: int = packed.DEFAULT_SAMPLE_RATE
    backend: str = "direct"

    def __post_init__(self):
        if self.backend not in ("direct", "memoized"):
            raise ValueError(f"backend must be 'direct' or 'memoized', not {self.backend!r}")
        if self.delta is not None and not 2 <= self.delta <= 64:
            raise ValueError("delta must be in 2..64")
        if self.sample_rate < 1:
            raise ValueError("sample rate must be positive")


class PersistentStringIndex:
    def __init__(self, segments: SegmentIndex, start: np.ndarray, lengths: np.ndarray, remap: np.ndarray,
                 config: IndexConfig):
        self.segments = segments
        self.start = start  # per node of the replace-free tree
        self.lengths = lengths  # per original node
        self.remap = remap
        self.config = config
        self._x = 2 * start[remap]
        self._col = segments.root_columns(self._x) if segments.n >= 2 else None

    @property
    def n_versions(self) -> int:
        return len(self.lengths)

    def _check(self, v: int) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n_versions:
            raise InvalidVersion(f"version {v!r} not in 0..{self.n_versions - 1}")
        return int(v)

    def time_of(self, v: int) -> int:
        """The x-coordinate whose crossing segments spell ``S(v)``."""
        return int(self._x[self._check(v)])

    def length(self, v: int) -> int:
        return int(self.lengths[self._check(v)])

    def access(self, v: int, j: int) -> int:
        """Code point ``S(v)[j]`` (1-based)."""
        n = self.length(v)
        if not 1 <= j <= n:
            raise RankOutOfRange(f"position {j} outside 1..{n} of version {v}")
        r = int(self.segments.select_ranks([self._x[v]], [j])[0])
        return int(self.segments.labels[r])

    def access_many(self, vs, js) -> np.ndarray:
        vs = np.ascontiguousarray(vs, dtype=np.int64)
        js = np.ascontiguousarray(js, dtype=np.int64)
        if len(vs) and (vs.min() < 0 or vs.max() >= self.n_versions):
            raise InvalidVersion("version id out of range in batch")
        bad = (js < 1) | (js > self.lengths[vs])
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise RankOutOfRange(f"position {int(js[t])} outside version {int(vs[t])}")
        if self._col is None:
            ranks = self.segments.select_ranks(self._x[vs], js)
        else:
            ranks = self.segments.select_at_columns(self._col[vs], js, trusted=True)
        return self.segments.labels[ranks]

    def substring(self, v: int, j: int, length: int) -> list[int]:
        n = self.length(v)
        if length < 0 or j < 1 or j + length - 1 > n:
            raise RankOutOfRange(f"substring {j}+{length} outside 1..{n} of version {v}")
        if length == 0:
            return []
        return [s.label for s in self.segments.report_range(int(self._x[v]), j, length)]

    def string(self, v: int) -> list[int]:
        return self.substring(v, 1, self.length(v))

    def check_lengths(self) -> None:
        """Raise if a stored length disagrees with the crossing count at its time."""
        counts = self.segments.count_crossing_many(self._x)
        bad = np.flatnonzero(counts != self.lengths)
        if len(bad):
            v = int(bad[0])
            raise ValidationError(f"version {v}: length {int(self.lengths[v])} but {int(counts[v])} crossings")

    def size_report(self) -> dict:
        rep = dict(self.segments.size_report())
        w = max(1, int(self._x.max()).bit_length()) if len(self._x) else 1
        rep["version_tables"] = 2 * self.n_versions * w
        rep["total"] += rep["version_tables"]
        return rep


def build(tree: VersionTree, config: IndexConfig | None = None) -> PersistentStringIndex:
    config = config or IndexConfig()
    validate(tree)
    flat, remap = normalize_replaces(tree)
    segs, start = reduce(flat)
    seg = build_segment_index(segs, delta=config.delta, sample_rate=config.sample_rate, backend=config.backend)
    return PersistentStringIndex(
        seg, start, np.asarray(tree.lengths, dtype=np.int64), np.asarray(remap, dtype=np.int64), config
    )


# -- prefix selection -------------------------------------------------------------


def _prefix_ranks(values: list[int]) -> list[int]:
    """``r_i`` = number of earlier entries smaller than ``values[i]`` (Fenwick tree)."""
    order = {v: k for k, v in enumerate(sorted(values), start=1)}
    tree = [0] * (len(values) + 1)
    out = []
    for v in values:
        pos = order[v]
        cnt, p = 0, pos - 1
        while p > 0:
            cnt += tree[p]
            p -= p & -p
        out.append(cnt)
        p = pos
        while p < len(tree):
            tree[p] += 1
            p += p & -p
    return out


def prefix_tree(values) -> VersionTree:
    """Path ``v_0 .. v_n`` where edge ``(v_{i-1}, v_i)`` inserts index ``i`` after rank ``r_i``."""
    values = [int(a) for a in values]
    if len(set(values)) != len(values):
        raise ValidationError("prefix selection needs pairwise distinct entries")
    ranks = _prefix_ranks(values)
    n = len(values)
    parent = [-1] + list(range(n))
    ops = [None] + [Insert(ranks[i], i + 1) for i in range(n)]
    return VersionTree(tuple(parent), tuple(ops))


class PrefixSelectIndex:
    """``prefix_select(i, j)``: 1-based index of the ``j``-th smallest of ``A[1..i]``."""

    def __init__(self, index: PersistentStringIndex, n: int):
        self.index = index
        self.n = n

    def prefix_select(self, i: int, j: int) -> int:
        if not 1 <= i <= self.n or not 1 <= j <= i:
            raise RankOutOfRange(f"need 1 <= j <= i <= {self.n}, got i={i}, j={j}")
        return self.index.access(i, j)

    def prefix_select_many(self, iis, js) -> np.ndarray:
        iis = np.ascontiguousarray(iis, dtype=np.int64)
        js = np.ascontiguousarray(js, dtype=np.int64)
        if len(iis) and (iis.min() < 1 or iis.max() > self.n or js.min() < 1 or np.any(js > iis)):
            raise RankOutOfRange("prefix selection arguments out of range")
        return self.index.access_many(iis, js)


def prefix_select_build(values, config: IndexConfig | None = None) -> PrefixSelectIndex:
    tree = prefix_tree(values)
    return PrefixSelectIndex(build(tree, config), len(tree) - 1)
