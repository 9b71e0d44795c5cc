"""Segment selection: the j-th lowest segment crossing a vertical line.

Segments sit in the leaves of a balanced ``delta``-ary tree in height order.
Every internal node ``v`` rank-reduces its own segments (endpoint ``t`` in
x-order goes to column ``2t - 1``) and keeps

* ``E_v``: for each column, the child slab owning the endpoint there (0 on
  even columns), as a packed rank/select sequence;
* a slab selection structure over its segments with the children as slabs.

A query descends from the root.  At node ``v`` with local column ``i`` and
rank ``j``: ``k = slab_select(i, j)``, ``j -= slab_sum(i, k - 1)``, and the
child column is ``2r - 1`` if ``E_v[i] == k`` else ``2r``, with
``r = rank(E_v, i, k)``.  Crossing sets are preserved at every step.

Per-node metadata is a single int64 row: the node's lowest height rank, its
first child, then the sequence meta vector and the slab meta vector side by
side, so one descent step reads one row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import packed
from ._jit import helper, kernel, prefetch
from .errors import InvariantViolation, RankOutOfRange
from .packed import SEQ_META, SEQ_N, SEQ_OFF, SEQ_S, SEQ_SIGMA, SEQ_W, seq_access, seq_access_rank
from .slab import (
    A_BLK,
    A_CELL_PAT,
    A_CG,
    SL_B,
    SL_BLK_OFF,
    SL_CG_OFF,
    SL_D,
    SL_M,
    SL_META,
    SL_Q,
    SlabIndex,
    SlabPool,
    _value,
    default_delta,
    empty_pool,
    select_scan,
    select_with_prefix,
    slab_bits,
    slab_select_k,
    slab_shape,
    slab_sum_k,
)

ND_YLO, ND_CHILD = 0, 1
ND_SEQ = 2
ND_SLAB = ND_SEQ + SEQ_META
ND_META = ND_SLAB + SL_META

GROUP = 8  # queries descending in lockstep


class Segment(NamedTuple):
    x1: int
    x2: int
    y: int
    label: int


@helper
def _child_col(words, row, iv, k):
    sym, r = seq_access_rank(words, row[ND_SEQ:ND_SLAB], iv, k)
    return 2 * r - 1 if sym == k else 2 * r


@helper
def _is_leaf_slab(sm, k):
    q = sm[SL_Q]
    return min(q, sm[SL_M] - (k - 1) * q) == 1


@kernel
def _step(nodes, words, A, memo, v, iv, jv):
    """One checked descent step: ``(k, child_column, child_rank)``; ``k = 0`` if ``jv`` is too large."""
    row = nodes[v]
    sm = row[ND_SLAB:]
    k = slab_select_k(A, sm, iv, jv, memo)[0]
    if k == 0:
        return np.int64(0), np.int64(0), np.int64(0)
    jc = jv - slab_sum_k(A, sm, iv, k - 1, memo)
    return k, _child_col(words, row, iv, k), jc


@helper
def _descend(nodes, words, A, memo, col, j, scratch, checked):
    """Height rank (0-based) of the answer, or -1 when ``j`` is out of range.

    Only the root checks the range (and only if ``checked``): crossing sets
    are preserved downwards.
    """
    if checked:
        if j < 1 or col < 1:
            return -1
        root = nodes[0]
        if _value(A, root[ND_SLAB:], col, root[ND_SLAB + SL_D], memo) < j:
            return -1
    v = 0
    iv = col
    jv = j
    while True:
        row = nodes[v]
        sm = row[ND_SLAB:]
        if memo:
            k, before = select_with_prefix(A, sm, iv, jv, memo)
        else:
            k, before = select_scan(A, sm, iv, jv, scratch)
        if _is_leaf_slab(sm, k):
            return row[ND_YLO] + (k - 1) * sm[SL_Q]
        iv = _child_col(words, row, iv, k)
        jv -= before
        v = row[ND_CHILD] + k - 1


@kernel
def _descend_many(nodes, words, A, memo, cols, ranks, out, scratch, checked):
    for t in range(cols.shape[0]):
        out[t] = _descend(nodes, words, A, memo, cols[t], ranks[t], scratch, checked)


@helper
def _prefetch_step(nodes, words, A, v, iv):
    """Touch the records the next step at ``(v, iv)`` will read."""
    row = nodes[v]
    d = row[ND_SLAB + SL_D]
    brec = row[ND_SLAB + SL_BLK_OFF] + ((iv - 1) // row[ND_SLAB + SL_B]) * (2 + 2 * d)
    prefetch(A[A_BLK], brec)
    prefetch(A[A_BLK], brec + 2 + d)
    g = (iv - 1) // d
    crec = row[ND_SLAB + SL_CG_OFF] + g * (d + ((d + 3) >> 2))
    prefetch(A[A_CG], crec)
    prefetch(A[A_CG], crec + d + ((iv - 1 - g * d) >> 2))
    w = row[ND_SEQ + SEQ_W]
    spw = 64 // w
    s = row[ND_SEQ + SEQ_S]
    cw = (row[ND_SEQ + SEQ_SIGMA] + 1) >> 1
    t = iv // s
    rec = row[ND_SEQ + SEQ_OFF] + t * (cw + s // spw)
    prefetch(words, rec)
    prefetch(words, rec + cw + (iv - t * s) // spw)


@kernel
def _descend_group(nodes, words, A, memo, cols, ranks, out, scratch, checked, state):
    """Batch descent, ``G = state.shape[1]`` queries in lockstep with prefetching.

    Each round first prefetches every live query's records for its current
    node, then advances every live query by one step, so the misses of
    different queries overlap.  Results equal :func:`_descend_many`.
    """
    G = state.shape[1]
    nq = cols.shape[0]
    root = nodes[0]
    for t0 in range(0, nq, G):
        live = 0
        for u in range(min(G, nq - t0)):
            t = t0 + u
            c = cols[t]
            j = ranks[t]
            ok = True
            if checked:
                ok = j >= 1 and c >= 1 and _value(A, root[ND_SLAB:], c, root[ND_SLAB + SL_D], memo) >= j
            if ok:
                state[0, live] = 0
                state[1, live] = c
                state[2, live] = j
                state[3, live] = t
                live += 1
            else:
                out[t] = -1
        while live > 0:
            for u in range(live):
                _prefetch_step(nodes, words, A, state[0, u], state[1, u])
            u = 0
            while u < live:
                v = state[0, u]
                iv = state[1, u]
                row = nodes[v]
                sm = row[ND_SLAB:]
                if memo:
                    k, before = select_with_prefix(A, sm, iv, state[2, u], memo)
                else:
                    k, before = select_scan(A, sm, iv, state[2, u], scratch)
                if _is_leaf_slab(sm, k):
                    out[state[3, u]] = row[ND_YLO] + (k - 1) * sm[SL_Q]
                    live -= 1
                    for f in range(4):
                        state[f, u] = state[f, live]
                    continue
                nv = row[ND_CHILD] + k - 1
                state[0, u] = nv
                state[1, u] = _child_col(words, row, iv, k)
                state[2, u] -= before
                nrow = nodes[nv]
                prefetch(nrow, 0)
                prefetch(nrow, ND_META - 1)
                u += 1


@kernel
def _crossing_many(nodes, A, memo, cols, out):
    root = nodes[0]
    sm = root[ND_SLAB:]
    d = root[ND_SLAB + SL_D]
    for t in range(cols.shape[0]):
        out[t] = slab_sum_k(A, sm, cols[t], d, memo)


def _root_columns(ends_x: np.ndarray, xs: np.ndarray) -> np.ndarray:
    r = np.searchsorted(ends_x, xs, side="right")
    hit = np.zeros(len(xs), dtype=bool)
    nz = r > 0
    hit[nz] = ends_x[r[nz] - 1] == xs[nz]
    return np.where(hit, 2 * r - 1, 2 * r).astype(np.int64)


@dataclass
class _NodeSpec:
    ylo: int
    n: int
    ends_seg: np.ndarray  # endpoint owners (height ranks), in x-order
    ends_is_end: np.ndarray


def _table_bits(table: np.ndarray) -> int:
    """Bits for ``table`` with each column stored at the width of its largest value."""
    if table.size == 0:
        return 0
    widths = [max(1, int(c)).bit_length() for c in table.max(axis=0)]
    return len(table) * sum(widths)


class SegmentIndex:
    """Static segment-selection index over horizontal segments.

    Build with :func:`build_segment_index`.  Query coordinates are mapped to
    the root's rank space by :meth:`map_time_to_root`.
    """

    def __init__(self, *, delta, sample_rate, backend, ends_x, nodes, words, slab_arrays,
                 seg_x1, seg_x2, seg_y, labels):
        if backend not in ("direct", "memoized"):
            raise ValueError(f"unknown backend {backend!r}")
        self.delta = int(delta)
        self.sample_rate = int(sample_rate)
        self.backend = backend
        self.ends_x = ends_x
        self.nodes = nodes
        self.words = words
        self.slab_arrays = tuple(slab_arrays)
        self.seg_x1 = seg_x1
        self.seg_x2 = seg_x2
        self.seg_y = seg_y
        self.labels = labels

    @property
    def n(self) -> int:
        return len(self.seg_x1)

    def __len__(self):
        return self.n

    @property
    def memo(self) -> bool:
        return self.backend == "memoized"

    @property
    def internal_nodes(self) -> int:
        return len(self.nodes)

    def _shape(self, v: int) -> tuple[int, int, int, int]:
        """``(m, D, q, first_child)`` of internal node ``v``."""
        row = self.nodes[v]
        return (int(row[ND_SLAB + SL_M]), int(row[ND_SLAB + SL_D]), int(row[ND_SLAB + SL_Q]),
                int(row[ND_CHILD]))

    def height(self) -> int:
        """Internal nodes on the longest root-to-leaf path."""
        if self.internal_nodes == 0:
            return 0
        depth = np.zeros(self.internal_nodes, dtype=np.int64)
        depth[0] = 1
        for v in range(self.internal_nodes):
            n, d, q, cb = self._shape(v)
            for k in range(1, d + 1):
                if min(q, n - (k - 1) * q) >= 2:
                    depth[cb + k - 1] = depth[v] + 1
        return int(depth.max())

    def segment(self, rank: int) -> Segment:
        return Segment(int(self.seg_x1[rank]), int(self.seg_x2[rank]), int(self.seg_y[rank]),
                       int(self.labels[rank]))

    # -- queries -------------------------------------------------------------

    def map_time_to_root(self, x: int) -> int:
        return int(_root_columns(self.ends_x, np.array([x], dtype=np.int64))[0])

    def root_columns(self, xs) -> np.ndarray:
        return _root_columns(self.ends_x, np.ascontiguousarray(xs, dtype=np.int64))

    def count_crossing(self, x: int) -> int:
        return int(self.count_crossing_many([x])[0])

    def count_crossing_many(self, xs) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=np.int64)
        if self.n == 0:
            return np.zeros(len(xs), dtype=np.int64)
        if self.n == 1:
            return ((self.seg_x1[0] <= xs) & (xs <= self.seg_x2[0])).astype(np.int64)
        cols = self.root_columns(xs)
        out = np.zeros(len(xs), dtype=np.int64)
        ok = (cols >= 1) & (cols <= 4 * self.n)
        sub = np.zeros(int(ok.sum()), dtype=np.int64)
        _crossing_many(self.nodes, self.slab_arrays, self.memo, np.ascontiguousarray(cols[ok]), sub)
        out[ok] = sub
        return out

    def select_ranks(self, xs, ranks) -> np.ndarray:
        """Height ranks (indices into the leaf table) of ``segment_select(x, j)``; -1 if out of range."""
        xs = np.ascontiguousarray(xs, dtype=np.int64)
        ranks = np.ascontiguousarray(ranks, dtype=np.int64)
        if self.n == 1:
            out = np.full(len(xs), -1, dtype=np.int64)
            out[(ranks == 1) & (self.seg_x1[0] <= xs) & (xs <= self.seg_x2[0])] = 0
            return out
        return self.select_at_columns(self.root_columns(xs) if self.n else xs, ranks)

    def select_at_columns(self, cols, ranks, trusted: bool = False) -> np.ndarray:
        """Like :meth:`select_ranks` but with root columns already mapped (``n >= 2``).

        ``trusted`` skips the range check; every rank must then lie in
        ``1 .. count`` at its column.
        """
        cols = np.ascontiguousarray(cols, dtype=np.int64)
        ranks = np.ascontiguousarray(ranks, dtype=np.int64)
        out = np.full(len(cols), -1, dtype=np.int64)
        if self.n >= 2:
            scratch = np.zeros(self.delta + 2, dtype=np.int64)
            state = np.zeros((4, GROUP), dtype=np.int64)
            _descend_group(self.nodes, self.words, self.slab_arrays, self.memo, cols, ranks, out, scratch,
                           not trusted, state)
        return out

    def segment_select(self, x: int, j: int) -> Segment:
        r = int(self.select_ranks([x], [j])[0])
        if r < 0:
            raise RankOutOfRange(f"rank {j} exceeds the {self.count_crossing(x)} segments crossing x={x}")
        return self.segment(r)

    def report_range(self, x: int, j: int, length: int) -> list[Segment]:
        """Segments of crossing ranks ``j .. j + length - 1`` at ``x``, bottom to top."""
        if length < 0 or j < 1:
            raise RankOutOfRange(f"bad range start {j} / length {length}")
        if length == 0:
            return []
        total = self.count_crossing(x)
        if j + length - 1 > total:
            raise RankOutOfRange(f"range {j}..{j + length - 1} exceeds the {total} segments crossing x={x}")
        ranks = self.select_ranks(np.full(length, x), np.arange(j, j + length))
        return [self.segment(int(r)) for r in ranks]

    def trace(self, x: int, j: int) -> list[tuple[int, int, int, int, int, int]]:
        """Descent steps ``(node, column, rank, k, child_column, child_rank)``."""
        steps: list[tuple[int, int, int, int, int, int]] = []
        if self.n < 2:
            return steps
        v, iv, jv = 0, self.map_time_to_root(x), j
        if not 1 <= iv <= 4 * self.n:
            raise RankOutOfRange(f"no segment crosses x={x}")
        while True:
            k, ic, jc = (int(t) for t in _step(self.nodes, self.words, self.slab_arrays, self.memo, v, iv, jv))
            if k == 0:
                raise RankOutOfRange(f"rank {jv} too large at node {v}")
            steps.append((v, iv, jv, k, ic, jc))
            n, d, q, cb = self._shape(v)
            if min(q, n - (k - 1) * q) == 1:
                return steps
            v, iv, jv = cb + k - 1, ic, jc

    # -- introspection ---------------------------------------------------------

    def node_range(self, v: int) -> tuple[int, int]:
        """Height ranks ``[lo, hi)`` stored below internal node ``v``."""
        lo = int(self.nodes[v, ND_YLO])
        return lo, lo + self._shape(v)[0]

    def child(self, v: int, k: int) -> int | None:
        n, d, q, cb = self._shape(v)
        return cb + k - 1 if min(q, n - (k - 1) * q) >= 2 else None

    def slab_index(self, v: int) -> SlabIndex:
        return SlabIndex(self.slab_arrays, self.nodes[v, ND_SLAB:], self.backend)

    def sequence_meta(self, v: int) -> np.ndarray:
        return np.ascontiguousarray(self.nodes[v, ND_SEQ:ND_SLAB])

    def sequence(self, v: int) -> list[int]:
        meta = self.sequence_meta(v)
        return [int(seq_access(self.words, meta, i)) for i in range(1, int(meta[SEQ_N]) + 1)]

    def size_report(self) -> dict:
        """Payload bits per component."""
        seq = self.nodes[:, ND_SEQ:ND_SLAB]
        seq_bits = sum(packed.payload_bits(int(r[SEQ_N]), int(r[SEQ_SIGMA]), int(r[SEQ_S])) for r in seq)
        sb = slab_bits(self.slab_arrays, self.nodes[:, ND_SLAB:])
        xw = max(1, int(self.ends_x.max()).bit_length()) if self.n else 1
        yw = max(1, int(self.seg_y.max()).bit_length()) if self.n else 1
        report = {
            "sequences": seq_bits,
            "slabs": sb["total"],
            "root_endpoints": len(self.ends_x) * xw,
            "leaves": self.n * (2 * xw + yw),
            "labels": self.n * 32,
            "node_table": _table_bits(self.nodes),
        }
        report["total"] = sum(report.values())
        if "memo_tables" in sb:
            report["memo_cache"] = sb["memo_ids"] + sb["memo_tables"]
        return report

    def nbytes(self) -> int:
        """In-memory size of every array (fields are machine-width, unlike :meth:`size_report`)."""
        arrs = [self.ends_x, self.nodes, self.words, self.seg_x1, self.seg_x2, self.seg_y, self.labels,
                *self.slab_arrays]
        return int(sum(a.nbytes for a in arrs))


def build_segment_index(segs, delta: int | None = None, sample_rate: int = packed.DEFAULT_SAMPLE_RATE,
                        backend: str = "direct") -> SegmentIndex:
    """Build the index over a :class:`~verstring.euler.SegmentSet`-like object.

    Segments are ordered by ``(y, x1)``; all ``2n`` endpoint x-coordinates
    must be distinct.
    """
    x1 = np.asarray(segs.x1, dtype=np.int64)
    x2 = np.asarray(segs.x2, dtype=np.int64)
    y = np.asarray(segs.y, dtype=np.int64)
    labels = np.asarray(segs.label, dtype=np.int64)
    n = len(x1)
    if delta is None:
        delta = default_delta(n)
    if not 2 <= delta <= 64:
        raise InvariantViolation(f"delta must be in 2..64, got {delta}")
    if sample_rate < 1:
        raise InvariantViolation("sample rate must be positive")
    if np.any(x1 >= x2):
        raise InvariantViolation("every segment needs x1 < x2")
    order = np.lexsort((x1, y))
    x1, x2, y, labels = x1[order], x2[order], y[order], labels[order]

    ends = np.concatenate([x1, x2])
    owner = np.concatenate([np.arange(n), np.arange(n)])
    is_end = np.concatenate([np.zeros(n, dtype=np.int8), np.ones(n, dtype=np.int8)])
    xo = np.argsort(ends, kind="stable")
    ends_x = ends[xo]
    if n and np.any(ends_x[1:] == ends_x[:-1]):
        dup = int(ends_x[1:][ends_x[1:] == ends_x[:-1]][0])
        raise InvariantViolation(f"duplicate endpoint x-coordinate {dup}")

    pool = SlabPool()
    rows: list[list[int]] = []
    word_parts = []
    woff = 0
    if n >= 2:
        queue = [_NodeSpec(0, n, owner[xo], is_end[xo])]
        head = 0
        while head < len(queue):
            ns = queue[head]
            head += 1
            q, d = slab_shape(ns.n, delta)
            slab = (ns.ends_seg - ns.ylo) // q + 1
            npts = len(slab)
            sym = np.zeros(2 * npts, dtype=np.int64)
            sym[0::2] = slab
            words, s = packed.encode(sym, d + 1, sample_rate)
            seq_meta = [2 * npts, packed.symbol_width(d + 1), d + 1, s, woff]
            word_parts.append(words)
            woff += len(words)

            col = 2 * np.arange(npts, dtype=np.int64) + 1
            local = ns.ends_seg - ns.ylo
            lx1 = np.empty(ns.n, dtype=np.int64)
            lx2 = np.empty(ns.n, dtype=np.int64)
            starts = ns.ends_is_end == 0
            lx1[local[starts]] = col[starts]
            lx2[local[~starts]] = col[~starts]
            slab_meta = pool.add(lx1, lx2, np.arange(ns.n) // q + 1, ns.n, delta)

            rows.append([ns.ylo, len(queue)] + seq_meta + slab_meta)
            by_slab = np.argsort(slab, kind="stable")
            bounds = np.searchsorted(slab[by_slab], np.arange(1, d + 2))
            for k in range(1, d + 1):
                size = min(q, ns.n - (k - 1) * q)
                if size < 2:
                    continue
                part = by_slab[bounds[k - 1] : bounds[k]]
                queue.append(_NodeSpec(ns.ylo + (k - 1) * q, size, ns.ends_seg[part], ns.ends_is_end[part]))
        slab_arrays, _ = pool.finish(memoized=backend == "memoized")
    else:
        slab_arrays = empty_pool()
    if backend == "memoized" and n >= 2 and len(slab_arrays[A_CELL_PAT]) == 0:
        raise InvariantViolation("memo tables missing")

    return SegmentIndex(
        delta=delta,
        sample_rate=sample_rate,
        backend=backend,
        ends_x=np.ascontiguousarray(ends_x),
        nodes=np.array(rows, dtype=np.int64).reshape(-1, ND_META),
        words=np.concatenate(word_parts) if word_parts else np.zeros(0, np.uint64),
        slab_arrays=slab_arrays,
        seg_x1=x1,
        seg_x2=x2,
        seg_y=y,
        labels=labels,
    )
