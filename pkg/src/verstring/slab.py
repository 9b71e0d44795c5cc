"""Slab selection over rank-space segments.

Segments are split by height into ``D`` contiguous *slabs*.  The conceptual
grid ``P(i, j)`` counts segments of slabs ``1..j`` crossing column ``i``.  It
is never stored.  Instead, columns are cut into blocks of ``b = D * lg``
columns (``lg = ceil(log2 m)``) and every block into column groups of ``D``
columns.  Within a block, rows whose block-leftmost prefix counts are at most
``b`` apart share a *row group*; a group's representative is its bottom-left
value.

Storage is laid out for locality.  A block record (int32) holds the number
of row groups, the block's first cell id, the representatives and the bottom
row of each group.  A column-group record (int32) holds the group's leftmost
column normalised by the row's representative, followed by the ``D`` column
update codes packed four to a word.  A code is ``2 * slab + 1`` for a segment
ending just before the column, ``2 * slab`` for one starting there, else 0.

Two evaluation backends exist.  ``direct`` replays at most ``D - 1`` column
updates per probe.  ``memoized`` tabulates the cumulative update effect of
every distinct cell update pattern once, at build time.

All records of one or more slab structures live in a pool; a structure is a
row of int64 metadata (``SL_*`` fields) holding its shape and pool offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._jit import helper, kernel
from .errors import InternalInconsistency, InvariantViolation, RankOutOfRange

DEFAULT_MAX_DELTA = 64

SL_M, SL_D, SL_B, SL_Q, SL_NBLOCKS, SL_LG, SL_BLK_OFF, SL_CG_OFF, SL_CELL_OFF = range(9)
SL_META = 9

# index of each pool array inside the tuple handed to kernels
A_BLK, A_CG, A_CELL_PAT, A_TAB_OFF, A_TAB = range(5)
POOL_FIELDS = ("blk", "cg", "cell_pat", "tab_off", "tab")
POOL_DTYPES = (np.int32, np.int32, np.int32, np.int64, np.int8)


def ceil_log2(x: int) -> int:
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0


def default_delta(m: int) -> int:
    """``max(2, ceil(sqrt(ceil(log2 m))))``, capped at 64."""
    return min(DEFAULT_MAX_DELTA, max(2, math.ceil(math.sqrt(ceil_log2(max(m, 2))))))


def slab_shape(m: int, delta: int) -> tuple[int, int]:
    """``(q, D)``: slab height ``ceil(m / delta)`` and effective slab count."""
    if m == 0:
        return 1, 1
    q = -(-m // delta)
    return q, -(-m // q)


def block_width(m: int, d: int) -> tuple[int, int]:
    lg = max(1, ceil_log2(m))
    return d * lg, lg


def block_record_len(d: int) -> int:
    return 2 + 2 * d


def cg_record_len(d: int) -> int:
    return d + (d + 3) // 4


# -- rank-space input ----------------------------------------------------------


@dataclass(frozen=True)
class RankSpaceSegments:
    """``m`` segments with endpoints in ``1..4m`` and heights ``1..m``.

    Slab of a segment is ``(y - 1) // q + 1`` with ``q = ceil(m / delta)``.
    Each column of the prefix grid changes by at most one update: a segment
    contributes ``+1`` at ``x1`` and ``-1`` at ``x2 + 1``.
    """

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    delta: int

    def __post_init__(self):
        for name in ("x1", "x2", "y"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.int64))

    @property
    def m(self) -> int:
        return len(self.x1)

    @property
    def ncols(self) -> int:
        return 4 * self.m

    @property
    def q(self) -> int:
        return slab_shape(self.m, self.delta)[0]

    @property
    def d(self) -> int:
        return slab_shape(self.m, self.delta)[1]

    @property
    def slab(self) -> np.ndarray:
        return (self.y - 1) // self.q + 1

    def check(self) -> None:
        m = self.m
        if self.delta < 2:
            raise InvariantViolation("delta must be at least 2")
        if not (len(self.x2) == len(self.y) == m):
            raise InvariantViolation("x1, x2 and y must have equal lengths")
        if m == 0:
            return
        if not np.array_equal(np.sort(self.y), np.arange(1, m + 1)):
            raise InvariantViolation("y coordinates must be a permutation of 1..m")
        if np.any(self.x1 >= self.x2) or self.x1.min() < 1 or self.x2.max() > 4 * m:
            raise InvariantViolation("need 1 <= x1 < x2 <= 4m for every segment")
        ends = np.concatenate([self.x1, self.x2])
        if len(np.unique(ends)) != len(ends):
            raise InvariantViolation("segment endpoints must be distinct")
        upd = np.concatenate([self.x1, self.x2[self.x2 < 4 * m] + 1])
        vals, counts = np.unique(upd, return_counts=True)
        if np.any(counts > 1):
            raise InvariantViolation(f"column {int(vals[counts > 1][0])} receives two updates")

    @classmethod
    def from_pairs(cls, pairs, delta: int) -> "RankSpaceSegments":
        """Segments listed bottom to top as ``(x1, x2)``."""
        pairs = list(pairs)
        x1 = [p[0] for p in pairs]
        x2 = [p[1] for p in pairs]
        return cls(np.array(x1, dtype=np.int64), np.array(x2, dtype=np.int64), np.arange(1, len(pairs) + 1), delta)




# -- build kernels ---------------------------------------------------------------


@njit(cache=True)
def _build_one(x1, x2, slab, d, b, ncols, blk, cg):
    """Fill one structure's records (local offsets).  Returns #row groups, or -column on a clash."""
    m = x1.shape[0]
    upd = np.zeros(ncols + 2, dtype=np.int64)
    for k in range(m):
        c = x1[k]
        if upd[c] != 0:
            return -c
        upd[c] = 2 * slab[k]
        c = x2[k] + 1
        if c <= ncols:
            if upd[c] != 0:
                return -c
            upd[c] = 2 * slab[k] + 1
    br = 2 + 2 * d
    cr = d + (d + 3) // 4
    cnt = np.zeros(d + 1, dtype=np.int64)
    pref = np.zeros(d + 1, dtype=np.int64)
    rowmap = np.zeros(d, dtype=np.int64)
    reps = np.zeros(d, dtype=np.int64)
    ng_total = 0
    ncell = 0
    cur = 0
    for c in range(1, ncols + 1):
        u = upd[c]
        if u != 0:
            if u & 1:
                cnt[u >> 1] -= 1
            else:
                cnt[u >> 1] += 1
        g = (c - 1) // d
        o = c - 1 - g * d
        if u != 0:
            w = cg[g * cr + d + (o >> 2)] + (u << (8 * (o & 3)))
            cg[g * cr + d + (o >> 2)] = np.int32(w)
        if o == 0:
            acc = 0
            for r in range(1, d + 1):
                acc += cnt[r]
                pref[r] = acc
            if (c - 1) % b == 0:
                rec = ((c - 1) // b) * br
                ng = 1
                reps[0] = pref[1]
                blk[rec + 2] = pref[1]
                blk[rec + 2 + d] = 1
                rowmap[0] = 0
                for r in range(2, d + 1):
                    if pref[r] - pref[r - 1] > b:
                        reps[ng] = pref[r]
                        blk[rec + 2 + ng] = pref[r]
                        blk[rec + 2 + d + ng] = r
                        ng += 1
                    rowmap[r - 1] = ng - 1
                blk[rec] = ng
                blk[rec + 1] = ncell
                cur = ng
                ng_total += ng
            for r in range(1, d + 1):
                cg[g * cr + r - 1] = pref[r] - reps[rowmap[r - 1]]
            ncell += cur
    return ng_total


@helper
def _code_at(cg, crec, d, o):
    """Update code of local column ``o`` (0-based) in a column-group record."""
    return (np.int64(cg[crec + d + (o >> 2)]) >> (8 * (o & 3))) & 0xFF


@njit(cache=True)
def _cell_patterns(blk, cg, metas, dmax, out):
    """One row per cell: ``[h, width, code_2 .. code_width]`` (0-padded).

    ``code`` is 0 for no update affecting the cell, else ``2 * L + end_bit`` with
    ``L`` the lowest local row the update reaches.
    """
    for v in range(metas.shape[0]):
        m = metas[v, SL_M]
        d = metas[v, SL_D]
        b = metas[v, SL_B]
        lg = metas[v, SL_LG]
        ncols = 4 * m
        br = 2 + 2 * d
        cr = d + (d + 3) // 4
        for bi in range(metas[v, SL_NBLOCKS]):
            rec = metas[v, SL_BLK_OFF] + bi * br
            ng = blk[rec]
            cb = metas[v, SL_CELL_OFF] + blk[rec + 1]
            for gl in range(lg):
                cs = bi * b + gl * d + 1
                if cs > ncols:
                    break
                width = min(d, ncols - cs + 1)
                crec = metas[v, SL_CG_OFF] + ((cs - 1) // d) * cr
                for l in range(ng):
                    lo = np.int64(blk[rec + 2 + d + l])
                    hi = np.int64(blk[rec + 2 + d + l + 1]) - 1 if l + 1 < ng else d
                    row = cb + gl * ng + l
                    out[row, 0] = hi - lo + 1
                    out[row, 1] = width
                    for k in range(1, width):
                        u = _code_at(cg, crec, d, k)
                        code = 0
                        if u != 0:
                            s = u >> 1
                            if s <= hi:
                                loc = s - lo + 1
                                if loc < 1:
                                    loc = 1
                                code = 2 * loc + (u & 1)
                        out[row, 1 + k] = code


@njit(cache=True)
def _pattern_tables(pats, tab_off, tab):
    for p in range(pats.shape[0]):
        h = pats[p, 0]
        width = pats[p, 1]
        o = tab_off[p]
        for r in range(h):
            tab[o + r] = 0
        for c in range(1, width):
            code = pats[p, 1 + c]
            for r in range(h):
                val = tab[o + (c - 1) * h + r]
                if code != 0 and (code >> 1) <= r + 1:
                    if code & 1:
                        val -= 1
                    else:
                        val += 1
                tab[o + c * h + r] = val


# -- query kernels -----------------------------------------------------------------


@helper
def _locate(A, meta, i):
    """``(blk, g, cs, brec, ng)`` for column ``i``: block, column group, its first column,
    block record offset and number of row groups."""
    d = meta[SL_D]
    blk = (i - 1) // meta[SL_B]
    g = (i - 1) // d
    brec = meta[SL_BLK_OFF] + blk * (2 + 2 * d)
    return blk, g, g * d + 1, brec, np.int64(A[A_BLK][brec])


@helper
def _group_hi(A, brec, d, ng, l):
    return np.int64(A[A_BLK][brec + 2 + d + l + 1]) - 1 if l + 1 < ng else d


@helper
def _cell_value(A, meta, i, r, memo, blk, g, cs, brec, ng, l):
    """``P(i, r)`` for a row ``r`` known to lie in row group ``l``."""
    d = meta[SL_D]
    crec = meta[SL_CG_OFF] + g * (d + ((d + 3) >> 2))
    cg = A[A_CG]
    val = np.int64(cg[crec + r - 1]) + np.int64(A[A_BLK][brec + 2 + l])
    if i == cs:
        return val
    if memo:
        lo = np.int64(A[A_BLK][brec + 2 + d + l])
        hi = _group_hi(A, brec, d, ng, l)
        cell = meta[SL_CELL_OFF] + np.int64(A[A_BLK][brec + 1]) + (g - blk * meta[SL_LG]) * ng + l
        pat = A[A_CELL_PAT][cell]
        return val + A[A_TAB][A[A_TAB_OFF][pat] + (i - cs) * (hi - lo + 1) + r - lo]
    for o in range(1, i - cs + 1):
        u = _code_at(cg, crec, d, o)
        s = u >> 1
        # branch-free: +1 for a start, -1 for an end, in slab s <= r
        val += np.int64((s != 0) & (s <= r)) * (1 - 2 * (u & 1))
    return val


@helper
def _group_of(A, brec, d, ng, r):
    """Row group (0-based) holding row ``r``."""
    lo = 0
    hi = ng - 1
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if A[A_BLK][brec + 2 + d + mid] <= r:
            lo = mid
        else:
            hi = mid - 1
    return lo


@helper
def _value(A, meta, i, r, memo):
    """``P(i, r)`` for ``1 <= i <= 4m`` and ``1 <= r <= D``."""
    blk, g, cs, brec, ng = _locate(A, meta, i)
    l = _group_of(A, brec, meta[SL_D], ng, r)
    return _cell_value(A, meta, i, r, memo, blk, g, cs, brec, ng, l)


@helper
def slab_sum_k(A, meta, i, j, memo):
    if i < 1 or j < 1:
        return np.int64(0)
    return _value(A, meta, i, j, memo)


@helper
def _select_core(A, meta, i, j, memo, blk, g, cs, brec, ng):
    d = meta[SL_D]
    blkarr = A[A_BLK]
    # predecessor of j among representatives (<= D values)
    lo = 0
    hi = ng
    while lo < hi:
        mid = (lo + hi) >> 1
        if blkarr[brec + 2 + mid] <= j:
            lo = mid + 1
        else:
            hi = mid
    pred = lo - 1
    l = pred if pred > 0 else 0
    while l < ng - 1:
        top = np.int64(blkarr[brec + 2 + d + l + 1]) - 1
        if _cell_value(A, meta, i, top, memo, blk, g, cs, brec, ng, l) >= j:
            break
        l += 1
    # smallest row of group l reaching j; rows are non-decreasing
    a = np.int64(blkarr[brec + 2 + d + l])
    z = _group_hi(A, brec, d, ng, l)
    while a < z:
        mid = (a + z) >> 1
        if _cell_value(A, meta, i, mid, memo, blk, g, cs, brec, ng, l) >= j:
            z = mid
        else:
            a = mid + 1
    return a, pred, l


@helper
def select_unchecked(A, meta, i, j, memo):
    """Slab selection assuming ``1 <= j <= P(i, D)``; see :func:`slab_select_k`."""
    blk, g, cs, brec, ng = _locate(A, meta, i)
    return _select_core(A, meta, i, j, memo, blk, g, cs, brec, ng)


@helper
def select_with_prefix(A, meta, i, j, memo):
    """``(k, P(i, k - 1))`` assuming ``1 <= j <= P(i, D)``."""
    blk, g, cs, brec, ng = _locate(A, meta, i)
    k, pred, l = _select_core(A, meta, i, j, memo, blk, g, cs, brec, ng)
    if k == 1:
        return k, np.int64(0)
    if k - 1 < A[A_BLK][brec + 2 + meta[SL_D] + l]:
        l -= 1
    return k, _cell_value(A, meta, i, k - 1, memo, blk, g, cs, brec, ng, l)


@helper
def select_scan(A, meta, i, j, scratch):
    """Direct-backend ``(k, P(i, k - 1))`` by one pass over the column.

    Replays the cell's updates once into per-slab net counts (``scratch`` has
    at least ``D + 1`` zeroed entries and is left zeroed), then walks rows
    upward.  Assumes ``1 <= j <= P(i, D)``.
    """
    d = meta[SL_D]
    blk, g, cs, brec, ng = _locate(A, meta, i)
    crec = meta[SL_CG_OFF] + g * (d + ((d + 3) >> 2))
    cg = A[A_CG]
    blkarr = A[A_BLK]
    for o in range(1, i - cs + 1):
        u = _code_at(cg, crec, d, o)
        scratch[u >> 1] += 1 - 2 * (u & 1)
    scratch[0] = 0
    l = 0
    nxt = np.int64(blkarr[brec + 2 + d + 1]) if ng > 1 else d + 1
    rep = np.int64(blkarr[brec + 2])
    run = np.int64(0)
    prev = np.int64(0)
    k = d
    for r in range(1, d + 1):
        if r == nxt:
            l += 1
            rep = np.int64(blkarr[brec + 2 + l])
            nxt = np.int64(blkarr[brec + 2 + d + l + 1]) if l + 1 < ng else d + 1
        run += scratch[r]
        scratch[r] = 0
        val = np.int64(cg[crec + r - 1]) + rep + run
        if val >= j:
            k = r
            for t in range(r + 1, d + 1):
                scratch[t] = 0
            break
        prev = val
    return k, prev


@helper
def slab_select_k(A, meta, i, j, memo):
    """``(k, pred_group, chosen_group)``; ``k = 0`` when ``j`` exceeds the crossing count.

    Groups are 0-based within the block; ``pred_group = -1`` when ``j`` is below
    every representative.
    """
    if i < 1 or j < 1 or _value(A, meta, i, meta[SL_D], memo) < j:
        return np.int64(0), np.int64(-1), np.int64(-1)
    return select_unchecked(A, meta, i, j, memo)


@kernel
def _grid(A, meta, memo, out):
    for i in range(1, 4 * meta[SL_M] + 1):
        for r in range(1, meta[SL_D] + 1):
            out[i - 1, r - 1] = _value(A, meta, i, r, memo)


@kernel
def _select_many(A, meta, cols, ranks, memo, out):
    for t in range(cols.shape[0]):
        out[t] = slab_select_k(A, meta, cols[t], ranks[t], memo)[0]


# -- pools --------------------------------------------------------------------------


class SlabPool:
    """Accumulates any number of slab structures into shared record arrays."""

    def __init__(self):
        self._blk: list[np.ndarray] = []
        self._cg: list[np.ndarray] = []
        self._metas: list[list[int]] = []
        self._off = {"blk": 0, "cg": 0, "cell": 0}
        self.dmax = 1

    def add(self, x1, x2, slab, m: int, delta: int) -> list[int]:
        """Append one structure; ``slab`` already assigned.  Returns its meta row."""
        q, d = slab_shape(m, delta)
        b, lg = block_width(m, d)
        ncols = 4 * m
        nblocks = -(-ncols // b) if ncols else 0
        ncg = -(-ncols // d) if ncols else 0
        blk = np.zeros(nblocks * block_record_len(d), dtype=np.int32)
        cg = np.zeros(ncg * cg_record_len(d), dtype=np.int32)
        ncells = 0
        if m:
            ng = _build_one(
                np.ascontiguousarray(x1, dtype=np.int64),
                np.ascontiguousarray(x2, dtype=np.int64),
                np.ascontiguousarray(slab, dtype=np.int64),
                d, b, ncols, blk, cg,
            )
            if ng < 0:
                raise InvariantViolation(f"column {-ng} receives two updates")
            last = (nblocks - 1) * block_record_len(d)
            ncells = int(blk[last + 1]) + int(blk[last]) * (-(-(ncols - (nblocks - 1) * b) // d))
        off = self._off
        meta = [m, d, b, q, nblocks, lg, off["blk"], off["cg"], off["cell"]]
        self._blk.append(blk)
        self._cg.append(cg)
        off["blk"] += len(blk)
        off["cg"] += len(cg)
        off["cell"] += ncells
        self._metas.append(meta)
        self.dmax = max(self.dmax, d)
        return meta

    def finish(self, memoized: bool) -> tuple[tuple, np.ndarray]:
        blk = np.concatenate(self._blk) if self._blk else np.zeros(0, np.int32)
        cg = np.concatenate(self._cg) if self._cg else np.zeros(0, np.int32)
        metas = np.array(self._metas, dtype=np.int64).reshape(-1, SL_META)
        pat, tab_off, tab = memo_tables(blk, cg, metas, self._off["cell"], self.dmax, memoized)
        return (blk, cg, pat, tab_off, tab), metas


def memo_tables(blk, cg, metas, ncells: int, dmax: int, memoized: bool):
    if not memoized or ncells == 0:
        return np.zeros(0, np.int32), np.zeros(1, np.int64), np.zeros(0, np.int8)
    codes = np.zeros((ncells, dmax + 1), dtype=np.uint8)
    _cell_patterns(blk, cg, metas, dmax, codes)
    pats, inverse = np.unique(codes, axis=0, return_inverse=True)
    sizes = pats[:, 0].astype(np.int64) * pats[:, 1].astype(np.int64)
    tab_off = np.zeros(len(pats) + 1, dtype=np.int64)
    np.cumsum(sizes, out=tab_off[1:])
    tab = np.zeros(int(tab_off[-1]), dtype=np.int8)
    _pattern_tables(pats.astype(np.int64), tab_off, tab)
    return inverse.reshape(-1).astype(np.int32), tab_off, tab


def empty_pool() -> tuple:
    return tuple(np.zeros(0 if f != "tab_off" else 1, dt) for f, dt in zip(POOL_FIELDS, POOL_DTYPES))


# -- normalised cells ---------------------------------------------------------------


@dataclass(frozen=True)
class CellCode:
    """A cell minus its representative.

    ``leftcol[r]`` is the normalised value of local row ``r + 1`` in the cell's
    first column; ``updates[c]`` describes local column ``c + 2`` as ``+L`` (a
    segment starts), ``-L`` (one ends) or ``0``, where ``L`` is the lowest local
    row the change reaches.
    """

    leftcol: tuple
    updates: tuple
    rows: tuple = field(default=(1, 1), compare=False)

    @property
    def height(self) -> int:
        return len(self.leftcol)

    @property
    def width(self) -> int:
        return len(self.updates) + 1

    def pattern(self) -> tuple:
        """The update part of the code; the memo table is keyed by this."""
        enc = tuple(0 if u == 0 else 2 * abs(u) + (u < 0) for u in self.updates)
        return (self.height, self.width) + enc

    def pack(self) -> int:
        """Bit-encoding: leftmost column then per-column updates, fixed widths."""
        lw = max(1, max((abs(v) for v in self.leftcol), default=0).bit_length() + 1)
        uw = max(1, (2 * self.height + 1).bit_length())
        out = 0
        for v in self.leftcol:
            out = (out << lw) | (v & ((1 << lw) - 1))
        for u in self.pattern()[2:]:
            out = (out << uw) | u
        return out


def cell_access(code: CellCode, col: int, row: int) -> int:
    """Normalised value at local ``(col, row)``, both 1-based."""
    if not (1 <= col <= code.width and 1 <= row <= code.height):
        raise IndexError(f"({col}, {row}) outside a {code.width}x{code.height} cell")
    val = code.leftcol[row - 1]
    for u in code.updates[: col - 1]:
        if u and abs(u) <= row:
            val += 1 if u > 0 else -1
    return val


def cell_predecessor(code: CellCode, col: int, target: int) -> int:
    """Smallest local row whose value in column ``col`` is at least ``target``."""
    for row in range(1, code.height + 1):
        if cell_access(code, col, row) >= target:
            return row
    raise InternalInconsistency(f"no row of the cell reaches {target} in column {col}")




# -- the index ------------------------------------------------------------------------


class SlabIndex:
    """Answers ``slab_sum`` / ``slab_select`` over one rank-space segment set."""

    def __init__(self, arrays: tuple, meta: np.ndarray, backend: str = "direct"):
        if backend not in ("direct", "memoized"):
            raise ValueError(f"unknown backend {backend!r}")
        if backend == "memoized" and len(arrays[A_CELL_PAT]) == 0 and meta[SL_M] > 0:
            raise ValueError("memoized backend needs pattern tables")
        self.arrays = arrays
        self.meta = np.ascontiguousarray(meta, dtype=np.int64)
        self.backend = backend

    @property
    def memo(self) -> bool:
        return self.backend == "memoized"

    m = property(lambda self: int(self.meta[SL_M]))
    d = property(lambda self: int(self.meta[SL_D]))
    b = property(lambda self: int(self.meta[SL_B]))
    ncols = property(lambda self: 4 * int(self.meta[SL_M]))

    def _check_col(self, i: int):
        if not 1 <= i <= self.ncols:
            raise IndexError(f"column {i} outside 1..{self.ncols}")

    def slab_sum(self, i: int, j: int) -> int:
        self._check_col(i)
        if not 0 <= j <= self.d:
            raise IndexError(f"slab {j} outside 0..{self.d}")
        return int(slab_sum_k(self.arrays, self.meta, i, j, self.memo))

    def crossing(self, i: int) -> int:
        return self.slab_sum(i, self.d)

    def slab_select(self, i: int, j: int) -> int:
        return self.slab_select_detail(i, j)[0]

    def slab_select_detail(self, i: int, j: int) -> tuple[int, int, int]:
        """``(k, predecessor group, group holding the answer)`` (groups 0-based)."""
        self._check_col(i)
        k, pred, grp = slab_select_k(self.arrays, self.meta, i, j, self.memo)
        if k == 0:
            raise RankOutOfRange(f"rank {j} exceeds the crossing count at column {i}")
        return int(k), int(pred), int(grp)

    def grid(self) -> np.ndarray:
        """The full ``ncols x D`` prefix grid decoded from the structure."""
        out = np.zeros((self.ncols, self.d), dtype=np.int64)
        if self.m:
            _grid(self.arrays, self.meta, self.memo, out)
        return out

    def select_many(self, cols, ranks) -> np.ndarray:
        cols = np.ascontiguousarray(cols, dtype=np.int64)
        ranks = np.ascontiguousarray(ranks, dtype=np.int64)
        out = np.zeros(len(cols), dtype=np.int64)
        _select_many(self.arrays, self.meta, cols, ranks, self.memo, out)
        return out

    # structure introspection

    def block_of(self, i: int) -> int:
        return (i - 1) // self.b

    def _block_record(self, blk: int) -> np.ndarray:
        d = self.d
        rec = int(self.meta[SL_BLK_OFF]) + blk * block_record_len(d)
        return self.arrays[A_BLK][rec : rec + block_record_len(d)]

    def row_groups(self, blk: int) -> list[tuple[int, int, int]]:
        """``(lo_row, hi_row, representative)`` per row group of a block."""
        rec = self._block_record(blk)
        ng, d = int(rec[0]), self.d
        lows = [int(rec[2 + d + l]) for l in range(ng)]
        highs = [x - 1 for x in lows[1:]] + [d]
        return [(lows[l], highs[l], int(rec[2 + l])) for l in range(ng)]

    def _cg_record(self, g: int) -> np.ndarray:
        cr = cg_record_len(self.d)
        off = int(self.meta[SL_CG_OFF]) + g * cr
        return self.arrays[A_CG][off : off + cr]

    def column_update(self, i: int) -> int:
        """Raw update code of column ``i``: ``2 * slab`` (start), ``2 * slab + 1`` (end) or 0."""
        self._check_col(i)
        d = self.d
        g, o = divmod(i - 1, d)
        word = int(self._cg_record(g)[d + o // 4])
        return (word >> (8 * (o % 4))) & 0xFF

    def cell_code(self, i: int, j: int) -> CellCode:
        """Normalised code of the cell containing grid entry ``(i, j)``."""
        self._check_col(i)
        d = self.d
        g = (i - 1) // d
        cs = g * d + 1
        lo, hi, _ = next(grp for grp in self.row_groups(self.block_of(i)) if grp[0] <= j <= grp[1])
        rec = self._cg_record(g)
        leftcol = tuple(int(rec[r - 1]) for r in range(lo, hi + 1))
        width = min(d, self.ncols - cs + 1)
        ups = []
        for c in range(cs + 1, cs + width):
            u = self.column_update(c)
            s = u >> 1
            if u == 0 or s > hi:
                ups.append(0)
            else:
                loc = max(1, s - lo + 1)
                ups.append(-loc if u & 1 else loc)
        return CellCode(leftcol, tuple(ups), (lo, hi))

    def cell_pattern_id(self, i: int, j: int) -> int:
        """Memo-table id of the cell containing ``(i, j)`` (memoized backend only)."""
        if not self.memo:
            raise ValueError("pattern ids exist only for the memoized backend")
        d = self.d
        blk = self.block_of(i)
        g = (i - 1) // d
        rec = self._block_record(blk)
        groups = self.row_groups(blk)
        l = next(k for k, grp in enumerate(groups) if grp[0] <= j <= grp[1])
        cell = int(self.meta[SL_CELL_OFF]) + int(rec[1]) + (g - blk * int(self.meta[SL_LG])) * int(rec[0]) + l
        return int(self.arrays[A_CELL_PAT][cell])

    def size_report(self) -> dict:
        return slab_bits(self.arrays, self.meta[None, :])

    def payload_bits(self) -> int:
        return self.size_report()["total"]


def slab_bits(arrays: tuple, metas: np.ndarray) -> dict:
    """Encoded size, in bits, of one or more structures (memo tables reported apart).

    Field widths: column update ``ceil(log2(D + 1)) + 1``; representative
    ``ceil(log2(m + 1))``; group bottoms ``ceil(log2 D)``; leftmost cell
    columns at the width of the observed value range; per-block offsets
    ``ceil(log2(cells + 1))``.
    """
    out = dict.fromkeys(("updates", "representatives", "row_groups", "leftcol", "offsets"), 0)
    blk, cg = arrays[A_BLK], arrays[A_CG]
    for meta in metas:
        m, d, nb = int(meta[SL_M]), int(meta[SL_D]), int(meta[SL_NBLOCKS])
        if m == 0:
            continue
        ncols = 4 * m
        ncg = -(-ncols // d)
        cr = cg_record_len(d)
        co = int(meta[SL_CG_OFF])
        left = cg[co : co + ncg * cr].reshape(ncg, cr)[:, :d]
        span = int(left.max()) - int(left.min()) + 1
        br = block_record_len(d)
        bo = int(meta[SL_BLK_OFF])
        recs = blk[bo : bo + nb * br].reshape(nb, br)
        ngroups = int(recs[:, 0].sum())
        ncells = int(recs[-1, 1]) + int(recs[-1, 0]) * (-(-(ncols - (nb - 1) * int(meta[SL_B])) // d))
        rw = max(1, ceil_log2(d))
        out["updates"] += ncols * (ceil_log2(d + 1) + 1)
        out["representatives"] += ngroups * max(1, ceil_log2(m + 1))
        out["row_groups"] += nb * max(1, ceil_log2(d + 1)) + ngroups * rw
        out["leftcol"] += ncg * d * max(1, ceil_log2(span))
        out["offsets"] += nb * max(1, ceil_log2(max(ncells, 1) + 1))
    out["total"] = sum(out.values())
    pats = arrays[A_CELL_PAT]
    if len(pats):
        u = len(arrays[A_TAB_OFF]) - 1
        out["memo_ids"] = len(pats) * max(1, ceil_log2(u))
        out["memo_tables"] = int(len(arrays[A_TAB])) * 8
    return out


def build_slab_index(segs: RankSpaceSegments, delta: int | None = None, backend: str = "direct") -> SlabIndex:
    """Build the slab structure; ``delta`` defaults to the segment set's own."""
    if delta is not None and delta != segs.delta:
        segs = RankSpaceSegments(segs.x1, segs.x2, segs.y, delta)
    if segs.delta > DEFAULT_MAX_DELTA:
        raise InvariantViolation(f"delta {segs.delta} above the cap {DEFAULT_MAX_DELTA}")
    segs.check()
    pool = SlabPool()
    meta = pool.add(segs.x1, segs.x2, segs.slab, segs.m, segs.delta)
    arrays, _ = pool.finish(memoized=backend == "memoized")
    return SlabIndex(arrays, np.array(meta, dtype=np.int64), backend)


# -- verification ---------------------------------------------------------------------


def sweep_grid(segs: RankSpaceSegments) -> np.ndarray:
    """``P`` as an ``ncols x D`` array, straight from the segment list."""
    ncols, d = segs.ncols, segs.d
    diff = np.zeros((ncols + 2, d + 1), dtype=np.int64)
    sl = segs.slab
    np.add.at(diff, (segs.x1, sl), 1)
    np.add.at(diff, (segs.x2 + 1, sl), -1)
    per_slab = np.cumsum(diff, axis=0)[1 : ncols + 1, 1:]
    return np.cumsum(per_slab, axis=1)


@dataclass
class GridReport:
    results: dict

    @property
    def ok(self) -> bool:
        return all(r[0] for r in self.results.values())

    def failures(self) -> list[str]:
        return [k for k, r in self.results.items() if not r[0]]

    def __str__(self):
        lines = []
        for name, (ok, cex) in self.results.items():
            lines.append(f"{name}: {'pass' if ok else 'FAIL ' + str(cex)}")
        return "\n".join(lines)


def verify_grid_properties(idx: SlabIndex, segs: RankSpaceSegments) -> GridReport:
    """Check the four block properties of the prefix grid against ``idx``'s row groups.

    The grid is re-swept from ``segs``; row groups and representatives come
    from the built index.  Each property reports its first counterexample.
    """
    res: dict = {}
    if segs.m == 0:
        return GridReport({k: (True, None) for k in ("adjacent_columns", "within_group", "distant_groups", "representatives", "row_groups")})
    P = sweep_grid(segs)
    ncols, d, b = P.shape[0], P.shape[1], idx.b

    jump = np.abs(np.diff(P, axis=0))
    bad = np.argwhere(jump > 1)
    res["adjacent_columns"] = (True, None) if len(bad) == 0 else (
        False, {"column": int(bad[0][0]) + 1, "row": int(bad[0][1]) + 1, "diff": int(jump[tuple(bad[0])])})

    cex = {k: None for k in ("within_group", "distant_groups", "representatives", "row_groups")}
    for blk in range(-(-ncols // b)):
        c0 = blk * b
        cols = P[c0 : min(c0 + b, ncols)]
        groups = idx.row_groups(blk)
        if cex["row_groups"] is None:
            lead = P[c0]
            expect_lows = [1] + [r for r in range(2, d + 1) if lead[r - 1] - lead[r - 2] > b]
            expect = [(lo, rep) for lo, rep in zip(expect_lows, [int(lead[lo - 1]) for lo in expect_lows])]
            got = [(lo, rep) for lo, _, rep in groups]
            if expect != got:
                cex["row_groups"] = {"block": blk, "expected": expect, "stored": got}
        for gi, (lo, hi, rep) in enumerate(groups):
            if cex["within_group"] is None and hi > lo:
                step = np.abs(np.diff(cols[:, lo - 1 : hi], axis=1))
                if step.size and step.max() > 2 * b:
                    cex["within_group"] = {"block": blk, "group": gi, "diff": int(step.max())}
            for gj in range(gi + 2, len(groups)):
                lo2, hi2, _ = groups[gj]
                gap = int(cols[:, lo2 - 1 : hi2].min()) - int(cols[:, lo - 1 : hi].max())
                if cex["distant_groups"] is None and gap <= b:
                    cex["distant_groups"] = {"block": blk, "groups": (gi, gj), "gap": gap}
            if cex["representatives"] is None:
                if gi >= 1:
                    below_top = groups[gi - 1][0]
                    mx = int(cols[:, :below_top].max())
                    if mx >= rep:
                        cex["representatives"] = {"block": blk, "group": gi, "below": mx, "rep": rep}
                if gi + 1 < len(groups):
                    mn = int(cols[:, groups[gi + 1][0] - 1 :].min())
                    if mn <= rep:
                        cex["representatives"] = {"block": blk, "group": gi, "above": mn, "rep": rep}
    for k, v in cex.items():
        res[k] = (v is None, v)
    return GridReport(res)
