"""Packed small-alphabet sequences with access/rank/select.

Symbols take ``w = ceil(log2 sigma)`` bits and never straddle a 64-bit word
(``64 // w`` per word).  The sequence is cut into sample blocks of ``S``
symbols; each block is stored as its directory entry (the count of every
symbol before the block, two 32-bit counts per word) immediately followed by
the block's symbol words, so a rank touches one contiguous region.

Rank inside a block counts whole words at a time: XOR with the broadcast
symbol, fold every field onto its lowest bit and popcount.

Kernels take ``(words, meta, ...)``; ``meta`` is a short int64 vector (see
``SEQ_*``) so one word pool can hold many sequences.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._jit import helper, kernel
from .errors import RankOutOfRange

# meta layout
SEQ_N, SEQ_W, SEQ_SIGMA, SEQ_S, SEQ_OFF = range(5)
SEQ_META = 5

DEFAULT_SAMPLE_RATE = 64

_U1 = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
# lowest bit of every field, per width
ONES = np.array(
    [0] + [sum(1 << (w * f) for f in range(64 // w)) for w in range(1, 33)], dtype=np.uint64
)


def symbol_width(sigma: int) -> int:
    return max(1, math.ceil(math.log2(sigma))) if sigma > 1 else 1


def block_shape(sigma: int, sample_rate: int) -> tuple[int, int, int]:
    """``(S, count_words, symbol_words)``; ``S`` is ``sample_rate`` rounded up to whole words."""
    spw = 64 // symbol_width(sigma)
    bw = max(1, -(-sample_rate // spw))
    return bw * spw, (sigma + 1) // 2, bw


def n_samples(n: int, s: int) -> int:
    return n // s + 1


@helper
def _popcount(x):
    x = x - ((x >> _U1) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@helper
def _count_eq(word, c, w, nf, spw):
    """Fields among the lowest ``nf`` of ``word`` equal to ``c``."""
    ones = ONES[w]
    y = word ^ (np.uint64(c) * ones)
    z = y
    for s in range(1, w):
        z |= y >> np.uint64(s)
    z &= ones
    if nf < spw:
        z &= (_U1 << np.uint64(nf * w)) - _U1
    return nf - _popcount(z)


@helper
def _geometry(meta):
    w = meta[SEQ_W]
    spw = 64 // w
    s = meta[SEQ_S]
    cw = (meta[SEQ_SIGMA] + 1) >> 1
    return w, spw, s, cw, cw + s // spw


@helper
def _count_before(words, rec, c):
    v = words[rec + (c >> 1)]
    if c & 1:
        v >>= np.uint64(32)
    return np.int64(v & np.uint64(0xFFFFFFFF))


@helper
def _field(word, f, w):
    return np.int64((word >> np.uint64(f * w)) & ((_U1 << np.uint64(w)) - _U1))


@helper
def seq_access(words, meta, i):
    """Symbol at 1-based position ``i`` (caller checks range)."""
    w, spw, s, cw, rlen = _geometry(meta)
    p = i - 1
    t = p // s
    o = p - t * s
    q = o // spw
    return _field(words[meta[SEQ_OFF] + t * rlen + cw + q], o - q * spw, w)


@helper
def seq_rank(words, meta, i, c):
    """Occurrences of ``c`` among the first ``i`` symbols."""
    w, spw, s, cw, rlen = _geometry(meta)
    t = i // s
    rec = meta[SEQ_OFF] + t * rlen
    cnt = _count_before(words, rec, c)
    r = i - t * s
    k = rec + cw
    while r >= spw:
        cnt += _count_eq(words[k], c, w, spw, spw)
        k += 1
        r -= spw
    if r > 0:
        cnt += _count_eq(words[k], c, w, r, spw)
    return cnt


@helper
def seq_access_rank(words, meta, i, c):
    """``(symbol at i, rank(i, c))`` for ``i >= 1`` with one directory lookup."""
    w, spw, s, cw, rlen = _geometry(meta)
    t = i // s
    rec = meta[SEQ_OFF] + t * rlen
    cnt = _count_before(words, rec, c)
    r = i - t * s
    k = rec + cw
    while r >= spw:
        cnt += _count_eq(words[k], c, w, spw, spw)
        k += 1
        r -= spw
    if r > 0:
        cnt += _count_eq(words[k], c, w, r, spw)
        return _field(words[k], r - 1, w), cnt
    if i == t * s:
        # position i closes the previous block
        p = i - 1
        t = p // s
        o = p - t * s
        q = o // spw
        return _field(words[meta[SEQ_OFF] + t * rlen + cw + q], o - q * spw, w), cnt
    return _field(words[k - 1], spw - 1, w), cnt


@kernel
def seq_select(words, meta, i, c):
    """Position of the ``i``-th ``c``; 0 if there are fewer than ``i``."""
    n = meta[SEQ_N]
    w, spw, s, cw, rlen = _geometry(meta)
    off = meta[SEQ_OFF]
    # last block whose preceding count is < i
    lo = 0
    hi = n // s
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _count_before(words, off + mid * rlen, c) < i:
            lo = mid
        else:
            hi = mid - 1
    rec = off + lo * rlen
    cnt = _count_before(words, rec, c)
    for p in range(lo * s, min(n, lo * s + s)):
        o = p - lo * s
        q = o // spw
        if _field(words[rec + cw + q], o - q * spw, w) == c:
            cnt += 1
            if cnt == i:
                return p + 1
    return 0


@njit(cache=True)
def _encode(symbols, sigma, w, s, cw, bw, out):
    n = symbols.shape[0]
    spw = 64 // w
    rlen = cw + bw
    run = np.zeros(sigma, dtype=np.int64)
    for t in range(n // s + 1):
        rec = t * rlen
        for c in range(sigma):
            out[rec + (c >> 1)] |= np.uint64(run[c]) << np.uint64(32 * (c & 1))
        for o in range(s):
            p = t * s + o
            if p >= n:
                break
            v = symbols[p]
            run[v] += 1
            q = o // spw
            out[rec + cw + q] |= np.uint64(v) << np.uint64((o - q * spw) * w)


def encode(symbols: np.ndarray, sigma: int, sample_rate: int = DEFAULT_SAMPLE_RATE):
    """Return ``(words, S)`` for a symbol array over ``0 .. sigma - 1``."""
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    n = len(symbols)
    if n >= 1 << 32:
        raise ValueError("sequences are limited to 2^32 symbols")
    s, cw, bw = block_shape(sigma, sample_rate)
    words = np.zeros(n_samples(n, s) * (cw + bw), dtype=np.uint64)
    _encode(symbols, sigma, symbol_width(sigma), s, cw, bw, words)
    return words, s


class PackedSequence:
    """Immutable sequence over ``0 .. sigma - 1`` with rank and select.

    Positions are 1-based, matching the usual rank/select conventions.
    """

    def __init__(self, symbols, sigma: int | None = None, sample_rate: int = DEFAULT_SAMPLE_RATE):
        arr = np.asarray(symbols, dtype=np.int64).ravel()
        if sigma is None:
            sigma = int(arr.max()) + 1 if len(arr) else 1
        if len(arr) and (arr.min() < 0 or arr.max() >= sigma):
            raise ValueError(f"symbols must lie in 0..{sigma - 1}")
        if sample_rate < 1:
            raise ValueError("sample rate must be positive")
        if sigma > 1 << 32:
            raise ValueError("alphabet too large")
        self.sigma = int(sigma)
        self.words, s = encode(arr, self.sigma, sample_rate)
        self.meta = np.array([len(arr), symbol_width(self.sigma), self.sigma, s, 0], dtype=np.int64)

    def __len__(self):
        return int(self.meta[SEQ_N])

    @property
    def width(self) -> int:
        return int(self.meta[SEQ_W])

    @property
    def sample_rate(self) -> int:
        return int(self.meta[SEQ_S])

    def access(self, i: int) -> int:
        if not 1 <= i <= len(self):
            raise IndexError(f"position {i} outside 1..{len(self)}")
        return int(seq_access(self.words, self.meta, i))

    def _check_symbol(self, c: int):
        if not 0 <= c < self.sigma:
            raise ValueError(f"symbol {c} outside alphabet 0..{self.sigma - 1}")

    def rank(self, i: int, c: int) -> int:
        self._check_symbol(c)
        if not 0 <= i <= len(self):
            raise IndexError(f"prefix length {i} outside 0..{len(self)}")
        return int(seq_rank(self.words, self.meta, i, c))

    def select(self, i: int, c: int) -> int:
        self._check_symbol(c)
        p = int(seq_select(self.words, self.meta, i, c)) if i >= 1 else 0
        if p == 0:
            raise RankOutOfRange(f"symbol {c} occurs fewer than {i} times")
        return p

    def tolist(self) -> list[int]:
        return [self.access(i) for i in range(1, len(self) + 1)]

    def size_in_bits(self) -> int:
        """Payload bits: packed symbols plus the sampled directory."""
        return payload_bits(len(self), self.sigma, self.sample_rate)


def payload_bits(n: int, sigma: int, sample_rate: int) -> int:
    count_width = max(1, math.ceil(math.log2(n + 1)))
    return n * symbol_width(sigma) + n_samples(n, sample_rate) * sigma * count_width
