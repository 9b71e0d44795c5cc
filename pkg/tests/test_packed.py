from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verstring.errors import RankOutOfRange
from verstring.packed import PackedSequence, payload_bits, symbol_width


@st.composite
def sequences(draw):
    sigma = draw(st.integers(1, 70))
    syms = draw(st.lists(st.integers(0, sigma - 1), max_size=400))
    rate = draw(st.sampled_from([1, 3, 8, 64, 500]))
    return np.array(syms, dtype=np.int64), sigma, rate


@settings(max_examples=150, deadline=None)
@given(sequences())
def test_access_rank_select_match_naive(case):
    syms, sigma, rate = case
    seq = PackedSequence(syms, sigma, sample_rate=rate)
    assert len(seq) == len(syms)
    assert seq.tolist() == syms.tolist()
    for c in range(min(sigma, 6)):
        pref = np.concatenate([[0], np.cumsum(syms == c)])
        for i in range(0, len(syms) + 1, max(1, len(syms) // 25)):
            assert seq.rank(i, c) == pref[i]
        for k, p in enumerate(np.flatnonzero(syms == c)[:20], start=1):
            assert seq.select(k, c) == p + 1
        with pytest.raises(RankOutOfRange):
            seq.select(int(pref[-1]) + 1, c)


@pytest.mark.parametrize("sigma", [1, 2, 3, 16, 17, 255, 256, 1 << 20])
def test_wide_alphabets_and_word_boundaries(sigma):
    rng = np.random.default_rng(sigma)
    syms = rng.integers(0, sigma, 1000)
    seq = PackedSequence(syms, sigma, sample_rate=64)
    idx = rng.integers(1, 1001, 200)
    assert [seq.access(int(i)) for i in idx] == syms[idx - 1].tolist()
    c = int(syms[0])
    assert seq.rank(1000, c) == int(np.count_nonzero(syms == c))


def test_errors():
    seq = PackedSequence([0, 1, 1], 2)
    with pytest.raises(IndexError):
        seq.access(0)
    with pytest.raises(IndexError):
        seq.rank(4, 0)
    with pytest.raises(ValueError):
        seq.rank(1, 2)
    with pytest.raises(ValueError):
        PackedSequence([3], 2)
    with pytest.raises(ValueError):
        PackedSequence([0], 2, sample_rate=0)


def test_payload_bits_accounting():
    assert symbol_width(2) == 1 and symbol_width(16) == 4 and symbol_width(17) == 5
    seq = PackedSequence(np.zeros(1000, dtype=np.int64), 4, sample_rate=100)
    assert seq.sample_rate >= 100
    assert seq.size_in_bits() == payload_bits(1000, 4, seq.sample_rate)
    # symbols dominate at a sparse sample rate
    assert seq.size_in_bits() < 1000 * 2 * 1.5
