"""Binary index files.

Layout (all integers little-endian, see FORMAT.md for the full table)::

    magic "PSEG1" | format version u8 | kind u8 | reserved u8
    header: 8 x u64
    sections, each: name (8 ASCII bytes, NUL padded) | dtype code u8 | 7 x NUL
                    | element count u64 | payload | NUL pad to 8 bytes

Sections appear in a fixed order and every one is always present (possibly
empty), so writing a freshly read index reproduces the file byte for byte.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .persistent import IndexConfig, PersistentStringIndex, PrefixSelectIndex
from .segindex import ND_META, SegmentIndex
from .slab import POOL_DTYPES

MAGIC = b"PSEG1"
FORMAT_VERSION = 1
KIND_STRINGS, KIND_PREFIX = 0, 1
BACKENDS = ("direct", "memoized")

_HEADER = struct.Struct("<8Q")
_SECTION = struct.Struct("<8sB7xQ")
_DTYPES = {
    1: np.dtype("<i1"),
    2: np.dtype("<i4"),
    3: np.dtype("<i8"),
    4: np.dtype("<u8"),
}
_CODES = {v: k for k, v in _DTYPES.items()}

# (name, dtype) in file order
SECTIONS = (
    ("ROOTENDS", "<i8"),
    ("NODES", "<i8"),
    ("SEQWORDS", "<u8"),
    ("SLABBLK", "<i4"),
    ("SLABCG", "<i4"),
    ("SLABPAT", "<i4"),
    ("SLABTOFF", "<i8"),
    ("SLABTAB", "<i1"),
    ("LEAFX1", "<i8"),
    ("LEAFX2", "<i8"),
    ("LEAFY", "<i8"),
    ("LABELS", "<i8"),
    ("START", "<i8"),
    ("LENGTHS", "<i8"),
    ("REMAP", "<i8"),
)


def _sections_of(idx: PersistentStringIndex) -> list[np.ndarray]:
    seg = idx.segments
    return [
        seg.ends_x,
        seg.nodes.reshape(-1),
        seg.words,
        *seg.slab_arrays,
        seg.seg_x1,
        seg.seg_x2,
        seg.seg_y,
        seg.labels,
        idx.start,
        idx.lengths,
        idx.remap,
    ]


def dumps(index: PersistentStringIndex | PrefixSelectIndex) -> bytes:
    if isinstance(index, PrefixSelectIndex):
        kind, prefix_n, idx = KIND_PREFIX, index.n, index.index
    else:
        kind, prefix_n, idx = KIND_STRINGS, 0, index
    seg = idx.segments
    buf = io.BytesIO()
    buf.write(MAGIC + bytes([FORMAT_VERSION, kind, 0]))
    buf.write(_HEADER.pack(seg.delta, seg.sample_rate, BACKENDS.index(seg.backend), seg.n,
                           seg.internal_nodes, idx.n_versions, prefix_n, len(SECTIONS)))
    for (name, dt), arr in zip(SECTIONS, _sections_of(idx)):
        data = np.ascontiguousarray(arr, dtype=dt).tobytes()
        buf.write(_SECTION.pack(name.encode("ascii"), _CODES[np.dtype(dt)], len(arr)))
        buf.write(data)
        buf.write(b"\0" * (-len(data) % 8))
    return buf.getvalue()


def _read_exact(view: memoryview, pos: int, size: int) -> tuple[memoryview, int]:
    if pos + size > len(view):
        raise FormatError(f"truncated file: need {size} bytes at offset {pos}")
    return view[pos : pos + size], pos + size


def loads(data: bytes) -> PersistentStringIndex | PrefixSelectIndex:
    view = memoryview(data)
    pre, pos = _read_exact(view, 0, 8)
    if bytes(pre[:5]) != MAGIC:
        raise FormatError("not an index file (bad magic)")
    version, kind = pre[5], pre[6]
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if kind not in (KIND_STRINGS, KIND_PREFIX):
        raise FormatError(f"unknown index kind {kind}")
    raw, pos = _read_exact(view, pos, _HEADER.size)
    delta, sample_rate, backend, n_segs, n_nodes, n_versions, prefix_n, n_sections = _HEADER.unpack(raw)
    if backend >= len(BACKENDS) or n_sections != len(SECTIONS):
        raise FormatError("corrupt header")
    arrays = []
    for name, dt in SECTIONS:
        raw, pos = _read_exact(view, pos, _SECTION.size)
        got, code, count = _SECTION.unpack(raw)
        if got.rstrip(b"\0").decode("ascii", "replace") != name or _DTYPES.get(code) != np.dtype(dt):
            raise FormatError(f"expected section {name}, found {got!r}")
        size = count * np.dtype(dt).itemsize
        raw, pos = _read_exact(view, pos, size + (-size % 8))
        arrays.append(np.frombuffer(raw[:size], dtype=dt).astype(np.dtype(dt).newbyteorder("="), copy=True))
    if pos != len(view):
        raise FormatError(f"{len(view) - pos} trailing bytes after the last section")

    ends, nodes, words, *rest = arrays
    slab_arrays = tuple(a.astype(t, copy=False) for a, t in zip(rest[:5], POOL_DTYPES))
    x1, x2, y, labels, start, lengths, remap = rest[5:]
    if len(nodes) != n_nodes * ND_META or len(x1) != n_segs or len(lengths) != n_versions:
        raise FormatError("section sizes disagree with the header")
    seg = SegmentIndex(
        delta=delta, sample_rate=sample_rate, backend=BACKENDS[backend], ends_x=ends,
        nodes=nodes.reshape(-1, ND_META), words=words, slab_arrays=slab_arrays,
        seg_x1=x1, seg_x2=x2, seg_y=y, labels=labels,
    )
    config = IndexConfig(delta=int(delta), sample_rate=int(sample_rate), backend=BACKENDS[backend])
    idx = PersistentStringIndex(seg, start, lengths, remap, config)
    if kind == KIND_PREFIX:
        return PrefixSelectIndex(idx, int(prefix_n))
    return idx


def write_index(index, path: str | Path) -> int:
    """Write ``index``; returns the file size in bytes."""
    data = dumps(index)
    Path(path).write_bytes(data)
    return len(data)


def read_index(path: str | Path):
    return loads(Path(path).read_bytes())
