"""Random access into every version of a persistent string.

A version tree (each edge one insert, delete or replace) is reduced to
horizontal segments; the ``j``-th character of a version is the label of the
``j``-th lowest segment crossing that version's vertical line, found with a
``delta``-ary segment-selection tree.
"""

from __future__ import annotations

from .errors import (
    FormatError,
    InternalInconsistency,
    InvalidVersion,
    InvariantViolation,
    RankOutOfRange,
    SyntaxErrorAt,
    ValidationError,
    VerstringError,
)
from .euler import SegmentSet, reduce, unmarked_intervals
from .packed import PackedSequence
from .persistent import IndexConfig, PersistentStringIndex, PrefixSelectIndex, build, prefix_select_build
from .segindex import SegmentIndex, build_segment_index
from .serialize import read_index, write_index
from .slab import RankSpaceSegments, SlabIndex, build_slab_index, verify_grid_properties
from .version_tree import (
    Delete,
    Insert,
    Replace,
    VersionTree,
    materialize_naive,
    normalize_replaces,
    parse_version_tree,
    serialize_version_tree,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Delete", "FormatError", "IndexConfig", "Insert", "InternalInconsistency", "InvalidVersion",
    "InvariantViolation", "PackedSequence", "PersistentStringIndex", "PrefixSelectIndex", "RankOutOfRange",
    "RankSpaceSegments", "Replace", "SegmentIndex", "SegmentSet", "SlabIndex", "SyntaxErrorAt",
    "ValidationError", "VersionTree", "VerstringError", "build", "build_segment_index", "build_slab_index",
    "materialize_naive", "normalize_replaces", "parse_version_tree", "prefix_select_build", "read_index",
    "reduce", "serialize_version_tree", "unmarked_intervals", "validate", "verify_grid_properties",
    "write_index",
]
