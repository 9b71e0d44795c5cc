"""Version trees of single-character edit operations.

Node ``0`` is the root and denotes the empty string.  Every other node ``v``
has a parent and the edit that turns the parent's string into ``S(v)``.
Characters are integer code points (any value in ``0 .. 2**32 - 1``).

Text format::

    <n>
    <id> <parent_id> insert <k> <char>
    <id> <parent_id> delete <k>
    <id> <parent_id> replace <k> <char>

one line per non-root node in id order, where ``<char>`` is either a decimal
code point or a single quoted character such as ``'a'``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

from .errors import InvalidVersion, SyntaxErrorAt, ValidationError

MAX_CHAR = 2**32 - 1


@dataclass(frozen=True)
class Insert:
    """Insert ``char`` right after position ``k`` (``k = 0`` is the front)."""

    k: int
    char: int

    def __str__(self):
        return f"insert {self.k} {format_char(self.char)}"


@dataclass(frozen=True)
class Delete:
    """Delete the character at 1-based position ``k``."""

    k: int

    def __str__(self):
        return f"delete {self.k}"


@dataclass(frozen=True)
class Replace:
    """Overwrite the character at 1-based position ``k``."""

    k: int
    char: int

    def __str__(self):
        return f"replace {self.k} {format_char(self.char)}"


EditOp = Union[Insert, Delete, Replace]


@dataclass(frozen=True, eq=True)
class VersionTree:
    parent: tuple
    ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(int(p) for p in self.parent))
        object.__setattr__(self, "ops", tuple(self.ops))
        if not self.parent:
            raise ValidationError("a version tree needs at least the root")
        if len(self.parent) != len(self.ops):
            raise ValidationError("parent and ops tables differ in length")
        if self.parent[0] != -1 or self.ops[0] is not None:
            raise ValidationError("node 0 must be the root (no parent, no op)")
        n = len(self.parent)
        for v in range(1, n):
            p = self.parent[v]
            if not 0 <= p < n or p == v:
                raise ValidationError(f"node {v}: parent {p} is not a valid node id")
            if not isinstance(self.ops[v], (Insert, Delete, Replace)):
                raise ValidationError(f"node {v}: missing edit operation")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, EditOp]]) -> "VersionTree":
        parent = [-1] * n
        ops: list = [None] * n
        for child, par, op in edges:
            parent[child] = par
            ops[child] = op
        return cls(tuple(parent), tuple(ops))

    @property
    def n(self) -> int:
        return len(self.parent)

    def __len__(self):
        return len(self.parent)

    @cached_property
    def children(self) -> tuple:
        kids: list[list[int]] = [[] for _ in range(self.n)]
        for v in range(1, self.n):
            kids[self.parent[v]].append(v)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def bfs_order(self) -> tuple:
        """Nodes reachable from the root in breadth-first order."""
        order = [0]
        queue = deque([0])
        kids = self.children
        while queue:
            u = queue.popleft()
            for c in kids[u]:
                order.append(c)
                queue.append(c)
        return tuple(order)

    @cached_property
    def lengths(self) -> tuple:
        return tuple(_lengths(self))

    def has_replaces(self) -> bool:
        return any(isinstance(op, Replace) for op in self.ops)

    def check_id(self, v: int) -> int:
        if not isinstance(v, int) or not 0 <= v < self.n:
            raise InvalidVersion(f"version {v!r} not in 0..{self.n - 1}")
        return v


def _lengths(tree: VersionTree) -> list[int]:
    order = tree.bfs_order
    if len(order) != tree.n:
        seen = set(order)
        bad = next(v for v in range(tree.n) if v not in seen)
        raise ValidationError(f"node {bad} is not reachable from the root (cycle)")
    length = [0] * tree.n
    for v in order[1:]:
        op = tree.ops[v]
        plen = length[tree.parent[v]]
        if isinstance(op, Insert):
            ok = 0 <= op.k <= plen
            length[v] = plen + 1
        elif isinstance(op, Delete):
            ok = 1 <= op.k <= plen
            length[v] = plen - 1
        else:
            ok = 1 <= op.k <= plen
            length[v] = plen
        if not ok:
            raise ValidationError(
                f"node {v}: '{op}' out of range for parent {tree.parent[v]} of length {plen}"
            )
        if not isinstance(op, Delete) and not 0 <= op.char <= MAX_CHAR:
            raise ValidationError(f"node {v}: character {op.char} is not a 32-bit code point")
    return length


def validate(tree: VersionTree) -> None:
    """Raise :class:`ValidationError` on the first edge whose position is out of range.

    Works on lengths only, so it is linear in the number of nodes.
    """
    _lengths(tree)


def apply_op(s: list, op: EditOp) -> None:
    if isinstance(op, Insert):
        s.insert(op.k, op.char)
    elif isinstance(op, Delete):
        del s[op.k - 1]
    else:
        s[op.k - 1] = op.char


def path_to_root(tree: VersionTree, v: int) -> list[int]:
    path = []
    while v > 0:
        path.append(v)
        v = tree.parent[v]
    path.reverse()
    return path


def materialize_naive(tree: VersionTree, v: int) -> list[int]:
    """S(v) as a list of code points, by replaying the root-to-``v`` edits."""
    tree.check_id(v)
    s: list[int] = []
    for u in path_to_root(tree, v):
        apply_op(s, tree.ops[u])
    return s


def normalize_replaces(tree: VersionTree) -> tuple[VersionTree, list[int]]:
    """Split each ``Replace(k, a)`` edge into ``Delete(k)`` then ``Insert(k - 1, a)``.

    Returns the new tree and ``remap`` with ``remap[old_id] = new_id``.  A fresh
    intermediate node is numbered immediately before the node it leads to.
    """
    if not tree.has_replaces():
        return tree, list(range(tree.n))
    remap = [0] * tree.n
    nxt = 1
    for v in range(1, tree.n):
        if isinstance(tree.ops[v], Replace):
            nxt += 1
        remap[v] = nxt
        nxt += 1
    parent = [-1] * nxt
    ops: list = [None] * nxt
    for v in range(1, tree.n):
        op = tree.ops[v]
        nv = remap[v]
        if isinstance(op, Replace):
            mid = nv - 1
            parent[mid] = remap[tree.parent[v]]
            ops[mid] = Delete(op.k)
            parent[nv] = mid
            ops[nv] = Insert(op.k - 1, op.char)
        else:
            parent[nv] = remap[tree.parent[v]]
            ops[nv] = op
    return VersionTree(tuple(parent), tuple(ops)), remap


# -- text format -------------------------------------------------------------


def format_char(c: int) -> str:
    if c <= 0x10FFFF:
        ch = chr(c)
        if ch.isprintable() and not ch.isspace() and ch not in "'\\":
            return f"'{ch}'"
    return str(c)


def _parse_char(tok: str, lineno: int) -> int:
    if len(tok) == 3 and tok[0] == tok[2] == "'":
        return ord(tok[1])
    try:
        c = int(tok)
    except ValueError:
        raise SyntaxErrorAt(lineno, f"bad character token {tok!r}") from None
    if not 0 <= c <= MAX_CHAR:
        raise SyntaxErrorAt(lineno, f"code point {c} outside 0..{MAX_CHAR}")
    return c


def _parse_int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise SyntaxErrorAt(lineno, f"expected integer {what}, got {tok!r}") from None


def parse_version_tree(text: str) -> VersionTree:
    """Parse the line format and validate the result.

    Blank lines and lines starting with ``#`` are ignored.
    """
    lines = [
        (i, ln.strip())
        for i, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise SyntaxErrorAt(1, "missing node count")
    lineno, head = lines[0]
    n = _parse_int(head, lineno, "node count")
    if n < 1:
        raise SyntaxErrorAt(lineno, "node count must be at least 1")
    body = lines[1:]
    if len(body) != n - 1:
        at = body[n - 1][0] if len(body) > n - 1 else (body[-1][0] + 1 if body else lineno + 1)
        raise SyntaxErrorAt(at, f"expected {n - 1} node lines, found {len(body)}")
    parent = [-1] * n
    ops: list = [None] * n
    for expect, (lineno, line) in enumerate(body, start=1):
        toks = line.split()
        if len(toks) < 4:
            raise SyntaxErrorAt(lineno, "expected '<id> <parent> <op> <k> [char]'")
        vid = _parse_int(toks[0], lineno, "node id")
        if vid != expect:
            raise SyntaxErrorAt(lineno, f"node lines must be in id order; expected {expect}, got {vid}")
        par = _parse_int(toks[1], lineno, "parent id")
        if not 0 <= par < n or par == vid:
            raise SyntaxErrorAt(lineno, f"parent {par} is not a valid node id")
        kind = toks[2].lower()
        k = _parse_int(toks[3], lineno, "position")
        if kind in ("insert", "replace"):
            if len(toks) != 5:
                raise SyntaxErrorAt(lineno, f"'{kind}' takes a position and a character")
            c = _parse_char(toks[4], lineno)
            op = Insert(k, c) if kind == "insert" else Replace(k, c)
        elif kind == "delete":
            if len(toks) != 4:
                raise SyntaxErrorAt(lineno, "'delete' takes only a position")
            op = Delete(k)
        else:
            raise SyntaxErrorAt(lineno, f"unknown operation {toks[2]!r}")
        parent[vid] = par
        ops[vid] = op
    tree = VersionTree(tuple(parent), tuple(ops))
    validate(tree)
    return tree


def serialize_version_tree(tree: VersionTree) -> str:
    out = [str(tree.n)]
    for v in range(1, tree.n):
        out.append(f"{v} {tree.parent[v]} {tree.ops[v]}")
    return "\n".join(out) + "\n"
