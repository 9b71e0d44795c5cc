"""Euler-tour reduction from a version tree to labeled horizontal segments.

During the tour we keep a *marked sequence*: every character ever inserted,
each flagged marked or unmarked.  The unmarked characters at the first visit
of a node ``v`` spell ``S(v)``.  Each maximal time interval ``[i, j]`` during
which a character is unmarked becomes a segment ``[2i - 1, 2j]`` whose height
is the character's position in the final sequence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvariantViolation, ValidationError
from .version_tree import Delete, Insert, VersionTree


class MarkedSequence:
    """Order-statistics treap over characters with per-subtree unmarked counts.

    Node handles are positive integers; ``0`` is a sentinel with zero counts.
    """

    def __init__(self, seed: int = 0x5EED):
        self._rng = random.Random(seed)
        self.left = [0]
        self.right = [0]
        self.par = [0]
        self.prio = [0.0]
        self.size = [0]
        self.unm = [0]
        self.marked = [False]
        self.char = [0]
        self.root = 0

    def __len__(self):
        return self.size[self.root]

    @property
    def unmarked_count(self) -> int:
        return self.unm[self.root]

    def find_unmarked(self, i: int) -> int:
        """Handle of the ``i``-th (1-based) unmarked character."""
        if not 1 <= i <= self.unm[self.root]:
            raise IndexError(f"no unmarked character #{i}")
        left, right, unm, marked = self.left, self.right, self.unm, self.marked
        x = self.root
        while True:
            lu = unm[left[x]]
            if i <= lu:
                x = left[x]
                continue
            i -= lu
            if not marked[x]:
                if i == 1:
                    return x
                i -= 1
            x = right[x]

    def insert_after(self, i: int, char: int) -> int:
        """Insert an unmarked ``char`` immediately right of the ``i``-th unmarked one."""
        left, right, par = self.left, self.right, self.par
        x = len(left)
        left.append(0)
        right.append(0)
        par.append(0)
        self.prio.append(self._rng.random())
        self.size.append(1)
        self.unm.append(1)
        self.marked.append(False)
        self.char.append(char)
        if self.root == 0:
            self.root = x
            return x
        if i == 0:
            y = self.root
            while left[y]:
                y = left[y]
            left[y] = x
        else:
            y = self.find_unmarked(i)
            if right[y]:
                y = right[y]
                while left[y]:
                    y = left[y]
                left[y] = x
            else:
                right[y] = x
        par[x] = y
        while y:
            self.size[y] += 1
            self.unm[y] += 1
            y = par[y]
        prio = self.prio
        while par[x] and prio[x] > prio[par[x]]:
            self._rotate_up(x)
        return x

    def _pull(self, x: int) -> None:
        lx, rx = self.left[x], self.right[x]
        self.size[x] = 1 + self.size[lx] + self.size[rx]
        self.unm[x] = (not self.marked[x]) + self.unm[lx] + self.unm[rx]

    def _rotate_up(self, x: int) -> None:
        left, right, par = self.left, self.right, self.par
        p = par[x]
        g = par[p]
        if left[p] == x:
            b = right[x]
            left[p] = b
            right[x] = p
        else:
            b = left[x]
            right[p] = b
            left[x] = p
        if b:
            par[b] = p
        par[p] = x
        par[x] = g
        if not g:
            self.root = x
        elif left[g] == p:
            left[g] = x
        else:
            right[g] = x
        self._pull(p)
        self._pull(x)

    def _set_marked(self, x: int, flag: bool) -> None:
        if self.marked[x] == flag:
            raise InvariantViolation(f"character {x} already {'marked' if flag else 'unmarked'}")
        self.marked[x] = flag
        d = -1 if flag else 1
        unm, par = self.unm, self.par
        while x:
            unm[x] += d
            x = par[x]

    def mark(self, x: int) -> None:
        self._set_marked(x, True)

    def unmark(self, x: int) -> None:
        self._set_marked(x, False)

    def inorder(self) -> list[int]:
        out = []
        stack = []
        x = self.root
        left, right = self.left, self.right
        while stack or x:
            while x:
                stack.append(x)
                x = left[x]
            x = stack.pop()
            out.append(x)
            x = right[x]
        return out

    def unmarked_chars(self) -> list[int]:
        return [self.char[x] for x in self.inorder() if not self.marked[x]]


@dataclass(frozen=True)
class SegmentSet:
    """Horizontal segments sorted by ``(y, x1)``.

    ``edge`` holds the version-tree node whose incoming insert edge produced
    the segment's character.
    """

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    label: np.ndarray
    edge: np.ndarray

    @property
    def m(self) -> int:
        return len(self.x1)

    def __len__(self):
        return len(self.x1)

    @classmethod
    def from_rows(cls, rows) -> "SegmentSet":
        """Build from ``(x1, x2, y, label[, edge])`` tuples; sorts by ``(y, x1)``."""
        rows = [(tuple(r) + (-1,))[:5] for r in rows]
        rows.sort(key=lambda r: (r[2], r[0]))
        cols = list(zip(*rows)) if rows else [(), (), (), (), ()]
        return cls(
            np.asarray(cols[0], dtype=np.int64),
            np.asarray(cols[1], dtype=np.int64),
            np.asarray(cols[2], dtype=np.int64),
            np.asarray(cols[3], dtype=np.int64),
            np.asarray(cols[4], dtype=np.int64),
        )

    def rows(self):
        return list(zip(self.x1.tolist(), self.x2.tolist(), self.y.tolist(), self.label.tolist()))

    def crossing(self, x: int) -> np.ndarray:
        """Indices (in stored order, hence y-order) of segments with ``x1 <= x <= x2``."""
        return np.flatnonzero((self.x1 <= x) & (x <= self.x2))


def dump_segments(segs: SegmentSet) -> str:
    return "".join(f"{a} {b} {y} {c}\n" for a, b, y, c in segs.rows())


StepHook = Callable[[int, MarkedSequence], None]


def reduce(
    tree: VersionTree, on_step: Optional[StepHook] = None, seed: int = 0x5EED
) -> tuple[SegmentSet, np.ndarray]:
    """Reduce a replace-free tree to ``(segments, start)``.

    ``start[v]`` is the Euler time at which ``v`` is first reached.  ``on_step``
    is called with ``(time, sequence)`` after every time step (time 0 included).
    """
    if tree.has_replaces():
        raise ValidationError("reduce needs a replace-free tree; run normalize_replaces first")
    n = tree.n
    kids = tree.children
    ops = tree.ops
    seq = MarkedSequence(seed)
    handle = [0] * n
    opened = [0]  # per sequence handle: time it last became unmarked
    spans: list[tuple[int, int, int]] = []  # (first, last, handle)
    start = np.zeros(n, dtype=np.int64)

    t = 0
    if on_step:
        on_step(t, seq)
    stack = [(0, iter(kids[0]))]
    while stack:
        u, it = stack[-1]
        c = next(it, None)
        if c is None:
            stack.pop()
            if u == 0:
                break
            t += 1
            op = ops[u]
            x = handle[u]
            if isinstance(op, Insert):
                seq.mark(x)
                spans.append((opened[x], t - 1, x))
            else:
                seq.unmark(x)
                opened[x] = t
            if on_step:
                on_step(t, seq)
            continue
        t += 1
        start[c] = t
        op = ops[c]
        if isinstance(op, Insert):
            x = seq.insert_after(op.k, op.char)
            opened.append(t)
        elif isinstance(op, Delete):
            x = seq.find_unmarked(op.k)
            seq.mark(x)
            spans.append((opened[x], t - 1, x))
        else:  # pragma: no cover - rejected above
            raise ValidationError(f"unexpected {op!r}")
        handle[c] = x
        if on_step:
            on_step(t, seq)
        stack.append((c, iter(kids[c])))

    if t != 2 * n - 2:
        raise InvariantViolation(f"Euler tour ended at time {t}, expected {2 * n - 2}")

    pos = [0] * len(seq.left)
    for rank, x in enumerate(seq.inorder(), start=1):
        pos[x] = rank
    origin = [0] * len(seq.left)
    for v in range(1, n):
        if isinstance(ops[v], Insert):
            origin[handle[v]] = v
    spans.sort(key=lambda s: (pos[s[2]], s[0]))
    m = len(spans)
    x1 = np.empty(m, dtype=np.int64)
    x2 = np.empty(m, dtype=np.int64)
    y = np.empty(m, dtype=np.int64)
    label = np.empty(m, dtype=np.int64)
    edge = np.empty(m, dtype=np.int64)
    for k, (a, b, x) in enumerate(spans):
        x1[k] = 2 * a - 1
        x2[k] = 2 * b
        y[k] = pos[x]
        label[k] = seq.char[x]
        edge[k] = origin[x]
    return SegmentSet(x1, x2, y, label, edge), start


def unmarked_intervals(tree: VersionTree, e: int) -> list[tuple[int, int]]:
    """Maximal time intervals during which the character inserted by edge ``(parent(e), e)`` is unmarked."""
    tree.check_id(e)
    if not isinstance(tree.ops[e], Insert):
        raise ValidationError(f"edge into node {e} is not an insertion")
    segs, _ = reduce(tree)
    sel = np.flatnonzero(segs.edge == e)
    return sorted(((int(segs.x1[k]) + 1) // 2, int(segs.x2[k]) // 2) for k in sel)
