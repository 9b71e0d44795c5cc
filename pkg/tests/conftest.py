from __future__ import annotations

import numpy as np
import pytest

from verstring.version_tree import parse_version_tree

GOLDEN_TEXT = """8
1 0 insert 0 'a'
2 1 insert 1 'c'
3 2 delete 1
4 3 insert 1 'c'
5 1 insert 1 'b'
6 5 insert 2 'b'
7 6 delete 1
"""

GOLDEN_STRINGS = ["", "a", "ac", "c", "cc", "ab", "abb", "bb"]


def codes(s: str) -> list[int]:
    return [ord(c) for c in s]


@pytest.fixture
def golden_tree():
    return parse_version_tree(GOLDEN_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {criterion} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
