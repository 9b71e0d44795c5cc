from __future__ import annotations

import pytest

from conftest import GOLDEN_TEXT
from verstring.cli import display, display_char, main


@pytest.fixture
def golden_index(tmp_path):
    src = tmp_path / "tree.txt"
    src.write_text(GOLDEN_TEXT)
    out = tmp_path / "tree.idx"
    assert main(["build", str(src), str(out), "--delta", "2"]) == 0
    return out


def _query(tmp_path, index, lines, capsys):
    q = tmp_path / "q.txt"
    q.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    code = main(["query", str(index), str(q)])
    return code, capsys.readouterr().out.splitlines()


def test_build_prints_summary(tmp_path, capsys):
    src = tmp_path / "t.txt"
    src.write_text(GOLDEN_TEXT)
    assert main(["build", str(src), str(tmp_path / "t.idx")]) == 0
    out = capsys.readouterr().out
    assert "wrote" in out and "total" in out


def test_query_answers(tmp_path, golden_index, capsys):
    code, out = _query(tmp_path, golden_index,
                       ["access 6 2", "access 4 1", "len 0", "substr 6 1 3", "segsel 21 1", "# c", ""], capsys)
    assert code == 0
    assert out == ["b", "c", "0", "abb", "21 26 1 a"]


def test_query_errors(tmp_path, golden_index, capsys):
    code, out = _query(tmp_path, golden_index,
                       ["access 0 1", "access 9 1", "prefsel 2 1", "frob", "access x 1", "len 3"], capsys)
    assert code == 1
    assert out == ["ERR range", "ERR version", "ERR unsupported", "ERR syntax", "ERR syntax", "1"]


def test_prefix_array(tmp_path, capsys):
    src = tmp_path / "a.txt"
    src.write_text("3 1 2 5 6 4\n")
    idx = tmp_path / "a.idx"
    assert main(["build", "--prefix-array", str(src), str(idx)]) == 0
    code, out = _query(tmp_path, idx, ["prefsel 3 1", "prefsel 6 6", "prefsel 2 3"], capsys)
    assert out == ["2", "5", "ERR range"] and code == 1


def test_bad_input_exit_code(tmp_path, capsys):
    src = tmp_path / "bad.txt"
    src.write_text("2\n1 0 delete 1\n")
    assert main(["build", str(src), str(tmp_path / "x.idx")]) == 2
    assert "verstring build" in capsys.readouterr().err
    assert main(["query", str(tmp_path / "missing.idx"), "-"]) == 2


def test_selftest(capsys):
    assert main(["selftest", "--seeds", "2", "--max-n", "60"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["selftest", "--seeds", "0"]) == 0
    assert main(["selftest", "--seeds", "3", "--suite", "slab-grid", "--inject-fault"]) == 1
    assert "adjacent_columns" in capsys.readouterr().out


def test_gen_and_bench(tmp_path, capsys):
    tree = tmp_path / "g.txt"
    qs = tmp_path / "g.q"
    assert main(["gen", "--n", "50", "--seed", "1", "-o", str(tree), "--queries", "20",
                 "--query-output", str(qs)]) == 0
    assert main(["build", str(tree), str(tmp_path / "g.idx")]) == 0
    assert main(["query", str(tmp_path / "g.idx"), str(qs)]) == 0
    capsys.readouterr()
    assert main(["bench", "--sizes", "2^8,512", "--queries-per-size", "500", "--baseline", "--repeat", "1"]) == 0
    out = capsys.readouterr().out
    assert "256" in out and "512" in out


def test_display():
    assert display_char(ord("a")) == "a"
    assert display_char(ord(" ")) == "\\u{20}"
    assert display_char(0x1F600) == "\U0001F600"
    assert display([ord("x"), 10]) == "x\\u{A}"


def test_help_mentions_formats(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    assert "query file" in capsys.readouterr().out
