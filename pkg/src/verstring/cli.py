"""Command-line front end: ``verstring {build,query,selftest,bench,gen}``."""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import VerstringError
from .persistent import IndexConfig, PersistentStringIndex, PrefixSelectIndex, build, prefix_select_build
from .serialize import read_index, write_index
from .suites import SUITES, SelftestConfig, run_suite
from .testkit import PROFILES, SEED_ENV, baseline_persistent_bst, gen_version_tree, profile_config, resolve_seed
from .version_tree import parse_version_tree, serialize_version_tree

EPILOG = f"""\
file formats:
  version tree   first line n (nodes, root included), then one line per node
                 1..n-1 in id order: '<id> <parent> insert <k> <char>',
                 '<id> <parent> delete <k>' or '<id> <parent> replace <k> <char>'.
                 insert puts <char> after the first k characters; delete and
                 replace use 1-based positions. <char> is a quoted character
                 ('a') or a decimal code point. Blank and '#' lines are ignored.
  prefix array   whitespace-separated distinct integers (build --prefix-array).
  query file     one query per line:
                   access <v> <j>        j-th character of version v
                   substr <v> <j> <len>  len characters starting at j
                   len <v>               length of version v
                   segsel <x> <j>        j-th lowest segment crossing x: 'x1 x2 y char'
                   prefsel <i> <j>       index of the j-th smallest of A[1..i]
                 (prefix indexes) answers one per line; failures print
                 'ERR <code>' and processing continues.
  characters are printed literally when printable and not whitespace,
  otherwise as \\u{{HEX}}.

environment:
  {SEED_ENV}  overrides every generator seed (gen, selftest, bench).
"""


def display_char(c: int) -> str:
    ch = chr(c) if 0 <= c <= 0x10FFFF else None
    if ch is not None and ch.isprintable() and not ch.isspace():
        return ch
    return f"\\u{{{c:X}}}"


def display(chars) -> str:
    return "".join(display_char(int(c)) for c in chars)


# -- build ------------------------------------------------------------------------


def _read_array(path: str) -> list[int]:
    try:
        return [int(tok) for tok in Path(path).read_text().split()]
    except ValueError as exc:
        raise VerstringError(f"{path}: {exc}") from None


def size_table(idx: PersistentStringIndex) -> str:
    rep = idx.size_report()
    n = max(1, idx.segments.n)
    lines = [f"{'component':<16}{'bits':>14}{'bits/segment':>14}"]
    for key, bits in rep.items():
        if key in ("total", "memo_cache"):
            continue
        lines.append(f"{key:<16}{bits:>14}{bits / n:>14.2f}")
    lines.append(f"{'total':<16}{rep['total']:>14}{rep['total'] / n:>14.2f}")
    if "memo_cache" in rep:
        lines.append(f"{'memo cache':<16}{rep['memo_cache']:>14}{rep['memo_cache'] / n:>14.2f}  (not in total)")
    return "\n".join(lines)


def cmd_build(args) -> int:
    config = IndexConfig(delta=args.delta, sample_rate=args.sample_rate, backend=args.backend)
    t0 = time.perf_counter()
    if args.prefix_array:
        obj = prefix_select_build(_read_array(args.input), config)
        idx = obj.index
    else:
        tree = parse_version_tree(Path(args.input).read_text(encoding="utf-8"))
        obj = idx = build(tree, config)
    ms = (time.perf_counter() - t0) * 1e3
    size = write_index(obj, args.output)
    seg = idx.segments
    print(f"versions {idx.n_versions}  segments {seg.n}  delta {seg.delta}  internal nodes {seg.internal_nodes}"
          f"  height {seg.height()}  backend {seg.backend}  build {ms:.1f} ms")
    print(size_table(idx))
    print(f"wrote {args.output} ({size} bytes)")
    return 0


# -- query ------------------------------------------------------------------------


def answer(obj, line: str) -> str:
    """One query line to one answer line; raises ``VerstringError`` (or ValueError) on bad input."""
    toks = line.split()
    idx = obj.index if isinstance(obj, PrefixSelectIndex) else obj
    cmd, argv = toks[0], toks[1:]
    arity = {"access": 2, "substr": 3, "len": 1, "segsel": 2, "prefsel": 2}
    if cmd not in arity or len(argv) != arity[cmd]:
        raise _QuerySyntax(line)
    try:
        nums = [int(a) for a in argv]
    except ValueError:
        raise _QuerySyntax(line) from None
    if cmd == "access":
        return display_char(idx.access(*nums))
    if cmd == "substr":
        return display(idx.substring(*nums))
    if cmd == "len":
        return str(idx.length(nums[0]))
    if cmd == "segsel":
        s = idx.segments.segment_select(*nums)
        return f"{s.x1} {s.x2} {s.y} {display_char(s.label)}"
    if not isinstance(obj, PrefixSelectIndex):
        raise _Unsupported("prefsel needs an index built with --prefix-array")
    return str(obj.prefix_select(*nums))


class _QuerySyntax(VerstringError):
    code = "syntax"


class _Unsupported(VerstringError):
    code = "unsupported"


def cmd_query(args) -> int:
    obj = read_index(args.index)
    src = sys.stdin if args.queries == "-" else open(args.queries, encoding="utf-8")
    out = sys.stdout
    errors = 0
    with src:
        for raw in src:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.write(answer(obj, line) + "\n")
            except VerstringError as exc:
                errors += 1
                out.write(f"ERR {exc.code}\n")
                if args.verbose:
                    print(f"{line}: {exc}", file=sys.stderr)
    return 1 if errors else 0


# -- selftest ---------------------------------------------------------------------


def cmd_selftest(args) -> int:
    cfg = SelftestConfig(iterations=args.seeds, max_n=args.max_n, seed=resolve_seed(args.seed),
                         inject_fault=args.inject_fault)
    names = args.suite or list(SUITES)
    failed = 0
    for name in names:
        res = run_suite(name, cfg)
        print(res.line(), flush=True)
        failed += not res.ok
    print(f"{len(names) - failed}/{len(names)} suites passed (seed {cfg.seed}, {cfg.iterations} iterations)")
    return 1 if failed else 0


# -- bench ------------------------------------------------------------------------


def _time_batch(fn, vs, js, threads: int, repeat: int) -> float:
    """Best-of-``repeat`` mean ns/query; batches split across ``threads``."""
    fn(vs[:8], js[:8])
    parts = [(a, b) for a, b in zip(np.array_split(vs, threads), np.array_split(js, threads))]
    best = float("inf")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for _ in range(repeat):
            t0 = time.perf_counter()
            if threads == 1:
                fn(vs, js)
            else:
                list(pool.map(lambda p: fn(*p), parts))
            best = min(best, time.perf_counter() - t0)
    return best / max(1, len(vs)) * 1e9


def bench_rows(sizes, queries: int, baseline: bool, delta, backend: str, profile: str, seed: int,
               threads: int = 1, repeat: int = 3) -> list[dict]:
    rows = []
    for n in sizes:
        tree = gen_version_tree(profile_config(profile, n, seed))
        t0 = time.perf_counter()
        idx = build(tree, IndexConfig(delta=delta, backend=backend))
        build_ms = (time.perf_counter() - t0) * 1e3
        lengths = np.asarray(tree.lengths, dtype=np.int64)
        live = np.flatnonzero(lengths > 0)
        rng = np.random.default_rng(seed)
        vs = rng.choice(live, queries) if len(live) else np.zeros(0, np.int64)
        js = (rng.random(len(vs)) * lengths[vs]).astype(np.int64) + 1
        row = {
            "size": n,
            "segments": idx.segments.n,
            "build_ms": build_ms,
            "query_ns": _time_batch(idx.access_many, vs, js, threads, repeat) if len(vs) else float("nan"),
            "bits_per_segment": idx.size_report()["total"] / max(1, idx.segments.n),
            "baseline_ns": float("nan"),
            "baseline_build_ms": float("nan"),
        }
        if baseline and len(vs):
            t0 = time.perf_counter()
            base = baseline_persistent_bst(tree)
            row["baseline_build_ms"] = (time.perf_counter() - t0) * 1e3
            row["baseline_ns"] = _time_batch(base.access_many, vs, js, threads, repeat)
        rows.append(row)
    return rows


def cmd_bench(args) -> int:
    seed = resolve_seed(args.seed)
    print(f"# profile {args.profile}, delta {args.delta or 'default'}, backend {args.backend}, "
          f"{args.queries_per_size} random accesses per size, seed {seed}, threads {args.threads}")
    header = f"{'size':>9}{'segments':>10}{'build ms':>11}{'query ns':>10}{'bits/seg':>10}{'baseline ns':>13}"
    print(header)
    for r in bench_rows(args.sizes, args.queries_per_size, args.baseline, args.delta, args.backend,
                        args.profile, seed, args.threads, args.repeat):
        base = "-" if np.isnan(r["baseline_ns"]) else f"{r['baseline_ns']:.0f}"
        print(f"{r['size']:>9}{r['segments']:>10}{r['build_ms']:>11.1f}{r['query_ns']:>10.0f}"
              f"{r['bits_per_segment']:>10.1f}{base:>13}", flush=True)
    return 0


# -- gen --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    if args.array:
        values = rng.choice(10 * args.n, args.n, replace=False)
        text = " ".join(map(str, values.tolist())) + "\n"
        lengths = None
    else:
        tree = gen_version_tree(profile_config(args.profile, args.n, seed))
        text = serialize_version_tree(tree)
        lengths = np.asarray(tree.lengths)
    _emit(text, args.output)
    if args.queries:
        _emit(_random_queries(rng, args.queries, lengths, args.n if args.array else None), args.query_output)
    return 0


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _random_queries(rng, count: int, lengths, prefix_n) -> str:
    out = []
    for _ in range(count):
        if prefix_n:
            i = int(rng.integers(1, prefix_n + 1))
            out.append(f"prefsel {i} {int(rng.integers(1, i + 1))}")
            continue
        v = int(rng.integers(0, len(lengths)))
        n = int(lengths[v])
        kind = rng.choice(["access", "access", "substr", "len"])
        if kind == "len" or n == 0:
            out.append(f"len {v}")
        elif kind == "access":
            out.append(f"access {v} {int(rng.integers(1, n + 1))}")
        else:
            j = int(rng.integers(1, n + 1))
            out.append(f"substr {v} {j} {int(rng.integers(0, n - j + 2))}")
    return "\n".join(out) + "\n"


# -- parser -----------------------------------------------------------------------


def _sizes(text: str) -> list[int]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(2 ** int(tok[2:]) if tok.startswith("2^") else int(tok))
    if any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return out


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _delta(text: str) -> int:
    v = int(text)
    if not 2 <= v <= 64:
        raise argparse.ArgumentTypeError("delta must be in 2..64")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="verstring",
        description="Random access on persistent strings: build, query, self-test and benchmark indexes.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    raw = argparse.RawDescriptionHelpFormatter

    b = sub.add_parser("build", help="build an index from a version-tree file", formatter_class=raw,
                       description="Build a binary index and print its size breakdown in bits per segment.",
                       epilog="The root-only tree (a file containing '1') yields a valid empty index.")
    b.add_argument("input", help="version-tree file (or integer array with --prefix-array)")
    b.add_argument("output", help="index file to write")
    b.add_argument("--delta", type=_delta, default=None, help="tree degree, 2..64 (default: from the size)")
    b.add_argument("--sample-rate", type=_positive, default=64, help="rank directory sample rate (default 64)")
    b.add_argument("--backend", choices=("direct", "memoized"), default="direct",
                   help="slab cell evaluation: replay updates or look up shared tables")
    b.add_argument("--prefix-array", action="store_true",
                   help="input is a list of distinct integers; build a prefix-selection index")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer a batch of queries", formatter_class=raw,
                       description="Answer one query per line; exit status 1 if any line printed ERR.",
                       epilog="error codes: syntax, version, range, unsupported")
    q.add_argument("index", help="index file written by 'build'")
    q.add_argument("queries", help="query file, '-' for stdin")
    q.add_argument("-v", "--verbose", action="store_true", help="explain each ERR on stderr")
    q.set_defaults(func=cmd_query)

    s = sub.add_parser("selftest", help="run the invariant suites on random instances",
                       description="Exit status 0 iff every suite passes.")
    s.add_argument("--max-n", type=_positive, default=300, help="largest instance size (default 300)")
    s.add_argument("--seeds", type=_nonneg, default=5, help="seeded iterations per suite; 0 runs nothing")
    s.add_argument("--seed", type=int, default=None, help=f"base seed (default 0; {SEED_ENV} overrides)")
    s.add_argument("--suite", action="append", choices=list(SUITES), help="run only this suite (repeatable)")
    s.add_argument("--inject-fault", action="store_true",
                   help="corrupt the slab-grid instances (two updates in one column); the run must fail")
    s.set_defaults(func=cmd_selftest)

    e = sub.add_parser("bench", help="time builds and random access against the baseline",
                       description="Prints: size, build ms, query ns, bits/segment, baseline query ns.")
    e.add_argument("--sizes", type=_sizes, default=[2**10, 2**12, 2**14],
                   help="comma-separated version counts, '2^k' allowed (default 2^10,2^12,2^14)")
    e.add_argument("--queries-per-size", type=_positive, default=100_000)
    e.add_argument("--baseline", action="store_true", help="also time the path-copying treap")
    e.add_argument("--delta", type=_delta, default=16, help="tree degree (default 16)")
    e.add_argument("--backend", choices=("direct", "memoized"), default="direct")
    e.add_argument("--profile", choices=list(PROFILES), default="long", help="generator preset (default long)")
    e.add_argument("--threads", type=_positive, default=1, help="split query batches across threads")
    e.add_argument("--repeat", type=_positive, default=3, help="timed batches; the best is reported")
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="generate a random version tree (or array) and queries")
    g.add_argument("--n", type=_positive, default=100, help="nodes (or array length with --array)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--profile", choices=list(PROFILES), default="default")
    g.add_argument("--array", action="store_true", help="emit distinct integers for --prefix-array")
    g.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    g.add_argument("--queries", type=_nonneg, default=0, help="also emit this many random queries")
    g.add_argument("--query-output", default=None, help="query file (default stdout)")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerstringError as exc:
        print(f"verstring {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"verstring {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
