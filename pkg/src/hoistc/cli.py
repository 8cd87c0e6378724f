"""Command-line driver.

Exit codes: 0 success, 1 other failure, 2 parse/ingest error, 3 timeout,
4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bdd, oracle
from .bif import BifError, emit_program, parse_bif
from .encode import decode_distribution
from .hoist import Timeout
from .lang import (
    DpplError, DpplTypeError, ProbabilityError, ScopeError, flip_count, param_census,
)
from .pipeline import (
    distribution_json, inference_json, load_program, run, run_report,
    surface_inference,
)
from .syntax import ParseError, to_text

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_TIMEOUT, EXIT_MISMATCH = 0, 1, 2, 3, 4
DEFAULT_TIMEOUT = 1200.0
INPUT_ERRORS = (ParseError, ScopeError, BifError, ProbabilityError, DpplTypeError)

OPTS = ("none", "local", "global")
ENCODINGS = ("default", "seq")


def _pipeline_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--opt", choices=OPTS, default="none")
    ap.add_argument("--encoding", choices=ENCODINGS, default="default")
    ap.add_argument("--order", choices=("strict", "off"), default="strict",
                    help="'off' may reorder BDD variables and void the size guarantee")
    ap.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, metavar="SEC")
    ap.add_argument("--renormalize", action="store_true",
                    help="rescale BIF rows that do not sum to exactly 1")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hoistc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile", help="optimise and compile a program, print a JSON report")
    c.add_argument("file")
    _pipeline_flags(c)
    c.add_argument("--report", metavar="PATH", help="write the JSON report here instead of stdout")
    c.add_argument("--dump-facts", action="store_true", help="include data-flow facts in the report")
    c.add_argument("--dot", metavar="PATH", help="write the compiled BDD in DOT format")
    c.add_argument("--emit", metavar="PATH", help="write the optimised core program")

    i = sub.add_parser("infer", help="print the distribution of the program's result")
    i.add_argument("file")
    _pipeline_flags(i)
    i.add_argument("--oracle", action="store_true", help="cross-check against path enumeration")
    i.add_argument("--json", action="store_true")

    o = sub.add_parser("oracle", help="distribution by exhaustive path enumeration")
    o.add_argument("file")
    o.add_argument("--bound", type=int, default=oracle.DEFAULT_FLIP_BOUND)
    o.add_argument("--renormalize", action="store_true")

    b = sub.add_parser("from-bif", help="translate a BIF network into a program")
    b.add_argument("file")
    b.add_argument("-o", "--out", metavar="PATH")
    b.add_argument("--renormalize", action="store_true")

    p = sub.add_parser("params", help="count total and distinct parameters")
    p.add_argument("file")
    p.add_argument("--renormalize", action="store_true")

    t = sub.add_parser("bench", help="run every program in a directory under all configurations")
    t.add_argument("dir")
    t.add_argument("--order", choices=("strict", "off"), default="strict")
    t.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, metavar="SEC")
    t.add_argument("--csv", metavar="PATH")
    t.add_argument("--json", metavar="PATH")
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--renormalize", action="store_true")
    return ap


def _print_dist(dist: dict, out) -> None:
    for row in distribution_json(dist):
        print(f"{row['value']}\t{row['decimal']}\t{row['exact']}", file=out)


def cmd_compile(args, out) -> int:
    p = load_program(args.file, args.renormalize)
    report, res = run_report(args.file, p, args.opt, args.encoding, args.order,
                             args.timeout, dump_facts=args.dump_facts)
    text = json.dumps(report, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n")
    else:
        print(text, file=out)
    if res is None:
        print("timeout", file=sys.stderr)
        return EXIT_TIMEOUT
    if args.dot:
        Path(args.dot).write_text(bdd.to_dot(res.compiled))
    if args.emit:
        Path(args.emit).write_text(to_text(res.optimized) + "\n")
    return EXIT_OK


def cmd_infer(args, out) -> int:
    p = load_program(args.file, args.renormalize)
    try:
        res = run(p, args.opt, args.encoding, args.order, args.timeout)
    except (Timeout, bdd.CompileTimeout):
        print("timeout", file=sys.stderr)
        return EXIT_TIMEOUT
    inf = surface_inference(res)
    if args.json:
        print(json.dumps(inference_json(inf), indent=2), file=out)
    elif inf["mode"] == "joint":
        _print_dist(inf["distribution"], out)
    else:
        for k, d in enumerate(inf["components"]):
            print(f"# component {k}", file=out)
            _print_dist(d, out)
    if args.oracle:
        if inf["mode"] != "joint":
            print("oracle check needs joint inference", file=sys.stderr)
            return EXIT_FAIL
        expected = oracle.surface_distribution(p)
        core_dist = decode_distribution(oracle.distribution(res.optimized), res.surface_type)
        if not (oracle.distributions_equal(expected, inf["distribution"])
                and oracle.distributions_equal(expected, core_dist)):
            print("oracle mismatch: compiled distribution differs from enumeration", file=sys.stderr)
            return EXIT_MISMATCH
        print("oracle: ok", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    p = load_program(args.file, args.renormalize)
    _print_dist(oracle.surface_distribution(p, args.bound), out)
    return EXIT_OK


def cmd_from_bif(args, out) -> int:
    net = parse_bif(Path(args.file).read_text(encoding="utf-8"), args.renormalize)
    text = to_text(emit_program(net)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_params(args, out) -> int:
    total, distinct = param_census(load_program(args.file, args.renormalize))
    print(json.dumps({"total": total, "distinct": distinct}), file=out)
    return EXIT_OK


BENCH_FIELDS = ["benchmark", "opt", "encoding", "flips", "bdd_size", "time_ms", "status"]


def bench_rows(directory: str, order: str = "strict", timeout: float | None = DEFAULT_TIMEOUT,
               jobs: int = 1, renormalize: bool = False) -> list[dict]:
    files = sorted(f for f in Path(directory).iterdir() if f.suffix in (".dppl", ".bif"))

    def one_file(f: Path) -> list[dict]:
        rows = []
        try:
            p = load_program(f, renormalize)
        except DpplError as exc:
            return [dict(benchmark=f.name, opt=o, encoding=e, flips="-", bdd_size="-",
                         time_ms="-", status=f"error: {exc}") for o in OPTS for e in ENCODINGS]
        for o in OPTS:
            for e in ENCODINGS:
                t0 = time.perf_counter()
                row = dict(benchmark=f.name, opt=o, encoding=e)
                try:
                    res = run(p, o, e, order, timeout)
                    row.update(flips=flip_count(res.optimized), bdd_size=bdd.bdd_size(res.compiled),
                               status="ok")
                except (Timeout, bdd.CompileTimeout):
                    row.update(flips="-", bdd_size="-", status="timeout")
                except (DpplError, RecursionError) as exc:
                    row.update(flips="-", bdd_size="-", status=f"error: {exc}")
                row["time_ms"] = round((time.perf_counter() - t0) * 1000, 3)
                rows.append(row)
        return rows

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            per_file = list(pool.map(one_file, files))
    else:
        per_file = [one_file(f) for f in files]
    return [r for rows in per_file for r in rows]


def cmd_bench(args, out) -> int:
    rows = bench_rows(args.dir, args.order, args.timeout, args.jobs, args.renormalize)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
    if args.json:
        Path(args.json).write_text(json.dumps({"schema": 1, "rows": rows}, indent=2) + "\n")
    if not args.csv and not args.json:
        out.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile, "infer": cmd_infer, "oracle": cmd_oracle,
    "from-bif": cmd_from_bif, "params": cmd_params, "bench": cmd_bench,
}


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if out is None else out
    try:
        return COMMANDS[args.cmd](args, out)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DpplError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def entry() -> None:
    # deep let chains recurse deeply; run on a thread with a large stack
    sys.setrecursionlimit(200_000)
    threading.stack_size(512 * 1024 * 1024)
    result = []

    def target():
        try:
            result.append(main())
        except SystemExit as exc:
            result.append(exc.code)

    t = threading.Thread(target=target)
    t.start()
    t.join()
    sys.exit(result[0] if result else EXIT_FAIL)
