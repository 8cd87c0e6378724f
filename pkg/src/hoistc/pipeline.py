"""End-to-end runs: load, encode, optimise, compile, infer, report."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import analysis, bdd, encode as enc
from .bif import emit_program, parse_bif
from .hoist import HoistReport, Timeout, optimize
from .lang import Expr, flip_count, param_census
from .syntax import parse

SCHEMA = 1
ENCODINGS = {"default": "declared", "seq": "frequency"}


def load_program(path: str | Path, renormalize: bool = False) -> Expr:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".bif":
        return emit_program(parse_bif(text, renormalize=renormalize))
    return parse(text)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        parts = []
        while isinstance(v, tuple):
            parts.append(format_value(v[0]))
            v = v[1]
        parts.append(format_value(v))
        return "(" + ", ".join(parts) + ")"
    return str(v)


def prob_json(p: Fraction) -> dict:
    return {"exact": str(p), "decimal": format(float(p), ".6g")}


def distribution_json(dist: dict) -> list[dict]:
    rows = [{"value": format_value(v), **prob_json(w)} for v, w in dist.items() if w]
    return sorted(rows, key=lambda r: r["value"])


@dataclass
class RunResult:
    surface: Expr
    core: Expr
    optimized: Expr
    surface_type: object
    hoist: HoistReport
    compiled: bdd.CompiledProgram | None = None
    timings: dict[str, float] = field(default_factory=dict)
    status: str = "ok"


def run(p: Expr, opt: str = "none", encoding: str = "default", order: str = "strict",
        timeout: float | None = None, node_cap: int | None = None,
        compile: bool = True) -> RunResult:
    """Encode, optimise and compile ``p``.  Raises Timeout/CompileTimeout when over budget."""
    deadline = None if timeout is None else time.monotonic() + timeout
    timings = {}
    t0 = time.perf_counter()
    core, ty = enc.encode_typed(p, ENCODINGS[encoding])
    timings["encode"] = (time.perf_counter() - t0) * 1000
    t0 = time.perf_counter()
    q, report = optimize(core, opt, order, deadline)
    timings["optimize"] = (time.perf_counter() - t0) * 1000
    res = RunResult(p, core, q, ty, report, timings=timings)
    if compile:
        t0 = time.perf_counter()
        res.compiled = bdd.compile_program(q, node_cap, deadline)
        timings["compile"] = (time.perf_counter() - t0) * 1000
    return res


def _leaf_types(ty, shape):
    """Pair up every non-pair component of the result type with its BDD roots."""
    if isinstance(ty, enc.PairT):
        yield from _leaf_types(ty.left, shape[0])
        yield from _leaf_types(ty.right, shape[1])
    else:
        yield ty, shape


def surface_inference(res: RunResult) -> dict:
    """Joint distribution when the output is narrow enough, else per-component marginals."""
    c = res.compiled
    if len(c.root_list()) <= bdd.JOINT_WIDTH_CAP:
        joint = enc.decode_distribution(bdd.infer(c), res.surface_type)
        return {"mode": "joint", "distribution": joint}
    comps = []
    for ty, shape in _leaf_types(res.surface_type, c.roots):
        sub = bdd.CompiledProgram(shape, c.graph, c.weights)
        comps.append(enc.decode_distribution(bdd.infer(sub), ty))
    return {"mode": "marginals", "components": comps}


def inference_json(inf: dict) -> dict:
    if inf["mode"] == "joint":
        return {"mode": "joint", "distribution": distribution_json(inf["distribution"])}
    return {"mode": "marginals",
            "components": [distribution_json(d) for d in inf["components"]]}


def run_report(path: str, p: Expr, opt: str, encoding: str, order: str,
               timeout: float | None = None, node_cap: int | None = None,
               dump_facts: bool = False, infer: bool = True) -> tuple[dict, RunResult | None]:
    total, distinct = param_census(p)
    report = {
        "schema": SCHEMA,
        "program": str(path),
        "options": {"opt": opt, "encoding": encoding, "order": order},
        "params": {"total": total, "distinct": distinct},
        "flips": {"surface": flip_count(p)},
        "status": "ok",
    }
    try:
        res = run(p, opt, encoding, order, timeout, node_cap)
    except (Timeout, bdd.CompileTimeout):
        report["status"] = "timeout"
        report["flips"].update(before=None, after=None)
        report["bdd_size"] = None
        return report, None
    report["flips"].update(before=flip_count(res.core), after=flip_count(res.optimized))
    report["hoist"] = res.hoist.to_json()
    report["bdd_size"] = bdd.bdd_size(res.compiled)
    report["bdd_size_note"] = "unique internal nodes over all output roots, terminals excluded"
    if dump_facts:
        report["facts"] = analysis.facts_json(analysis.analyze(res.core))
    if infer:
        t0 = time.perf_counter()
        report["inference"] = inference_json(surface_inference(res))
        res.timings["infer"] = (time.perf_counter() - t0) * 1000
    report["timing_ms"] = {k: round(v, 3) for k, v in res.timings.items()}
    return report, res
