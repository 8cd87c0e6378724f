"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal
summary, with the measured numbers next to it.
"""

import io
import json
import time
from fractions import Fraction

from hoistc.analysis import analyze, redundancy_groups
from hoistc.bdd import bdd_size, compile_program, infer
from hoistc.bif import brute_force_marginals, emit_program, parse_bif
from hoistc.cli import main
from hoistc.encode import decode_distribution, encode_typed, frequency_order, plan
from hoistc.hoist import optimize
from hoistc.lang import Discrete, flip_count, flips, walk
from hoistc.oracle import distribution, distributions_equal, probability, surface_distribution
from hoistc.pipeline import run, surface_inference
from hoistc.randprog import chain_network_bif
from hoistc.syntax import parse, to_text

from conftest import ACCEPTANCE, PROGRAMS, load

F = Fraction


def record(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_branch_program_hoists_the_shared_coin():
    t0 = time.perf_counter()
    p = load("branch.dppl")
    q, report = optimize(p, "local")
    elapsed = time.perf_counter() - t0
    expected = to_text(load("branch_hoisted.dppl")).replace("tmp", report.applied[0].fresh_var)
    groups = redundancy_groups(p, "local") + redundancy_groups(p, "global")
    ok = (to_text(q) == expected
          and (flip_count(p), flip_count(q)) == (5, 4)
          and distributions_equal(distribution(p), distribution(q))
          and not any({2, 4} <= g for g in groups)
          and elapsed < 1.0)
    record("branch program golden", ok,
           f"flips {flip_count(p)}->{flip_count(q)}, groups {[sorted(g) for g in groups]}, "
           f"{elapsed * 1000:.1f} ms")


def test_bad_merge_is_refuted_by_enumeration():
    # return every variable so the joint event can be read off
    def joint(name):
        text = (PROGRAMS / name).read_text().rstrip()
        assert text.endswith("in y")
        return distribution(parse(text[:-1] + "(x, (y, z))"))

    good, bad = joint("branch.dppl"), joint("branch_bad_merge.dppl")
    # x and z true with y false: y is a fresh flip 0.3 in both programs
    listed = (True, (False, True))
    # x true and z false with y true: the merged program forces y = z
    witness = (True, (True, False))
    ok = (good.get(witness, 0) > 0 and bad.get(witness, 0) == 0
          and not distributions_equal(good, bad))
    record("bad merge refutation", ok,
           f"Pr(x,y,z = T,T,F) {good.get(witness, 0)} vs {bad.get(witness, 0)}; "
           f"Pr(T,F,T) {good.get(listed, 0)} vs {bad.get(listed, 0)}")


def test_guards_program_hoists_across_branches():
    p = load("guards.dppl")
    q, report = optimize(p, "global", "off")
    expected = to_text(load("guards_hoisted.dppl")).replace("tmp", report.applied[0].fresh_var)
    facts = {i: dict(s.facts) for i, s in analyze(p).items()}
    before = distribution(p)[(True, True)]
    after = distribution(q)[(True, True)]
    ok = (to_text(q) == expected
          and [facts[i] for i in (2, 3, 4, 5)] == [{1: True}, {1: False}, {1: False}, {1: True}]
          and before == after == F(31, 500))
    record("guards program golden", ok, f"Pr((true,true)) {before} -> {after}")


def test_network_ingest_and_marginal():
    net = parse_bif((PROGRAMS / "cpt.bif").read_text())
    p = emit_program(net)
    marg = brute_force_marginals(net)
    res = run(p, "local")
    joint = surface_inference(res)["distribution"]
    # B's values are "0" and "1"; a Boolean is true for the first one
    pr_b1 = probability(joint, lambda v: not v[1])
    merged = [g.theta for g in res.hoist.applied]
    ok = (p == load("cpt.dppl") and pr_b1 == marg["B"]["1"] == F(41, 50)
          and merged == [F(1, 5)] and flip_count(res.optimized) == flip_count(res.core) - 1)
    record("network ingest golden", ok,
           f"Pr(B=1) = {pr_b1}, hoisted {[str(t) for t in merged]}")


def test_discrete_chain_parameters():
    params = (F(1, 10), F(4, 10), F(5, 10))
    declared = plan(params).steps
    counts = {F(4, 10): 2, F(1, 10): 1, F(5, 10): 1}
    freq = plan(params, frequency_order(params, counts)).steps
    p = parse("let a = discrete(0.1, 0.4, 0.5) in let b = flip 0.4 in (a, b)")
    encoded = [fl.theta for _, fl in flips(encode_typed(p, "frequency")[0])]
    ok = (declared == (F(1, 10), F(4, 9)) and freq == (F(2, 5), F(1, 6))
          and encoded[:2] == [F(2, 5), F(1, 6)])
    record("discrete encoding parameters", ok,
           f"declared {[str(x) for x in declared]}, frequency {[str(x) for x in freq]}")


def test_soundness_fuzz(core_corpus):
    t0 = time.perf_counter()
    checked = bad = 0
    for p in core_corpus:
        d = distribution(p)
        for mode in ("local", "global"):
            for order in ("strict", "off"):
                q, _ = optimize(p, mode, order)
                checked += 1
                if not distributions_equal(d, distribution(q)):
                    bad += 1
    elapsed = time.perf_counter() - t0
    ok = len(core_corpus) >= 1000 and bad == 0 and elapsed < 300
    record("soundness fuzz", ok,
           f"{len(core_corpus)} programs, {checked} optimisations, {bad} mismatches, {elapsed:.1f} s")


def test_inference_fuzz(core_corpus):
    bad = sum(infer(compile_program(p)) != distribution(p) for p in core_corpus)
    record("inference fuzz", bad == 0, f"{len(core_corpus)} programs, {bad} mismatches")


def test_strict_hoisting_never_grows_bdds(core_corpus):
    grew = shrank = 0
    for p in core_corpus:
        before = bdd_size(compile_program(p))
        for mode in ("local", "global"):
            after = bdd_size(compile_program(optimize(p, mode, "strict")[0]))
            grew += after > before
            shrank += after < before
    branch = load("branch.dppl")
    sizes = (bdd_size(compile_program(branch)),
             bdd_size(compile_program(optimize(branch, "local")[0])))
    # the branch program is the deterministic strict decrease
    ok = grew == 0 and sizes[1] < sizes[0]
    record("strict order keeps BDDs from growing", ok,
           f"{grew} increases, {shrank} strict decreases over the corpus, branch program {sizes[0]}->{sizes[1]}")


def test_encoder_fuzz(surface_corpus):
    bad = 0
    widest = 0
    for p in surface_corpus:
        widest = max([widest] + [len(n.params) for _, n in walk(p) if isinstance(n, Discrete)])
        expected = surface_distribution(p)
        for order in ("declared", "frequency"):
            q, ty = encode_typed(p, order)
            bad += not distributions_equal(decode_distribution(distribution(q), ty), expected)
    with_discrete = sum(any(isinstance(n, Discrete) for _, n in walk(p)) for p in surface_corpus)
    ok = len(surface_corpus) >= 500 and bad == 0 and widest <= 4
    record("encoder preservation fuzz", ok,
           f"{len(surface_corpus)} programs ({with_discrete} with discretes), {bad} mismatches")


def test_chain_network_scaling(tmp_path):
    path = tmp_path / "chain.bif"
    path.write_text(chain_network_bif(200, shared=0.5, seed=0))
    reports = {}
    t0 = time.perf_counter()
    for opt in ("none", "local"):
        out = io.StringIO()
        assert main(["compile", str(path), "--opt", opt], out) == 0
        reports[opt] = json.loads(out.getvalue())
    elapsed = time.perf_counter() - t0
    flips_ = {o: r["flips"]["after"] for o, r in reports.items()}
    sizes = {o: r["bdd_size"] for o, r in reports.items()}
    ok = flips_["local"] < flips_["none"] and sizes["local"] < sizes["none"] and elapsed < 60
    record("chain network scaling", ok,
           f"flips {flips_['none']}->{flips_['local']}, BDD {sizes['none']}->{sizes['local']}, "
           f"{elapsed:.1f} s")
