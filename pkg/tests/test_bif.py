import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hoistc.analysis import analyze
from hoistc.bdd import compile_program, infer
from hoistc.bif import (
    BifError, CycleError, brute_force_marginals, decode_assignment, emit_program,
    identifiers, marginals_from_joint, parse_bif,
)
from hoistc.encode import decode_distribution, encode_typed
from hoistc.hoist import optimize
from hoistc.lang import Ite, Let, flip_count, subtree
from hoistc.oracle import surface_distribution
from hoistc.syntax import to_text

from conftest import PROGRAMS, load

F = Fraction
CPT_NET = (PROGRAMS / "cpt.bif").read_text()


def test_cpt_net_emits_the_expected_program():
    p = emit_program(parse_bif(CPT_NET))
    assert p == load("cpt.dppl")
    assert to_text(p) == to_text(load("cpt.dppl"))


def test_cpt_net_marginal_of_b():
    net = parse_bif(CPT_NET)
    exact = brute_force_marginals(net)
    assert exact["B"]["1"] == F(41, 50)
    assert exact["A"] == {"0": F(1, 5), "1": F(3, 10), "2": F(1, 2)}


def test_cpt_net_compiled_marginals_match_brute_force():
    net = parse_bif(CPT_NET)
    p = emit_program(net)
    for order in ("declared", "frequency"):
        q, ty = encode_typed(p, order)
        q, _ = optimize(q, "local")
        joint = decode_distribution(infer(compile_program(q)), ty)
        assert marginals_from_joint(net, joint) == brute_force_marginals(net)


def test_binary_value_zero_is_true():
    net = parse_bif(CPT_NET)
    assert decode_assignment(net, (2, True)) == {"A": "2", "B": "0"}
    assert decode_assignment(net, (0, False)) == {"A": "0", "B": "1"}


def test_local_hoisting_merges_the_repeated_row():
    q, report = optimize(encode_typed(load("cpt.dppl"))[0], "local")
    assert [g.theta for g in report.applied] == [F(1, 5)]


TWO_ROOTS = """
network n { }
variable R { type discrete [ 2 ] { t, f }; }
variable S { type discrete [ 3 ] { a, b, c }; }
variable C { type discrete [ 2 ] { t, f }; }
probability ( R ) { table 0.3, 0.7; }
probability ( S ) { table 0.2, 0.3, 0.5; }
probability ( C | R, S ) {
  (t, a) 0.1, 0.9;  (t, b) 0.2, 0.8;  (t, c) 0.3, 0.7;
  (f, a) 0.4, 0.6;  (f, b) 0.5, 0.5;  (f, c) 0.6, 0.4;
}
"""


def _cpt_branch_flips(p):
    """Flips sitting directly in the then-branch of an Ite."""
    sites = analyze(p)
    out = []
    for i, s in sites.items():
        if s.path and s.path[-1] == 1 and isinstance(subtree(p, s.path[:-1]), Ite):
            out.append(s)
    return out


@pytest.mark.parametrize("text", [CPT_NET, TWO_ROOTS])
def test_cpt_branch_flips_carry_facts_when_parents_are_roots(text):
    q, _ = encode_typed(emit_program(parse_bif(text)))
    branch = _cpt_branch_flips(q)
    assert branch
    assert all(s.facts for s in branch)


def test_facts_are_lost_behind_a_computed_parent():
    # C's parent B is bound to an if-expression, so no flip stands for B
    text = """variable A { type discrete [ 2 ] { t, f }; }
    variable B { type discrete [ 2 ] { t, f }; }
    variable C { type discrete [ 2 ] { t, f }; }
    probability ( A ) { table 0.5, 0.5; }
    probability ( B | A ) { (t) 0.1, 0.9; (f) 0.2, 0.8; }
    probability ( C | B ) { (t) 0.3, 0.7; (f) 0.4, 0.6; }"""
    q, _ = encode_typed(emit_program(parse_bif(text)))
    facts = {s.theta: dict(s.facts) for s in _cpt_branch_flips(q)}
    assert facts[F(1, 10)] == {1: True}
    assert facts[F(3, 10)] == {}


def test_topological_emission_and_declaration_tiebreak():
    text = """variable C { type discrete [ 2 ] { t, f }; }
    variable A { type discrete [ 2 ] { t, f }; }
    variable B { type discrete [ 2 ] { t, f }; }
    probability ( C | A ) { (t) 0.5, 0.5; (f) 0.5, 0.5; }
    probability ( A ) { table 0.5, 0.5; }
    probability ( B ) { table 0.5, 0.5; }"""
    net = parse_bif(text)
    # once A is placed, C and B are both ready and C was declared first
    assert net.topological_order() == ["A", "C", "B"]
    p = emit_program(net)
    order = []
    while isinstance(p, Let):
        order.append(p.var)
        p = p.body
    assert order == ["A", "C", "B"]


def test_cycle_is_reported():
    text = """variable A { type discrete [ 2 ] { t, f }; }
    variable B { type discrete [ 2 ] { t, f }; }
    probability ( A | B ) { (t) 0.5, 0.5; (f) 0.5, 0.5; }
    probability ( B | A ) { (t) 0.5, 0.5; (f) 0.5, 0.5; }"""
    with pytest.raises(CycleError) as exc:
        parse_bif(text)
    assert set(exc.value.cycle) == {"A", "B"}
    assert exc.value.cycle[0] == exc.value.cycle[-1]


BAD = {
    "row sum": """variable A { type discrete [ 2 ] { t, f }; }
        probability ( A ) { table 0.1, 0.8; }""",
    "undeclared parent": """variable A { type discrete [ 2 ] { t, f }; }
        probability ( A | Z ) { (t) 0.5, 0.5; }""",
    "empty": "network empty { }",
    "missing row": """variable A { type discrete [ 2 ] { t, f }; }
        variable B { type discrete [ 2 ] { t, f }; }
        probability ( A ) { table 0.5, 0.5; }
        probability ( B | A ) { (t) 0.5, 0.5; }""",
    "missing cpt": "variable A { type discrete [ 2 ] { t, f }; }",
    "default row": """variable A { type discrete [ 2 ] { t, f }; }
        probability ( A ) { default 0.5, 0.5; }""",
    "wrong arity": """variable A { type discrete [ 2 ] { t, f }; }
        probability ( A ) { table 0.2, 0.3, 0.5; }""",
    "duplicate": """variable A { type discrete [ 2 ] { t, f }; }
        variable A { type discrete [ 2 ] { t, f }; }""",
    "size mismatch": "variable A { type discrete [ 3 ] { t, f }; }",
}


@pytest.mark.parametrize("case", sorted(BAD))
def test_invalid_networks(case):
    with pytest.raises(BifError):
        parse_bif(BAD[case])


def test_row_sum_error_is_exact_and_located():
    with pytest.raises(BifError) as exc:
        parse_bif(BAD["row sum"])
    assert "9/10" in str(exc.value)
    assert exc.value.span is not None and exc.value.span.line == 2


def test_renormalize_rescales_rows():
    net = parse_bif(BAD["row sum"], renormalize=True)
    assert net.cpts["A"].rows[()] == (F(1, 9), F(8, 9))


def test_properties_and_comments_are_skipped():
    text = """// exported
    network "n" { property software x; }
    variable A { type discrete [ 2 ] { t, f }; property position = (1, 2); }
    probability ( A ) { table 0.5, 0.5; property note; }"""
    assert parse_bif(text).cpts["A"].rows[()] == (F(1, 2), F(1, 2))


def test_identifiers_avoid_keywords_and_collisions():
    text = """variable if { type discrete [ 2 ] { t, f }; }
    variable "a-b" { type discrete [ 2 ] { t, f }; }
    variable a_b { type discrete [ 2 ] { t, f }; }
    probability ( if ) { table 0.5, 0.5; }
    probability ( "a-b" ) { table 0.5, 0.5; }
    probability ( a_b ) { table 0.5, 0.5; }"""
    ids = identifiers(parse_bif(text))
    assert ids["if"] == "v_if"
    assert len(set(ids.values())) == 3


def random_network(rng: random.Random) -> str:
    n = rng.randint(1, 4)
    doms = [rng.choice([2, 2, 3]) for _ in range(n)]
    while _states(doms) > 20:
        doms[rng.randrange(n)] = 2
    out = []
    for i, k in enumerate(doms):
        vals = ", ".join(f"v{j}" for j in range(k))
        out.append(f"variable X{i} {{ type discrete [ {k} ] {{ {vals} }}; }}")
    for i, k in enumerate(doms):
        parents = [j for j in range(i) if rng.random() < 0.5]
        head = f"X{i}" + (" | " + ", ".join(f"X{j}" for j in parents) if parents else "")
        if not parents:
            rows = [f"table {_row(rng, k)};"]
        else:
            rows = []
            for combo in _combos([doms[j] for j in parents]):
                key = ", ".join(f"v{c}" for c in combo)
                rows.append(f"({key}) {_row(rng, k)};")
        out.append(f"probability ( {head} ) {{ {' '.join(rows)} }}")
    return "\n".join(out)


def _states(doms):
    n = 1
    for k in doms:
        n *= k
    return n


def _combos(doms):
    if not doms:
        yield ()
        return
    for rest in _combos(doms[:-1]):
        for v in range(doms[-1]):
            yield (*rest, v)


def _row(rng, k):
    cuts = sorted(rng.sample(range(0, 11), k - 1))
    bounds = [0, *cuts, 10]
    return ", ".join(str(F(b - a, 10).__float__()) for a, b in zip(bounds, bounds[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["none", "local", "global"]))
def test_random_networks_match_brute_force(seed, mode):
    net = parse_bif(random_network(random.Random(seed)))
    p = emit_program(net)
    expected = brute_force_marginals(net)
    assert marginals_from_joint(net, surface_distribution(p)) == expected
    for order in ("declared", "frequency"):
        q, ty = encode_typed(p, order)
        q, _ = optimize(q, mode)
        joint = decode_distribution(infer(compile_program(q)), ty)
        assert marginals_from_joint(net, joint) == expected
    assert flip_count(p) >= 0
