from fractions import Fraction

import pytest

from hoistc.lang import (
    And, Discrete, Flip, Ite, Let, Not, ProbabilityError, ScopeError, TRUE, Tuple, Var,
    assign_flip_ids, check_discrete, check_prob, check_scope, conj, flip_count, flips,
    fresh_name, is_core, param_census, prob, replace_at, subtree, tuple_of, walk,
)
from hoistc.syntax import parse

from conftest import load


def test_flip_ids_are_preorder_from_one():
    p = load("branch.dppl")
    assert [fl.id for _, fl in flips(p)] == [1, 2, 3, 4, 5]
    assert [fl.theta for _, fl in flips(p)] == [Fraction(k, 10) for k in (1, 2, 3, 2, 3)]


def test_assign_flip_ids_is_idempotent_and_renumbers():
    p = Tuple(Flip(7, Fraction(1, 2)), Ite(Flip(0, Fraction(1, 3)), Flip(9, Fraction(1, 4)), TRUE))
    q = assign_flip_ids(p)
    assert [fl.id for _, fl in flips(q)] == [1, 2, 3]
    assert assign_flip_ids(q) == q


def test_addresses_follow_child_order():
    p = load("branch.dppl")
    for addr, node in walk(p):
        assert subtree(p, addr) is node
    ite_addr = next(a for a, n in walk(p) if isinstance(n, Ite))
    assert subtree(p, ite_addr + (1,)) == Flip(3, Fraction(3, 10))


def test_replace_at_only_touches_target():
    p = Tuple(Var("a"), Var("b"))
    assert replace_at(p, (1,), TRUE) == Tuple(Var("a"), TRUE)
    assert replace_at(p, (), TRUE) == TRUE


@pytest.mark.parametrize("bad", [Fraction(-1, 10), Fraction(11, 10)])
def test_probability_range(bad):
    with pytest.raises(ProbabilityError):
        check_prob(bad)


def test_prob_parses_strings_exactly():
    assert prob("0.1") == Fraction(1, 10)
    assert prob("4/9") == Fraction(4, 9)


def test_discrete_must_sum_to_one():
    with pytest.raises(ProbabilityError):
        check_discrete([Fraction(1, 2), Fraction(1, 3)])
    # zero entries occur in real CPTs and are allowed
    assert check_discrete([Fraction(1), Fraction(0)]) == (1, 0)


def test_scope_check_reports_name():
    with pytest.raises(ScopeError) as exc:
        check_scope(Let("x", Flip(1, Fraction(1, 2)), And(Var("x"), Var("y"))))
    assert exc.value.name == "y"


def test_fresh_name_avoids_taken():
    name, nxt = fresh_name({"_h0", "_h1"}, "_h")
    assert name == "_h2" and nxt == 3


def test_core_membership():
    assert is_core(load("branch.dppl"))
    assert not is_core(load("cpt.dppl"))


def test_flip_count_and_helpers():
    assert flip_count(load("guards.dppl")) == 5
    assert tuple_of([Var("a"), Var("b"), Var("c")]) == Tuple(Var("a"), Tuple(Var("b"), Var("c")))
    assert conj([Var("a"), Var("b"), Var("c")]) == And(And(Var("a"), Var("b")), Var("c"))
    assert conj([]) == TRUE


def test_param_census_counts_distinct_per_scope():
    # flip 0.2 appears three times, but 0.2 and 0.8 are distinct numbers
    assert param_census(load("cpt.dppl")) == (6, 5)
    assert param_census(parse("(flip 0.5, flip 0.5)")) == (2, 1)


def test_discrete_node_holds_params():
    d = Discrete((Fraction(1, 2), Fraction(1, 2)))
    assert not is_core(d)
    assert not is_core(Not(d))
