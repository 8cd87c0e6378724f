"""Exact reference semantics by exhaustive path enumeration.

A path records only the flips actually encountered while running the
program, so the number of paths is usually far below ``2**flip_count``.
Both operands of ``&&``/``||`` are always evaluated (the operators build
formulas, they do not short-circuit), which matches the BDD compiler.

``surface_distribution`` additionally understands ``discrete`` and
``x == k``; it is the oracle for the categorical encoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .lang import (
    And, Const, Discrete, DpplError, DpplTypeError, Expr, Flip, Fst, IntEq,
    Ite, Let, Not, Or, Snd, Tuple, Value, Var, flip_count, is_core,
)

DEFAULT_FLIP_BOUND = 24

Distribution = dict  # Value -> Fraction, weights sum to 1, no zero entries


class FlipBoundExceeded(DpplError):
    pass


@dataclass(frozen=True)
class Path:
    assignment: tuple[tuple[int, bool], ...]  # (flip id, outcome) in encounter order
    weight: Fraction
    result: Value

    @property
    def flips(self) -> dict[int, bool]:
        return dict(self.assignment)


_ONE = Fraction(1)


def _run(e: Expr, env: dict, asg: tuple, w: Fraction, surface: bool) -> Iterator:
    """Yield (value, assignment, weight) for every way ``e`` can evaluate."""
    match e:
        case Const(b):
            yield b, asg, w
        case Var(name):
            yield env[name], asg, w
        case Flip(i, theta):
            yield True, asg + ((i, True),), w * theta
            yield False, asg + ((i, False),), w * (1 - theta)
        case Let(v, b, body):
            for bv, a1, w1 in _run(b, env, asg, w, surface):
                yield from _run(body, {**env, v: bv}, a1, w1, surface)
        case Ite(g, t, f):
            for gv, a1, w1 in _run(g, env, asg, w, surface):
                yield from _run(t if _bool(gv) else f, env, a1, w1, surface)
        case Not(a):
            for v, a1, w1 in _run(a, env, asg, w, surface):
                yield not _bool(v), a1, w1
        case And(l, r) | Or(l, r):
            is_and = isinstance(e, And)
            for lv, a1, w1 in _run(l, env, asg, w, surface):
                for rv, a2, w2 in _run(r, env, a1, w1, surface):
                    yield ((_bool(lv) and _bool(rv)) if is_and
                           else (_bool(lv) or _bool(rv))), a2, w2
        case Tuple(l, r):
            for lv, a1, w1 in _run(l, env, asg, w, surface):
                for rv, a2, w2 in _run(r, env, a1, w1, surface):
                    yield (lv, rv), a2, w2
        case Fst(a) | Snd(a):
            idx = 0 if isinstance(e, Fst) else 1
            for v, a1, w1 in _run(a, env, asg, w, surface):
                if not isinstance(v, tuple):
                    raise DpplTypeError(f"projection of non-pair value {v!r}")
                yield v[idx], a1, w1
        case Discrete(params) if surface:
            for k, p in enumerate(params):
                yield k, asg, w * p
        case IntEq(name, k) if surface:
            v = env[name]
            if isinstance(v, bool):
                # a Boolean is a two-category value: true is category 0
                yield (k == 0) == v, asg, w
            else:
                yield v == k, asg, w
        case _:
            raise DpplError(f"cannot evaluate {type(e).__name__} here")


def _bool(v) -> bool:
    if not isinstance(v, bool):
        raise DpplTypeError(f"expected a Boolean, got {v!r}")
    return v


def _check_bound(p: Expr, bound: int) -> None:
    n = flip_count(p)
    if n > bound:
        raise FlipBoundExceeded(f"program has {n} flips; enumeration bound is {bound}")


def enumerate_paths(p: Expr, bound: int = DEFAULT_FLIP_BOUND) -> list[Path]:
    if not is_core(p):
        raise DpplError("enumerate expects a core program; encode it first")
    _check_bound(p, bound)
    return [Path(a, w, v) for v, a, w in _run(p, {}, (), _ONE, False)]


def _collect(results) -> Distribution:
    dist: dict = {}
    for v, _, w in results:
        if w:
            dist[v] = dist.get(v, 0) + w
    return dist


def distribution(p: Expr, bound: int = DEFAULT_FLIP_BOUND) -> Distribution:
    if not is_core(p):
        raise DpplError("distribution expects a core program; encode it first")
    _check_bound(p, bound)
    return _collect(_run(p, {}, (), _ONE, False))


def surface_distribution(p: Expr, bound: int = DEFAULT_FLIP_BOUND) -> Distribution:
    """Distribution of a program that may still contain discrete/IntEq."""
    _check_bound(p, bound)
    return _collect(_run(p, {}, (), _ONE, True))


def distributions_equal(a: Distribution, b: Distribution) -> bool:
    a = {k: v for k, v in a.items() if v}
    b = {k: v for k, v in b.items() if v}
    return a == b


def probability(dist: Distribution, pred) -> Fraction:
    """Total weight of the values satisfying ``pred``."""
    return sum((w for v, w in dist.items() if pred(v)), Fraction(0))
