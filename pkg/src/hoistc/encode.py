"""Lowering of ``discrete`` and ``x == k`` into Boolean core programs.

Integers become fixed-width bit tuples, most significant bit first.  A
k-way ``discrete`` becomes a chain of k-1 flips, each renormalised by the
probability mass still left::

    discrete(0.1, 0.4, 0.5)
    ==> if flip 0.1 then (false, false)
        else if flip 4/9 then (false, true) else (true, false)

When the discrete is bound directly by ``let x = discrete(...)`` the chain
flips are bound to fresh variables first, and ``x == k`` becomes a
conjunction of literals over those variables.  Guards of that shape are
exactly what the flow analysis can learn from.

``order="frequency"`` emits categories by how often their raw parameter
occurs in the whole program (most frequent first), which keeps common
parameters intact through renormalisation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Union

from .lang import (
    And, Const, Discrete, DpplTypeError, Expr, FALSE, Flip, Fst, IntEq, Ite,
    Let, Not, Or, Snd, Tuple, Var, assign_flip_ids, conj, fresh_name, names,
    parameter_counts, tuple_of, walk,
)

EncodingOrder = Literal["declared", "frequency"]


# ---------------------------------------------------------------------------
# Surface types


@dataclass(frozen=True)
class IntT:
    k: int  # number of categories

    @property
    def width(self) -> int:
        return max(1, (self.k - 1).bit_length())


@dataclass(frozen=True)
class PairT:
    left: Type
    right: Type


BOOL = "bool"
Type = Union[str, IntT, PairT]


def code(value: int, width: int) -> tuple[bool, ...]:
    return tuple(bool((value >> (width - 1 - i)) & 1) for i in range(width))


def code_expr(value: int, width: int) -> Expr:
    bits = [Const(b) for b in code(value, width)]
    return bits[0] if width == 1 else tuple_of(bits)


def bit_accessors(x: Expr, width: int) -> list[Expr]:
    if width == 1:
        return [x]
    out = []
    for _ in range(width - 1):
        out.append(Fst(x))
        x = Snd(x)
    out.append(x)
    return out


def decode_value(v, ty: Type):
    """Map a core value back to the surface value it encodes."""
    if ty == BOOL:
        return v
    if isinstance(ty, PairT):
        return (decode_value(v[0], ty.left), decode_value(v[1], ty.right))
    if ty.width == 1:
        return int(v)
    bits = []
    while len(bits) < ty.width - 1:
        bits.append(v[0])
        v = v[1]
    bits.append(v)
    n = 0
    for b in bits:
        n = 2 * n + int(b)
    return n


def decode_distribution(dist: dict, ty: Type) -> dict:
    out: dict = {}
    for v, w in dist.items():
        key = decode_value(v, ty)
        out[key] = out.get(key, 0) + w
    return out


# ---------------------------------------------------------------------------
# Plans


@dataclass(frozen=True)
class EncodingPlan:
    order: tuple[int, ...]          # categories with positive mass, in emission order
    steps: tuple[Fraction, ...]     # renormalised flip parameter per non-final category


def frequency_order(params, counts: Counter) -> tuple[int, ...]:
    return tuple(sorted(range(len(params)), key=lambda i: (-counts[params[i]], i)))


def plan(params, order: tuple[int, ...] | None = None) -> EncodingPlan:
    order = tuple(range(len(params))) if order is None else order
    live = tuple(i for i in order if params[i] > 0)
    steps = []
    remaining = Fraction(1)
    for i in live[:-1]:
        q = params[i] / remaining
        if q == 1:
            live = live[:len(steps) + 1]
            break
        steps.append(q)
        remaining -= params[i]
    return EncodingPlan(live, tuple(steps))


def discrete_orders(p: Expr) -> dict[tuple, tuple[int, ...]]:
    """Frequency-descending category order for every discrete, keyed by address."""
    counts = parameter_counts(p)
    return {a: frequency_order(n.params, counts)
            for a, n in walk(p) if isinstance(n, Discrete)}


# ---------------------------------------------------------------------------
# Encoding


@dataclass(frozen=True)
class _Chain:
    flip_vars: tuple[str, ...]
    plan: EncodingPlan


class _Encoder:
    def __init__(self, p: Expr, order: EncodingOrder):
        if order not in ("declared", "frequency"):
            raise ValueError(f"unknown encoding order {order!r}")
        self.order = order
        self.counts = parameter_counts(p)
        self.taken = set(names(p))
        self.counter = 0

    def fresh(self) -> str:
        name, self.counter = fresh_name(self.taken, "_e", self.counter)
        self.taken.add(name)
        return name

    def plan_for(self, params) -> EncodingPlan:
        if self.order == "frequency":
            return plan(params, frequency_order(params, self.counts))
        return plan(params)

    def chain(self, d: Discrete, guards: list[Expr]) -> Expr:
        pl = self.plan_for(d.params)
        w = IntT(len(d.params)).width
        out = code_expr(pl.order[-1], w)
        for g, cat in reversed(list(zip(guards, pl.order))):
            out = Ite(g, code_expr(cat, w), out)
        return out

    def go(self, e: Expr, env: dict) -> tuple[Expr, Type]:
        match e:
            case Const():
                return e, BOOL
            case Flip():
                return e, BOOL
            case Var(name):
                return e, env[name][0]
            case Discrete(params):
                pl = self.plan_for(params)
                guards = [Flip(0, q) for q in pl.steps]
                return self.chain(e, guards), IntT(len(params))
            case Let(v, Discrete(params) as d, body):
                pl = self.plan_for(params)
                vars_ = tuple(self.fresh() for _ in pl.steps)
                value = self.chain(d, [Var(x) for x in vars_])
                inner, ty = self.go(body, {**env, v: (IntT(len(params)), _Chain(vars_, pl))})
                out = Let(v, value, inner)
                for x, q in reversed(list(zip(vars_, pl.steps))):
                    out = Let(x, Flip(0, q), out)
                return out, ty
            case Let(v, b, body):
                b2, bty = self.go(b, env)
                chain = env[b.name][1] if isinstance(b, Var) else None
                body2, ty = self.go(body, {**env, v: (bty, chain)})
                return Let(v, b2, body2), ty
            case Ite(g, t, f):
                g2 = self.boolean(g, env)
                t2, tt = self.go(t, env)
                f2, ft = self.go(f, env)
                if tt != ft:
                    raise DpplTypeError(f"if-branches have types {_show(tt)} and {_show(ft)}")
                return Ite(g2, t2, f2), tt
            case Not(a):
                return Not(self.boolean(a, env)), BOOL
            case And(a, b):
                return And(self.boolean(a, env), self.boolean(b, env)), BOOL
            case Or(a, b):
                return Or(self.boolean(a, env), self.boolean(b, env)), BOOL
            case Tuple(a, b):
                a2, at = self.go(a, env)
                b2, bt = self.go(b, env)
                return Tuple(a2, b2), PairT(at, bt)
            case Fst(a) | Snd(a):
                a2, at = self.go(a, env)
                if not isinstance(at, PairT):
                    raise DpplTypeError(f"projection of a value of type {_show(at)}")
                if isinstance(e, Fst):
                    return Fst(a2), at.left
                return Snd(a2), at.right
            case IntEq(name, k):
                return self.int_eq(name, k, env), BOOL
        raise DpplTypeError(f"cannot encode {e!r}")

    def boolean(self, e: Expr, env: dict) -> Expr:
        e2, ty = self.go(e, env)
        if ty != BOOL:
            raise DpplTypeError(f"expected a Boolean, got {_show(ty)}")
        return e2

    def int_eq(self, name: str, k: int, env: dict) -> Expr:
        ty, chain = env[name]
        if ty == BOOL:
            # flip t is the two-way discrete(t, 1 - t): true is category 0
            if k > 1:
                raise DpplTypeError(f"{name} == {k}: a Boolean has only categories 0 and 1")
            return Var(name) if k == 0 else Not(Var(name))
        if not isinstance(ty, IntT):
            raise DpplTypeError(f"{name} == {k}: {name} has type {_show(ty)}")
        if k >= ty.k:
            raise DpplTypeError(f"{name} == {k}: {name} has only {ty.k} categories")
        if chain is not None:
            order = chain.plan.order
            if k not in order:
                return FALSE
            j = order.index(k)
            lits: list[Expr] = [Not(Var(x)) for x in chain.flip_vars[:j]]
            if j < len(chain.flip_vars):
                lits.append(Var(chain.flip_vars[j]))
            return conj(lits)
        lits = [a if bit else Not(a)
                for a, bit in zip(bit_accessors(Var(name), ty.width), code(k, ty.width))]
        return conj(lits)


def _show(ty: Type) -> str:
    if isinstance(ty, IntT):
        return f"int[{ty.k}]"
    if isinstance(ty, PairT):
        return f"({_show(ty.left)}, {_show(ty.right)})"
    return ty


def encode_typed(p: Expr, order: EncodingOrder = "declared") -> tuple[Expr, Type]:
    """Encode ``p`` and also return the surface type of its result."""
    enc = _Encoder(p, order)
    out, ty = enc.go(p, {})
    return assign_flip_ids(out), ty


def encode(p: Expr, order: EncodingOrder = "declared") -> Expr:
    return encode_typed(p, order)[0]


def surface_type(p: Expr) -> Type:
    return encode_typed(p)[1]
