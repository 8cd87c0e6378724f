"""Abstract syntax, exact probabilities and structural utilities.

Every pass in the package works over the immutable node classes defined
here.  Probabilities are :class:`fractions.Fraction` values; a program's
flips carry ids assigned in pre-order, so ``Flip(1, ...)`` is always the
first coin the program tosses in source order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Union

Prob = Fraction

# A returned value: a Boolean, an integer (surface programs only) or a pair.
Value = Union[bool, int, tuple]

Address = tuple[int, ...]


class DpplError(Exception):
    """Base class for every error raised by the toolchain."""


class ScopeError(DpplError):
    def __init__(self, name: str, span=None):
        self.name = name
        self.span = span
        where = f" at {span}" if span is not None else ""
        super().__init__(f"unbound variable '{name}'{where}")


class ProbabilityError(DpplError):
    pass


class DpplTypeError(DpplError):
    pass


# ---------------------------------------------------------------------------
# Nodes


@dataclass(frozen=True, slots=True)
class Let:
    var: str
    bound: Expr
    body: Expr


@dataclass(frozen=True, slots=True)
class Ite:
    guard: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True, slots=True)
class Flip:
    id: int
    theta: Fraction
    # Original flip ids folded into this one by hoisting; bookkeeping only.
    origin: frozenset = field(default=frozenset(), compare=False)


@dataclass(frozen=True, slots=True)
class Discrete:
    params: tuple[Fraction, ...]


@dataclass(frozen=True, slots=True)
class Tuple:
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Fst:
    arg: Expr


@dataclass(frozen=True, slots=True)
class Snd:
    arg: Expr


@dataclass(frozen=True, slots=True)
class IntEq:
    var: str
    k: int


@dataclass(frozen=True, slots=True)
class Not:
    arg: Expr


@dataclass(frozen=True, slots=True)
class And:
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Or:
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Const:
    value: bool


@dataclass(frozen=True, slots=True)
class Var:
    name: str


Expr = Union[Let, Ite, Flip, Discrete, Tuple, Fst, Snd, IntEq, Not, And, Or, Const, Var]

TRUE = Const(True)
FALSE = Const(False)


def prob(x) -> Fraction:
    """Exact probability from an int, Fraction or decimal string ("0.3", "4/9")."""
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    return Fraction(x)


def check_prob(p: Fraction) -> Fraction:
    if not 0 <= p <= 1:
        raise ProbabilityError(f"probability {p} outside [0, 1]")
    return p


def check_discrete(params) -> tuple[Fraction, ...]:
    params = tuple(Fraction(p) for p in params)
    if not params:
        raise ProbabilityError("discrete needs at least one parameter")
    for p in params:
        if p < 0:
            raise ProbabilityError(f"discrete parameter {p} is negative")
    total = sum(params)
    if total != 1:
        raise ProbabilityError(f"discrete parameters sum to {total}, not 1")
    return params


# ---------------------------------------------------------------------------
# Generic traversal


def children(e: Expr) -> tuple:
    match e:
        case Let(_, b, body):
            return (b, body)
        case Ite(g, t, f):
            return (g, t, f)
        case Tuple(a, b) | And(a, b) | Or(a, b):
            return (a, b)
        case Fst(a) | Snd(a) | Not(a):
            return (a,)
        case _:
            return ()


def with_children(e: Expr, new: tuple) -> Expr:
    match e:
        case Let(v, _, _):
            return Let(v, *new)
        case Ite():
            return Ite(*new)
        case Tuple():
            return Tuple(*new)
        case And():
            return And(*new)
        case Or():
            return Or(*new)
        case Fst():
            return Fst(*new)
        case Snd():
            return Snd(*new)
        case Not():
            return Not(*new)
        case _:
            return e


def walk(e: Expr, addr: Address = ()) -> Iterator[tuple[Address, Expr]]:
    """Pre-order (address, node) pairs.  Iterative, so deep let chains are fine."""
    stack = [(addr, e)]
    while stack:
        a, node = stack.pop()
        yield a, node
        kids = children(node)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((a + (i,), kids[i]))


def subtree(e: Expr, addr: Address) -> Expr:
    for i in addr:
        e = children(e)[i]
    return e


def replace_at(e: Expr, addr: Address, new: Expr) -> Expr:
    if not addr:
        return new
    kids = list(children(e))
    kids[addr[0]] = replace_at(kids[addr[0]], addr[1:], new)
    return with_children(e, tuple(kids))


def transform(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Bottom-up rewrite; ``fn`` returns a replacement or None to keep the node."""
    kids = children(e)
    if kids:
        new_kids = tuple(transform(k, fn) for k in kids)
        if any(a is not b for a, b in zip(new_kids, kids)):
            e = with_children(e, new_kids)
    out = fn(e)
    return e if out is None else out


def flips(e: Expr) -> list[tuple[Address, Flip]]:
    """Flip nodes in program (pre-order) order, with their addresses."""
    return [(a, n) for a, n in walk(e) if isinstance(n, Flip)]


def names(e: Expr) -> set[str]:
    out = set()
    for _, n in walk(e):
        if isinstance(n, (Let, Var, IntEq)):
            out.add(n.var if not isinstance(n, Var) else n.name)
    return out


def is_core(e: Expr) -> bool:
    return not any(isinstance(n, (Discrete, IntEq)) for _, n in walk(e))


def fresh_name(taken: set[str], prefix: str, start: int = 0) -> tuple[str, int]:
    n = start
    while f"{prefix}{n}" in taken:
        n += 1
    return f"{prefix}{n}", n + 1


# ---------------------------------------------------------------------------
# Operations


def assign_flip_ids(p: Expr) -> Expr:
    counter = iter(range(1, 1 << 62))

    def go(e):
        if isinstance(e, Flip):
            i = next(counter)
            return e if e.id == i else Flip(i, e.theta, e.origin)
        kids = children(e)
        if not kids:
            return e
        new = tuple(go(k) for k in kids)
        if all(a is b for a, b in zip(new, kids)):
            return e
        return with_children(e, new)

    return go(p)


def flip_count(p: Expr) -> int:
    return sum(1 for _, n in walk(p) if isinstance(n, Flip))


def check_scope(p: Expr) -> None:
    """Raise ScopeError for the first Var/IntEq not bound by an enclosing let."""

    def go(e, env):
        match e:
            case Var(name) | IntEq(name, _):
                if name not in env:
                    raise ScopeError(name)
            case Let(v, b, body):
                go(b, env)
                go(body, env | {v})
            case _:
                for k in children(e):
                    go(k, env)

    go(p, frozenset())


def param_census(p: Expr) -> tuple[int, int]:
    """(total, distinct) raw parameters.

    Each parameter belongs to the innermost ``let`` right-hand side that
    contains it (or to the top-level scope); distinct values are counted
    per scope and summed.
    """
    scopes: dict[Address | None, set[Fraction]] = {}
    total = 0

    def go(e, addr, scope):
        nonlocal total
        match e:
            case Flip(_, theta):
                total += 1
                scopes.setdefault(scope, set()).add(theta)
            case Discrete(params):
                total += len(params)
                scopes.setdefault(scope, set()).update(params)
            case Let(_, b, body):
                go(b, addr + (0,), addr + (0,))
                go(body, addr + (1,), scope)
            case _:
                for i, k in enumerate(children(e)):
                    go(k, addr + (i,), scope)

    go(p, (), None)
    return total, sum(len(s) for s in scopes.values())


def parameter_counts(p: Expr) -> Counter:
    """Occurrences of every raw parameter across all flips and discretes."""
    c = Counter()
    for _, n in walk(p):
        if isinstance(n, Flip):
            c[n.theta] += 1
        elif isinstance(n, Discrete):
            c.update(n.params)
    return c


def tuple_of(items: list[Expr]) -> Expr:
    """Right-nested pair of ``items``; a single item is returned as is."""
    out = items[-1]
    for it in reversed(items[:-1]):
        out = Tuple(it, out)
    return out


def conj(items: list[Expr]) -> Expr:
    if not items:
        return TRUE
    out = items[0]
    for it in items[1:]:
        out = And(out, it)
    return out
