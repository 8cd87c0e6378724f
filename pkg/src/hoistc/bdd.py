"""Reduced ordered BDDs and weighted model counting.

Nodes live in parallel arrays; a node reference is an index, with 0 and 1
reserved for the FALSE and TRUE terminals.  The unique table makes every
(var, lo, hi) triple exist at most once, so equal functions get equal
references.  There are no complement edges and the variable order is
fixed: BDD variable ``k`` is the flip with program-order position ``k``.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .lang import (
    And, Const, DpplError, Expr, Flip, Fst, Ite, Let, Not, Or, Snd, Tuple,
    Var, flips, is_core,
)

FALSE, TRUE = 0, 1
DEFAULT_NODE_CAP = 10_000_000
JOINT_WIDTH_CAP = 16

# A compiled value: a node ref for a Boolean, or a pair of compiled values.
Shape = Union[int, tuple]


class NodeBudgetExceeded(DpplError):
    pass


class CompileTimeout(DpplError):
    pass


class WidthCapExceeded(DpplError):
    pass


def node_cap_from_env() -> int:
    raw = os.environ.get("HOISTC_NODE_CAP")
    return int(raw) if raw else DEFAULT_NODE_CAP


class BddGraph:
    """Unique table plus an ite cache; confined to one thread."""

    def __init__(self, node_cap: int | None = None, deadline: float | None = None):
        inf = 1 << 60
        self.var = [inf, inf]
        self.lo = [FALSE, TRUE]
        self.hi = [FALSE, TRUE]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.ite_cache: dict[tuple[int, int, int], int] = {}
        self.node_cap = node_cap_from_env() if node_cap is None else node_cap
        self.deadline = deadline

    def __len__(self) -> int:
        return len(self.var) - 2

    def mk(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        r = self.unique.get(key)
        if r is None:
            r = len(self.var)
            if r - 2 >= self.node_cap:
                raise NodeBudgetExceeded(f"BDD node budget of {self.node_cap} exhausted")
            if self.deadline is not None and r % 4096 == 0 and time.monotonic() > self.deadline:
                raise CompileTimeout("compilation exceeded its time budget")
            self.var.append(v)
            self.lo.append(lo)
            self.hi.append(hi)
            self.unique[key] = r
        return r

    def variable(self, v: int) -> int:
        return self.mk(v, FALSE, TRUE)

    def ite(self, f: int, g: int, h: int) -> int:
        if f == TRUE:
            return g
        if f == FALSE:
            return h
        if g == h:
            return g
        if g == TRUE and h == FALSE:
            return f
        key = (f, g, h)
        r = self.ite_cache.get(key)
        if r is not None:
            return r
        var = self.var
        v = min(var[f], var[g], var[h])
        f0, f1 = self._cof(f, v)
        g0, g1 = self._cof(g, v)
        h0, h1 = self._cof(h, v)
        r = self.mk(v, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self.ite_cache[key] = r
        return r

    def _cof(self, n: int, v: int) -> tuple[int, int]:
        if self.var[n] == v:
            return self.lo[n], self.hi[n]
        return n, n

    def neg(self, f: int) -> int:
        return self.ite(f, FALSE, TRUE)

    def conj(self, f: int, g: int) -> int:
        return self.ite(f, g, FALSE)

    def disj(self, f: int, g: int) -> int:
        return self.ite(f, TRUE, g)

    def reachable(self, roots) -> set[int]:
        seen: set[int] = set()
        stack = [r for r in roots if r > TRUE]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            for c in (self.lo[n], self.hi[n]):
                if c > TRUE and c not in seen:
                    stack.append(c)
        return seen


@dataclass
class CompiledProgram:
    roots: Shape
    graph: BddGraph
    weights: dict[int, tuple[Fraction, Fraction]]  # var -> (w_true, w_false)

    def root_list(self) -> list[int]:
        return _leaves(self.roots)


def _leaves(s: Shape) -> list[int]:
    if isinstance(s, tuple):
        return _leaves(s[0]) + _leaves(s[1])
    return [s]


def compile_program(p: Expr, node_cap: int | None = None,
                    deadline: float | None = None) -> CompiledProgram:
    """Compile a core program; the flip at program position k becomes variable k."""
    if not is_core(p):
        raise DpplError("compile expects a core program; encode it first")
    g = BddGraph(node_cap, deadline)
    order = {fl.id: k for k, (_, fl) in enumerate(flips(p))}
    weights: dict[int, tuple[Fraction, Fraction]] = {}

    def go(e: Expr, env: dict) -> Shape:
        match e:
            case Const(b):
                return TRUE if b else FALSE
            case Var(name):
                return env[name]
            case Flip(fid, theta):
                v = order[fid]
                weights[v] = (theta, 1 - theta)
                return g.variable(v)
            case Let(name, b, body):
                return go(body, {**env, name: go(b, env)})
            case Ite(c, t, f):
                cond = _as_bool(go(c, env))
                return _ite_shape(g, cond, go(t, env), go(f, env))
            case Not(a):
                return g.neg(_as_bool(go(a, env)))
            case And(a, b):
                return g.conj(_as_bool(go(a, env)), _as_bool(go(b, env)))
            case Or(a, b):
                return g.disj(_as_bool(go(a, env)), _as_bool(go(b, env)))
            case Tuple(a, b):
                return (go(a, env), go(b, env))
            case Fst(a) | Snd(a):
                s = go(a, env)
                if not isinstance(s, tuple):
                    raise DpplError("projection of a non-pair")
                return s[0] if isinstance(e, Fst) else s[1]
        raise DpplError(f"cannot compile {type(e).__name__}")

    roots = go(p, {})
    return CompiledProgram(roots, g, weights)


def _as_bool(s: Shape) -> int:
    if isinstance(s, tuple):
        raise DpplError("expected a Boolean, got a pair")
    return s


def _ite_shape(g: BddGraph, c: int, t: Shape, f: Shape) -> Shape:
    if isinstance(t, tuple) != isinstance(f, tuple):
        raise DpplError("if-branches have different shapes")
    if isinstance(t, tuple):
        return (_ite_shape(g, c, t[0], f[0]), _ite_shape(g, c, t[1], f[1]))
    return g.ite(c, t, f)


def bdd_size(c: CompiledProgram) -> int:
    """Unique internal nodes reachable from any root (terminals excluded)."""
    return len(c.graph.reachable(c.root_list()))


def wmc(c: CompiledProgram, root: int) -> Fraction:
    g = c.graph
    memo: dict[int, Fraction] = {FALSE: Fraction(0), TRUE: Fraction(1)}
    stack = [root]
    while stack:
        n = stack[-1]
        if n in memo:
            stack.pop()
            continue
        lo, hi = g.lo[n], g.hi[n]
        pending = [x for x in (lo, hi) if x not in memo]
        if pending:
            stack.extend(pending)
            continue
        wt, wf = c.weights[g.var[n]]
        memo[n] = wt * memo[hi] + wf * memo[lo]
        stack.pop()
    return memo[root]


def _rebuild(s: Shape, bits):
    if isinstance(s, tuple):
        left = _rebuild(s[0], bits)
        return (left, _rebuild(s[1], bits))
    return next(bits)


def infer(c: CompiledProgram) -> dict:
    """Joint distribution over the returned values."""
    roots = c.root_list()
    if len(roots) > JOINT_WIDTH_CAP:
        raise WidthCapExceeded(
            f"output has {len(roots)} bits; joint inference is capped at {JOINT_WIDTH_CAP}")
    g = c.graph
    dist = {}

    def go(k: int, acc: int, bits: list[bool]):
        if acc == FALSE:
            return
        if k == len(roots):
            w = wmc(c, acc)
            if w:
                dist[_rebuild(c.roots, iter(bits))] = w
            return
        r = roots[k]
        go(k + 1, g.conj(acc, r), bits + [True])
        go(k + 1, g.conj(acc, g.neg(r)), bits + [False])

    go(0, TRUE, [])
    return dist


def marginals(c: CompiledProgram) -> list[Fraction]:
    """Pr(bit = true) for every output bit, in left-to-right order."""
    return [wmc(c, r) for r in c.root_list()]


def to_dot(c: CompiledProgram, names: dict[int, str] | None = None) -> str:
    g = c.graph
    roots = c.root_list()
    nodes = sorted(g.reachable(roots))
    lines = ["digraph bdd {", '  node [shape=circle];',
             '  n0 [label="0", shape=box];', '  n1 [label="1", shape=box];']
    for n in nodes:
        v = g.var[n]
        label = names.get(v, f"x{v}") if names else f"x{v}"
        lines.append(f'  n{n} [label="{label}"];')
        lines.append(f"  n{n} -> n{g.lo[n]} [style=dashed];")
        lines.append(f"  n{n} -> n{g.hi[n]};")
    for k, r in enumerate(roots):
        lines.append(f'  r{k} [label="out{k}", shape=plaintext];')
        lines.append(f"  r{k} -> n{r};")
    lines.append("}")
    return "\n".join(lines) + "\n"
