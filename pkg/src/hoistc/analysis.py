"""Branch-sensitive data-flow analysis over flips.

Two kinds of facts are tracked while walking the program:

* aliases: ``x -> (flip id, polarity)`` for variables that provably equal
  a flip literal (``let x = flip t``, ``let x = y``, ``let x = !y``);
* constraints: a partial assignment of flips implied by the guards of the
  enclosing ``if`` branches.

Constraints are derived only from guards that are conjunctions of
literals.  The then-branch learns every literal; the else-branch learns
the negation only when the guard is a single literal.  At a join the
state is the intersection of both branch exit states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Literal, Mapping

from .lang import (
    Address, And, Const, DpplError, Expr, Flip, Ite, Let, Not, Var,
    children, flips, walk,
)

Lit = tuple[int, bool]  # (flip id, polarity)


@dataclass(frozen=True)
class FactState:
    aliases: Mapping[str, Lit]
    constraints: Mapping[int, bool]

    def join(self, other: FactState) -> FactState:
        return FactState(
            {k: v for k, v in self.aliases.items() if other.aliases.get(k) == v},
            {k: v for k, v in self.constraints.items() if other.constraints.get(k) == v},
        )


@dataclass(frozen=True)
class FlipSite:
    id: int
    theta: Fraction
    facts: Mapping[int, bool]
    path: Address


@dataclass
class JoinRecord:
    address: Address
    then_exit: FactState
    else_exit: FactState
    post: FactState


@dataclass
class AnalysisTrace:
    sites: dict[int, FlipSite]
    joins: list[JoinRecord] = field(default_factory=list)
    derived: int = 0         # guard literals that produced at least one fact
    facts_added: int = 0     # constraint entries added, then- and else-branch together
    guard_literals: int = 0  # literal leaves over all guards


class UnknownFlip(DpplError):
    pass


def guard_literals(g: Expr, aliases: Mapping[str, Lit]) -> list[Lit] | None:
    """The guard as a list of flip literals, or None if it is not a conjunction of them."""
    out: list[Lit] = []
    stack = [(g, True)]
    while stack:
        e, pol = stack.pop()
        match e:
            case And(a, b) if pol:
                stack.append((b, True))
                stack.append((a, True))
            case Not(a):
                stack.append((a, not pol))
            case Var(name) if name in aliases:
                fid, p = aliases[name]
                out.append((fid, p == pol))
            case Flip(fid, _):
                out.append((fid, pol))
            case Const(b) if b == pol:
                pass
            case _:
                # Or, IntEq, unaliased variables, negated conjunctions, ...
                return None
    return out


def _leaf_count(g: Expr) -> int:
    kids = children(g)
    return 1 if not kids else sum(_leaf_count(k) for k in kids)


def analyze_trace(p: Expr) -> AnalysisTrace:
    trace = AnalysisTrace({})

    def go(e: Expr, addr: Address, st: FactState) -> FactState:
        match e:
            case Flip(fid, theta):
                trace.sites[fid] = FlipSite(fid, theta, MappingProxyType(dict(st.constraints)), addr)
                return st
            case Let(v, b, body):
                go(b, addr + (0,), st)
                aliases = {k: x for k, x in st.aliases.items() if k != v}
                lit = _alias_of(b, st.aliases)
                if lit is not None:
                    aliases[v] = lit
                go(body, addr + (1,), FactState(aliases, st.constraints))
                # the binding is out of scope again once the let ends
                return st
            case Ite(g, t, f):
                go(g, addr + (0,), st)
                trace.guard_literals += _leaf_count(g)
                lits = guard_literals(g, st.aliases)
                then_c = dict(st.constraints)
                else_c = dict(st.constraints)
                if lits:
                    used = set()
                    for n, (fid, val) in enumerate(lits):
                        if fid not in then_c:
                            then_c[fid] = val
                            used.add(n)
                    if len(lits) == 1:
                        fid, val = lits[0]
                        if fid not in else_c:
                            else_c[fid] = not val
                            used.add(0)
                    trace.derived += len(used)
                    trace.facts_added += (len(then_c) - len(st.constraints)
                                          + len(else_c) - len(st.constraints))
                t_exit = go(t, addr + (1,), FactState(st.aliases, then_c))
                f_exit = go(f, addr + (2,), FactState(st.aliases, else_c))
                post = t_exit.join(f_exit)
                trace.joins.append(JoinRecord(addr, t_exit, f_exit, post))
                return post
            case _:
                for i, k in enumerate(children(e)):
                    go(k, addr + (i,), st)
                return st

    go(p, (), FactState({}, {}))
    return trace


def _alias_of(b: Expr, aliases: Mapping[str, Lit]) -> Lit | None:
    match b:
        case Flip(fid, _):
            return (fid, True)
        case Var(name):
            return aliases.get(name)
        case Not(Var(name)) if name in aliases:
            fid, pol = aliases[name]
            return (fid, not pol)
        case Not(Flip(fid, _)):
            return (fid, False)
    return None


def analyze(p: Expr) -> dict[int, FlipSite]:
    return analyze_trace(p).sites


def _site(sites: Mapping[int, FlipSite], i: int) -> FlipSite:
    try:
        return sites[i]
    except KeyError:
        raise UnknownFlip(f"no flip with id {i}") from None


_ITES: tuple[Expr | None, frozenset[Address]] = (None, frozenset())


def _ite_addresses(p: Expr) -> frozenset[Address]:
    """Addresses of every Ite in ``p``; the last program asked about is cached."""
    global _ITES
    if _ITES[0] is not p:
        _ITES = (p, frozenset(a for a, n in walk(p) if isinstance(n, Ite)))
    return _ITES[1]


def _prefix_len(a: Address, b: Address) -> int:
    # binary search; slice comparison runs in C, which matters for deep let chains
    lo, hi = 0, min(len(a), len(b))
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if a[:mid] == b[:mid]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def disjoint_branches(a: Address, b: Address, p: Expr) -> bool:
    """True iff the lowest common ancestor is an Ite holding a and b in opposite branches."""
    n = _prefix_len(a, b)
    if n >= len(a) or n >= len(b):
        return False
    return {a[n], b[n]} == {1, 2} and a[:n] in _ite_addresses(p)


def locally_redundant(p: Expr, i: int, j: int, sites: Mapping[int, FlipSite] | None = None) -> bool:
    sites = analyze(p) if sites is None else sites
    si, sj = _site(sites, i), _site(sites, j)
    if i == j:
        return False
    return si.theta == sj.theta and disjoint_branches(si.path, sj.path, p)


def facts_disagree(f: Mapping[int, bool], g: Mapping[int, bool]) -> bool:
    if len(g) < len(f):
        f, g = g, f
    return any(k in g and g[k] != v for k, v in f.items())


def never_cooccur(p: Expr, sites: Mapping[int, FlipSite], i: int, j: int,
                  structural_only: bool = False) -> bool:
    """Sound test that no execution reaches both flip i and flip j."""
    si, sj = _site(sites, i), _site(sites, j)
    if i == j:
        return False
    if disjoint_branches(si.path, sj.path, p):
        return True
    return not structural_only and facts_disagree(si.facts, sj.facts)


Mode = Literal["local", "global"]


def redundancy_groups(p: Expr, mode: Mode, sites: Mapping[int, FlipSite] | None = None) -> list[frozenset[int]]:
    """First-fit grouping, in program order, of same-parameter flips that never co-occur."""
    if mode not in ("local", "global"):
        raise ValueError(f"unknown mode {mode!r}")
    sites = analyze(p) if sites is None else sites
    structural = mode == "local"
    by_theta: dict[Fraction, list[list[int]]] = {}
    for _, fl in flips(p):
        i = fl.id
        groups = by_theta.setdefault(fl.theta, [])
        for g in groups:
            if all(never_cooccur(p, sites, m, i, structural) for m in g):
                g.append(i)
                break
        else:
            groups.append([i])
    found = [g for gs in by_theta.values() for g in gs if len(g) >= 2]
    # ids follow program order, so this is the order the groups were opened in
    return [frozenset(g) for g in sorted(found, key=lambda g: g[0])]


def facts_json(sites: Mapping[int, FlipSite]) -> list[dict]:
    return [
        {"flip": s.id, "theta": str(s.theta), "path": list(s.path),
         "facts": {str(k): v for k, v in sorted(s.facts.items())}}
        for s in sorted(sites.values(), key=lambda s: s.id)
    ]
