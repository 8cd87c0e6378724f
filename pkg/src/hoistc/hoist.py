"""Flip hoisting: merge same-parameter flips that never co-occur.

A group is hoisted by binding one fresh flip with ``let`` just above the
members' lowest common ancestor and replacing every member by a reference
to it.  When that ancestor is the right-hand side of a ``let`` the new
binding is placed above the ``let`` instead, which keeps the output in
the familiar ``let ... in let ... in`` shape.

With ``order="strict"`` a group is hoisted only when no flip between the
new binding and a member can be observed on the same execution as that
member, so the program's flip order (and thus the BDD variable order) is
unchanged up to relabelling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping

from .analysis import FlipSite, analyze, never_cooccur, redundancy_groups
from .lang import (
    Address, DpplError, Expr, Flip, Let, Var, assign_flip_ids,
    flips, fresh_name, names, subtree, transform, replace_at,
)

OrderPolicy = Literal["strict", "off"]


class InvalidGroup(DpplError):
    pass


class Timeout(DpplError):
    pass


@dataclass(frozen=True)
class HoistGroup:
    members: frozenset[int]
    theta: Fraction
    anchor: Address
    fresh_var: str
    # original (pre-optimisation) flip ids covered by the members
    origin: frozenset[int] = field(default=frozenset(), compare=False)

    def to_json(self) -> dict:
        return {
            "members": sorted(self.members),
            "original_flips": sorted(self.origin),
            "theta": str(self.theta),
            "anchor": list(self.anchor),
            "var": self.fresh_var,
        }


@dataclass
class HoistReport:
    applied: list[HoistGroup] = field(default_factory=list)
    skipped: list[tuple[HoistGroup, str]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "applied": [g.to_json() for g in self.applied],
            "skipped": [{**g.to_json(), "reason": r} for g, r in self.skipped],
        }


def _common_prefix(addrs: list[Address]) -> Address:
    lo, hi = min(addrs), max(addrs)
    n = 0
    while n < min(len(lo), len(hi)) and lo[n] == hi[n]:
        n += 1
    return lo[:n]


def make_group(p: Expr, members, sites: Mapping[int, FlipSite] | None = None,
               fresh_var: str | None = None,
               index: Mapping[int, Flip] | None = None) -> HoistGroup:
    sites = analyze(p) if sites is None else sites
    members = frozenset(members)
    if len(members) < 2:
        raise InvalidGroup("a hoisting group needs at least two flips")
    missing = [m for m in members if m not in sites]
    if missing:
        raise InvalidGroup(f"no flips with ids {sorted(missing)}")
    thetas = {sites[m].theta for m in members}
    if len(thetas) != 1:
        raise InvalidGroup(f"members have different parameters {sorted(thetas)}")
    anchor = _common_prefix([sites[m].path for m in members])
    # lift the binding out of let right-hand sides
    while anchor and anchor[-1] == 0 and isinstance(subtree(p, anchor[:-1]), Let):
        anchor = anchor[:-1]
    if fresh_var is None:
        fresh_var = fresh_name(names(p), "_h")[0]
    index = {fl.id: fl for _, fl in flips(p)} if index is None else index
    origin = frozenset().union(*(index[m].origin or {m} for m in members))
    return HoistGroup(members, thetas.pop(), anchor, fresh_var, origin)


def hoist(p: Expr, g: HoistGroup) -> Expr:
    """Replace the group's members by one shared flip bound at ``g.anchor``."""
    found = {fl.id: fl for _, fl in flips(p) if fl.id in g.members}
    if len(found) != len(g.members):
        raise InvalidGroup(f"flips {sorted(g.members - found.keys())} not in program")
    if any(fl.theta != g.theta for fl in found.values()):
        raise InvalidGroup("member parameter differs from the group parameter")
    if g.fresh_var in names(p):
        raise InvalidGroup(f"variable {g.fresh_var} already used")
    target = subtree(p, g.anchor)
    inner = transform(target, lambda e: Var(g.fresh_var)
                      if isinstance(e, Flip) and e.id in g.members else None)
    origin = frozenset().union(*(fl.origin or {fl.id} for fl in found.values()))
    wrapped = Let(g.fresh_var, Flip(0, g.theta, origin), inner)
    return assign_flip_ids(replace_at(p, g.anchor, wrapped))


def order_preserving(p: Expr, g: HoistGroup, sites: Mapping[int, FlipSite] | None = None) -> bool:
    sites = analyze(p) if sites is None else sites
    n = len(g.anchor)
    inside = [k for k, s in sites.items() if s.path[:n] == g.anchor]
    last = max(g.members)
    for k in inside:
        if k in g.members or k > last:
            continue
        for m in g.members:
            if k < m and not never_cooccur(p, sites, k, m):
                return False
    return True


def _with_origins(p: Expr) -> Expr:
    return transform(p, lambda e: Flip(e.id, e.theta, frozenset({e.id}))
                     if isinstance(e, Flip) and not e.origin else None)


def _hoist_pass(p: Expr, mode: str, order: OrderPolicy, report: HoistReport,
                deadline: float | None) -> Expr:
    while True:
        if deadline is not None and time.monotonic() > deadline:
            raise Timeout("optimisation exceeded its time budget")
        sites = analyze(p)
        var = fresh_name(names(p), "_h")[0]
        index = {fl.id: fl for _, fl in flips(p)}
        candidates, blocked = [], []
        for members in redundancy_groups(p, mode, sites):
            g = make_group(p, members, sites, var, index)
            if order == "strict" and not order_preserving(p, g, sites):
                blocked.append(g)
            else:
                candidates.append(g)
        if not candidates:
            report.skipped.extend((g, "order-violation") for g in blocked)
            return p
        # innermost anchor first; ties go to the earliest group
        g = max(candidates, key=lambda g: len(g.anchor))
        p = hoist(p, g)
        report.applied.append(g)


def optimize(p: Expr, mode: str = "local", order: OrderPolicy = "strict",
             deadline: float | None = None) -> tuple[Expr, HoistReport]:
    """Hoist redundancy groups until none applies.

    ``mode="global"`` first runs the local pass to its fixpoint and then
    the global one, so every local merge is also made in global mode.
    """
    if mode not in ("none", "local", "global"):
        raise ValueError(f"unknown mode {mode!r}")
    if order not in ("strict", "off"):
        raise ValueError(f"unknown order policy {order!r}")
    report = HoistReport()
    if mode == "none":
        return p, report
    q = _with_origins(p)
    q = _hoist_pass(q, "local", order, report, deadline)
    if mode == "global":
        # groups blocked locally get another chance under the global predicate
        report.skipped.clear()
        q = _hoist_pass(q, "global", order, report, deadline)
    return q, report
