"""Random well-typed programs for differential testing.

Programs are built as a chain of ``let`` bindings (like the encodings of
Bayesian networks) whose right-hand sides are random expressions.  The
depth bound applies to each right-hand side and to the final result;
following a ``let`` into its body does not count as nesting.  Parameters
come from a small pool so that hoisting opportunities are common.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .encode import BOOL, IntT, PairT
from .lang import (
    And, Const, Discrete, Expr, Flip, Fst, IntEq, Ite, Let, Not, Or,
    Tuple, Var, assign_flip_ids, children,
)

THETAS = [Fraction(1, 10), Fraction(1, 5), Fraction(3, 10), Fraction(1, 2), Fraction(1, 5)]


class _Gen:
    def __init__(self, rng: random.Random, max_flips: int, max_depth: int, surface: bool):
        self.rng = rng
        self.budget = max_flips
        self.max_depth = max_depth
        self.surface = surface
        self.n = 0

    def theta(self) -> Fraction:
        r = self.rng.random()
        if r < 0.03:
            return Fraction(self.rng.choice([0, 1]))
        return self.rng.choice(THETAS)

    def flip(self) -> Expr:
        self.budget -= 1
        return Flip(0, self.theta())

    def discrete(self, k: int) -> Expr:
        if self.budget < k - 1:
            # out of flips: a point mass still has k categories but needs no flip
            hot = self.rng.randrange(k)
            return Discrete(tuple(Fraction(int(i == hot)) for i in range(k)))
        self.budget -= k - 1
        # tenths, so repeated parameters are common
        cuts = sorted(self.rng.sample(range(1, 10), k - 1))
        bounds = [0, *cuts, 10]
        return Discrete(tuple(Fraction(b - a, 10) for a, b in zip(bounds, bounds[1:])))

    def fresh(self) -> str:
        self.n += 1
        return f"v{self.n}"

    def vars_of(self, env, ty):
        return [v for v, t in env.items() if t == ty]

    # -- expressions --

    def boolean(self, env: dict, depth: int) -> Expr:
        rng = self.rng
        leafy = depth >= self.max_depth
        opts = ["const"]
        if self.budget > 0:
            opts += ["flip"] * 3
        bools = self.vars_of(env, BOOL)
        if bools:
            opts += ["var"] * 4
        ints = [v for v, t in env.items() if isinstance(t, IntT)] if self.surface else []
        if ints:
            opts += ["inteq"] * 3
        pairs = [v for v, t in env.items() if isinstance(t, PairT) and t.left == BOOL]
        if pairs:
            opts += ["proj"]
        if not leafy:
            opts += ["ite"] * 3 + ["not", "and", "and", "or", "let"]
        kind = rng.choice(opts)
        if kind == "const":
            return Const(rng.random() < 0.5)
        if kind == "flip":
            return self.flip()
        if kind == "var":
            return Var(rng.choice(bools))
        if kind == "inteq":
            v = rng.choice(ints)
            return IntEq(v, rng.randrange(env[v].k))
        if kind == "proj":
            return Fst(Var(rng.choice(pairs)))
        if kind == "not":
            return Not(self.boolean(env, depth + 1))
        if kind == "and":
            return And(self.guard(env, depth + 1), self.boolean(env, depth + 1))
        if kind == "or":
            return Or(self.boolean(env, depth + 1), self.boolean(env, depth + 1))
        if kind == "let":
            return self.let(env, depth, lambda e: self.boolean(e, depth + 1))
        return Ite(self.guard(env, depth + 1), self.boolean(env, depth + 1),
                   self.boolean(env, depth + 1))

    def guard(self, env: dict, depth: int) -> Expr:
        """Mostly conjunctions of literals, which the analysis learns from."""
        rng = self.rng
        lits = self.vars_of(env, BOOL)
        ints = [v for v, t in env.items() if isinstance(t, IntT)] if self.surface else []
        if (not lits and not ints) or rng.random() < 0.2:
            return self.boolean(env, depth)
        parts = []
        for _ in range(rng.choice([1, 1, 2, 2, 3])):
            if ints and (not lits or rng.random() < 0.5):
                v = rng.choice(ints)
                parts.append(IntEq(v, rng.randrange(env[v].k)))
            else:
                lit = Var(rng.choice(lits))
                parts.append(Not(lit) if rng.random() < 0.4 else lit)
        out = parts[0]
        for p in parts[1:]:
            out = And(out, p)
        return out

    def integer(self, k: int, env: dict, depth: int) -> Expr:
        rng = self.rng
        same = [v for v, t in env.items() if t == IntT(k)]
        opts = ["discrete"] * 3
        if same:
            opts += ["var"] * 2
        if depth < self.max_depth:
            opts += ["ite"] * 2
        kind = rng.choice(opts)
        if kind == "var":
            return Var(rng.choice(same))
        if kind == "ite":
            return Ite(self.guard(env, depth + 1), self.integer(k, env, depth + 1),
                       self.integer(k, env, depth + 1))
        return self.discrete(k)

    def value(self, ty, env: dict, depth: int) -> Expr:
        if ty == BOOL:
            return self.boolean(env, depth)
        if isinstance(ty, IntT):
            return self.integer(ty.k, env, depth)
        rng = self.rng
        same = [v for v, t in env.items() if t == ty]
        if same and rng.random() < 0.3:
            return Var(rng.choice(same))
        if depth < self.max_depth and rng.random() < 0.3:
            return Ite(self.guard(env, depth + 1), self.value(ty, env, depth + 1),
                       self.value(ty, env, depth + 1))
        return Tuple(self.value(ty.left, env, depth + 1), self.value(ty.right, env, depth + 1))

    def rand_type(self):
        rng = self.rng
        r = rng.random()
        if self.surface and r < 0.35:
            return IntT(rng.choice([2, 3, 4]))
        if r < 0.85:
            return BOOL
        return PairT(BOOL, BOOL)

    def let(self, env: dict, depth: int, body_fn) -> Expr:
        ty = self.rand_type()
        v = self.fresh()
        rhs = self.value(ty, env, depth + 1)
        return Let(v, rhs, body_fn({**env, v: ty}))

    def program(self) -> Expr:
        env: dict = {}
        lets = []
        for _ in range(self.rng.randint(1, 6)):
            if self.budget <= 0:
                break
            ty = self.rand_type()
            v = self.fresh()
            lets.append((v, self.value(ty, env, 0)))
            env[v] = ty
        names = list(env)
        if len(names) >= 2 and self.rng.random() < 0.7:
            a, b = self.rng.sample(names, 2)
            result: Expr = Tuple(Var(a), Var(b))
        elif names and self.rng.random() < 0.5:
            result = Var(names[-1])
        else:
            result = self.value(self.rand_type(), env, 0)
        for v, rhs in reversed(lets):
            result = Let(v, rhs, result)
        return assign_flip_ids(result)


def nesting_depth(e: Expr) -> int:
    """Height of the syntax tree, where a let body continues at its let's level."""
    if isinstance(e, Let):
        return max(1 + nesting_depth(e.bound), nesting_depth(e.body))
    kids = children(e)
    return 1 + max((nesting_depth(k) for k in kids), default=0)


def _bounded(rng, max_flips, max_depth, surface) -> Expr:
    # the generator's own depth counter undercounts guards, so reject and retry
    while True:
        p = _Gen(rng, max_flips, max(1, max_depth - 2), surface).program()
        if nesting_depth(p) <= max_depth:
            return p


def random_core_program(rng: random.Random, max_flips: int = 12, max_depth: int = 6) -> Expr:
    return _bounded(rng, max_flips, max_depth, surface=False)


def random_surface_program(rng: random.Random, max_flips: int = 12, max_depth: int = 6) -> Expr:
    return _bounded(rng, max_flips, max_depth, surface=True)


def corpus(seed: int, n: int, surface: bool = False, **kw) -> list[Expr]:
    rng = random.Random(seed)
    make = random_surface_program if surface else random_core_program
    return [make(rng, **kw) for _ in range(n)]


def chain_network_bif(n: int, shared: float = 0.5, seed: int = 0) -> str:
    """BIF text for a binary chain X0 -> X1 -> ... with some repeated parameters.

    A ``shared`` fraction of the non-root variables use the same
    probability in both CPT rows, so those two flips are interchangeable.
    """
    rng = random.Random(seed)
    tenths = [Fraction(k, 10) for k in range(1, 10)]
    shared_set = set(rng.sample(range(1, n), round(shared * (n - 1))))
    out = ["network chain {", "}"]
    for i in range(n):
        out.append(f"variable X{i} {{\n  type discrete [ 2 ] {{ yes, no }};\n}}")

    def row(p: Fraction) -> str:
        return f"{float(p)}, {float(1 - p)}"

    out.append(f"probability ( X0 ) {{\n  table {row(rng.choice(tenths))};\n}}")
    for i in range(1, n):
        a = rng.choice(tenths)
        b = a if i in shared_set else rng.choice([t for t in tenths if t != a])
        out.append(f"probability ( X{i} | X{i - 1} ) {{\n"
                   f"  (yes) {row(a)};\n  (no) {row(b)};\n}}")
    return "\n".join(out) + "\n"
