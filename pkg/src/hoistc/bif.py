"""Bayesian networks in (a subset of) the BIF interchange format.

Supported: ``network`` blocks (contents ignored), ``variable`` blocks with
a discrete domain, and ``probability`` blocks using either ``table`` (root
variables) or one ``(parent values) p1, p2, ...;`` row per parent
configuration.  ``property`` lines are skipped.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .lang import (
    Discrete, DpplError, Expr, Flip, IntEq, Ite, Let, Var, assign_flip_ids,
    conj, tuple_of,
)
from .syntax import KEYWORDS, SourceSpan


class BifError(DpplError):
    def __init__(self, msg: str, span: SourceSpan | None = None):
        self.span = span
        super().__init__(f"{span}: {msg}" if span else msg)


class CycleError(BifError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("network has a directed cycle: " + " -> ".join(cycle))


@dataclass
class BifVariable:
    name: str
    domain: list[str]


@dataclass
class Cpt:
    parents: list[str]
    # parent value indices (row-major over the parents' domains) -> distribution
    rows: dict[tuple[int, ...], tuple[Fraction, ...]]


@dataclass
class BifNetwork:
    name: str
    variables: list[BifVariable]
    cpts: dict[str, Cpt] = field(default_factory=dict)

    def var(self, name: str) -> BifVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def topological_order(self) -> list[str]:
        """Parents first; ties broken by declaration order."""
        decl = [v.name for v in self.variables]
        placed: list[str] = []
        done: set[str] = set()
        while len(placed) < len(decl):
            for n in decl:
                if n not in done and all(q in done for q in self.cpts[n].parents):
                    placed.append(n)
                    done.add(n)
                    break
            else:
                raise CycleError(self._find_cycle(done))
        return placed

    def _find_cycle(self, done: set[str]) -> list[str]:
        # every unplaced variable has an unplaced parent, so walking parents must loop
        start = next(v.name for v in self.variables if v.name not in done)
        seen = [start]
        cur = start
        while True:
            cur = next(q for q in self.cpts[cur].parents if q not in done)
            if cur in seen:
                cyc = seen[seen.index(cur):] + [cur]
                return list(reversed(cyc))
            seen.append(cur)


_TOK = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<num>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_\-.]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[{}()\[\];,|])
  | (?P<other>\S)
""", re.VERBOSE | re.DOTALL)


def _tokens(text: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOK.match(text, pos)  # `other` matches any leftover character
        s = m.group()
        span_start = (line, col)
        for ch in s:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        if m.lastgroup == "string":
            # quoted names are plain words once the quotes are gone
            out.append(("word", s[1:-1], SourceSpan(*span_start, line, col)))
        elif m.lastgroup != "ws":
            out.append((m.lastgroup, s, SourceSpan(*span_start, line, col)))
        pos = m.end()
    out.append(("eof", "", SourceSpan(line, col, line, col)))
    return out


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.next()
        if t[1] != text:
            raise BifError(f"expected {text!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def word(self):
        t = self.next()
        if t[0] not in ("word", "num"):
            raise BifError(f"expected a name, found {t[1] or 'end of input'!r}", t[2])
        return t[1]

    def skip_block(self):
        self.expect("{")
        depth = 1
        while depth:
            t = self.next()
            if t[0] == "eof":
                raise BifError("unterminated block", t[2])
            depth += {"{": 1, "}": -1}.get(t[1], 0)

    def skip_statement(self):
        while self.tok[1] != ";":
            if self.tok[0] == "eof":
                raise BifError("unterminated statement", self.tok[2])
            self.next()
        self.next()

    def numbers(self) -> list[Fraction]:
        out = []
        while True:
            t = self.next()
            if t[0] != "num":
                raise BifError(f"expected a probability, found {t[1]!r}", t[2])
            out.append(Fraction(t[1]))
            if self.tok[1] == ",":
                self.next()
                continue
            self.expect(";")
            return out


def parse_bif(text: str, renormalize: bool = False) -> BifNetwork:
    """Parse and validate a network.  ``renormalize`` rescales rows that do not sum to 1."""
    r = _Reader(text)
    name = "unknown"
    variables: list[BifVariable] = []
    raw_cpts: list[tuple[str, list[str], object, SourceSpan]] = []
    while r.tok[0] != "eof":
        kw = r.next()
        if kw[1] == "network":
            name = r.word()
            r.skip_block()
        elif kw[1] == "variable":
            vname = r.word()
            r.expect("{")
            domain = None
            while r.tok[1] != "}":
                if r.tok[1] == "type":
                    r.next()
                    t = r.next()
                    if t[1] != "discrete":
                        raise BifError(f"variable {vname}: only discrete variables are supported", t[2])
                    r.expect("[")
                    size = int(r.word())
                    r.expect("]")
                    r.expect("{")
                    domain = [r.word()]
                    while r.tok[1] == ",":
                        r.next()
                        domain.append(r.word())
                    r.expect("}")
                    r.expect(";")
                    if len(domain) != size:
                        raise BifError(f"variable {vname}: declared {size} values, listed {len(domain)}", t[2])
                else:
                    r.skip_statement()
            r.expect("}")
            if domain is None:
                raise BifError(f"variable {vname} has no type declaration", kw[2])
            if any(v.name == vname for v in variables):
                raise BifError(f"variable {vname} declared twice", kw[2])
            variables.append(BifVariable(vname, domain))
        elif kw[1] == "probability":
            r.expect("(")
            child = r.word()
            parents = []
            if r.tok[1] == "|":
                r.next()
                parents.append(r.word())
                while r.tok[1] == ",":
                    r.next()
                    parents.append(r.word())
            r.expect(")")
            r.expect("{")
            body: list = []
            while r.tok[1] != "}":
                t = r.tok
                if t[1] == "table":
                    r.next()
                    body.append(("table", r.numbers(), t[2]))
                elif t[1] == "(":
                    r.next()
                    vals = [r.word()]
                    while r.tok[1] == ",":
                        r.next()
                        vals.append(r.word())
                    r.expect(")")
                    body.append(("row", (vals, r.numbers()), t[2]))
                elif t[1] in ("property", "default"):
                    if t[1] == "default":
                        raise BifError("'default' rows are not supported", t[2])
                    r.skip_statement()
                else:
                    raise BifError(f"unexpected {t[1]!r} in probability block", t[2])
            r.expect("}")
            raw_cpts.append((child, parents, body, kw[2]))
        else:
            raise BifError(f"unexpected {kw[1] or 'end of input'!r}", kw[2])

    if not variables:
        raise BifError("network declares no variables")
    net = BifNetwork(name, variables)
    domains = {v.name: v.domain for v in variables}
    for child, parents, body, span in raw_cpts:
        if child not in domains:
            raise BifError(f"probability for undeclared variable {child}", span)
        if child in net.cpts:
            raise BifError(f"two probability blocks for {child}", span)
        for q in parents:
            if q not in domains:
                raise BifError(f"{child}: undeclared parent {q}", span)
        net.cpts[child] = _build_cpt(child, parents, body, domains, span, renormalize)
    for v in variables:
        if v.name not in net.cpts:
            raise BifError(f"variable {v.name} has no probability block")
    net.topological_order()
    return net


def _build_cpt(child, parents, body, domains, span, renormalize) -> Cpt:
    k = len(domains[child])
    rows: dict[tuple[int, ...], tuple[Fraction, ...]] = {}

    def check(vec, where):
        if len(vec) != k:
            raise BifError(f"{child}: row has {len(vec)} entries, expected {k}", where)
        if any(x < 0 for x in vec):
            raise BifError(f"{child}: negative probability", where)
        total = sum(vec)
        if total != 1:
            if not renormalize or total == 0:
                raise BifError(f"{child}: row sums to {total}, not 1", where)
            vec = [x / total for x in vec]
        return tuple(vec)

    for kind, payload, where in body:
        if kind == "table":
            if parents:
                raise BifError(f"{child}: 'table' is only supported for root variables", where)
            rows[()] = check(payload, where)
        else:
            vals, vec = payload
            if len(vals) != len(parents):
                raise BifError(f"{child}: row names {len(vals)} parent values, expected {len(parents)}", where)
            try:
                key = tuple(domains[q].index(v) for q, v in zip(parents, vals))
            except ValueError:
                raise BifError(f"{child}: unknown parent value in row {vals}", where) from None
            rows[key] = check(vec, where)
    expected = set(itertools.product(*(range(len(domains[q])) for q in parents)))
    if set(rows) != expected:
        missing = sorted(expected - set(rows))
        raise BifError(f"{child}: missing CPT rows for parent values {missing[:3]}", span)
    return Cpt(list(parents), rows)


# ---------------------------------------------------------------------------
# Program emission


def identifiers(net: BifNetwork) -> dict[str, str]:
    """Map variable names to unique, non-keyword program identifiers."""
    out: dict[str, str] = {}
    used: set[str] = set()
    for v in net.variables:
        base = re.sub(r"[^A-Za-z0-9_]", "_", v.name)
        if not re.match(r"[A-Za-z_]", base) or base in KEYWORDS:
            base = "v_" + base
        if base.startswith("_"):
            base = "v" + base
        name, n = base, 1
        while name in used:
            n += 1
            name = f"{base}_{n}"
        used.add(name)
        out[v.name] = name
    return out


def _dist_expr(vec: tuple[Fraction, ...]) -> Expr:
    # a Boolean is a two-category value whose category 0 is `true`
    if len(vec) == 2:
        return Flip(0, vec[0])
    return Discrete(vec)


def emit_program(net: BifNetwork) -> Expr:
    """One ``let`` per variable in topological order, returning the tuple of all."""
    order = net.topological_order()
    ids = identifiers(net)
    lets = []
    for name in order:
        cpt = net.cpts[name]
        if not cpt.parents:
            rhs = _dist_expr(cpt.rows[()])
        else:
            keys = sorted(cpt.rows)
            rhs = _dist_expr(cpt.rows[keys[-1]])
            for key in reversed(keys[:-1]):
                guard = conj([IntEq(ids[q], k) for q, k in zip(cpt.parents, key)])
                rhs = Ite(guard, _dist_expr(cpt.rows[key]), rhs)
        lets.append((ids[name], rhs))
    out: Expr = tuple_of([Var(ids[n]) for n in order])
    for v, rhs in reversed(lets):
        out = Let(v, rhs, out)
    return assign_flip_ids(out)


def output_labels(net: BifNetwork) -> list[str]:
    """Variable names in the order they appear in the emitted result tuple."""
    return net.topological_order()


def decode_assignment(net: BifNetwork, value) -> dict[str, str]:
    """Surface program value -> {variable: domain label}."""
    names = output_labels(net)
    parts = []
    for i in range(len(names)):
        if i == len(names) - 1:
            parts.append(value)
        else:
            parts.append(value[0])
            value = value[1]
    out = {}
    for n, v in zip(names, parts):
        dom = net.var(n).domain
        idx = (0 if v else 1) if isinstance(v, bool) else v
        out[n] = dom[idx]
    return out


def marginals_from_joint(net: BifNetwork, dist: dict) -> dict[str, dict[str, Fraction]]:
    out = {v.name: {lab: Fraction(0) for lab in v.domain} for v in net.variables}
    for value, w in dist.items():
        for n, lab in decode_assignment(net, value).items():
            out[n][lab] += w
    return out


def brute_force_marginals(net: BifNetwork) -> dict[str, dict[str, Fraction]]:
    """Marginals by summing the chain-rule product over every joint assignment."""
    names = [v.name for v in net.variables]
    doms = [range(len(v.domain)) for v in net.variables]
    out = {v.name: {lab: Fraction(0) for lab in v.domain} for v in net.variables}
    for combo in itertools.product(*doms):
        asg = dict(zip(names, combo))
        w = Fraction(1)
        for n in names:
            cpt = net.cpts[n]
            key = tuple(asg[q] for q in cpt.parents)
            w *= cpt.rows[key][asg[n]]
            if not w:
                break
        if w:
            for n in names:
                out[n][net.var(n).domain[asg[n]]] += w
    return out
