"""Probabilistic rewrite rules, the ``.ptrs`` file format, np(P) and the
symbol transition graph used to prune the search.

File grammar::

    file       := varblock rulesblock
    varblock   := "(VAR" ident* ")"
    rulesblock := "(RULES" rule* ")"
    rule       := term "->" "{" branch ("," branch)* "}"
    branch     := rational ":" term
    rational   := nat | nat "/" nat

``;`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .term import App, Term, Var, symbols, variables, walk


class PtrsError(Exception):
    pass


class PtrsSyntaxError(PtrsError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class PtrsValidationError(PtrsError):
    pass


@dataclass(frozen=True)
class MultiDistribution:
    """Ordered (probability, term) pairs; repeated terms are kept."""

    branches: tuple[tuple[Fraction, Term], ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise PtrsValidationError("empty distribution")
        for p, _ in self.branches:
            if not 0 < p <= 1:
                raise PtrsValidationError(f"probability {p} outside (0,1]")
        total = sum(p for p, _ in self.branches)
        if total != 1:
            raise PtrsValidationError(f"probabilities sum to {total}, not 1")

    def __iter__(self) -> Iterator[tuple[Fraction, Term]]:
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    @property
    def support(self) -> list[Term]:
        return [r for _, r in self.branches]

    def __str__(self) -> str:
        return "{ " + ", ".join(f"{p} : {r}" for p, r in self.branches) + " }"


@dataclass(frozen=True)
class ProbRule:
    lhs: Term
    rhs: MultiDistribution

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise PtrsValidationError(f"left-hand side {self.lhs} is a variable")
        lvars = set(variables(self.lhs))
        for r in self.rhs.support:
            fresh = set(variables(r)) - lvars
            if fresh:
                raise PtrsValidationError(
                    f"rule {self.lhs} -> {r} introduces fresh variables {sorted(fresh)}"
                )

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


@dataclass(frozen=True)
class PTRS:
    rules: tuple[ProbRule, ...]
    variables: frozenset[str] = frozenset()
    signature: frozenset[tuple[str, int]] = field(default=frozenset())

    def __post_init__(self) -> None:
        sig: dict[str, int] = {}
        for name, arity in self.signature:
            sig[name] = arity
        for rule in self.rules:
            for t in [rule.lhs, *rule.rhs.support]:
                for name, arity in symbols(t):
                    if sig.setdefault(name, arity) != arity:
                        raise PtrsValidationError(
                            f"symbol {name} used with arities {sig[name]} and {arity}"
                        )
                    if name in self.variables:
                        raise PtrsValidationError(f"variable {name} used as a function symbol")
        object.__setattr__(self, "signature", frozenset(sig.items()))

    def __iter__(self) -> Iterator[ProbRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def to_text(self) -> str:
        lines = [f"(VAR {' '.join(sorted(self.variables))})", "(RULES"]
        lines += [f"  {rule}" for rule in self.rules]
        lines.append(")")
        return "\n".join(lines) + "\n"


# -- parsing -----------------------------------------------------------------

_TOKENS = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<nat>[0-9]+)
  | (?P<punct>[(){}:,/])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    out = []
    i, line, col = 0, 1, 1
    while i < len(text):
        m = _TOKENS.match(text, i)
        if m is None:
            raise PtrsSyntaxError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            out.append(_Token(kind if kind != "punct" else lexeme, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        i = m.end()
    out.append(_Token("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.vars: set[str] = set()

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str) -> PtrsSyntaxError:
        t = self.tok
        found = t.text or "end of input"
        return PtrsSyntaxError(f"{message}, found {found!r}", t.line, t.column)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            raise self.error(f"expected {text or kind!r}")
        self.i += 1
        return t

    def file(self) -> PTRS:
        self.expect("(")
        self.expect("ident", "VAR")
        while self.tok.kind == "ident":
            self.vars.add(self.expect("ident").text)
        self.expect(")")
        self.expect("(")
        self.expect("ident", "RULES")
        rules = []
        while self.tok.kind in ("ident", "nat"):
            rules.append(self.rule())
        self.expect(")")
        self.expect("eof")
        return PTRS(tuple(rules), frozenset(self.vars))

    def rule(self) -> ProbRule:
        start = self.tok
        lhs = self.term()
        self.expect("arrow")
        self.expect("{")
        branches = [self.branch()]
        while self.tok.kind == ",":
            self.i += 1
            branches.append(self.branch())
        self.expect("}")
        try:
            return ProbRule(lhs, MultiDistribution(tuple(branches)))
        except PtrsValidationError as e:
            raise PtrsValidationError(f"line {start.line}: {e}") from None

    def branch(self) -> tuple[Fraction, Term]:
        num = int(self.expect("nat").text)
        den = 1
        if self.tok.kind == "/":
            self.i += 1
            den = int(self.expect("nat").text)
            if den == 0:
                raise PtrsValidationError("zero denominator")
        self.expect(":")
        return Fraction(num, den), self.term()

    def term(self) -> Term:
        t = self.tok
        if t.kind not in ("ident", "nat"):
            raise self.error("expected a term")
        self.i += 1
        if self.tok.kind == "(":
            if t.text in self.vars:
                raise PtrsValidationError(f"line {t.line}: variable {t.text} applied to arguments")
            self.i += 1
            args = [self.term()]
            while self.tok.kind == ",":
                self.i += 1
                args.append(self.term())
            self.expect(")")
            return App(t.text, tuple(args))
        return Var(t.text) if t.text in self.vars else App(t.text)


def parse_ptrs(text: str) -> PTRS:
    return _Parser(text).file()


def load_ptrs(path) -> PTRS:
    with open(path, encoding="utf-8") as f:
        return parse_ptrs(f.read())


# -- non-probabilistic variant -------------------------------------------------


@dataclass(frozen=True)
class PlainRule:
    """A rule of np(P) together with the first (rule, branch) it came from."""

    lhs: Term
    rhs: Term
    rule_index: int
    branch_index: int

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


def np_rules(P: PTRS) -> list[PlainRule]:
    out: list[PlainRule] = []
    seen: set[tuple[Term, Term]] = set()
    for i, rule in enumerate(P.rules):
        for j, r in enumerate(rule.rhs.support):
            if (rule.lhs, r) not in seen:
                seen.add((rule.lhs, r))
                out.append(PlainRule(rule.lhs, r, i, j))
    return out


def np(P: PTRS) -> set[tuple[Term, Term]]:
    """np(P) as a set of (lhs, rhs) pairs."""
    return {(r.lhs, r.rhs) for r in np_rules(P)}


# -- symbol transition graph ----------------------------------------------------

ANY = "*any*"


@dataclass(frozen=True)
class SymbolGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def successors(self, node: str) -> set[str]:
        if node == ANY:
            return set(self.nodes)
        return {b for a, b in self.edges if a == node}

    def reachable(self, seeds: Iterable[str]) -> set[str]:
        seen = set(seeds)
        todo = list(seen)
        while todo:
            for nxt in self.successors(todo.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen


def build_symbol_graph(P: PTRS) -> SymbolGraph:
    """Edges from root(ℓ) to every function symbol of each right-hand side,
    and to ``ANY`` for variable right-hand sides."""
    nodes = {name for name, _ in P.signature} | {ANY}
    edges = set()
    for rule in P.rules:
        root = rule.lhs.fn
        for r in rule.rhs.support:
            if isinstance(r, Var):
                edges.add((root, ANY))
            else:
                edges.update((root, name) for name, _ in symbols(r))
    return SymbolGraph(frozenset(nodes), frozenset(edges))


def may_reach_occurrence(G: SymbolGraph, start: Term, target: Term) -> bool:
    """False only if no descendant of ``start`` can contain an instance of ``target``."""
    if isinstance(target, Var):
        raise ValueError("target must not be a variable")
    seeds = {s.fn for _, s in walk(start) if isinstance(s, App)}
    reach = G.reachable(seeds)
    return ANY in reach or target.fn in reach
