"""Finite rewrite sequence trees over a PTRS.

Nodes are addressed by paths (tuples of 0-based child indices). Trees are
persistent: :func:`expand` returns a new tree sharing untouched subtrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .ptrs import PTRS, ProbRule
from .term import (
    InvalidPosition,
    Position,
    Term,
    format_position,
    is_position,
    match,
    replace_at,
    subterm_at,
    substitute,
    variables,
    var_count,
)

Path = tuple[int, ...]


class RstError(Exception):
    pass


class NoMatch(RstError):
    pass


@dataclass(frozen=True)
class Expansion:
    """One rewrite step recorded in a tree: rule ``rule`` applied at ``pos``
    of the term at node ``path``."""

    path: Path
    rule: int
    pos: Position

    def to_json(self) -> dict:
        return {"path": list(self.path), "rule": self.rule, "pos": list(self.pos)}

    @classmethod
    def from_json(cls, d: dict) -> "Expansion":
        return cls(tuple(d["path"]), int(d["rule"]), tuple(d["pos"]))


@dataclass(frozen=True)
class RstNode:
    prob: Fraction
    term: Term
    children: tuple["RstNode", ...] = ()
    step: tuple[int, Position] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Leaf:
    prob: Fraction
    term: Term
    path: Path

    @property
    def depth(self) -> int:
        return len(self.path)


@dataclass(frozen=True)
class Rst:
    root: RstNode
    records: tuple[Expansion, ...] = field(default=())

    @property
    def root_term(self) -> Term:
        return self.root.term

    def node(self, path: Path) -> RstNode:
        n = self.root
        for i in path:
            if not 0 <= i < len(n.children):
                raise RstError(f"no node at path {list(path)}")
            n = n.children[i]
        return n

    def nodes(self) -> Iterator[tuple[Path, RstNode]]:
        stack: list[tuple[Path, RstNode]] = [((), self.root)]
        while stack:
            path, n = stack.pop()
            yield path, n
            for i in range(len(n.children) - 1, -1, -1):
                stack.append((path + (i,), n.children[i]))

    @property
    def height(self) -> int:
        return max(len(p) for p, _ in self.nodes())


def new_rst(t: Term) -> Rst:
    return Rst(RstNode(Fraction(1), t))


def rewrite_children(term: Term, pos: Position, rule: ProbRule) -> list[tuple[Fraction, Term]]:
    """The distribution ``term →_P {p_j : term[r_j σ]_pos}`` for one rule."""
    if not is_position(term, pos):
        raise InvalidPosition(f"{format_position(pos)} is not a position of {term}")
    sigma = match(rule.lhs, subterm_at(term, pos))
    if sigma is None:
        raise NoMatch(f"{rule.lhs} does not match {term} at {format_position(pos)}")
    return [(p, replace_at(term, pos, substitute(sigma, r))) for p, r in rule.rhs]


def expand(tree: Rst, path: Path, pos: Position, rule: ProbRule, rule_index: int = -1) -> Rst:
    leaf = tree.node(path)
    if not leaf.is_leaf:
        raise RstError(f"node at path {list(path)} is not a leaf")
    kids = tuple(RstNode(leaf.prob * p, t) for p, t in rewrite_children(leaf.term, pos, rule))
    if sum(k.prob for k in kids) != leaf.prob:
        raise RstError("probability not conserved")
    new_leaf = RstNode(leaf.prob, leaf.term, kids, (rule_index, pos))
    return Rst(_rebuild(tree.root, path, new_leaf), tree.records + (Expansion(path, rule_index, pos),))


def _rebuild(node: RstNode, path: Path, replacement: RstNode) -> RstNode:
    if not path:
        return replacement
    i = path[0]
    kids = list(node.children)
    kids[i] = _rebuild(kids[i], path[1:], replacement)
    return RstNode(node.prob, node.term, tuple(kids), node.step)


def replay(P: PTRS, root: Term, records: Sequence[Expansion]) -> Rst:
    """Rebuild a tree from its root term and expansion records."""
    tree = new_rst(root)
    for rec in records:
        if not 0 <= rec.rule < len(P.rules):
            raise RstError(f"no rule with index {rec.rule}")
        tree = expand(tree, rec.path, rec.pos, P.rules[rec.rule], rec.rule)
    return tree


def leaves(tree: Rst) -> list[Leaf]:
    return [Leaf(n.prob, n.term, p) for p, n in tree.nodes() if n.is_leaf]


def termination_probability(tree: Rst) -> Fraction:
    return sum((lf.prob for lf in leaves(tree)), Fraction(0))


def expected_derivation_length(tree: Rst) -> Fraction:
    return sum((lf.depth * lf.prob for lf in leaves(tree)), Fraction(0))


def is_nvd(tree: Rst) -> bool:
    """Non-variable-decreasing: no variable occurs less often in a leaf than in the root."""
    root = tree.root_term
    counts = {x: var_count(root, x) for x in variables(root)}
    return all(var_count(lf.term, x) >= c for lf in leaves(tree) for x, c in counts.items())
