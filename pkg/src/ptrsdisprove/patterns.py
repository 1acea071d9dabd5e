"""Pattern terms ⟨t, σ⟩: detection, candidate extraction from loops, and the
side conditions a tree must satisfy before multiplicities can be counted."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

import networkx as nx

from .rst import Rst, leaves
from .term import (
    App,
    Context,
    Substitution,
    Term,
    Var,
    format_position,
    format_subst,
    match,
    normalize,
    replace_at,
    size,
    substitute,
    substitute_power,
    variables,
    walk,
)


class NotAPatternTerm(ValueError):
    pass


@dataclass(frozen=True)
class PatternTerm:
    base: Term
    pumping: tuple[tuple[str, Term], ...]

    def __post_init__(self) -> None:
        if not is_pattern_term(self.base, self.sigma):
            raise NotAPatternTerm(f"⟨{self.base}, {format_subst(self.sigma)}⟩ is not a pattern term")

    @classmethod
    def of(cls, base: Term, sigma: Substitution) -> "PatternTerm":
        return cls(base, tuple(sorted(normalize(sigma).items())))

    @property
    def sigma(self) -> dict[str, Term]:
        return dict(self.pumping)

    def power(self, m: int) -> Term:
        return substitute_power(self.sigma, self.base, m)

    def __str__(self) -> str:
        return f"⟨{self.base}, {format_subst(self.sigma)}⟩"


def var_transition_graph(t: Term, sigma: Substitution) -> nx.DiGraph:
    """G_{σ,t}: edge x → y iff y ∈ V(xσ), restricted to variables reachable from V(t)."""
    g = nx.DiGraph()
    todo = variables(t)
    g.add_nodes_from(todo)
    seen = set(todo)
    while todo:
        x = todo.pop()
        for y in variables(sigma.get(x, Var(x))):
            g.add_edge(x, y)
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return g


def is_pattern_term(t: Term, sigma: Substitution) -> bool:
    """Some cycle of G_{σ,t} passes through an x whose image xσ is not a variable."""
    g = var_transition_graph(t, sigma)
    for scc in nx.strongly_connected_components(g):
        cyclic = len(scc) > 1 or any(g.has_edge(x, x) for x in scc)
        if cyclic and any(not isinstance(sigma.get(x, Var(x)), Var) for x in scc):
            return True
    return False


def commutes(sigma: Substitution, kappa: Substitution) -> bool:
    names = set(sigma) | set(kappa)
    for v in list(sigma.values()) + list(kappa.values()):
        names.update(variables(v))
    for x in names:
        v = Var(x)
        if substitute(kappa, substitute(sigma, v)) != substitute(sigma, substitute(kappa, v)):
            return False
    return True


# -- candidate extraction -------------------------------------------------------


def _unapply(w: Term, sigma: Substitution, limit: int) -> list[Term]:
    """All terms u with ``u σ = w`` (at most ``limit`` of them)."""
    out: list[Term] = []
    for x, v in sorted(sigma.items()):
        if v == w:
            out.append(Var(x))
    if isinstance(w, Var):
        if w.name not in sigma:
            out.append(w)
    elif w.args:
        options = [_unapply(a, sigma, limit) for a in w.args]
        if all(options):
            for combo in product(*options):
                out.append(App(w.fn, combo))
                if len(out) >= limit:
                    break
    else:
        out.append(w)
    return out[:limit]


def _single_cuts(w: Term) -> Iterator[tuple[Term, dict[str, Term]]]:
    """Decompositions ``w = base[x/w|p]`` for a variable x of ``w|p`` that
    occurs in ``w`` only below ``p``."""
    for pos, sub in walk(w):
        if not pos or isinstance(sub, Var):
            continue
        for x in variables(sub):
            base = replace_at(w, pos, Var(x))
            if sum(1 for _, s in walk(base) if s == Var(x)) == 1:
                yield base, {x: sub}


def extract_pattern_candidates(
    start: Term, context: Context, loop_subst: Substitution, bound: int = 16
) -> list[PatternTerm]:
    """Pattern terms whose first iterate is a subterm of the loop's start term
    or of ``C[t σ_loop]``, in a deterministic order."""
    end = context.fill(substitute(loop_subst, start))
    subjects: list[Term] = []
    for root in (start, end):
        for _, w in walk(root):
            if isinstance(w, App) and w not in subjects:
                subjects.append(w)
    pumping = normalize(loop_subst)
    found: list[PatternTerm] = []

    def offer(base: Term, sigma: Substitution) -> bool:
        if isinstance(base, Var) or not is_pattern_term(base, sigma):
            return False
        pat = PatternTerm.of(base, sigma)
        if pat not in found:
            found.append(pat)
        return len(found) >= bound

    for w in subjects:
        if pumping:
            for base in _unapply(w, pumping, bound):
                if offer(base, pumping):
                    return found
    for w in subjects:
        for base, sigma in _single_cuts(w):
            if offer(base, sigma):
                return found
    return found


# -- pattern trees ------------------------------------------------------------------


@dataclass(frozen=True)
class PatternTreeCheck:
    ok: bool
    condition: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_pattern_leaf(term: Term, pat: PatternTerm) -> PatternTreeCheck:
    """Conditions (b) and (c) for a single leaf term."""
    t, sigma = pat.base, pat.sigma
    occurrences = [(p, s) for p, s in walk(term) if match(t, s) is not None]
    if not occurrences:
        return PatternTreeCheck(False, "b", f"leaf {term} has no occurrence of {t}")
    bound = size(term)
    for pos, sub in occurrences:
        inst = t
        for q in range(bound + 1):
            kappa = match(inst, sub)
            if kappa is None:
                break
            if not commutes(sigma, normalize(kappa)):
                return PatternTreeCheck(
                    False,
                    "c",
                    f"σ does not commute with {format_subst(kappa)} "
                    f"(leaf {term}, position {format_position(pos)}, q={q})",
                )
            inst = substitute(sigma, inst)
    return PatternTreeCheck(True)


def check_pattern_tree(tree: Rst, pat: PatternTerm) -> PatternTreeCheck:
    """Conditions (a) root = tσ, (b) an occurrence of t in every leaf,
    (c) σ commutes with every matching witness κ of tσ^q inside a leaf."""
    root = substitute(pat.sigma, pat.base)
    if tree.root_term != root:
        return PatternTreeCheck(False, "a", f"root {tree.root_term} is not {root}")
    for lf in leaves(tree):
        check = check_pattern_leaf(lf.term, pat)
        if not check:
            return check
    return PatternTreeCheck(True)
