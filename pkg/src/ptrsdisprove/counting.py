"""Counting occurrences of a term inside another term.

``max_no`` is the bottom-up dynamic program over the subterms of ``s``:
for every subterm ``s'`` it keeps

* ``alpha`` -- the best count inside ``s'``,
* ``beta``  -- the best count inside ``s'`` without using its root.

``max_oo`` and ``max_opo`` are the same traversal with a different value for
an occurrence at the root. Witness positions are reconstructed from the
recorded choices. The ``oracle_*`` functions solve the same problems by
exhaustive search and exist only for testing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .patterns import NotAPatternTerm, is_pattern_term
from .term import (
    Position,
    Substitution,
    Term,
    Var,
    fun_positions,
    match,
    orthogonal,
    position_relation,
    size,
    substitute,
    subterm_at,
    var_positions,
    walk,
)

Mode = Literal["no", "oo", "opo"]


@dataclass(frozen=True)
class CountResult:
    count: int
    witness: tuple[Position, ...]


@dataclass(frozen=True)
class TableEntry:
    alpha: int
    beta: int
    root_taken: bool


def occurs_at(t: Term, s: Term, pos: Position) -> bool:
    return match(t, subterm_at(s, pos)) is not None


def overlapping(t: Term, p1: Position, p2: Position) -> bool:
    """True iff one position extends the other by a non-variable position of ``t``."""
    if p1 == p2:
        raise ValueError("positions must differ")
    rel = position_relation(p1, p2)
    if rel == "orthogonal":
        return False
    upper, lower = (p1, p2) if rel == "above" else (p2, p1)
    return lower[len(upper):] in set(fun_positions(t))


def multiplicity(t: Term, sigma: Substitution, s: Term, pos: Position, bound: int | None = None) -> int:
    """Largest m ≤ |s| such that ``t σ^m`` matches ``s|pos``."""
    sub = subterm_at(s, pos)
    if match(t, sub) is None:
        raise ValueError(f"{t} does not occur at that position")
    bound = size(s) if bound is None else bound
    m, inst, limit = 0, t, size(sub)
    while m < bound:
        inst = substitute(sigma, inst)
        if size(inst) > limit or match(inst, sub) is None:
            break
        m += 1
    return m


def occurrence_table(t: Term, s: Term, mode: Mode = "no", sigma: Substitution | None = None) -> dict[Position, TableEntry]:
    """The (alpha, beta) table for every subterm position of ``s``."""
    if isinstance(t, Var):
        raise ValueError("the counted term must not be a variable")
    if mode == "opo":
        if sigma is None or not is_pattern_term(t, sigma):
            raise NotAPatternTerm(f"⟨{t}, {sigma}⟩ is not a pattern term")
        pattern = substitute(sigma, t)
        bound = size(s)
    else:
        pattern = t
    tvars = var_positions(t)
    table: dict[Position, TableEntry] = {}
    # reversed pre-order visits every child before its parent
    for pos, sub in reversed(list(walk(s))):
        arity = 0 if isinstance(sub, Var) else len(sub.args)
        beta = sum(table[pos + (j,)].alpha for j in range(1, arity + 1))
        alpha, taken = beta, False
        if match(pattern, sub) is not None:
            if mode == "no":
                value = 1 + sum(table[pos + pi].alpha for pi in tvars)
            elif mode == "oo":
                value = 1
            else:
                value = multiplicity(t, sigma, sub, (), bound)
            if value > beta:
                alpha, taken = value, True
        table[pos] = TableEntry(alpha, beta, taken)
    return table


def _count(t: Term, s: Term, mode: Mode, sigma: Substitution | None = None) -> CountResult:
    table = occurrence_table(t, s, mode, sigma)
    witness: list[Position] = []
    tvars = var_positions(t)
    todo: list[Position] = [()]
    while todo:
        pos = todo.pop()
        entry = table[pos]
        if entry.root_taken:
            witness.append(pos)
            if mode == "no":
                todo.extend(pos + pi for pi in tvars)
        else:
            sub = subterm_at(s, pos)
            if not isinstance(sub, Var):
                todo.extend(pos + (j,) for j in range(1, len(sub.args) + 1))
    return CountResult(table[()].alpha, tuple(sorted(witness)))


def max_no(t: Term, s: Term) -> CountResult:
    """Maximal number of pairwise non-overlapping occurrences of ``t`` in ``s``."""
    return _count(t, s, "no")


def max_oo(t: Term, s: Term) -> CountResult:
    """Maximal number of pairwise orthogonal occurrences of ``t`` in ``s``."""
    return _count(t, s, "oo")


def max_opo(t: Term, sigma: Substitution, s: Term) -> CountResult:
    """Maximal multiplicity sum over pairwise orthogonal occurrences of ⟨t, σ⟩ in ``s``."""
    return _count(t, s, "opo", sigma)


# -- exhaustive oracles ------------------------------------------------------------


def _best_subset(items: list[Position], weight: dict[Position, int], compatible) -> int:
    """Maximum total weight of a pairwise-compatible subset (exact branch and bound)."""
    items = sorted(items, key=lambda p: -weight[p])
    best = 0

    def go(i: int, chosen: list[Position], total: int, rest: int) -> None:
        nonlocal best
        best = max(best, total)
        if i == len(items) or total + rest <= best:
            return
        p = items[i]
        w = weight[p]
        if all(compatible(p, q) for q in chosen):
            chosen.append(p)
            go(i + 1, chosen, total + w, rest - w)
            chosen.pop()
        go(i + 1, chosen, total, rest - w)

    go(0, [], 0, sum(weight[p] for p in items))
    return best


def _occurrences(t: Term, s: Term) -> list[Position]:
    return [p for p, sub in walk(s) if match(t, sub) is not None]


def oracle_max_no(t: Term, s: Term) -> int:
    occ = _occurrences(t, s)
    return _best_subset(occ, dict.fromkeys(occ, 1), lambda p, q: not overlapping(t, p, q))


def oracle_max_oo(t: Term, s: Term) -> int:
    occ = _occurrences(t, s)
    return _best_subset(occ, dict.fromkeys(occ, 1), orthogonal)


def oracle_max_opo(t: Term, sigma: Substitution, s: Term) -> int:
    occ = _occurrences(t, s)
    weight = {}
    for p in occ:
        # every exponent up to |s| is tried; only iterates larger than the
        # subject (which cannot match) are cut off
        sub = subterm_at(s, p)
        insts = [t]
        for _ in range(size(s)):
            nxt = substitute(sigma, insts[-1])
            if size(nxt) > size(sub):
                break
            insts.append(nxt)
        weight[p] = max(m for m, inst in enumerate(insts) if match(inst, sub) is not None)
    return _best_subset(occ, weight, orthogonal)
