"""Disproof search: loops on np(P), rewrite sequence trees grown from them,
and the embedding theorems that turn leaf counts into a random walk.

Every stage is deterministic given the PTRS, the goal and the budget. The
only wall-clock input is the timeout, which acts as a safety valve.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Literal

from .certificate import NOT_AST, NOT_PAST, Certificate, LeafData
from .counting import CountResult, max_no, max_oo, max_opo
from .patterns import PatternTerm, check_pattern_leaf, extract_pattern_candidates
from .ptrs import PTRS, PlainRule, SymbolGraph, build_symbol_graph, may_reach_occurrence, np_rules
from .rst import Leaf, Rst, expand, leaves, new_rst
from .term import (
    Context,
    Position,
    Term,
    Var,
    format_subst,
    is_linear,
    match,
    normalize,
    replace_at,
    size,
    substitute,
    var_count,
    variables,
    walk,
)

Goal = Literal["disprove_AST", "disprove_PAST", "auto"]
GOALS: tuple[str, ...] = ("disprove_AST", "disprove_PAST", "auto")
UNKNOWN = "unknown"

# preference among theorems that reach the same verdict on the same tree
_THEOREM_ORDER = ("T4.8", "T4.2", "T4.7")


@dataclass(frozen=True)
class SearchBudget:
    max_loop_length: int = 8
    max_expansions: int = 64
    max_loops: int = 32
    timeout: float = 30.0
    max_term_size: int = 400
    max_unfold_nodes: int = 2000
    max_patterns: int = 8

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"budget field {name} must be positive, got {value}")


@dataclass(frozen=True)
class Loop:
    """``start →⁺ context[start σ]`` in np(P); ``derivation`` lists
    (index into ``np_rules``, position) steps."""

    start: Term
    derivation: tuple[tuple[int, Position], ...]
    context: Context
    loop_subst: tuple[tuple[str, Term], ...]

    @property
    def sigma(self) -> dict[str, Term]:
        return dict(self.loop_subst)

    @property
    def end(self) -> Term:
        return self.context.fill(substitute(self.sigma, self.start))

    def __str__(self) -> str:
        return f"{self.start} →{len(self.derivation)} {self.context} with {format_subst(self.sigma)}"


@dataclass(frozen=True)
class Verdict:
    status: str
    certificate: Certificate | None = None


# -- loop detection -------------------------------------------------------------


def _rewrites(rules: list[PlainRule], term: Term) -> list[tuple[int, Position, Term]]:
    out = []
    for pos, sub in walk(term):
        if isinstance(sub, Var):
            continue
        for k, rule in enumerate(rules):
            sigma = match(rule.lhs, sub)
            if sigma is not None:
                out.append((k, pos, replace_at(term, pos, substitute(sigma, rule.rhs))))
    return out


def find_loops(rules: list[PlainRule], budget: SearchBudget = SearchBudget()) -> list[Loop]:
    """Breadth-first forward unfolding from every distinct left-hand side.

    A loop is reported whenever a derived term contains an instance of one of
    its ancestors. The order is: start rule, derivation length, position.
    """
    starts: list[Term] = []
    for rule in rules:
        if rule.lhs not in starts:
            starts.append(rule.lhs)
    found: list[Loop] = []
    for start in starts:
        found.extend(_loops_from(rules, start, budget))
        if len(found) >= budget.max_loops:
            break
    return found[: budget.max_loops]


def _loops_from(rules: list[PlainRule], start: Term, budget: SearchBudget) -> list[Loop]:
    loops: list[Loop] = []
    seen_loops: set[Loop] = set()
    seen_terms = {start}
    # (term, derivation from start, terms along the derivation)
    queue = deque([(start, (), (start,))])
    nodes = 0
    while queue and nodes < budget.max_unfold_nodes:
        term, deriv, path = queue.popleft()
        if len(deriv) >= budget.max_loop_length:
            continue
        for k, pos, new in _rewrites(rules, term):
            nodes += 1
            steps = deriv + ((k, pos),)
            for q, sub in walk(new):
                for i, anc in enumerate(path):
                    sigma = match(anc, sub)
                    if sigma is None:
                        continue
                    loop = Loop(anc, steps[i:], Context.around(new, q), tuple(sorted(normalize(sigma).items())))
                    if loop not in seen_loops:
                        seen_loops.add(loop)
                        loops.append(loop)
                        if len(loops) >= budget.max_loops:
                            return loops
            if new not in seen_terms and size(new) <= budget.max_term_size:
                seen_terms.add(new)
                queue.append((new, steps, path + (new,)))
    return loops


# -- shared search state -----------------------------------------------------------


class _Caches:
    def __init__(self) -> None:
        self.redex: dict[Term, tuple[Position, int] | None] = {}
        self.reach: dict[tuple[Term, Term], bool] = {}
        self.counts: dict[tuple, CountResult] = {}
        self.leaf_checks: dict[tuple[Term, PatternTerm], bool] = {}
        self.stages: dict[tuple, Certificate | None] = {}


class _Search:
    def __init__(
        self,
        P: PTRS,
        budget: SearchBudget,
        goal: str,
        deadline: float,
        caches: _Caches | None = None,
        cancelled: Callable[[], bool] = lambda: False,
    ):
        self.P = P
        self.budget = budget
        self.goal = goal
        self.deadline = deadline
        self.rules = np_rules(P)
        self.graph: SymbolGraph = build_symbol_graph(P)
        self.caches = caches or _Caches()
        self.cancelled = cancelled

    def fork(self, cancelled: Callable[[], bool]) -> "_Search":
        return _Search(self.P, self.budget, self.goal, self.deadline, self.caches, cancelled)

    def stopped(self) -> bool:
        return self.cancelled() or time.monotonic() > self.deadline

    def redex(self, term: Term) -> tuple[Position, int] | None:
        """Leftmost-outermost redex and the first rule matching there."""
        cache = self.caches.redex
        if term not in cache:
            cache[term] = None
            for pos, sub in walk(term):
                k = next((k for k, r in enumerate(self.P.rules) if match(r.lhs, sub) is not None), None)
                if k is not None:
                    cache[term] = (pos, k)
                    break
        return cache[term]

    def may_reach(self, term: Term, t: Term) -> bool:
        key = (term, t)
        if key not in self.caches.reach:
            self.caches.reach[key] = may_reach_occurrence(self.graph, term, t)
        return self.caches.reach[key]

    def count(self, mode: str, t: Term, s: Term, pat: PatternTerm | None = None) -> CountResult:
        key = (mode, t, s, pat)
        cache = self.caches.counts
        if key not in cache:
            if mode == "no":
                cache[key] = max_no(t, s)
            elif mode == "oo":
                cache[key] = max_oo(t, s)
            else:
                cache[key] = max_opo(t, pat.sigma, s)
        return cache[key]

    def expandable(self, term: Term, t: Term) -> bool:
        return size(term) <= self.budget.max_term_size and self.redex(term) is not None and self.may_reach(term, t)

    def expand_leaf(self, tree: Rst, path, term: Term) -> Rst:
        pos, k = self.redex(term)
        return expand(tree, path, pos, self.P.rules[k], k)

    def pick(self, front: "_Frontier", t: Term, among: list[int] | None = None) -> int | None:
        """The most probable expandable leaf (leftmost on ties)."""
        best = None
        for i in range(len(front.leaves)) if among is None else among:
            lf = front.leaves[i]
            if (best is None or lf.prob > front.leaves[best].prob) and self.expandable(lf.term, t):
                best = i
        return best

    def loop_tree(self, loop: Loop) -> Rst:
        tree = new_rst(loop.start)
        path: tuple[int, ...] = ()
        for k, pos in loop.derivation:
            rule = self.rules[k]
            tree = expand(tree, path, pos, self.P.rules[rule.rule_index], rule.rule_index)
            path += (rule.branch_index,)
        return tree

    def accepts(self, cert: Certificate) -> bool:
        return cert.verdict == NOT_AST or self.goal != "disprove_AST"

    def staged(self, key: tuple, compute: Callable[[], Certificate | None]) -> Certificate | None:
        cache = self.caches.stages
        if key in cache:
            return cache[key]
        result = compute()
        # interrupted stages may be incomplete and are never reused
        if not self.stopped():
            cache[key] = result
        return result


class _Frontier:
    """The leaves of a growing tree with per-leaf values kept up to date.

    ``measures`` maps a name to a function of the leaf term. Measures that
    return a :class:`CountResult` also get a running total Σ p·count.
    """

    def __init__(self, search: _Search, tree: Rst, measures: dict[str, Callable[[Term], object]]):
        self.search = search
        self.tree = tree
        self.measures = measures
        self.leaves: list[Leaf] = leaves(tree)
        self.values = {name: [f(lf.term) for lf in self.leaves] for name, f in measures.items()}
        self.totals = {name: self._weigh(self.leaves, vs) for name, vs in self.values.items()}

    @staticmethod
    def _weigh(lvs: list[Leaf], vs: list) -> Fraction | None:
        if vs and not isinstance(vs[0], CountResult):
            return None
        return sum((lf.prob * v.count for lf, v in zip(lvs, vs)), Fraction(0))

    def expand(self, i: int) -> None:
        lf = self.leaves[i]
        self.tree = self.search.expand_leaf(self.tree, lf.path, lf.term)
        node = self.tree.node(lf.path)
        kids = [Leaf(c.prob, c.term, lf.path + (j,)) for j, c in enumerate(node.children)]
        for name, f in self.measures.items():
            vs = self.values[name]
            new = [f(k.term) for k in kids]
            if self.totals[name] is not None:
                self.totals[name] += self._weigh(kids, new) - self._weigh([lf], [vs[i]])
            vs[i : i + 1] = new
        self.leaves[i : i + 1] = kids

    def certificate(self, theorem: str, name: str, pattern: PatternTerm | None = None) -> Certificate | None:
        total = self.totals[name]
        if total > 1:
            relation, verdict = ">1", NOT_AST
        elif total >= 1:
            relation, verdict = ">=1", NOT_PAST
        else:
            return None
        data = tuple(LeafData(lf.prob, c.count, c.witness) for lf, c in zip(self.leaves, self.values[name]))
        return Certificate(theorem, self.tree.root_term, self.tree.records, data, verdict, total, relation, pattern)


# -- the theorems ---------------------------------------------------------------------


def apply_thm_loop_everywhere(P: PTRS, loop: Loop, budget: SearchBudget = SearchBudget(), _search: _Search | None = None) -> Certificate | None:
    """Every leaf of the loop's tree contains an instance of the looping term."""
    search = _search or _Search(P, budget, "auto", time.monotonic() + budget.timeout)
    tree = search.loop_tree(loop)
    if not tree.records:
        return None
    data = []
    for lf in leaves(tree):
        pos = next((p for p, s in walk(lf.term) if match(loop.start, s) is not None), None)
        if pos is None:
            return None
        data.append(LeafData(lf.prob, 1, (pos,)))
    return Certificate("T3.1", loop.start, tree.records, tuple(data), NOT_AST)


def apply_occurrence_theorems(
    P: PTRS, loop: Loop, budget: SearchBudget = SearchBudget(), goal: Goal = "auto", _search: _Search | None = None
) -> Certificate | None:
    """Grow the loop's tree and count occurrences of the looping term in its leaves."""
    search = _search or _Search(P, budget, goal, time.monotonic() + budget.timeout)
    t = loop.start
    if isinstance(t, Var):
        return None
    linear = is_linear(t)
    root_counts = {x: var_count(t, x) for x in variables(t)}

    def decreasing(term: Term) -> bool:
        return any(var_count(term, x) < c for x, c in root_counts.items())

    def run() -> Certificate | None:
        measures = {
            "oo": lambda s: search.count("oo", t, s),
            "no": lambda s: search.count("no", t, s),
        }
        if not linear:
            measures["decreasing"] = decreasing
        front = _Frontier(search, search.loop_tree(loop), measures)
        fallback = None
        for i in range(budget.max_expansions + 1):
            options = [front.certificate("T4.8", "oo")]
            if linear:
                options.append(front.certificate("T4.2", "no"))
            elif not any(front.values["decreasing"]):
                options.append(front.certificate("T4.7", "no"))
            certs = [c for c in options if c is not None and search.accepts(c)]
            certs.sort(key=lambda c: (c.verdict != NOT_AST, _THEOREM_ORDER.index(c.theorem)))
            if certs:
                if certs[0].verdict == NOT_AST or search.goal == "disprove_PAST":
                    return certs[0]
                fallback = fallback or certs[0]
            if i == budget.max_expansions or search.stopped():
                break
            j = search.pick(front, t)
            if j is None:
                break
            front.expand(j)
        return fallback

    return search.staged(("occ", t, loop.derivation), run)


def apply_pattern_theorem(
    P: PTRS,
    pat: PatternTerm,
    budget: SearchBudget = SearchBudget(),
    goal: Goal = "auto",
    loop: Loop | None = None,
    _search: _Search | None = None,
) -> Certificate | None:
    """Grow a tree rooted at tσ into a pattern tree and sum the multiplicities."""
    search = _search or _Search(P, budget, goal, time.monotonic() + budget.timeout)
    t = pat.base
    root = substitute(pat.sigma, t)
    follow = loop is not None and loop.start == root and bool(loop.derivation)

    def leaf_ok(term: Term) -> bool:
        key = (term, pat)
        cache = search.caches.leaf_checks
        if key not in cache:
            cache[key] = bool(check_pattern_leaf(term, pat))
        return cache[key]

    def run() -> Certificate | None:
        if follow:
            tree = search.loop_tree(loop)
        else:
            if search.redex(root) is None:
                return None
            tree = search.expand_leaf(new_rst(root), (), root)
        front = _Frontier(search, tree, {"ok": leaf_ok, "opo": lambda s: search.count("opo", t, s, pat)})
        fallback = None
        for i in range(budget.max_expansions + 1):
            failing = [j for j, ok in enumerate(front.values["ok"]) if not ok]
            if any(not search.expandable(front.leaves[j].term, t) for j in failing):
                break  # some leaf can never satisfy the pattern-tree conditions
            if not failing:
                cert = front.certificate("T5.10", "opo", pat)
                if cert is not None and search.accepts(cert):
                    if cert.verdict == NOT_AST or search.goal == "disprove_PAST":
                        return cert
                    fallback = fallback or cert
            if i == budget.max_expansions or search.stopped():
                break
            j = search.pick(front, t, failing or None)
            if j is None:
                break
            front.expand(j)
        return fallback

    return search.staged(("pat", pat, loop.derivation if follow else None), run)


# -- the pipeline -----------------------------------------------------------------------


def _explore(search: _Search, loop: Loop) -> Certificate | None:
    """All stages for one loop; the strongest certificate, earliest stage first."""
    cert = apply_thm_loop_everywhere(search.P, loop, search.budget, search)
    if cert is not None:
        return cert
    fallback = None
    cert = apply_occurrence_theorems(search.P, loop, search.budget, search.goal, search)
    if cert is not None:
        if cert.verdict == NOT_AST or search.goal != "auto":
            return cert
        fallback = cert
    for pat in extract_pattern_candidates(loop.start, loop.context, loop.sigma, search.budget.max_patterns):
        if search.stopped():
            break
        cert = apply_pattern_theorem(search.P, pat, search.budget, search.goal, loop, search)
        if cert is not None:
            if cert.verdict == NOT_AST or search.goal != "auto":
                return cert
            fallback = fallback or cert
    return fallback


def _final(cert: Certificate | None, goal: str) -> bool:
    """A loop result that no later loop can improve on."""
    return cert is not None and (cert.verdict == NOT_AST or goal != "auto")


def _select(results: list[Certificate | None], goal: str) -> Verdict:
    for cert in results:
        if _final(cert, goal):
            return Verdict(cert.verdict, cert)
    for cert in results:
        if cert is not None:
            return Verdict(cert.verdict, cert)
    return Verdict(UNKNOWN)


def prove(P: PTRS, goal: Goal = "auto", budget: SearchBudget = SearchBudget(), workers: int = 1) -> Verdict:
    """Search for a certificate that P is not AST (or not PAST)."""
    if goal not in GOALS:
        raise ValueError(f"unknown goal {goal!r}")
    search = _Search(P, budget, goal, time.monotonic() + budget.timeout)
    loops = find_loops(search.rules, budget)
    if workers <= 1:
        results: list[Certificate | None] = []
        for loop in loops:
            if search.stopped():
                break
            results.append(_explore(search, loop))
            if _final(results[-1], goal):
                break
        return _select(results, goal)

    # loops run as independent tasks; a task whose index lies beyond an
    # already final result is cancelled because it can never be selected
    cutoff = len(loops)
    lock = threading.Lock()

    def task(i: int) -> Certificate | None:
        nonlocal cutoff
        if i > cutoff:
            return None
        cert = _explore(search.fork(lambda: i > cutoff), loops[i])
        if _final(cert, goal):
            with lock:
                cutoff = min(cutoff, i)
        return cert

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(task, range(len(loops))))
    return _select(results[: cutoff + 1], goal)
