"""Certificates for non-(P)AST verdicts and their independent re-verification.

A certificate names the theorem it relies on, the root term of a rewrite
sequence tree, the expansion records that rebuild the tree, and per-leaf
counts backed by explicit witness positions. Verification replays the tree
on the PTRS and re-checks every claim from the witnesses alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .counting import multiplicity, overlapping
from .patterns import NotAPatternTerm, PatternTerm, check_pattern_tree, is_pattern_term
from .ptrs import PTRS
from .rst import Expansion, RstError, is_nvd, leaves, replay
from .term import (
    Position,
    Term,
    TermError,
    format_position,
    is_linear,
    is_position,
    match,
    orthogonal,
    parse_term,
    substitute,
    subterm_at,
)
from .walks import RandomWalk, WalkError, classify, walk_from_counts

THEOREMS = ("T3.1", "T4.2", "T4.7", "T4.8", "T5.10")
NOT_AST = "not_AST"
NOT_PAST = "not_PAST"


@dataclass(frozen=True)
class LeafData:
    prob: Fraction
    count: int
    witness: tuple[Position, ...]

    def to_json(self) -> dict:
        return {"prob": str(self.prob), "count": self.count, "witness": [list(p) for p in self.witness]}


@dataclass(frozen=True)
class Certificate:
    theorem: str
    term: Term
    records: tuple[Expansion, ...]
    leaves: tuple[LeafData, ...]
    verdict: str
    sum: Fraction | None = None
    relation: str | None = None
    pattern: PatternTerm | None = None

    @property
    def walk(self) -> RandomWalk | None:
        if self.sum is None:
            return None
        return walk_from_counts((lf.prob, lf.count) for lf in self.leaves)

    def to_json(self) -> dict:
        walk = self.walk
        return {
            "theorem": self.theorem,
            "term": str(self.term),
            "pattern": None
            if self.pattern is None
            else {
                "base": str(self.pattern.base),
                "pumping": [[x, str(v)] for x, v in self.pattern.pumping],
            },
            "rst": [r.to_json() for r in self.records],
            "leaves": [lf.to_json() for lf in self.leaves],
            "sum": None if self.sum is None else str(self.sum),
            "relation": self.relation,
            "verdict": self.verdict,
            "walk": None if walk is None else {"steps": walk.to_json(), "class": classify(walk).kind},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, d: dict, variables) -> "Certificate":
        def term(text: str) -> Term:
            return parse_term(text, variables)

        pattern = None
        if d.get("pattern") is not None:
            p = d["pattern"]
            pattern = PatternTerm(term(p["base"]), tuple((x, term(v)) for x, v in p["pumping"]))
        return cls(
            theorem=d["theorem"],
            term=term(d["term"]),
            records=tuple(Expansion.from_json(r) for r in d["rst"]),
            leaves=tuple(
                LeafData(Fraction(lf["prob"]), int(lf["count"]), tuple(tuple(p) for p in lf["witness"]))
                for lf in d["leaves"]
            ),
            verdict=d["verdict"],
            sum=None if d.get("sum") is None else Fraction(d["sum"]),
            relation=d.get("relation"),
            pattern=pattern,
        )

    @classmethod
    def loads(cls, text: str, variables) -> "Certificate":
        return cls.from_json(json.loads(text), variables)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _fail(reason: str) -> CheckResult:
    return CheckResult(False, reason)


def verify_certificate(P: PTRS, cert: Certificate) -> CheckResult:
    """Re-check ``cert`` against ``P`` without rerunning any search."""
    try:
        return _verify(P, cert)
    except (RstError, TermError, WalkError, NotAPatternTerm, ValueError) as e:
        return _fail(f"malformed certificate: {e}")


def _verify(P: PTRS, cert: Certificate) -> CheckResult:
    th = cert.theorem
    if th not in THEOREMS:
        return _fail(f"unknown theorem {th!r}")
    if th == "T3.1":
        if cert.verdict != NOT_AST or cert.sum is not None:
            return _fail("T3.1 certificates claim not_AST and carry no sum")
    elif (cert.relation, cert.verdict) not in ((">1", NOT_AST), (">=1", NOT_PAST)):
        return _fail(f"relation {cert.relation!r} does not justify verdict {cert.verdict!r}")

    # side conditions that depend only on the certificate
    if not cert.records:
        return _fail("the tree has height 0")
    t = cert.term
    if th == "T4.2" and not is_linear(t):
        return _fail(f"T4.2 needs a linear term, {t} is not linear")
    if th == "T5.10":
        if cert.pattern is None:
            return _fail("T5.10 certificate without a pattern term")
        pat = cert.pattern
        if not is_pattern_term(pat.base, pat.sigma):
            return _fail(f"{pat} is not a pattern term")
        if substitute(pat.sigma, pat.base) != t:
            return _fail("the tree root is not tσ")
        t = pat.base
    elif cert.pattern is not None:
        return _fail(f"{th} certificates carry no pattern")

    tree = replay(P, cert.term, cert.records)
    tree_leaves = leaves(tree)
    if len(tree_leaves) != len(cert.leaves):
        return _fail(f"tree has {len(tree_leaves)} leaves, certificate lists {len(cert.leaves)}")
    if th == "T4.7" and not is_nvd(tree):
        return _fail("T4.7 needs a non-variable-decreasing tree")
    if th == "T5.10":
        check = check_pattern_tree(tree, cert.pattern)
        if not check:
            return _fail(f"not a pattern tree, condition ({check.condition}): {check.detail}")

    for i, (lf, data) in enumerate(zip(tree_leaves, cert.leaves)):
        if lf.prob != data.prob:
            return _fail(f"leaf {i}: probability {data.prob} but the tree gives {lf.prob}")
        reason = _check_leaf(th, t, cert.pattern, lf.term, data)
        if reason:
            return _fail(f"leaf {i} ({lf.term}): {reason}")

    if th == "T3.1":
        return CheckResult(True)
    total = sum((d.prob * d.count for d in cert.leaves), Fraction(0))
    if cert.sum != total:
        return _fail(f"claimed sum {cert.sum} but leaves give {total}")
    if cert.relation == ">1" and not total > 1:
        return _fail(f"sum {total} is not > 1")
    if cert.relation == ">=1" and not total >= 1:
        return _fail(f"sum {total} is not >= 1")
    return CheckResult(True)


def _check_leaf(th: str, t: Term, pattern: PatternTerm | None, s: Term, data: LeafData) -> str:
    ws = data.witness
    if len(set(ws)) != len(ws):
        return "repeated witness position"
    for p in ws:
        if not is_position(s, p) or match(t, subterm_at(s, p)) is None:
            return f"no occurrence of {t} at {format_position(p)}"
    if th == "T3.1":
        return "" if len(ws) == 1 and data.count == 1 else "needs exactly one instance position"
    for p, q in combinations(ws, 2):
        if th in ("T4.2", "T4.7"):
            if overlapping(t, p, q):
                return f"positions {format_position(p)} and {format_position(q)} overlap"
        elif not orthogonal(p, q):
            return f"positions {format_position(p)} and {format_position(q)} are not orthogonal"
    if th == "T5.10":
        claimed = sum(multiplicity(t, pattern.sigma, s, p) for p in ws)
    else:
        claimed = len(ws)
    if data.count != claimed:
        return f"count {data.count} but the witness supports {claimed}"
    return ""
