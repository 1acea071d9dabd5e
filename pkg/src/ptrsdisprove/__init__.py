"""Automatic disproof of (positive) almost-sure termination for probabilistic term rewriting."""

from .certificate import Certificate, verify_certificate
from .counting import max_no, max_oo, max_opo
from .patterns import PatternTerm, is_pattern_term
from .prover import Loop, SearchBudget, Verdict, find_loops, prove
from .ptrs import PTRS, load_ptrs, parse_ptrs
from .term import App, Var, parse_term
from .walks import RandomWalk, classify, simulate, walk_from_counts

__all__ = [
    "App",
    "Certificate",
    "Loop",
    "PTRS",
    "PatternTerm",
    "RandomWalk",
    "SearchBudget",
    "Var",
    "Verdict",
    "classify",
    "find_loops",
    "is_pattern_term",
    "load_ptrs",
    "max_no",
    "max_oo",
    "max_opo",
    "parse_ptrs",
    "parse_term",
    "prove",
    "simulate",
    "verify_certificate",
    "walk_from_counts",
]
