"""Command-line front end.

Subcommands: ``disprove``, ``verify``, ``count`` and ``simulate``. Exit
status 0 means a verdict was found (or a certificate is valid), 1 means
unknown (or invalid), 2 means the input could not be read.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .certificate import Certificate, verify_certificate
from .counting import max_no, max_oo, max_opo
from .patterns import NotAPatternTerm
from .prover import UNKNOWN, SearchBudget, Verdict, prove
from .ptrs import PTRS, PtrsError, load_ptrs
from .rst import leaves, replay
from .term import TermError, format_position, parse_subst, parse_term
from .walks import RandomWalk, WalkError, classify, expected_value, simulate

EXIT_FOUND, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2
_GOALS = {"ast": "disprove_AST", "past": "disprove_PAST", "auto": "auto"}


class InputError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    defaults = SearchBudget()
    parser = argparse.ArgumentParser(prog="ptrsdisprove", description="Disprove (P)AST of probabilistic term rewrite systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("disprove", help="search for a non-(P)AST certificate")
    d.add_argument("input", type=Path, help=".ptrs file")
    d.add_argument("--goal", choices=sorted(_GOALS), default="auto")
    d.add_argument("--format", choices=("text", "json"), default="text")
    d.add_argument("--cert", type=Path, help="write the certificate JSON here")
    d.add_argument("--max-loop-len", type=_positive_int, default=defaults.max_loop_length)
    d.add_argument("--max-expansions", type=_positive_int, default=defaults.max_expansions)
    d.add_argument("--max-loops", type=_positive_int, default=defaults.max_loops)
    d.add_argument("--timeout", type=_positive_float, default=defaults.timeout, metavar="SECONDS")
    d.add_argument("--workers", type=_positive_int, default=1, help="threads exploring loops")
    d.add_argument("--seed", type=int, default=0, help="accepted for uniformity; verdicts do not depend on it")

    v = sub.add_parser("verify", help="re-check a certificate against a PTRS")
    v.add_argument("input", type=Path, help=".ptrs file")
    v.add_argument("cert", type=Path, help="certificate JSON")

    c = sub.add_parser("count", help="occurrence counts of t in s")
    c.add_argument("input", type=Path, help="file with optional (VAR ...), and lines t = ..., s = ..., sigma = [...]")

    s = sub.add_parser("simulate", help="Monte-Carlo run of a random walk")
    s.add_argument("--walk", required=True, help='steps as "x:p,...", e.g. "-1:1/3,1:2/3"')
    s.add_argument("--x0", type=int, default=1)
    s.add_argument("--horizon", type=_positive_int, default=10_000)
    s.add_argument("--trials", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    return parser


# -- subcommands ---------------------------------------------------------------------


def _load(path: Path):
    try:
        return load_ptrs(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    except PtrsError as e:
        raise InputError(f"{path}: {e}") from e


def _verdict_json(v: Verdict) -> dict:
    return {"verdict": v.status, "certificate": None if v.certificate is None else v.certificate.to_json()}


def _describe(v: Verdict, P: PTRS) -> str:
    if v.certificate is None:
        return f"verdict: {UNKNOWN}\n"
    c = v.certificate
    lines = [f"verdict: {v.status}", f"theorem: {c.theorem}", f"term: {c.term}"]
    if c.pattern is not None:
        lines.append(f"pattern: {c.pattern}")
    lines.append(f"tree: {len(c.records)} expansion(s), {len(c.leaves)} leaves")
    # leaf terms are not part of the certificate; rebuild the tree for display
    terms = [lf.term for lf in leaves(replay(P, c.term, c.records))]
    for lf, term in zip(c.leaves, terms):
        where = ", ".join(format_position(p) for p in lf.witness) or "-"
        lines.append(f"  {str(lf.prob):>8}  count {lf.count}  at {where}  {term}")
    if c.sum is not None:
        lines.append(f"sum: {c.sum} ({c.relation.replace('>=', '≥ ').replace('>1', '> 1')})")
        walk = c.walk
        steps = ", ".join(f"μ({x})={p}" for x, p in walk.steps)
        lines.append(f"walk: {steps}, {classify(walk).kind.replace('_', ' ')}")
    return "\n".join(lines) + "\n"


def cmd_disprove(args: argparse.Namespace) -> int:
    P = _load(args.input)
    budget = SearchBudget(
        max_loop_length=args.max_loop_len,
        max_expansions=args.max_expansions,
        max_loops=args.max_loops,
        timeout=args.timeout,
    )
    verdict = prove(P, _GOALS[args.goal], budget, workers=args.workers)
    if args.cert is not None and verdict.certificate is not None:
        args.cert.write_text(verdict.certificate.dumps(), encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(json.dumps(_verdict_json(verdict), indent=2, ensure_ascii=False) + "\n")
    else:
        sys.stdout.write(_describe(verdict, P))
    return EXIT_UNKNOWN if verdict.status == UNKNOWN else EXIT_FOUND


def cmd_verify(args: argparse.Namespace) -> int:
    P = _load(args.input)
    try:
        data = json.loads(args.cert.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read {args.cert}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{args.cert}: invalid JSON: {e}") from e
    if isinstance(data, dict) and "certificate" in data and "theorem" not in data:
        data = data["certificate"]  # output of `disprove --format json`
    if not isinstance(data, dict):
        raise InputError(f"{args.cert}: no certificate found")
    try:
        cert = Certificate.from_json(data, P.variables)
    except (KeyError, TypeError, ValueError, TermError) as e:
        print(f"invalid: malformed certificate ({e})")
        return EXIT_UNKNOWN
    result = verify_certificate(P, cert)
    print("valid" if result else f"invalid: {result.reason}")
    return EXIT_FOUND if result else EXIT_UNKNOWN


def _read_count_file(path: Path) -> dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    fields: dict[str, str] = {"vars": ""}
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("(VAR") and line.endswith(")"):
            fields["vars"] += " " + line[4:-1]
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("t", "s", "sigma"):
            raise InputError(f"{path}: cannot read line {raw!r}")
        fields[key] = value.strip()
    if "t" not in fields or "s" not in fields:
        raise InputError(f"{path}: both t = ... and s = ... are required")
    return fields


def cmd_count(args: argparse.Namespace) -> int:
    fields = _read_count_file(args.input)
    names = tuple(fields["vars"].split())
    try:
        t = parse_term(fields["t"], names)
        s = parse_term(fields["s"], names)
        sigma = parse_subst(fields["sigma"], names) if "sigma" in fields else None
        results = [("maxNO", max_no(t, s)), ("maxOO", max_oo(t, s))]
        if sigma is not None:
            results.append(("maxOPO", max_opo(t, sigma, s)))
    except NotAPatternTerm as e:
        raise InputError(str(e)) from e
    except (TermError, ValueError) as e:
        raise InputError(f"{args.input}: {e}") from e
    for name, r in results:
        where = ", ".join(format_position(p) for p in r.witness) or "-"
        print(f"{name} = {r.count}  at {where}")
    return EXIT_FOUND


def _parse_walk(text: str) -> RandomWalk:
    steps: dict[int, Fraction] = {}
    try:
        for item in text.split(","):
            x, _, p = item.partition(":")
            steps[int(x)] = steps.get(int(x), Fraction(0)) + Fraction(p.strip())
        return RandomWalk.of(steps)
    except (ValueError, ZeroDivisionError, WalkError) as e:
        raise InputError(f"bad walk {text!r}: {e}") from e


def cmd_simulate(args: argparse.Namespace) -> int:
    mu = _parse_walk(args.walk)
    result = simulate(mu, args.x0, args.horizon, args.trials, args.seed)
    cls = classify(mu)
    print(f"walk: {', '.join(f'μ({x})={p}' for x, p in mu.steps)}")
    print(f"class: {cls.kind} (E = {expected_value(mu)}, AST {cls.is_ast}, PAST {cls.is_past})")
    print(f"terminated: {result.terminated}/{result.trials} = {float(result.termination_frequency):.4f}")
    mean = result.mean_steps
    print(f"mean steps of terminated runs: {'-' if mean is None else f'{float(mean):.2f}'}")
    return EXIT_FOUND


_COMMANDS = {"disprove": cmd_disprove, "verify": cmd_verify, "count": cmd_count, "simulate": cmd_simulate}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_FOUND
    try:
        return _COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
