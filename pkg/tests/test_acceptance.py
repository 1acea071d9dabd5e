"""End-to-end acceptance suite: one PASS/FAIL line per criterion.

Each test records its line in ``conftest.ACCEPTANCE_LINES`` (printed in the
terminal summary) and then asserts, so a failing criterion also fails pytest.
"""

from __future__ import annotations

import copy
import math
import random
import time
from fractions import Fraction

from ptrsdisprove.certificate import verify_certificate
from ptrsdisprove.counting import (
    max_no,
    max_oo,
    max_opo,
    occurrence_table,
    oracle_max_no,
    oracle_max_oo,
    oracle_max_opo,
)
from ptrsdisprove.patterns import is_pattern_term
from ptrsdisprove.prover import SearchBudget, prove
from ptrsdisprove.term import App, Term, Var, parse_term, positions, replace_at, size, substitute
from ptrsdisprove.walks import RNG_ALGORITHM, RandomWalk, classify, simulate

import conftest
from conftest import load_fixture
from strategies import random_ptrs, random_term
from test_certificate import accepts
from test_counting import TABLE_NAMES, TABLE_S, TABLE_T

F = Fraction


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    conftest.ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def T(text: str) -> Term:
    return parse_term(text, ["x", "y", "z"])


# -- 1: fixture verdicts ---------------------------------------------------------------

FIXTURE_VERDICTS = {
    "p2": ("not_PAST", None, None),
    "p3": ("not_PAST", None, None),
    "p5prime": ("not_AST", None, F(11, 9)),
    "p6": ("not_AST", "T5.10", None),
    "p7": ("not_AST", "T5.10", None),
    "p8": ("not_PAST", "T4.8", F(1)),
    "pgeo": ("unknown", None, None),
    "p1": ("unknown", None, None),
    "p4": ("unknown", None, None),
    "p5": ("unknown", None, None),
    "p6prime": ("unknown", None, None),
}


def test_criterion_1_fixture_verdicts():
    wrong = []
    start = time.perf_counter()
    for name, (status, theorem, total) in FIXTURE_VERDICTS.items():
        v = prove(load_fixture(name))
        c = v.certificate
        got = (v.status, c and c.theorem, c and c.sum)
        if v.status != status or (theorem and got[1] != theorem) or (total is not None and got[2] != total):
            wrong.append(f"{name}: {got}")
    elapsed = time.perf_counter() - start
    ok = not wrong and elapsed < 5.0
    report(1, ok, f"{len(FIXTURE_VERDICTS) - len(wrong)}/{len(FIXTURE_VERDICTS)} fixtures as expected in {elapsed:.2f}s {wrong or ''}".strip())


# -- 2: the occurrence table -----------------------------------------------------------


def test_criterion_2_occurrence_table():
    table = occurrence_table(TABLE_T, TABLE_S)
    expected = {f"s{i}": (0, None) for i in range(1, 12)}
    expected.update({"s12": (1, None), "s13": (1, None), "s14": (2, 2), "s15": (2, 2), "s16": (3, 2), "s17": (3, 3)})
    mismatches = []
    for name, (alpha, beta) in expected.items():
        e = table[TABLE_NAMES[name]]
        if e.alpha != alpha or (beta is not None and e.beta != beta):
            mismatches.append(f"{name}=({e.alpha},{e.beta})")
    report(2, not mismatches, f"{len(expected) - len(mismatches)}/{len(expected)} table entries match {mismatches or ''}".strip())


# -- 3: counting against the exhaustive oracles ----------------------------------------

SIG4 = (("f", 2), ("g", 1), ("a", 0), ("b", 0))
PUMPINGS = [
    {"x": T("g(x)")},
    {"x": T("f(a,x)")},
    {"x": T("f(x,y)"), "y": T("g(y)")},
    {"x": T("g(y)"), "y": T("f(x,a)")},
    {"x": T("f(x,x)")},
]


def _random_pattern(rng: random.Random) -> Term:
    while True:
        t = random_term(rng, 2, ("x", "y"), SIG4)
        if isinstance(t, App):
            return t


def _random_host(rng: random.Random, t: Term, max_size: int, sigma=None) -> Term:
    """A term of at most ``max_size`` nodes with instances of ``t`` planted in it."""
    while True:
        s = random_term(rng, 5, ("x", "y"), SIG4)
        for _ in range(rng.randint(0, 4)):
            pos = rng.choice(positions(s))
            m = rng.randint(0, 3) if sigma else 0
            inst = t
            for _ in range(m):
                inst = substitute(sigma, inst)
            inst = substitute({v: random_term(rng, 1, ("x", "y"), SIG4) for v in ("x", "y")}, inst)
            s = replace_at(s, pos, inst)
        if size(s) <= max_size:
            return s


def _balanced(depth: int, leaf: int) -> Term:
    if depth == 0:
        return App("a") if leaf % 3 else Var("x")
    return App("f", (_balanced(depth - 1, 2 * leaf), App("g", (_balanced(depth - 1, 2 * leaf + 1),))))


def _fit_exponent(sizes: list[int], times: list[float]) -> float:
    xs = [math.log(n) for n in sizes]
    ys = [math.log(t) for t in times]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def test_criterion_3_counting_oracles():
    rng = random.Random(2024)
    pairs = disagreements = opo_pairs = 0
    while pairs < 1000:
        t = _random_pattern(rng)
        s = _random_host(rng, t, 25)
        pairs += 1
        if max_no(t, s).count != oracle_max_no(t, s) or max_oo(t, s).count != oracle_max_oo(t, s):
            disagreements += 1
    while opo_pairs < 1000:
        sigma = rng.choice(PUMPINGS)
        t = rng.choice([T("f(x,y)"), T("g(x)"), T("f(a,x)"), T("g(g(x))"), T("f(x,x)")])
        if not is_pattern_term(t, sigma):
            continue
        s = _random_host(rng, t, 25, sigma)
        opo_pairs += 1
        if max_opo(t, sigma, s).count != oracle_max_opo(t, sigma, s):
            disagreements += 1

    # doubling test on balanced terms: time grows at most quadratically
    t = T("f(x,g(y))")
    sizes, times = [], []
    for depth in range(6, 11):
        s = _balanced(depth, 1)
        best = min(_timed(lambda: max_no(t, s)) for _ in range(3))
        sizes.append(size(s))
        times.append(best)
    exponent = _fit_exponent(sizes, times)
    ok = disagreements == 0 and exponent <= 2.3
    report(
        3,
        ok,
        f"{pairs} no/oo pairs and {opo_pairs} opo pairs, {disagreements} disagreements; "
        f"max_no fit exponent {exponent:.2f} over sizes {sizes[0]}..{sizes[-1]}",
    )


def _timed(f) -> float:
    start = time.perf_counter()
    f()
    return time.perf_counter() - start


# -- 4: pattern multiplicities ---------------------------------------------------------


def test_criterion_4_pattern_multiplicities():
    pair_count = max_opo(T("f(x)"), {"x": T("g(x)")}, T("c(f(g(x)),f(g(g(x))))")).count
    root_count = max_opo(T("f(a,x)"), {"x": T("f(a,x)")}, TABLE_S).count
    worked = is_pattern_term(T("f(x,y)"), {"x": T("f(z,y)"), "y": T("x")})
    rng = random.Random(7)
    names = ["x", "y", "z"]
    renamings_rejected = 0
    for _ in range(100):
        t = random_term(rng, 3, tuple(names), (("f", 2), ("g", 1), ("a", 0)))
        image = names[:]
        rng.shuffle(image)
        if not is_pattern_term(t, {x: Var(y) for x, y in zip(names, image)}):
            renamings_rejected += 1
    ok = pair_count == 3 and root_count == 2 and worked and renamings_rejected == 100
    report(4, ok, f"maxOPO values {pair_count} and {root_count}, worked example {worked}, {renamings_rejected}/100 renamings rejected")


# -- 5: random walks -------------------------------------------------------------------


def test_criterion_5_random_walks():
    walks = {
        "mu1": (RandomWalk.of({0: 1}), ("loop", False, False)),
        "mu2": (RandomWalk.of({-1: F(1, 3), 0: F(1, 3), 1: F(1, 3)}), ("symmetric", True, False)),
        "mu3": (RandomWalk.of({-1: F(1, 3), 1: F(2, 3)}), ("positively_biased", False, False)),
        "mu4": (RandomWalk.of({-1: F(2, 3), 1: F(1, 3)}), ("negatively_biased", True, True)),
    }
    table_ok = all((classify(mu).kind, classify(mu).is_ast, classify(mu).is_past) == want for mu, want in walks.values())
    mu3 = simulate(walks["mu3"][0], 1, 10_000, 100_000, seed=1).termination_frequency
    mu4 = simulate(walks["mu4"][0], 1, 100_000, 10_000, seed=1).termination_frequency
    ok = table_ok and abs(mu3 - F(1, 2)) <= F(2, 100) and mu4 >= F(99, 100)
    report(
        5,
        ok,
        f"classification table {'matches' if table_ok else 'differs'}; "
        f"mu3 frequency {float(mu3):.4f}, mu4 frequency {float(mu4):.4f} (rng {RNG_ALGORITHM}, seed 1)",
    )


# -- 6: certificates -------------------------------------------------------------------


def _tampers(d: dict) -> dict[str, list[dict]]:
    probs, witnesses, sides = [], [], []
    for i, lf in enumerate(d["leaves"]):
        bad = copy.deepcopy(d)
        bad["leaves"][i]["prob"] = str(F(lf["prob"]) + F(1, 7))
        probs.append(bad)
        if lf["witness"]:
            bad = copy.deepcopy(d)
            bad["leaves"][i]["witness"][0] = [9] + bad["leaves"][i]["witness"][0]
            witnesses.append(bad)
    bad = copy.deepcopy(d)
    bad["rst"] = []
    sides.append(bad)
    if d["theorem"] == "T5.10":
        bad = copy.deepcopy(d)
        bad["pattern"]["pumping"] = [[x, x] for x, _ in d["pattern"]["pumping"]]
        sides.append(bad)
    return {"probability": probs, "witness": witnesses, "side condition": sides}


def test_criterion_6_certificates():
    emitted = verified = 0
    rejected = {"probability": [0, 0], "witness": [0, 0], "side condition": [0, 0]}
    for name in FIXTURE_VERDICTS:
        P = load_fixture(name)
        cert = prove(P).certificate
        if cert is None:
            continue
        emitted += 1
        verified += bool(verify_certificate(P, cert))
        for kind, cases in _tampers(cert.to_json()).items():
            rejected[kind][1] += len(cases)
            rejected[kind][0] += sum(not accepts(P, c) for c in cases)
    ok = emitted > 0 and verified == emitted and all(r == n and n > 0 for r, n in rejected.values())
    counts = ", ".join(f"{kind} {r}/{n}" for kind, (r, n) in rejected.items())
    report(6, ok, f"{verified}/{emitted} certificates verify; tampering rejected: {counts}")


# -- 7: soundness stress ---------------------------------------------------------------


def test_criterion_7_soundness_stress():
    rng = random.Random(77)
    budget = SearchBudget(max_loop_length=4, max_expansions=16, max_loops=8, timeout=60.0, max_patterns=4)
    systems = 250
    found = unsound = nondeterministic = 0
    for _ in range(systems):
        P = random_ptrs(rng)
        v = prove(P, budget=budget)
        w = prove(P, budget=budget, workers=3)
        if v != w or (v.certificate and v.certificate.dumps() != w.certificate.dumps()):
            nondeterministic += 1
        c = v.certificate
        if c is None:
            continue
        found += 1
        if c.theorem == "T3.1":
            sound = v.status == "not_AST"
        elif v.status == "not_AST":
            sound = c.sum > 1
        else:
            sound = c.sum >= 1
        if not (sound and verify_certificate(P, c)):
            unsound += 1
    ok = unsound == 0 and nondeterministic == 0
    report(7, ok, f"{systems} systems, {found} verdicts, {unsound} unsound, {nondeterministic} differ across thread counts")
