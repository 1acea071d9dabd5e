from __future__ import annotations

import json

import pytest

from ptrsdisprove.cli import run

from conftest import fixture_path


def disprove(capsys, name, *extra):
    code = run(["disprove", str(fixture_path(name)), *extra])
    return code, capsys.readouterr().out


def test_disprove_json(capsys):
    code, out = disprove(capsys, "p6", "--goal", "ast", "--format", "json")
    d = json.loads(out)
    assert code == 0
    assert d["verdict"] == "not_AST"
    c = d["certificate"]
    assert (c["theorem"], c["sum"], c["relation"]) == ("T5.10", "4/3", ">1")
    assert c["pattern"] == {"base": "f(x)", "pumping": [["x", "g(x)"]]}
    assert c["walk"]["class"] == "positively_biased"


def test_disprove_unknown(capsys):
    code, out = disprove(capsys, "p1")
    assert code == 1 and out == "verdict: unknown\n"
    code, out = disprove(capsys, "p1", "--format", "json")
    assert code == 1 and json.loads(out) == {"verdict": "unknown", "certificate": None}


@pytest.mark.parametrize("name", ["p3", "p5prime", "p6", "p8"])
def test_text_and_json_agree(capsys, name):
    _, text = disprove(capsys, name)
    _, js = disprove(capsys, name, "--format", "json")
    d = json.loads(js)
    assert f"verdict: {d['verdict']}" in text
    assert f"theorem: {d['certificate']['theorem']}" in text
    assert f"sum: {d['certificate']['sum']}" in text


def test_text_lists_leaves(capsys):
    _, text = disprove(capsys, "p3")
    assert "count 2  at ε, 1  g(g(x))" in text
    assert "walk: μ(-1)=1/2, μ(1)=1/2, symmetric" in text


def test_verify_round_trip(capsys, tmp_path):
    cert = tmp_path / "p3.json"
    code, _ = disprove(capsys, "p3", "--cert", str(cert))
    assert code == 0
    assert run(["verify", str(fixture_path("p3")), str(cert)]) == 0
    assert capsys.readouterr().out == "valid\n"
    # the disprove output wrapper is accepted too
    wrapped = tmp_path / "wrapped.json"
    _, out = disprove(capsys, "p3", "--format", "json")
    wrapped.write_text(out)
    assert run(["verify", str(fixture_path("p3")), str(wrapped)]) == 0
    capsys.readouterr()
    # a tampered certificate is reported invalid
    d = json.loads(cert.read_text())
    d["leaves"][0]["prob"] = "1/3"
    cert.write_text(json.dumps(d))
    assert run(["verify", str(fixture_path("p3")), str(cert)]) == 1
    assert capsys.readouterr().out.startswith("invalid:")


def test_verify_malformed(capsys, tmp_path):
    cert = tmp_path / "c.json"
    cert.write_text('{"theorem": "T4.2"}')
    assert run(["verify", str(fixture_path("p3")), str(cert)]) == 1
    cert.write_text("not json")
    assert run(["verify", str(fixture_path("p3")), str(cert)]) == 2


def test_count(capsys, tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("(VAR x)\nt = f(x)\ns = f(f(g(f(x))))\nsigma = [x/g(x)]\n")
    assert run(["count", str(f)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["maxNO = 3  at ε, 1, 1.1.1", "maxOO = 1  at 1.1.1", "maxOPO = 1  at 1"]


def test_count_rejects_non_pattern(capsys, tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("(VAR x y)\nt = f(x,y)\ns = f(x,x)\nsigma = [x/y, y/x]\n")
    assert run(["count", str(f)]) == 2
    assert "error:" in capsys.readouterr().err


def test_simulate(capsys):
    assert run(["simulate", "--walk=-1:2/3,1:1/3", "--trials", "1000", "--horizon", "1000"]) == 0
    out = capsys.readouterr().out
    assert "negatively_biased" in out
    assert "terminated: 1000/1000" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["disprove", "/nonexistent.ptrs"],
        ["simulate", "--walk=-1:1/2,1:1/3"],
        ["simulate", "--walk", "x:1"],
        ["disprove", "p.ptrs", "--max-loops", "0"],
        ["nonsense"],
    ],
)
def test_input_errors(capsys, argv):
    assert run(argv) == 2


def test_syntax_error(capsys, tmp_path):
    f = tmp_path / "bad.ptrs"
    f.write_text("(VAR x) (RULES f(x) -> { 1/2 : x })")
    assert run(["disprove", str(f)]) == 2
    assert "error:" in capsys.readouterr().err
