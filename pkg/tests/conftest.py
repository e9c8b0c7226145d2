from __future__ import annotations

import json
from pathlib import Path

import pytest

from lipretract.harness import Scenario, run_scenario

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Record one acceptance line: record(number, ok, detail)."""

    def _record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (ok, detail)
        print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def _dump(path: Path, doc) -> str:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return str(path)


def write_corpus(root: Path) -> dict[str, Scenario]:
    """One small scenario per kind, with its input files written under ``root``."""
    f = {}
    f["gamma"] = _dump(root / "gamma.json", {"eps0": "1/4", "gamma_terms": ["1/4", "1/8", "1/16"]})
    f["domain"] = _dump(root / "domain.json", {"eps0": "1/4", "gamma_terms": ["1/5", "1/5"]})
    f["codomain"] = _dump(root / "codomain.json", {"eps0": "1/4", "gamma_terms": ["1/5"]})
    fam = {"members": [
        {"eps0": "1/8", "gamma_terms": ["1/4"], "tail_ratio": "1/2"},
        {"eps0": "1/8", "gamma_terms": ["1/3"], "tail_ratio": "1/3"},
    ]}
    f["family"] = _dump(root / "family.json", fam)
    pre = run_scenario(Scenario("make-adversary", {"family": f["family"]}, {"k": "2"}), 1)
    f["prefix"] = _dump(root / "prefix.json", pre.result)
    f["sheets"] = _dump(root / "sheets.json", {"sheets": [["1/10", "1/8"], ["1/7", "1/5"]]})
    wit = run_scenario(Scenario("cube-defeat", {"family": f["sheets"]}, {"k": "2"}), 1)
    f["witness"] = _dump(root / "witness.json", wit.result)
    b0, q = wit.result["p_star"], wit.result["q_star"]
    f["retraction"] = _dump(root / "retraction.json", {"pairs": [
        [{"tag": "vertex", "A": []}, {"tag": "vertex", "A": []}],
        [{"tag": "vertex", "A": [wit.result["beta0"]]}, {"tag": "vertex", "A": [wit.result["beta0"]]}],
        [b0, {"tag": "vertex", "A": []}],
        [q, {"tag": "vertex", "A": [wit.result["beta0"]]}],
    ]})
    f["glued"] = _dump(root / "glued.json", {"sheets": {
        "a": {"eps0": "1/4", "gamma_terms": ["1/4"]},
        "b": {"eps0": "1/4", "gamma_terms": ["1/8"]},
    }})
    f["table"] = _dump(root / "table.json", {"K": "3", "table": [
        ["0", {"tag": "base0"}], ["1/2", {"tag": "inner", "sheet": "a", "x": "1/2"}],
        ["1", {"tag": "base1"}]]})
    ids = [f"p{i}" for i in range(6)]
    line = [0, 1, 3, 4, 7, 9]
    f["space"] = _dump(root / "space.json", {"ids": ids, "base": "p0",
                                               "dist": [[f"{abs(a - b)}/9" for b in line] for a in line]})
    return {
        "build-gaps": Scenario("build-gaps", {"gamma": f["gamma"]}),
        "decide-lip": Scenario("decide-lip", {"domain": f["domain"], "codomain": f["codomain"]}, {"k": "2"}),
        "make-adversary": Scenario("make-adversary", {"family": f["family"]}, {"k": "3"}),
        "verify-adversary": Scenario("verify-adversary", {"prefix": f["prefix"]}),
        "cube-defeat": Scenario("cube-defeat", {"family": f["sheets"]}, {"k": "3/2"}),
        "cube-check": Scenario("cube-check", {"witness": f["witness"], "retraction": f["retraction"]}),
        "glue-dist": Scenario("glue-dist", {"space": f["glued"]},
                              {"p": {"tag": "inner", "sheet": "a", "x": "1/3"},
                               "q": {"tag": "inner", "sheet": "b", "x": "3/4"}}),
        "collapse": Scenario("collapse", {"space": f["glued"], "table": f["table"]}),
        "net": Scenario("net", {"space": f["space"]}, {"F": ["p0", "p5"], "k": 2, "eps": "1/3"}),
        "chain": Scenario("chain", {"space": f["space"]},
                          {"F_chain": [["p0"], ["p0", "p3"]], "eps_chain": ["1/3", "2/9"]}),
        "extend": Scenario("extend", {"space": f["space"]}, {"points": ["p2", "p5"], "trials": 4}, seed=7),
    }


@pytest.fixture
def corpus(tmp_path) -> dict[str, Scenario]:
    return write_corpus(tmp_path)
