"""Scenario runner: loads inputs, dispatches to the modules, emits certificates.

Exit codes: 0 expected verdict, 2 unreadable input, 3 guard or precondition
violation, 4 falsified expectation.
"""
from __future__ import annotations

import csv
import io
import json
import os
import random
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .adversary import (AdversaryPrefix, DepthInsufficient, GuardViolation, audit_prefix,
                        construct_gamma_star, verify_prefix_defeat)
from .cube import (CubePoint, DefeatWitness, SheetSpec, TableIncomplete, check_retraction_violation,
                   defeat_family, point_from_json)
from .extension import (ChainMismatch, CoveringBug, FiniteMetricSpace, MetricAxiomError, NetBlowUp,
                        admissible_sets, build_net_chain, extension_operator, finite_net,
                        lipschitz_constant, local_map, separated_chain)
from .gaps import (GammaError, GammaSequence, GapStructure, GapStructureError, PreconditionError,
                   build_gaps, complement_measure_bound)
from .glued import (CollapseFailure, CollapseRejection, DegenerateTable, GluedPoint, GluedSpace,
                    UnknownSheet, collapse_map, glued_distance)
from .maps import jump_certificates, max_feasible_map
from .rationals import HorizonExhausted, as_rational, decimal_text, fmt

CERT_SCHEMA = "lipretract/certificate@1"
SCENARIO_SCHEMA = "lipretract/scenario@1"
KINDS = ("build-gaps", "decide-lip", "make-adversary", "verify-adversary", "cube-defeat",
         "cube-check", "glue-dist", "collapse", "net", "chain", "extend")

EXIT_OK, EXIT_PARSE, EXIT_GUARD, EXIT_FALSIFIED = 0, 2, 3, 4


class InputError(ValueError):
    pass


class Falsified(RuntimeError):
    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class Scenario:
    kind: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        return {"schema": SCENARIO_SCHEMA, "kind": self.kind, "inputs": dict(sorted(self.inputs.items())),
                "params": dict(sorted(self.params.items())), "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "Scenario":
        if doc.get("kind") not in KINDS:
            raise InputError(f"unknown scenario kind {doc.get('kind')!r}")
        return cls(doc["kind"], dict(doc.get("inputs", {})), dict(doc.get("params", {})),
                   int(doc.get("seed", 0)))


@dataclass
class Certificate:
    scenario: Scenario
    verdict: str
    result: Any
    exit_code: int
    wall_clock: float = 0.0

    def body(self) -> dict:
        return {"schema": CERT_SCHEMA, "tool_version": __version__,
                "scenario": self.scenario.to_json(), "verdict": self.verdict,
                "exit_code": self.exit_code, "result": self.result}

    def canonical(self) -> str:
        """Deterministic text, excluding the wall-clock field."""
        return json.dumps(self.body(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        doc = self.body()
        doc["wall_clock"] = round(self.wall_clock, 6)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ------------------------------------------------------------------ loading

def read_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if isinstance(doc, dict) and doc.get("schema") == CERT_SCHEMA:
        doc = doc["result"]
    return doc


def load_gap_structure(doc: dict) -> GapStructure:
    if "gaps" in doc:
        return GapStructure.from_json(doc)
    gamma = GammaSequence.from_json(doc)
    return build_gaps(gamma, doc.get("enumeration", "denominator"), doc.get("depth"))


def _need(s: Scenario, name: str) -> str:
    if name not in s.inputs:
        raise InputError(f"scenario {s.kind} needs input {name!r}")
    return s.inputs[name]


def _param(s: Scenario, name: str, default=None, rational=False):
    if name not in s.params:
        if default is None:
            raise InputError(f"scenario {s.kind} needs parameter {name!r}")
        return default
    val = s.params[name]
    return as_rational(val) if rational else val


# ----------------------------------------------------------------- handlers

def _build_gaps(s: Scenario):
    doc = read_json(_need(s, "gamma"))
    gamma = GammaSequence.from_json(doc)
    depth = int(_param(s, "depth", doc.get("depth", len(gamma.terms))))
    horizon = int(_param(s, "horizon", 100_000))
    gs = build_gaps(gamma, doc.get("enumeration", "denominator"), depth, horizon)
    out = gs.to_json()
    out["measure_bound"] = fmt(complement_measure_bound(gs))
    return "built", out


def _decide(s: Scenario):
    dom = load_gap_structure(read_json(_need(s, "domain")))
    cod = load_gap_structure(read_json(_need(s, "codomain")))
    K = _param(s, "k", rational=True)
    res = max_feasible_map(dom, cod, K)
    verdict = "FEASIBLE" if res.feasible else "INFEASIBLE"
    out = res.to_json()
    if res.feasible:
        out["certificates"] = [c.to_json() for c in jump_certificates(res.max_map, dom, cod)]
    expect = s.params.get("expect")
    if expect is not None and expect.upper() != verdict:
        raise Falsified(f"expected {expect}, got {verdict}", out)
    return verdict, out


def _load_family(doc) -> list[GammaSequence]:
    members = doc["members"] if isinstance(doc, dict) else doc
    return [GammaSequence.from_json(m) for m in members]


def _make_adversary(s: Scenario, jobs: int):
    doc = read_json(_need(s, "family"))
    family = _load_family(doc)
    K = _param(s, "k", rational=True)
    depth = int(_param(s, "depth", 16))
    prefix = construct_gamma_star(family, K, depth=depth, jobs=jobs)
    problems = audit_prefix(prefix)
    if problems:
        raise Falsified("; ".join(problems), prefix.to_json())
    return "CONSTRUCTED", prefix.to_json()


def _verify_adversary(s: Scenario):
    prefix = AdversaryPrefix.from_json(read_json(_need(s, "prefix")))
    depths = s.params.get("depths")
    dd = dc = None
    if depths is not None:
        dd, dc = (int(v) for v in (depths.split(",") if isinstance(depths, str) else depths))
    tail = _param(s, "tail_ratio", "1/2", rational=True)
    verdicts = verify_prefix_defeat(prefix, tail, dd, dc)
    out = {"gamma_star": [fmt(g) for g in prefix.gamma_star], "K": fmt(prefix.K),
           "members": [v.to_json() for v in verdicts]}
    if any(v.feasible for v in verdicts):
        raise Falsified("a family member admits a K-Lipschitz map", out)
    return "INFEASIBLE", out


def _load_sheets(doc) -> list[SheetSpec]:
    sheets = doc["sheets"] if isinstance(doc, dict) else doc
    return [SheetSpec(tuple(as_rational(v) for v in row)) for row in sheets]


def _cube_defeat(s: Scenario):
    family = _load_sheets(read_json(_need(s, "family")))
    K = _param(s, "k", rational=True)
    beta0 = s.params.get("beta0")
    w = defeat_family(family, K, None if beta0 is None else int(beta0))
    return "WITNESS", w.to_json()


def _cube_check(s: Scenario):
    wdoc = read_json(_need(s, "witness"))
    w = DefeatWitness.from_json(wdoc)
    tdoc = read_json(_need(s, "retraction"))
    dim = len(w.family)
    R = {point_from_json(a, dim): point_from_json(b, dim) for a, b in tdoc["pairs"]}
    K = as_rational(s.params.get("k", tdoc.get("K", wdoc["K"])))
    rep = check_retraction_violation(R, K, w)
    if rep.status == "consistent":
        raise Falsified("no violated inequality found", rep.to_json())
    return rep.status.upper(), rep.to_json()


def _load_glued(doc) -> GluedSpace:
    return GluedSpace({str(k): load_gap_structure(v) for k, v in doc["sheets"].items()})


def _glue_dist(s: Scenario):
    space = _load_glued(read_json(_need(s, "space")))
    p = GluedPoint.from_json(_param(s, "p"))
    q = GluedPoint.from_json(_param(s, "q"))
    return "DISTANCE", {"p": p.to_json(), "q": q.to_json(), "distance": fmt(glued_distance(p, q, space))}


def _collapse(s: Scenario):
    space = _load_glued(read_json(_need(s, "space")))
    tdoc = read_json(_need(s, "table"))
    table = {as_rational(x): GluedPoint.from_json(p) for x, p in tdoc["table"]}
    K = as_rational(s.params["k"] if "k" in s.params else tdoc["K"])
    domain = None
    if "domain" in s.inputs:
        domain = load_gap_structure(read_json(s.inputs["domain"]))
    res = collapse_map(table, K, space, domain)
    return ("REJECTED" if isinstance(res, CollapseRejection) else "ACCEPTED"), res.to_json()


def _load_space(s: Scenario) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_json(read_json(_need(s, "space")))


def _net(s: Scenario):
    space = _load_space(s)
    F = [str(p) for p in _param(s, "F")]
    k = int(_param(s, "k"))
    eps = _param(s, "eps", rational=True)
    cap = int(_param(s, "cap", 200_000))
    net = finite_net(space, F, k, eps, cap)
    worst = Fraction(0)
    if s.params.get("check", True):
        for extras in admissible_sets(space, net.F, k, eps, cap):
            worst = max(worst, local_map(set(net.F) | set(extras), net, space).lipschitz)
    out = net.to_json()
    out["max_local_lipschitz"] = fmt(worst)
    return "NET", out


def _chain(s: Scenario):
    space = _load_space(s)
    F_chain = [[str(p) for p in F] for F in _param(s, "F_chain")]
    eps_chain = [as_rational(e) for e in _param(s, "eps_chain")]
    ch = separated_chain(space, F_chain, eps_chain)
    return "CHAIN", ch.to_json()


def _extend(s: Scenario):
    space = _load_space(s)
    points = [str(p) for p in _param(s, "points")]
    cap = int(_param(s, "cap", 200_000))
    levels = build_net_chain(space, points, cap)
    D = separated_chain(space, [l.F for l in levels], [l.eps for l in levels])
    op = extension_operator(space, levels, D)
    rng = random.Random(s.seed)
    trials = int(_param(s, "trials", 5))
    worst = Fraction(0)
    for _ in range(trials):
        f = {p: Fraction(rng.randint(-20, 20), rng.randint(1, 10)) for p in op.S}
        f[space.base] = Fraction(0)
        lf = lipschitz_constant(f, space)
        tf = op.apply(f)
        if any(tf[p] != f[p] for p in op.core):
            raise Falsified("operator does not extend on its core", op.to_json())
        ratio = lipschitz_constant(tf, space) / lf if lf else Fraction(0)
        worst = max(worst, ratio)
    if worst > op.certificate:
        raise Falsified(f"norm ratio {worst} exceeds {op.certificate}", op.to_json())
    out = op.to_json()
    out["levels"] = [l.to_json() for l in levels]
    out["separated_chain"] = D.to_json()
    out["worst_norm_ratio"] = fmt(worst)
    return "OPERATOR", out


_GUARDS = (PreconditionError, GuardViolation, DepthInsufficient, HorizonExhausted, NetBlowUp,
           ChainMismatch, TableIncomplete, DegenerateTable, UnknownSheet, GammaError,
           GapStructureError, MetricAxiomError)


def run_scenario(s: Scenario, jobs: int | None = None) -> Certificate:
    if jobs is None:
        jobs = default_jobs()
    start = time.perf_counter()
    handlers = {
        "build-gaps": _build_gaps, "decide-lip": _decide,
        "make-adversary": lambda sc: _make_adversary(sc, jobs),
        "verify-adversary": _verify_adversary, "cube-defeat": _cube_defeat,
        "cube-check": _cube_check, "glue-dist": _glue_dist, "collapse": _collapse,
        "net": _net, "chain": _chain, "extend": _extend,
    }
    try:
        if s.kind not in handlers:
            raise InputError(f"unknown scenario kind {s.kind!r}")
        verdict, result = handlers[s.kind](s)
        code = EXIT_OK
    except Falsified as exc:
        verdict, result, code = "FALSIFIED", {"error": str(exc), "evidence": exc.result}, EXIT_FALSIFIED
    except (CollapseFailure, CoveringBug) as exc:
        verdict, result, code = "FALSIFIED", {"error": str(exc)}, EXIT_FALSIFIED
    except _GUARDS as exc:
        verdict, result, code = "GUARD", {"error": f"{type(exc).__name__}: {exc}"}, EXIT_GUARD
    except (InputError, KeyError, TypeError, ValueError) as exc:
        verdict, result, code = "PARSE_ERROR", {"error": f"{type(exc).__name__}: {exc}"}, EXIT_PARSE
    return Certificate(s, verdict, result, code, time.perf_counter() - start)


def default_jobs() -> int:
    val = os.environ.get("LIPRETRACT_JOBS")
    if val is None:
        return 1
    try:
        return max(1, int(val))
    except ValueError:
        return 1


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_batch(scenarios: Sequence[Scenario], jobs: int | None = None) -> list[Certificate]:
    """Run independent scenarios concurrently; results keep input order."""
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1:
        return [run_scenario(s, 1) for s in scenarios]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda sc: run_scenario(sc, 1), scenarios))


# ---------------------------------------------------------------------- CSV

def _rows_blocking(res):
    return ["index", "value", "value_decimal"], [
        [i, v, decimal_text(as_rational(v))] for i, v in enumerate(res["blocking_chain"], 1)]


def _rows_breakpoints(res):
    return ["x", "y", "x_decimal", "y_decimal"], [
        [x, y, decimal_text(as_rational(x)), decimal_text(as_rational(y))]
        for x, y in res["max_map"]["breakpoints"]]


def _rows_gamma_star(res):
    return ["i", "gamma_star", "gamma_star_decimal"], [
        [i, g, decimal_text(as_rational(g))] for i, g in enumerate(res["gamma_star"], 1)]


def _rows_defeat(res):
    beta0 = res["beta0"]
    g = res["gamma_star"][beta0]
    return ["K", "gamma_star_beta0", "distance", "K_decimal", "gamma_star_beta0_decimal",
            "distance_decimal"], [[res["K"], g, res["distance"], decimal_text(as_rational(res["K"])),
                                   decimal_text(as_rational(g)),
                                   decimal_text(as_rational(res["distance"]))]]


SELECTORS = {
    "blocking-chain": _rows_blocking,
    "breakpoints": _rows_breakpoints,
    "gamma-star": _rows_gamma_star,
    "defeat": _rows_defeat,
}


def emit_csv(certs, selector: str) -> str:
    """Rows from one or more certificate documents (or Certificate objects)."""
    if selector not in SELECTORS:
        raise KeyError(f"unknown selector {selector!r}; choose from {sorted(SELECTORS)}")
    if isinstance(certs, (dict, Certificate)):
        certs = [certs]
    header, rows = None, []
    for cert in certs:
        doc = cert.body() if isinstance(cert, Certificate) else cert
        h, r = SELECTORS[selector](doc["result"])
        header = h
        rows.extend(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
