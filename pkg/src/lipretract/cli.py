"""Command-line front end (``lipretract``)."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (EXIT_PARSE, KINDS, SELECTORS, Certificate, InputError, Scenario, emit_csv,
                      read_json, run_batch, run_scenario, write_atomic)

# flags per subcommand: (flag, destination bucket, key)
_FLAGS = {
    "build-gaps": [("--gamma", "inputs", "gamma"), ("--depth", "params", "depth"),
                   ("--horizon", "params", "horizon")],
    "decide-lip": [("--domain", "inputs", "domain"), ("--codomain", "inputs", "codomain"),
                   ("--k", "params", "k"), ("--expect", "params", "expect")],
    "make-adversary": [("--family", "inputs", "family"), ("--k", "params", "k"),
                       ("--depth", "params", "depth")],
    "verify-adversary": [("--prefix", "inputs", "prefix"), ("--depths", "params", "depths"),
                         ("--tail-ratio", "params", "tail_ratio")],
    "cube-defeat": [("--family", "inputs", "family"), ("--k", "params", "k"),
                    ("--beta0", "params", "beta0")],
    "cube-check": [("--retraction", "inputs", "retraction"), ("--witness", "inputs", "witness"),
                   ("--k", "params", "k")],
    "glue-dist": [("--space", "inputs", "space"), ("--p", "params", "p"), ("--q", "params", "q")],
    "collapse": [("--space", "inputs", "space"), ("--table", "inputs", "table"),
                 ("--domain", "inputs", "domain"), ("--k", "params", "k")],
    "net": [("--space", "inputs", "space"), ("--F", "params", "F"), ("--k", "params", "k"),
            ("--eps", "params", "eps"), ("--cap", "params", "cap")],
    "chain": [("--space", "inputs", "space"), ("--F-chain", "params", "F_chain"),
              ("--eps-chain", "params", "eps_chain")],
    "extend": [("--space", "inputs", "space"), ("--points", "params", "points"),
               ("--trials", "params", "trials"), ("--cap", "params", "cap")],
}
_INT_PARAMS = {"depth", "horizon", "beta0", "k_int", "cap", "trials"}
_JSON_PARAMS = {"p", "q", "F_chain", "eps_chain"}
_LIST_PARAMS = {"F", "points"}


def _param_value(key: str, raw: str):
    if key in _JSON_PARAMS:
        return json.loads(raw)
    if key in _LIST_PARAMS:
        return [v for v in raw.split(",") if v]
    if key in _INT_PARAMS:
        return int(raw)
    return raw


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lipretract", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        for flag, _, key in _FLAGS[kind]:
            sp.add_argument(flag, dest=key)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        sp.add_argument("--jobs", type=int)
    run = sub.add_parser("run", help="run one scenario document")
    run.add_argument("scenario")
    run.add_argument("--out")
    run.add_argument("--jobs", type=int)
    batch = sub.add_parser("batch", help="run several scenario documents concurrently")
    batch.add_argument("scenarios", nargs="+")
    batch.add_argument("--out-dir", required=True)
    batch.add_argument("--jobs", type=int)
    tab = sub.add_parser("csv", help="tabulate certificates")
    tab.add_argument("certificates", nargs="+")
    tab.add_argument("--select", required=True, choices=sorted(SELECTORS))
    tab.add_argument("--out")
    return ap


def _emit(cert: Certificate, out: str | None) -> None:
    if out:
        write_atomic(out, cert.to_text())
    else:
        sys.stdout.write(cert.to_text())


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    try:
        if args.command == "run":
            scenario = Scenario.from_json(read_json(args.scenario))
            cert = run_scenario(scenario, args.jobs)
            _emit(cert, args.out)
            return cert.exit_code
        if args.command == "batch":
            scenarios = [Scenario.from_json(read_json(p)) for p in args.scenarios]
            certs = run_batch(scenarios, args.jobs)
            for path, cert in zip(args.scenarios, certs):
                write_atomic(Path(args.out_dir) / (Path(path).stem + ".cert.json"), cert.to_text())
            return max(c.exit_code for c in certs)
        if args.command == "csv":
            docs = [json.loads(Path(p).read_text()) for p in args.certificates]
            text = emit_csv(docs, args.select)
            if args.out:
                write_atomic(args.out, text)
            else:
                sys.stdout.write(text)
            return 0
        inputs, params = {}, {}
        for _, bucket, key in _FLAGS[args.command]:
            raw = getattr(args, key)
            if raw is None:
                continue
            if bucket == "inputs":
                inputs[key] = raw
            else:
                params[key] = _param_value(key, raw)
        cert = run_scenario(Scenario(args.command, inputs, params, args.seed), args.jobs)
        _emit(cert, args.out)
        return cert.exit_code
    except (InputError, json.JSONDecodeError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
