"""Command-line surface: scenario commands plus divergence-curve export.

stdout carries exactly one machine-readable payload per invocation (the JSON
report, or CSV for ``curves``); logs go to stderr.  Exit codes: 0 every check
passed, 1 some check failed, 2 usage or scenario-file error, 3 numeric
failure inside a computation.
"""

import argparse
import logging
import sys

import numpy as np

from .errors import BregmanLabError, ScenarioParseError, ScenarioValidationError
from .generators import bregman_distance, make_generator
from .report import (
    COMMANDS,
    barycenter_tail_csv,
    exit_code,
    render_report,
    run,
)
from .scenarios import load_scenario

_COMMAND_HELP = {
    "distance": "divergence values and identity spot-checks at the probe point",
    "project": "divergence-minimizing projection of the probe point with certificates",
    "classify": "sampled nonexpansiveness-type checks from the scenario's classify block",
    "barycenter": "orbit barycenters along the box schedule until Cauchy",
    "verify": "run the scenario's configured checks",
    "all": "classification, then barycenter, then every configured check",
}

CURVE_GRIDS = {
    "sq_norm": np.linspace(-2.0, 2.0, 41),
    "neg_entropy": np.linspace(0.1, 2.9, 29),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bregman-lab",
        description="Divergence, projection, and semigroup-averaging checks "
        "driven by JSON scenario files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_COMMAND_HELP[name])
        p.add_argument("--scenario", required=True,
                       help="scenario file path or bundled scenario name")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--tol", type=float, help="override the scenario tolerance")
        p.add_argument("--samples", type=int, help="override the scenario sample count")
        p.add_argument("--folner-max", type=int, dest="folner_max",
                       help="drop schedule boxes with sides above this cap")
        p.add_argument("--csv", help="also write the barycenter tail as CSV here")
    curves = sub.add_parser(
        "curves", help="CSV of divergence values over 1-d grids, for plotting"
    )
    curves.add_argument("--out", help="write the CSV here instead of stdout")
    return parser


def _configure_logging() -> None:
    root = logging.getLogger("bregman_lab")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
        root.setLevel(logging.INFO)


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def run_curves(args) -> int:
    lines = ["generator,x,y,value"]
    for name, grid in CURVE_GRIDS.items():
        g = make_generator(name, 1)
        for x in grid.tolist():
            for y in grid.tolist():
                value = bregman_distance(g, [x], [y])
                lines.append(f"{name},{x!r},{y!r},{value!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    if args.command == "curves":
        return run_curves(args)
    try:
        scenario = load_scenario(
            args.scenario,
            seed=args.seed,
            tol=args.tol,
            samples=args.samples,
            folner_max=args.folner_max,
        )
    except ScenarioValidationError as exc:
        print(f"scenario validation failed ({len(exc.problems)} problems):",
              file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    except ScenarioParseError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(scenario, args.command)
    except BregmanLabError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    _emit(render_report(report), args.out)
    if args.csv:
        try:
            csv_text = barycenter_tail_csv(report)
        except ValueError as exc:
            print(f"csv export skipped: {exc}", file=sys.stderr)
        else:
            with open(args.csv, "w", encoding="utf-8") as handle:
                handle.write(csv_text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
