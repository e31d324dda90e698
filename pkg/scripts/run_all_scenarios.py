"""Run every bundled scenario and compare verdicts against expectations.

Each scenario file states, per check, whether it is expected to PASS or FAIL
(counterexample scenarios expect failures).  This script runs ``classify``
and ``verify`` separately for every bundled scenario — running them apart
keeps a deliberately failing classification from cascading SKIPPED over the
checks — and reports one line per scenario.  Exit code 0 means every check
matched its expectation.

Usage:
    python scripts/run_all_scenarios.py [--seed N] [--out-dir DIR]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from bregman_lab.report import render_report, run
from bregman_lab.scenarios import bundled_scenario_names, load_scenario

# Secondary entries compare against the expectation of the check that
# spawned them.
PARENT_CHECK = {
    "barycenter_location": "barycenter",
    "sandwich_equality": "sandwich",
}

COMPARABLE = {"PASS", "FAIL"}


def expected_verdicts(scenario) -> dict:
    return {check["check"]: check["expect_verdict"] for check in scenario.checks}


def compare(report: dict, expected: dict) -> list:
    mismatches = []
    for entry in report["checks"]:
        if entry["verdict"] not in COMPARABLE:
            continue
        name = entry["check"]
        want = expected.get(PARENT_CHECK.get(name, name))
        if want is not None and entry["verdict"] != want:
            mismatches.append(f"{name}: got {entry['verdict']}, expected {want}")
    return mismatches


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help="override every scenario's seed")
    parser.add_argument("--out-dir", help="write the JSON reports into this directory")
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name in bundled_scenario_names():
        started = time.perf_counter()
        scenario = load_scenario(name, seed=args.seed)
        classify = run(scenario, "classify")
        verify = run(load_scenario(name, seed=args.seed), "verify")
        elapsed = time.perf_counter() - started

        if out_dir:
            stem = name.removesuffix(".json")
            (out_dir / f"{stem}_classify.json").write_text(render_report(classify))
            (out_dir / f"{stem}_verify.json").write_text(render_report(verify))

        mismatches = compare(verify, expected_verdicts(scenario))
        failures += len(mismatches)
        kinds = ", ".join(
            f"{c['check'].removeprefix('classify_')} {c['verdict']}"
            for c in classify["checks"]
        )
        checked = sum(1 for c in verify["checks"] if c["verdict"] in COMPARABLE)
        status = "ok" if not mismatches else "MISMATCH"
        print(f"{scenario.id:16s} {status:8s} {checked} checks as expected, "
              f"classify [{kinds}]  ({elapsed:.1f}s)")
        for line in mismatches:
            print(f"    {line}")
        warnings = {k: v for k, v in verify["warnings"].items() if v}
        if warnings:
            print(f"    warnings: {json.dumps(warnings)}")

    print(f"\n{'all expectations met' if not failures else f'{failures} mismatches'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
