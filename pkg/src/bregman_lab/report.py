"""Check execution and machine-readable run reports.

A report is a JSON document with a ``checks`` array; every entry carries the
measured value, the tolerance it was compared against, the verdict that
comparison produced, and the witness achieving the reported value.  Verdicts
are PASS/FAIL (value vs tolerance), SKIPPED (prerequisite failed),
NOT_EVALUATED (check not applicable to this generator), and INFO (measured,
nothing to compare).  Reports are deterministic for a fixed scenario and
seed: every random draw is derived from the scenario seed, and reductions
are evaluated in index order regardless of thread count.  Wall-clock fields
are the only nondeterministic ones; :func:`canonical_json` strips them.
"""

import json
import logging
import time

import numpy as np

from .actions import (
    check_generalized_hybrid,
    check_nonexpansive,
    check_nonspreading,
    asymptotic_defect,
    orbit_bound,
)
from .errors import BregmanLabError
from .fixed_point import (
    attractive_membership,
    attractive_projection_limit,
    mean_independence,
    orbit_diagnostics,
    refine_affine_fixed_point,
    sup_inf_sandwich,
    verify_fixed_point,
)
from .generators import (
    bregman_distance,
    gradient_check,
    three_point_residual,
)
from .means import barycenter_converge, barycenter_in_set, minimizer_identity_residual, minimizer_identity_scale
from .numerics import derive_seed
from .scenarios import Scenario
from .sets import bregman_project, projection_certificate, variational_inequality

logger = logging.getLogger("bregman_lab")

TOOL_VERSION = "0.1.0"
SCHEMA_VERSION = 1

COMMANDS = ("distance", "project", "classify", "barycenter", "verify", "all")

PASS, FAIL, SKIPPED, NOT_EVALUATED, INFO = (
    "PASS", "FAIL", "SKIPPED", "NOT_EVALUATED", "INFO",
)

_RUNTIME_FIELDS = {"runtime_seconds"}


def _jsonable(value):
    """Recursively convert report payloads to plain JSON types."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _entry(check, value, tol, verdict, witness=None, details=None):
    return {
        "check": check,
        "value": _jsonable(value),
        "tol": _jsonable(tol),
        "verdict": verdict,
        "witness": _jsonable(witness),
        "details": _jsonable(details or {}),
        "runtime_seconds": 0.0,
    }


def _verdict(value, tol):
    return PASS if value <= tol else FAIL


class _RunState:
    """Shared, lazily computed artifacts: the barycenter and its refinement."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._bary = None
        self._refined = "unset"
        tols = [c["tol"] for c in scenario.checks if c["check"] == "barycenter"]
        self.barycenter_tol = tols[0] if tols else scenario.tol

    def barycenter(self):
        if self._bary is None:
            self._bary = barycenter_converge(
                self.scenario.action, self.scenario.schedule, self.barycenter_tol
            )
        return self._bary

    def refined(self):
        """Affine-refined common fixed point, or the raw barycenter.

        The raw average carries O(gap) schedule truncation error; for affine
        generator families the common fixed point is a linear-algebra fact
        and the refinement removes that error.  Checks whose tolerances sit
        below the truncation error (attractive membership, sandwich ends)
        evaluate here; the fixed-point residual check stays on the raw
        average, since that is the point the averaging pipeline produced.
        """
        if self._refined == "unset":
            self._refined = refine_affine_fixed_point(
                self.scenario.action, self.barycenter().point
            )
        if self._refined is None:
            return self.barycenter().point, None
        return self._refined

    def probe(self):
        scenario = self.scenario
        if scenario.probe_point is not None:
            return scenario.probe_point
        return scenario.action.base_point


def _tail_details(result):
    tail = []
    previous = None
    for box, point in result.schedule_tail:
        gap = None if previous is None else float(np.linalg.norm(point - previous))
        entry = box.describe()
        entry.update({"point": point.tolist(), "gap": gap})
        tail.append(entry)
        previous = point
    return tail


def _check_barycenter(state: _RunState, params) -> list:
    scenario = state.scenario
    result = state.barycenter()
    largest = result.box
    bound = orbit_bound(scenario.action, largest.sides, largest.shift)
    half = tuple(max(1, side // 2) for side in largest.sides)
    bound_half = orbit_bound(scenario.action, half, largest.shift)
    if bound > 2.0 * bound_half + 1e-9:
        logger.warning(
            "scenario %s: orbit bound grew from %.6g (half box) to %.6g (full box); "
            "the bounded-orbit hypothesis looks violated",
            scenario.id, bound_half, bound,
        )
    entries = [
        _entry(
            "barycenter",
            result.cauchy_gap,
            state.barycenter_tol,
            PASS if result.converged else FAIL,
            details={
                "point": result.point,
                "box": result.box.describe(),
                "tail": _tail_details(result),
                "converged": result.converged,
                "orbit_bound": bound,
                "orbit_bound_half_box": bound_half,
            },
        )
    ]
    if params.get("expect") is not None:
        expect = np.asarray(params["expect"], dtype=float)
        expect_tol = params.get("expect_tol") or params["tol"]
        distance = float(np.linalg.norm(result.point - expect))
        entries.append(
            _entry(
                "barycenter_location",
                distance,
                expect_tol,
                _verdict(distance, expect_tol),
                details={"expected": expect, "point": result.point},
            )
        )
    return entries


def _check_minimizer_identity(state: _RunState, params) -> list:
    scenario = state.scenario
    probe = state.probe()
    per_box = []
    worst = 0.0
    for box in scenario.schedule.boxes:
        residual = minimizer_identity_residual(
            scenario.generator, scenario.action, box, probe
        )
        scale = minimizer_identity_scale(scenario.generator, scenario.action, box, probe)
        normalized = residual / (1.0 + scale)
        worst = max(worst, normalized)
        record = box.describe()
        record.update({"residual": residual, "scale": scale})
        per_box.append(record)
    return [
        _entry(
            "minimizer_identity",
            worst,
            params["tol_scale"],
            _verdict(worst, params["tol_scale"]),
            details={
                "probe": probe,
                "per_box": per_box,
                "note": "residual / (1 + scale), every schedule box",
            },
        )
    ]


def _check_in_set(state: _RunState, params) -> list:
    scenario = state.scenario
    if not scenario.generator.strongly_coercive:
        return [
            _entry(
                "in_set", None, params["tol"], NOT_EVALUATED,
                details={"reason": "projection undefined: generator is not strongly coercive"},
            )
        ]
    box = state.barycenter().box
    try:
        residual = barycenter_in_set(
            scenario.generator, scenario.action, box, tol=params["projection_tol"]
        )
    except BregmanLabError as exc:
        return [
            _entry(
                "in_set", None, params["tol"], FAIL,
                details={"error": str(exc), "box": box.describe()},
            )
        ]
    return [
        _entry(
            "in_set", residual, params["tol"], _verdict(residual, params["tol"]),
            details={"box": box.describe(), "set_convex": scenario.set.convex},
        )
    ]


def _check_fixed_point(state: _RunState, params) -> list:
    z = state.barycenter().point
    report = verify_fixed_point(state.scenario.action, z, params["tol"])
    return [
        _entry(
            "fixed_point", report.residual, params["tol"],
            PASS if report.passed else FAIL,
            details={
                "point": z,
                "per_generator": list(report.per_generator),
                "note": "generators suffice: every element is a finite composition of them",
            },
        )
    ]


def _check_attractive(state: _RunState, params) -> list:
    scenario = state.scenario
    z, refine_residual = state.refined()
    report = attractive_membership(
        scenario.generator, scenario.action, z,
        sample_count=params["samples"],
        seed=derive_seed(scenario.seed, "attractive"),
        tol=params["tol"],
        element_side=params["element_side"],
    )
    return [
        _entry(
            "attractive", report.max_violation, params["tol"],
            PASS if report.passed else FAIL,
            witness=report.witness,
            details={
                "point": z,
                "refined": refine_residual is not None,
                "refine_residual": refine_residual,
                "samples": report.samples,
            },
        )
    ]


def _check_sandwich(state: _RunState, params) -> list:
    scenario = state.scenario
    z, refine_residual = state.refined()
    result = sup_inf_sandwich(scenario.generator, scenario.action, z, side=params["side"])
    details = {
        "lower_sup_inf": result.lower,
        "mean_estimate": result.mean_estimate,
        "box_mean": result.box_mean,
        "upper_inf_sup": result.upper,
        "equality_gap": result.equality_gap,
        "side": result.side,
        "extrapolated_mean": result.extrapolated,
        "point": z,
        "refined": refine_residual is not None,
        "note": "box truncations of semigroup sup/inf; one-sided evidence only",
    }
    entries = [
        _entry(
            "sandwich", result.ordering_violation, params["tol"],
            _verdict(result.ordering_violation, params["tol"]),
            details=details,
        )
    ]
    if params["expect_equality"]:
        entries.append(
            _entry(
                "sandwich_equality", result.equality_gap, params["eq_tol"],
                _verdict(result.equality_gap, params["eq_tol"]),
                details={"lower_sup_inf": result.lower, "upper_inf_sup": result.upper},
            )
        )
    return entries


def _check_independence(state: _RunState, params) -> list:
    scenario = state.scenario
    result = mean_independence(
        scenario.action,
        scenario.schedule,
        tuple(params["shift"]),
        tol=params["tol"],
        converge_tol=params["converge_tol"],
        max_size=params["max_size"],
    )
    return [
        _entry(
            "independence", result.difference, params["tol"],
            PASS if result.passed else FAIL,
            details={
                "plain_point": result.plain_point,
                "shifted_point": result.shifted_point,
                "shift": list(params["shift"]),
                "plain_converged": result.plain_converged,
                "shifted_converged": result.shifted_converged,
                "max_size": params["max_size"],
            },
        )
    ]


def _check_projection_limit(state: _RunState, params) -> list:
    scenario = state.scenario
    if scenario.generator.name != "sq_norm":
        return [
            _entry(
                "projection_limit", None, params["tol"], NOT_EVALUATED,
                details={
                    "reason": "affine halfspace model needs the squared-norm "
                    "generator (symmetric divergence)"
                },
            )
        ]
    z, _ = state.refined()
    try:
        result = attractive_projection_limit(
            scenario.generator, scenario.action, z,
            constraint_samples=params["samples"],
            seed=derive_seed(scenario.seed, "projection_limit"),
            t_max=params["t_max"],
            tol=params["tol"],
            element_side=params["element_side"],
        )
    except BregmanLabError as exc:
        return [
            _entry(
                "projection_limit", None, params["tol"], FAIL,
                details={"error": str(exc)},
            )
        ]
    return [
        _entry(
            "projection_limit", result.max_beyond_midpoint, params["tol"],
            PASS if result.passed else FAIL,
            details={
                "distances": list(result.distances),
                "elements": [list(e) for e in result.elements],
                "midpoint": result.midpoint,
                "constraint_count": result.constraint_count,
                "point": z,
            },
        )
    ]


def _check_asymptotic(state: _RunState, params) -> list:
    scenario = state.scenario
    z, refine_residual = state.refined()
    y = z
    if not (scenario.generator.domain_contains(y) and scenario.set.contains(y, tol=1e-6)):
        y = scenario.action.base_point
    witness = asymptotic_defect(
        scenario.generator, scenario.action, y,
        epsilon=params["epsilon"],
        search_side=params["search_side"],
        sample_count=params["samples"],
        seed=derive_seed(scenario.seed, "asymptotic"),
        element_side=params["element_side"],
    )
    if witness.found:
        return [
            _entry(
                "asymptotic", witness.defect, params["epsilon"], PASS,
                witness={"element": list(witness.element)},
                details={"y": y, "search_side": params["search_side"]},
            )
        ]
    return [
        _entry(
            "asymptotic", witness.best_defect, params["epsilon"], FAIL,
            witness={"best_element": list(witness.best_element) if witness.best_element else None},
            details={
                "y": y,
                "search_side": params["search_side"],
                "note": "no witness in the search box: false hypothesis or box too small",
            },
        )
    ]


def _check_diagnostics(state: _RunState, params) -> list:
    scenario = state.scenario
    result = orbit_diagnostics(
        scenario.action,
        tuple(params["sides"]),
        epsilon=params["epsilon"],
        g=scenario.generator,
        sample_count=params["samples"],
        seed=derive_seed(scenario.seed, "diagnostics"),
    )
    tol = 1e-8
    return [
        _entry(
            "diagnostics", result.nonexpansive_violation, tol,
            _verdict(result.nonexpansive_violation, tol),
            witness=result.witness,
            details={
                "epsilon": result.epsilon,
                "epsilon_net_size": result.epsilon_net_size,
                "lipschitz": result.lipschitz,
                "orbit_points": result.orbit_points,
                "note": "hypothesis satisfied/violated on the truncated orbit; "
                "not a membership proof",
            },
        )
    ]


_CHECK_RUNNERS = {
    "barycenter": _check_barycenter,
    "minimizer_identity": _check_minimizer_identity,
    "in_set": _check_in_set,
    "fixed_point": _check_fixed_point,
    "attractive": _check_attractive,
    "sandwich": _check_sandwich,
    "independence": _check_independence,
    "projection_limit": _check_projection_limit,
    "asymptotic": _check_asymptotic,
    "diagnostics": _check_diagnostics,
}


def _command_distance(state: _RunState) -> list:
    scenario = state.scenario
    g = scenario.generator
    x = state.probe()
    y = scenario.action.base_point
    anchor = scenario.set.anchor
    z = anchor if g.domain_contains(anchor) else y
    forward = bregman_distance(g, x, y)
    reverse = bregman_distance(g, y, x)
    residual = abs(three_point_residual(g, x, y, z))
    scale = max(abs(forward), abs(reverse), 1.0)
    tp_tol = 1e-10 * (1.0 + scale)
    entries = [
        _entry("distance_forward", forward, None, INFO,
               details={"x": x, "y": y}),
        _entry("distance_reverse", reverse, None, INFO,
               details={"x": y, "y": x}),
        _entry("three_point", residual, tp_tol, _verdict(residual, tp_tol),
               details={"x": x, "y": y, "z": z}),
    ]
    try:
        gap = gradient_check(g, y, step=1e-6)
        entries.append(
            _entry("gradient_check", gap, 1e-6, _verdict(gap, 1e-6),
                   details={"point": y, "step": 1e-6})
        )
    except BregmanLabError as exc:
        entries.append(
            _entry("gradient_check", None, 1e-6, NOT_EVALUATED,
                   details={"error": str(exc)})
        )
    return entries


def _command_project(state: _RunState) -> list:
    scenario = state.scenario
    g = scenario.generator
    if not g.strongly_coercive:
        return [
            _entry("project", None, None, NOT_EVALUATED,
                   details={"reason": "generator is not strongly coercive"})
        ]
    x = state.probe()
    try:
        result = bregman_project(g, scenario.set, x, tol=1e-9)
    except BregmanLabError as exc:
        return [_entry("project", None, None, FAIL, details={"error": str(exc)})]
    moved = float(np.linalg.norm(result.point - np.asarray(x, dtype=float)))
    entries = [
        _entry("project", moved, None, INFO,
               details={"x": x, "point": result.point,
                        "iterations": result.iterations}),
    ]
    certificate = projection_certificate(
        g, scenario.set, x, result.point,
        sample_count=scenario.samples,
        seed=derive_seed(scenario.seed, "certificate"),
    )
    entries.append(
        _entry("projection_certificate", certificate, 1e-6,
               _verdict(certificate, 1e-6),
               details={"samples": scenario.samples})
    )
    vi = variational_inequality(
        g, scenario.set, x, result.point,
        sample_count=scenario.samples,
        seed=derive_seed(scenario.seed, "variational"),
    )
    violation = max(0.0, -vi)
    entries.append(
        _entry("variational_inequality", violation, 1e-9,
               _verdict(violation, 1e-9),
               details={"min_inner_product": vi, "samples": scenario.samples})
    )
    return entries


def _command_classify(state: _RunState) -> list:
    scenario = state.scenario
    spec = scenario.classify
    g = scenario.generator
    action = scenario.action
    common = dict(
        sample_count=spec["samples"],
        seed=spec["seed"],
        tol=spec["tol"],
        element_side=spec["element_side"],
        pairs=spec["pairs"],
        elements=spec["elements"],
    )
    entries = []
    for kind in spec["types"]:
        if kind == "nonexpansive":
            report = check_nonexpansive(g, action, **common)
            details = {}
        elif kind == "nonspreading":
            report = check_nonspreading(g, action, **common)
            details = {}
        else:
            report = check_generalized_hybrid(
                g, action, spec["alpha"], spec["beta"], **common
            )
            details = {"alpha": spec["alpha"], "beta": spec["beta"]}
        details["samples"] = report.samples
        details["note"] = "sampled evidence with max-violation witness, not a proof"
        entries.append(
            _entry(
                f"classify_{kind}", report.max_violation, report.tol,
                PASS if report.passed else FAIL,
                witness=report.witness,
                details=details,
            )
        )
    return entries


def _run_checks(state: _RunState, checks) -> list:
    entries = []
    for check in checks:
        runner = _CHECK_RUNNERS[check["check"]]
        started = time.perf_counter()
        produced = runner(state, check)
        elapsed = time.perf_counter() - started
        for entry in produced:
            entry["runtime_seconds"] = elapsed / len(produced)
        entries.extend(produced)
    return entries


def _skipped_entries(checks, reason) -> list:
    return [
        _entry(check["check"], None, None, SKIPPED, details={"reason": reason})
        for check in checks
    ]


def run(scenario: Scenario, command: str) -> dict:
    """Execute one command against a scenario and assemble the report."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command '{command}'; known: {', '.join(COMMANDS)}")
    started = time.perf_counter()
    state = _RunState(scenario)
    try:
        if command == "distance":
            checks = _timed_block(_command_distance, state)
        elif command == "project":
            checks = _timed_block(_command_project, state)
        elif command == "classify":
            checks = _timed_block(_command_classify, state)
        elif command == "barycenter":
            checks = _run_checks(state, [_barycenter_check(scenario)])
        elif command == "verify":
            checks = _run_checks(state, scenario.checks)
        else:  # all
            checks = _timed_block(_command_classify, state)
            failed = [c for c in checks if c["verdict"] == FAIL]
            remaining = list(scenario.checks)
            if not any(c["check"] == "barycenter" for c in remaining):
                remaining.insert(0, _barycenter_check(scenario))
            if failed:
                reason = (
                    "classification failed: "
                    + ", ".join(sorted(c["check"] for c in failed))
                )
                checks.extend(_skipped_entries(remaining, reason))
            else:
                checks.extend(_run_checks(state, remaining))
    except BregmanLabError as exc:
        raise type(exc)(f"scenario '{scenario.id}' ({command}): {exc}") from exc
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "scenario_id": scenario.id,
        "origin": scenario.origin,
        "command": command,
        "seed": scenario.seed,
        "defaults_applied": list(scenario.defaults_applied),
        "checks": checks,
        "warnings": scenario.action.warnings.as_dict(),
        "runtime_seconds": time.perf_counter() - started,
    }
    return report


def _barycenter_check(scenario: Scenario) -> dict:
    for check in scenario.checks:
        if check["check"] == "barycenter":
            return check
    return {"check": "barycenter", "tol": scenario.tol, "expect": None,
            "expect_tol": None, "expect_verdict": "PASS"}


def _timed_block(fn, state) -> list:
    started = time.perf_counter()
    entries = fn(state)
    elapsed = time.perf_counter() - started
    for entry in entries:
        entry["runtime_seconds"] = elapsed / max(1, len(entries))
    return entries


def exit_code(report: dict) -> int:
    """0 when no check failed, 1 otherwise (parse/numeric errors exit earlier)."""
    return 1 if any(c["verdict"] == FAIL for c in report["checks"]) else 0


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def canonical_json(report: dict) -> str:
    """Report JSON with wall-clock fields removed, for bitwise comparison."""

    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in obj.items() if k not in _RUNTIME_FIELDS}
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj

    return json.dumps(strip(report), sort_keys=True, indent=2) + "\n"


def barycenter_tail_csv(report: dict) -> str:
    """CSV of the barycenter tail: N, the coordinates, and the Cauchy gap."""
    for check in report["checks"]:
        if check["check"] == "barycenter" and check["details"].get("tail"):
            tail = check["details"]["tail"]
            width = len(tail[0]["point"])
            header = ["N"] + [f"z{i}" for i in range(width)] + ["gap"]
            lines = [",".join(header)]
            for item in tail:
                n = max(item["sides"])
                gap = "" if item["gap"] is None else repr(item["gap"])
                lines.append(
                    ",".join([str(n)] + [repr(v) for v in item["point"]] + [gap])
                )
            return "\n".join(lines) + "\n"
    raise ValueError("report contains no barycenter tail to export")
