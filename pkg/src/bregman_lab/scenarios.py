"""Scenario files: JSON descriptions of a full verification setup.

A scenario names a generator, a convex set, a semigroup action with an
optional classification block, a box schedule, and a list of checks with
tolerances.  Loading validates the whole document and reports *every*
problem found, not just the first; missing optional fields are filled with
defaults and the filled names are recorded so reports can disclose them.

Bundled scenarios live in the ``scenarios/`` package directory and can be
referenced by bare name (``rotation`` or ``rotation.json``) anywhere a path
is accepted.
"""

import json
import numbers
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .actions import GENERATOR_MAP_KINDS, ActionSpec, make_action, validate_action
from .errors import BregmanLabError, ScenarioParseError, ScenarioValidationError
from .generators import GENERATOR_NAMES, BregmanGenerator, make_generator
from .means import SCHEDULE_KINDS, FolnerSchedule, make_schedule
from .numerics import derive_rng, derive_seed
from .sets import SET_NAMES, ConvexSet, make_set

DEFAULT_TOL = 1e-8
DEFAULT_SAMPLES = 1000

CLASSIFY_TYPES = ("nonexpansive", "nonspreading", "hybrid")

CHECK_NAMES = (
    "barycenter",
    "minimizer_identity",
    "in_set",
    "fixed_point",
    "attractive",
    "sandwich",
    "independence",
    "projection_limit",
    "asymptotic",
    "diagnostics",
)

# Per-check optional parameters and their defaults; ``None`` means "filled
# from scenario-level fields at load time" and stays None when inapplicable.
_CHECK_DEFAULTS = {
    "barycenter": {"tol": None, "expect": None, "expect_tol": None},
    "minimizer_identity": {"tol_scale": 1e-10},
    "in_set": {"tol": 1e-6, "projection_tol": 1e-9},
    "fixed_point": {"tol": 1e-4},
    "attractive": {"tol": None, "samples": None, "element_side": 6},
    "sandwich": {"side": 20, "tol": None, "expect_equality": False, "eq_tol": 1e-3},
    "independence": {"shift": None, "max_size": None, "tol": 1e-3, "converge_tol": None},
    "projection_limit": {"samples": None, "t_max": 20, "tol": 1e-3, "element_side": 6},
    "asymptotic": {"epsilon": 0.1, "search_side": 4, "samples": 64, "element_side": 6},
    "diagnostics": {"epsilon": 0.1, "sides": None, "samples": 200},
}


@dataclass(frozen=True)
class Scenario:
    """A validated scenario with all components constructed."""

    id: str
    seed: int
    generator: BregmanGenerator
    set: ConvexSet
    action: ActionSpec
    classify: dict
    schedule: FolnerSchedule
    checks: tuple
    tol: float
    samples: int
    probe_point: Optional[np.ndarray]
    defaults_applied: tuple
    origin: str
    raw: dict


def bundled_scenario_names() -> tuple:
    """Names of the scenario files shipped inside the package."""
    root = resources.files("bregman_lab") / "scenarios"
    return tuple(sorted(p.name for p in root.iterdir() if p.name.endswith(".json")))


def _read_source(source: str):
    path = Path(source)
    if path.is_file():
        try:
            return path.read_text(encoding="utf-8"), str(path)
        except OSError as exc:
            raise ScenarioParseError(f"'{source}' could not be read: {exc}") from exc
    name = source if source.endswith(".json") else source + ".json"
    candidate = resources.files("bregman_lab") / "scenarios" / name
    if candidate.is_file():
        return candidate.read_text(encoding="utf-8"), f"bundled:{name}"
    raise ScenarioParseError(
        f"'{source}' is neither a readable file nor a bundled scenario "
        f"(bundled: {', '.join(bundled_scenario_names())})"
    )


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_vector(value, length=None) -> bool:
    if not isinstance(value, list) or not all(_is_number(v) for v in value):
        return False
    return length is None or len(value) == length


class _Validator:
    """Collects every problem before raising, so authors fix files once."""

    def __init__(self, data: dict):
        self.data = data
        self.problems = []

    def flag(self, message: str) -> None:
        self.problems.append(message)

    def field(self, key, default=None):
        return self.data.get(key, default)

    def require_string(self, key) -> Optional[str]:
        value = self.data.get(key)
        if not isinstance(value, str) or not value:
            self.flag(f"'{key}' must be a nonempty string")
            return None
        return value

    def optional_number(self, key, default, positive=True):
        if key not in self.data:
            return default, True
        value = self.data[key]
        if not _is_number(value) or (positive and value <= 0):
            self.flag(f"'{key}' must be a positive number")
            return default, True
        return float(value), False

    def optional_int(self, key, default, minimum=0):
        if key not in self.data:
            return default, True
        value = self.data[key]
        if not _is_int(value) or value < minimum:
            self.flag(f"'{key}' must be an integer >= {minimum}")
            return default, True
        return value, False


def _normalize_classify(raw, scenario_tol, scenario_samples, scenario_seed, k, flag):
    classify = {
        "types": list(CLASSIFY_TYPES),
        "alpha": 1.0,
        "beta": 0.0,
        "samples": scenario_samples,
        "seed": derive_seed(scenario_seed, "classify"),
        "tol": scenario_tol,
        "element_side": 6,
        "pairs": None,
        "elements": None,
    }
    if raw is None:
        return classify
    if not isinstance(raw, dict):
        flag("'action.classify' must be an object")
        return classify
    types = raw.get("types", classify["types"])
    if not isinstance(types, list) or not all(t in CLASSIFY_TYPES for t in types):
        flag(f"'action.classify.types' entries must be among {CLASSIFY_TYPES}")
    else:
        classify["types"] = list(types)
    for key in ("alpha", "beta", "tol"):
        if key in raw:
            if _is_number(raw[key]):
                classify[key] = float(raw[key])
            else:
                flag(f"'action.classify.{key}' must be a number")
    for key, minimum in (("samples", 1), ("seed", 0), ("element_side", 1)):
        if key in raw:
            if _is_int(raw[key]) and raw[key] >= minimum:
                classify[key] = raw[key]
            else:
                flag(f"'action.classify.{key}' must be an integer >= {minimum}")
    pairs = raw.get("pairs")
    if pairs is not None:
        ok = isinstance(pairs, list) and all(
            isinstance(p, list) and len(p) == 2 and _is_vector(p[0]) and _is_vector(p[1])
            for p in pairs
        )
        if ok:
            classify["pairs"] = [
                (np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float))
                for p in pairs
            ]
        else:
            flag("'action.classify.pairs' must be a list of [x, y] coordinate pairs")
    elements = raw.get("elements")
    if elements is not None:
        ok = isinstance(elements, list) and all(
            isinstance(e, list) and len(e) == k and all(_is_int(v) and v >= 0 for v in e)
            for e in elements
        )
        if ok:
            classify["elements"] = [tuple(e) for e in elements]
        else:
            flag(f"'action.classify.elements' must be a list of length-{k} index lists")
    return classify


def _normalize_checks(raw_checks, scenario, flag):
    """Fill per-check defaults; scenario-level tol/samples feed the Nones."""
    scenario_fill = {
        ("barycenter", "tol"): scenario["tol"],
        ("attractive", "tol"): scenario["tol"],
        ("attractive", "samples"): scenario["samples"],
        ("sandwich", "tol"): scenario["tol"],
        ("independence", "converge_tol"): scenario["tol"],
        ("projection_limit", "samples"): scenario["samples"],
    }
    checks = []
    for pos, entry in enumerate(raw_checks):
        if isinstance(entry, str):
            entry = {"check": entry}
        if not isinstance(entry, dict) or "check" not in entry:
            flag(f"checks[{pos}] must be a name or an object with a 'check' field")
            continue
        name = entry["check"]
        if name not in CHECK_NAMES:
            flag(f"checks[{pos}] names unknown check '{name}' (known: {', '.join(CHECK_NAMES)})")
            continue
        normalized = {"check": name}
        defaults = _CHECK_DEFAULTS[name]
        for key, default in defaults.items():
            value = entry.get(key, default)
            if value is None:
                value = scenario_fill.get((name, key))
            normalized[key] = value
        for key in entry:
            if key not in defaults and key not in ("check", "expect_verdict"):
                flag(f"checks[{pos}] ('{name}') has unknown parameter '{key}'")
        normalized["expect_verdict"] = entry.get("expect_verdict", "PASS")
        if normalized["expect_verdict"] not in ("PASS", "FAIL"):
            flag(f"checks[{pos}] 'expect_verdict' must be PASS or FAIL")
        checks.append(normalized)
    return checks


def scenario_from_dict(data, origin: str = "<dict>") -> Scenario:
    """Validate and construct a scenario from a parsed JSON document."""
    if not isinstance(data, dict):
        raise ScenarioValidationError(["top level must be a JSON object"])
    v = _Validator(data)
    defaults_applied = []

    scenario_id = v.require_string("id") or "<invalid>"
    seed, used_default = v.optional_int("seed", 0, minimum=0)
    if used_default:
        defaults_applied.append("seed")
    tol, used_default = v.optional_number("tol", DEFAULT_TOL)
    if used_default:
        defaults_applied.append("tol")
    samples, used_default = v.optional_int("samples", DEFAULT_SAMPLES, minimum=1)
    if used_default:
        defaults_applied.append("samples")

    gen_spec = v.field("generator")
    dimension = None
    gen_name = None
    if not isinstance(gen_spec, dict):
        v.flag("'generator' must be an object with 'name' and 'dimension'")
    else:
        gen_name = gen_spec.get("name")
        if gen_name not in GENERATOR_NAMES:
            v.flag(f"'generator.name' must be one of {GENERATOR_NAMES}, got {gen_name!r}")
        if _is_int(gen_spec.get("dimension")) and gen_spec["dimension"] >= 1:
            dimension = gen_spec["dimension"]
        else:
            v.flag("'generator.dimension' must be a positive integer")

    set_spec = v.field("set")
    if not isinstance(set_spec, dict) or set_spec.get("set") not in SET_NAMES:
        v.flag(f"'set' must be an object whose 'set' field is one of {SET_NAMES}")
        set_spec = None

    action_spec = v.field("action")
    base_point = None
    generator_specs = None
    if not isinstance(action_spec, dict):
        v.flag("'action' must be an object with 'generators' and 'base_point'")
        action_spec = {}
    else:
        generator_specs = action_spec.get("generators")
        if not isinstance(generator_specs, list) or not generator_specs:
            v.flag("'action.generators' must be a nonempty list")
            generator_specs = None
        elif not all(
            isinstance(s, dict) and s.get("kind") in GENERATOR_MAP_KINDS
            for s in generator_specs
        ):
            v.flag(f"every 'action.generators' entry needs a 'kind' among {GENERATOR_MAP_KINDS}")
            generator_specs = None
        raw_base = action_spec.get("base_point")
        if _is_vector(raw_base, dimension):
            base_point = np.asarray(raw_base, dtype=float)
        else:
            v.flag(
                "'action.base_point' must be a coordinate list matching "
                "'generator.dimension'"
            )

    folner_spec = v.field("folner")
    if not isinstance(folner_spec, dict) or folner_spec.get("kind") not in SCHEDULE_KINDS:
        v.flag(f"'folner' must be an object whose 'kind' is one of {SCHEDULE_KINDS}")
        folner_spec = None

    raw_checks = v.field("checks", [])
    if raw_checks == []:
        if "checks" not in data:
            defaults_applied.append("checks")
    elif not isinstance(raw_checks, list):
        v.flag("'checks' must be a list")
        raw_checks = []

    probe_point = None
    if "probe_point" in data:
        if _is_vector(data["probe_point"], dimension):
            probe_point = np.asarray(data["probe_point"], dtype=float)
        else:
            v.flag("'probe_point' must be a coordinate list matching the dimension")

    known_keys = {
        "id", "seed", "tol", "samples", "generator", "set", "action",
        "folner", "checks", "probe_point", "comment",
    }
    for key in data:
        if key not in known_keys:
            v.flag(f"unknown top-level field '{key}'")

    if v.problems:
        raise ScenarioValidationError(v.problems)

    # Construction phase: factories enforce the deeper shape rules; their
    # complaints become validation problems too.
    generator = None
    convex_set = None
    action = None
    schedule = None
    try:
        generator = make_generator(gen_name, dimension)
    except (BregmanLabError, ValueError) as exc:
        v.flag(f"generator: {exc}")
    try:
        convex_set = make_set(set_spec, dimension=dimension)
    except (BregmanLabError, ValueError) as exc:
        v.flag(f"set: {exc}")
    if convex_set is not None and base_point is not None and generator_specs is not None:
        try:
            action = make_action(generator_specs, convex_set, base_point)
        except (BregmanLabError, ValueError) as exc:
            v.flag(f"action: {exc}")
    if folner_spec is not None and action is not None:
        try:
            schedule = make_schedule(folner_spec, action.k)
        except (BregmanLabError, ValueError) as exc:
            v.flag(f"folner: {exc}")

    if v.problems:
        raise ScenarioValidationError(v.problems)

    for problem in validate_action(action, seed=derive_seed(seed, "validate")):
        v.flag(f"action: {problem}")

    rng = derive_rng(seed, "domain")
    outside = 0
    for _ in range(32):
        if not generator.domain_contains(convex_set.sample(rng)):
            outside += 1
    if outside:
        v.flag(
            f"set: {outside}/32 sampled points fall outside the domain of "
            f"'{generator.name}' ({generator.domain_description}); scenario sets "
            "must sit inside the generator's domain"
        )
    if not generator.domain_contains(base_point):
        v.flag("'action.base_point' is outside the generator's domain")
    if probe_point is not None and not generator.domain_contains(probe_point):
        v.flag("'probe_point' is outside the generator's domain")

    if v.problems:
        raise ScenarioValidationError(v.problems)

    scenario_fields = {"tol": tol, "samples": samples}
    classify = _normalize_classify(
        action_spec.get("classify"), tol, samples, seed, action.k, v.flag
    )
    if "classify" not in action_spec:
        defaults_applied.append("classify")
    checks = _normalize_checks(raw_checks, scenario_fields, v.flag)

    for pos, check in enumerate(checks):
        if check["check"] == "independence":
            if check["shift"] is None:
                check["shift"] = [1] * action.k
                defaults_applied.append(f"checks[{pos}].shift")
            elif not (
                isinstance(check["shift"], list)
                and len(check["shift"]) == action.k
                and all(_is_int(s) and s >= 0 for s in check["shift"])
            ):
                v.flag(f"checks[{pos}] 'shift' must be a length-{action.k} index list")
        if check["check"] == "diagnostics":
            if check["sides"] is None:
                largest = schedule.largest()
                check["sides"] = [min(side, 100) for side in largest.sides]
                defaults_applied.append(f"checks[{pos}].sides")
            elif not (
                isinstance(check["sides"], list)
                and len(check["sides"]) == action.k
                and all(_is_int(s) and s >= 1 for s in check["sides"])
            ):
                v.flag(f"checks[{pos}] 'sides' must be a length-{action.k} side list")

    if v.problems:
        raise ScenarioValidationError(v.problems)

    return Scenario(
        id=scenario_id,
        seed=seed,
        generator=generator,
        set=convex_set,
        action=action,
        classify=classify,
        schedule=schedule,
        checks=tuple(checks),
        tol=tol,
        samples=samples,
        probe_point=probe_point,
        defaults_applied=tuple(defaults_applied),
        origin=origin,
        raw=data,
    )


def apply_overrides(data: dict, seed=None, tol=None, samples=None,
                    folner_max=None) -> dict:
    """Fold command-line overrides into a raw scenario document.

    Overrides are applied before validation so derived seeds and filled
    defaults stay consistent with what actually runs.  ``folner_max`` drops
    schedule entries whose largest side exceeds the cap (always keeping the
    first entry so the schedule stays nonempty).
    """
    if not isinstance(data, dict):
        return data
    out = json.loads(json.dumps(data))
    if seed is not None:
        out["seed"] = seed
    if tol is not None:
        out["tol"] = tol
    if samples is not None:
        out["samples"] = samples
    if folner_max is not None and isinstance(out.get("folner"), dict):
        folner = out["folner"]
        if isinstance(folner.get("sizes"), list):
            kept = [s for s in folner["sizes"] if _is_int(s) and s <= folner_max]
            folner["sizes"] = kept or folner["sizes"][:1]
        if isinstance(folner.get("entries"), list):
            kept = [
                e for e in folner["entries"]
                if isinstance(e, dict) and _is_vector(e.get("sides"))
                and max(e["sides"]) <= folner_max
            ]
            folner["entries"] = kept or folner["entries"][:1]
    return out


def load_scenario(source: str, *, seed=None, tol=None, samples=None,
                  folner_max=None) -> Scenario:
    """Load a scenario from a path or bundled name; validate exhaustively."""
    text, origin = _read_source(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{origin}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    data = apply_overrides(data, seed=seed, tol=tol, samples=samples,
                           folner_max=folner_max)
    try:
        return scenario_from_dict(data, origin=origin)
    except ScenarioValidationError as exc:
        raise ScenarioValidationError(exc.problems, origin=origin) from exc
