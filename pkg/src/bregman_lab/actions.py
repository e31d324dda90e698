"""Finitely generated commutative semigroup actions on convex sets.

An action is a list of pairwise-commuting maps of a convex set into itself;
semigroup elements are multi-indices of nonnegative exponents, and the
element (s_1, ..., s_k) acts by applying map 0 s_1 times, then map 1 s_2
times, and so on (the order is immaterial up to rounding because the maps
commute, but fixing it makes orbit enumeration bitwise reproducible).
Orbits over exponent boxes are enumerated once per box and cached.

The module also classifies actions against the divergence inequalities that
the fixed-point machinery assumes: plain nonexpansiveness, the two-sided
"nonspreading" bound, the two-parameter hybrid family, and the asymptotic
variant that only requires some element to damp expansion.  All of these
quantify over infinite sets, so the checks are seeded Monte Carlo searches
for violations: a PASS is evidence with a reproducible witness, never proof.
"""

import itertools
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError
from .generators import BregmanGenerator, bregman_distance
from .numerics import WarningCounters, fsum_dot, indexed_map, spawn_rngs
from .sets import ConvexSet

GENERATOR_MAP_KINDS = ("affine", "rotation", "scaling", "composed")

# Numeric drift beyond this violation triggers re-projection onto the set,
# visibly counted; genuine modeling errors surface as growing counters.
DRIFT_TOL = 1e-8
# Orbit chains batch their set-membership checks in spans of this length.
CHECK_SPAN = 1024


@dataclass(frozen=True)
class GeneratorMap:
    """One generating self-map of the scenario set.

    ``eval`` accepts a single point or an (m, n) stack of points and acts
    row-wise.  ``affine`` carries (A, b) with map(x) = A x + b when the map
    is affine, enabling exact fixed-point refinement downstream.
    """

    kind: str
    dimension: int
    eval: Callable[[np.ndarray], np.ndarray]
    affine: Optional[tuple] = None
    spec: dict = field(default_factory=dict)


def _affine_map(matrix: np.ndarray, offset: np.ndarray, kind: str, spec: dict) -> GeneratorMap:
    mt = matrix.T.copy()

    def apply(x):
        return np.asarray(x, dtype=float) @ mt + offset

    return GeneratorMap(
        kind=kind,
        dimension=matrix.shape[0],
        eval=apply,
        affine=(matrix, offset),
        spec=spec,
    )


def make_generator_map(spec: dict, dimension: int) -> GeneratorMap:
    """Build a generating map from its scenario-file description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("generator map description must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "rotation":
        if dimension != 2:
            raise DimensionMismatch("rotation maps act on 2-dimensional points")
        angle = float(spec["angle"])
        c, s = math.cos(angle), math.sin(angle)
        matrix = np.array([[c, -s], [s, c]])
        return _affine_map(matrix, np.zeros(2), "rotation", {"kind": "rotation", "angle": angle})
    if kind == "scaling":
        if "factor" in spec:
            factors = np.full(dimension, float(spec["factor"]))
        else:
            factors = np.asarray(spec["factors"], dtype=float)
            if factors.shape != (dimension,):
                raise DimensionMismatch("per-axis scaling needs one factor per coordinate")
        fac = factors.copy()

        def apply(x):
            return np.asarray(x, dtype=float) * fac

        return GeneratorMap(
            kind="scaling",
            dimension=dimension,
            eval=apply,
            affine=(np.diag(fac), np.zeros(dimension)),
            spec={"kind": "scaling", "factors": fac.tolist()},
        )
    if kind == "affine":
        matrix = np.asarray(spec["matrix"], dtype=float)
        offset = np.asarray(spec.get("offset", np.zeros(dimension)), dtype=float)
        if matrix.shape != (dimension, dimension) or offset.shape != (dimension,):
            raise DimensionMismatch(
                f"affine map needs a {dimension}x{dimension} matrix and {dimension}-vector offset"
            )
        return _affine_map(matrix, offset, "affine",
                           {"kind": "affine", "matrix": matrix.tolist(), "offset": offset.tolist()})
    if kind == "composed":
        parts = [make_generator_map(part, dimension) for part in spec["maps"]]
        if not parts:
            raise ValueError("composed maps need at least one component")

        def apply(x):
            out = np.asarray(x, dtype=float)
            for part in parts:
                out = part.eval(out)
            return out

        affine = None
        if all(part.affine is not None for part in parts):
            matrix = np.eye(dimension)
            offset = np.zeros(dimension)
            for part in parts:
                a, b = part.affine
                matrix = a @ matrix
                offset = a @ offset + b
            affine = (matrix, offset)
        return GeneratorMap(
            kind="composed",
            dimension=dimension,
            eval=apply,
            affine=affine,
            spec={"kind": "composed", "maps": [part.spec for part in parts]},
        )
    raise ValueError(f"unknown map kind '{kind}'; known: {', '.join(GENERATOR_MAP_KINDS)}")


class ActionSpec:
    """A commuting family of set self-maps with a base point and orbit cache."""

    def __init__(self, generators, C: ConvexSet, base_point):
        self.generators = tuple(generators)
        self.set = C
        self.base_point = np.asarray(base_point, dtype=float)
        if self.base_point.shape != (C.dimension,):
            raise DimensionMismatch(
                f"base point has shape {self.base_point.shape}, set is {C.dimension}-dimensional"
            )
        for gen in self.generators:
            if gen.dimension != C.dimension:
                raise DimensionMismatch("generator map dimension differs from the set's")
        self.warnings = WarningCounters()
        self._orbit_cache = {}
        self._cache_lock = threading.Lock()

    @property
    def k(self) -> int:
        return len(self.generators)

    def check_element(self, s) -> tuple:
        elem = tuple(int(v) for v in np.atleast_1d(np.asarray(s, dtype=int)))
        if len(elem) != self.k or any(v < 0 for v in elem):
            raise ValueError(
                f"semigroup elements are {self.k}-tuples of nonnegative integers, got {s!r}"
            )
        return elem

    def orbit(self, sides, shift=None) -> np.ndarray:
        """Cached orbit over the exponent box prod_i {0..sides[i]}.

        Entries are ordered with the last axis fastest, matching
        ``np.ravel_multi_index``; row s equals ``apply_element(self, s, base)``
        up to bitwise identity.  For single-generator actions a cached longer
        chain serves shorter requests by prefix slicing.
        """
        sides_t = tuple(int(v) for v in sides)
        shift_t = self.check_element(shift) if shift is not None else (0,) * self.k
        key = (shift_t, sides_t)
        with self._cache_lock:
            cached = self._orbit_cache.get(key)
            if cached is not None:
                return cached
            if self.k == 1:
                for (c_shift, c_sides), arr in self._orbit_cache.items():
                    if c_shift == shift_t and c_sides[0] >= sides_t[0]:
                        return arr[: sides_t[0] + 1]
        fresh = orbit_array(self, sides_t, shift=shift_t)
        fresh.setflags(write=False)
        with self._cache_lock:
            self._orbit_cache.setdefault(key, fresh)
            return self._orbit_cache[key]


def make_action(generator_specs, C: ConvexSet, base_point) -> ActionSpec:
    gens = [make_generator_map(spec, C.dimension) for spec in generator_specs]
    return ActionSpec(gens, C, base_point)


def apply_element(action: ActionSpec, s, x) -> np.ndarray:
    """Apply the semigroup element s to a set point, fixing numeric drift.

    Results that leave the set beyond ``DRIFT_TOL`` are projected back and
    counted; the counter appearing in reports is the honesty check that the
    maps really do send the set into itself.
    """
    elem = action.check_element(s)
    point = np.asarray(x, dtype=float)
    for gen, power in zip(action.generators, elem):
        for _ in range(power):
            point = np.asarray(gen.eval(point), dtype=float)
            violation = action.set.violation(point)
            if violation > DRIFT_TOL:
                point = np.asarray(action.set.euclid_project(point), dtype=float)
                action.warnings.increment(
                    "drift_reprojections",
                    f"{gen.kind} map drifted {violation:.3e} outside '{action.set.name}'",
                )
    return point


def _chain_axis(action: ActionSpec, gen: GeneratorMap, block: np.ndarray) -> None:
    """Fill block[:, e, :] = gen applied e times to block[:, 0, :], with drift fixes."""
    side = block.shape[1] - 1
    n = block.shape[2]
    e = 1
    while e <= side:
        stop = min(side, e + CHECK_SPAN - 1)
        current = block[:, e - 1, :]
        for j in range(e, stop + 1):
            current = np.asarray(gen.eval(current), dtype=float)
            block[:, j, :] = current
        span = block[:, e : stop + 1, :].reshape(-1, n)
        if float(np.max(action.set.violation_many(span))) > DRIFT_TOL:
            # Redo the span stepwise so each drifting point is projected
            # before the next application, exactly as apply_element does.
            current = block[:, e - 1, :].copy()
            for j in range(e, stop + 1):
                current = np.asarray(gen.eval(current), dtype=float)
                violations = action.set.violation_many(current)
                for idx in np.flatnonzero(violations > DRIFT_TOL):
                    current[idx] = action.set.euclid_project(current[idx])
                    action.warnings.increment(
                        "drift_reprojections",
                        f"{gen.kind} map drifted {violations[idx]:.3e} outside "
                        f"'{action.set.name}' during orbit enumeration",
                    )
                block[:, j, :] = current
        e = stop + 1


def orbit_array(action: ActionSpec, sides, shift=None) -> np.ndarray:
    """Enumerate the orbit over an exponent box as an (m, n) array."""
    sides_t = tuple(int(v) for v in sides)
    if len(sides_t) != action.k or any(v < 0 for v in sides_t):
        raise ValueError(f"expected {action.k} nonnegative box sides, got {sides!r}")
    total = 1
    for side in sides_t:
        total *= side + 1
    if total > 20_000_000:
        raise ValueError(f"orbit box with {total} elements is beyond the desk-scale cap")
    base = action.base_point
    if shift is not None and any(shift):
        base = apply_element(action, shift, base)
    n = action.set.dimension
    arr = np.array(base, dtype=float).reshape(1, n)
    for gen, side in zip(action.generators, sides_t):
        block = np.empty((arr.shape[0], side + 1, n))
        block[:, 0, :] = arr
        if side:
            _chain_axis(action, gen, block)
        arr = block.reshape(-1, n)
    return arr


def orbit_bound(action: ActionSpec, sides, shift=None) -> float:
    """Max Euclidean norm over the orbit box; validates boundedness claims."""
    orbit = action.orbit(sides, shift=shift)
    return float(np.max(np.linalg.norm(orbit, axis=1)))


def validate_action(action: ActionSpec, seed: int = 0, samples: int = 32) -> list:
    """Spot-check the action's structural assumptions; return problem strings.

    Checks that the base point lies in the set, that sampled points stay in
    the set under every generating map, and that the maps commute pairwise.
    """
    problems = []
    C = action.set
    if C.violation(action.base_point) > 1e-6:
        problems.append("base_point is not in the set (violation "
                        f"{C.violation(action.base_point):.3e})")
    rngs = spawn_rngs(seed, samples)
    points = [C.sample(rng) for rng in rngs]
    for gi, gen in enumerate(action.generators):
        worst = max(float(C.violation(np.asarray(gen.eval(p), dtype=float)))
                    for p in points)
        if worst > 1e-6:
            problems.append(
                f"generator {gi} ({gen.kind}) maps sampled set points outside the set "
                f"(violation {worst:.3e})"
            )
    for gi, gj in itertools.combinations(range(action.k), 2):
        a, b = action.generators[gi], action.generators[gj]
        worst = 0.0
        for p in points:
            ab = np.asarray(a.eval(np.asarray(b.eval(p), dtype=float)), dtype=float)
            ba = np.asarray(b.eval(np.asarray(a.eval(p), dtype=float)), dtype=float)
            worst = max(worst, float(np.linalg.norm(ab - ba)))
        if worst > 1e-8:
            problems.append(
                f"generators {gi} and {gj} do not commute (defect {worst:.3e})"
            )
    return problems


# ---------------------------------------------------------------------------
# Classification of the divergence inequalities.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    """Max violation of one inequality over a seeded sample, with witness."""

    kind: str
    max_violation: float
    tol: float
    samples: int
    witness: dict

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def _unit_elements(k: int) -> list:
    return [tuple(1 if j == i else 0 for j in range(k)) for i in range(k)]


def _classification_scan(action: ActionSpec, violation_fn, kind: str,
                         sample_count: int, seed: int, tol: float,
                         element_side: int, pairs, elements) -> ClassificationReport:
    explicit = []
    if pairs:
        fixed_elements = [action.check_element(s) for s in elements] if elements \
            else _unit_elements(action.k)
        for x, y in pairs:
            xa = np.asarray(x, dtype=float)
            ya = np.asarray(y, dtype=float)
            for s in fixed_elements:
                explicit.append(violation_fn(xa, ya, s))
    rngs = spawn_rngs(seed, sample_count)

    def sampled(i):
        rng = rngs[i]
        x = action.set.sample(rng)
        y = action.set.sample(rng)
        s = tuple(int(v) for v in rng.integers(0, element_side + 1, size=action.k))
        return violation_fn(x, y, s)

    results = explicit + indexed_map(sampled, sample_count)
    value, witness = max(results, key=lambda item: item[0])
    return ClassificationReport(
        kind=kind,
        max_violation=float(value),
        tol=tol,
        samples=len(results),
        witness=witness,
    )


def check_nonexpansive(g: BregmanGenerator, action: ActionSpec, sample_count: int = 1000,
                       seed: int = 0, tol: float = 1e-8, element_side: int = 6,
                       pairs=None, elements=None) -> ClassificationReport:
    """Scan for violations of D(T_s x, T_s y) <= D(x, y)."""

    def violation(x, y, s):
        tx = apply_element(action, s, x)
        ty = apply_element(action, s, y)
        lhs = bregman_distance(g, tx, ty)
        rhs = bregman_distance(g, x, y)
        return lhs - rhs, {"x": x.tolist(), "y": y.tolist(), "s": list(s),
                           "lhs": lhs, "rhs": rhs}

    return _classification_scan(action, violation, "nonexpansive", sample_count,
                                seed, tol, element_side, pairs, elements)


def check_nonspreading(g: BregmanGenerator, action: ActionSpec, sample_count: int = 1000,
                       seed: int = 0, tol: float = 1e-8, element_side: int = 6,
                       pairs=None, elements=None) -> ClassificationReport:
    """Scan for violations of
    D(T_s x, T_s y) + D(T_s y, T_s x) <= D(T_s x, y) + D(T_s y, x)."""

    def violation(x, y, s):
        tx = apply_element(action, s, x)
        ty = apply_element(action, s, y)
        lhs = bregman_distance(g, tx, ty) + bregman_distance(g, ty, tx)
        rhs = bregman_distance(g, tx, y) + bregman_distance(g, ty, x)
        return lhs - rhs, {"x": x.tolist(), "y": y.tolist(), "s": list(s),
                           "lhs": lhs, "rhs": rhs}

    return _classification_scan(action, violation, "nonspreading", sample_count,
                                seed, tol, element_side, pairs, elements)


def check_generalized_hybrid(g: BregmanGenerator, action: ActionSpec, alpha: float,
                             beta: float, sample_count: int = 1000, seed: int = 0,
                             tol: float = 1e-8, element_side: int = 6,
                             pairs=None, elements=None) -> ClassificationReport:
    """Scan for violations of
    a D(T_s x, T_s y) + (1-a) D(x, T_s y) <= b D(T_s x, y) + (1-b) D(x, y)."""

    def violation(x, y, s):
        tx = apply_element(action, s, x)
        ty = apply_element(action, s, y)
        lhs = alpha * bregman_distance(g, tx, ty) + (1.0 - alpha) * bregman_distance(g, x, ty)
        rhs = beta * bregman_distance(g, tx, y) + (1.0 - beta) * bregman_distance(g, x, y)
        return lhs - rhs, {"x": x.tolist(), "y": y.tolist(), "s": list(s),
                           "lhs": lhs, "rhs": rhs, "alpha": alpha, "beta": beta}

    return _classification_scan(action, violation, "generalized_hybrid", sample_count,
                                seed, tol, element_side, pairs, elements)


@dataclass(frozen=True)
class AsymptoticWitness:
    """Search result for an element that damps expansion within epsilon."""

    found: bool
    element: Optional[tuple]
    defect: float
    epsilon: float
    best_element: tuple
    best_defect: float


def graded_lex_elements(k: int, side: int):
    """Multi-indices of the box {0..side}^k in graded lexicographic order."""
    return sorted(itertools.product(range(side + 1), repeat=k),
                  key=lambda s: (sum(s), s))


def asymptotic_defect(g: BregmanGenerator, action: ActionSpec, y, epsilon: float,
                      search_side: int = 4, sample_count: int = 64, seed: int = 0,
                      element_side: int = 6) -> AsymptoticWitness:
    """Search the exponent box for s_eps with
    max over sampled (s, x) of D(T_{s+s_eps} x, T_{s+s_eps} y) - D(x, y) <= eps.

    Returns the first witness in graded lexicographic order.  A failed search
    cannot distinguish a false hypothesis from too small a box; it is flagged
    and counted, never fatal.
    """
    ya = np.asarray(y, dtype=float)
    rngs = spawn_rngs(seed, sample_count)
    samples = []
    for rng in rngs:
        x = action.set.sample(rng)
        s = tuple(int(v) for v in rng.integers(0, element_side + 1, size=action.k))
        samples.append((x, s, bregman_distance(g, x, ya)))

    def defect_at(candidate):
        worst = -math.inf
        for x, s, base_dist in samples:
            total = tuple(a + b for a, b in zip(s, candidate))
            tx = apply_element(action, total, x)
            ty = apply_element(action, total, ya)
            worst = max(worst, bregman_distance(g, tx, ty) - base_dist)
        return worst

    best_element, best_defect = None, math.inf
    for candidate in graded_lex_elements(action.k, search_side):
        defect = defect_at(candidate)
        if defect < best_defect:
            best_element, best_defect = candidate, defect
        if defect <= epsilon:
            return AsymptoticWitness(True, candidate, float(defect), epsilon,
                                     candidate, float(defect))
    action.warnings.increment(
        "not_found_in_box",
        f"no damping element up to side {search_side} reached epsilon {epsilon:g} "
        f"(best defect {best_defect:.3e} at {best_element})",
    )
    return AsymptoticWitness(False, None, math.inf, epsilon,
                             best_element, float(best_defect))


# ---------------------------------------------------------------------------
# Coefficient functions on the semigroup.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientFunction:
    """A scalar function of semigroup elements built from the orbit.

    Kinds: ``linear`` evaluates <T_s c, datum>; ``dist_to`` evaluates
    D(T_s c, datum); ``dist_from`` evaluates D(datum, T_s c).  ``shift``
    realizes left translation exactly by index arithmetic.
    """

    kind: str
    action: ActionSpec
    datum: np.ndarray
    g: Optional[BregmanGenerator] = None
    shift: tuple = ()

    def __post_init__(self):
        if self.kind not in ("linear", "dist_to", "dist_from"):
            raise ValueError(f"unknown coefficient kind '{self.kind}'")
        if self.kind != "linear" and self.g is None:
            raise ValueError("distance coefficients need a generator")
        if not self.shift:
            object.__setattr__(self, "shift", (0,) * self.action.k)

    def eval(self, s) -> float:
        elem = self.action.check_element(s)
        total = tuple(a + b for a, b in zip(self.shift, elem))
        point = apply_element(self.action, total, self.action.base_point)
        if self.kind == "linear":
            return fsum_dot(point, self.datum)
        if self.kind == "dist_to":
            return bregman_distance(self.g, point, self.datum)
        return bregman_distance(self.g, self.datum, point)

    def eval_box(self, sides, extra_shift=None) -> np.ndarray:
        """Values over a whole exponent box, in enumeration order."""
        from .generators import bregman_distance_from_many, bregman_distance_many

        shift = self.shift
        if extra_shift is not None:
            extra = self.action.check_element(extra_shift)
            shift = tuple(a + b for a, b in zip(shift, extra))
        orbit = self.action.orbit(tuple(sides), shift=shift)
        if self.kind == "linear":
            return orbit @ self.datum
        if self.kind == "dist_to":
            return bregman_distance_many(self.g, orbit, self.datum)
        return bregman_distance_from_many(self.g, self.datum, orbit)


def eval_coefficient(fcn: CoefficientFunction, s) -> float:
    return fcn.eval(s)


def left_translate(fcn: CoefficientFunction, t) -> CoefficientFunction:
    """l_t f with (l_t f)(s) = f(t + s), exact by index arithmetic."""
    elem = fcn.action.check_element(t)
    new_shift = tuple(a + b for a, b in zip(fcn.shift, elem))
    return replace(fcn, shift=new_shift)
