"""Approximate invariant means by box averaging, and orbit barycenters.

Uniform averages over growing exponent boxes {0..N}^k stand in for an
invariant mean: their translation defect decays like the boundary-to-volume
ratio 2Mk/(N+1).  The barycenter of an orbit under such a mean is the plain
vector average of the orbit over the box, and it satisfies an exact algebraic
identity: averaging D(T_s c, x) minus averaging D(T_s c, z) equals D(z, x)
whenever z is the same average.  That identity uses only linearity, so it is
computed here with exactly rounded sums and must hold at machine precision
for every box size — it is the computational heart of why barycenters land
in the set and minimize the averaged divergence.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .actions import ActionSpec, CoefficientFunction
from .errors import DomainError, EmptySet
from .generators import BregmanGenerator, bregman_distance, bregman_distance_many
from .numerics import column_fsums
from .sets import bregman_project

SCHEDULE_KINDS = ("boxes", "shifted_boxes", "custom")


@dataclass(frozen=True)
class FolnerBox:
    """The exponent box shift + prod_i {0..sides[i]} with uniform weights."""

    sides: tuple
    shift: tuple

    @property
    def size(self) -> int:
        total = 1
        for side in self.sides:
            total *= side + 1
        return total

    def translated(self, t) -> "FolnerBox":
        if len(t) != len(self.shift):
            raise ValueError("translation arity differs from the box arity")
        return FolnerBox(self.sides, tuple(a + int(b) for a, b in zip(self.shift, t)))

    def describe(self) -> dict:
        return {"sides": list(self.sides), "shift": list(self.shift), "size": self.size}


@dataclass(frozen=True)
class FolnerSchedule:
    """An increasing family of boxes whose averages approximate a mean."""

    kind: str
    boxes: tuple

    def largest(self) -> FolnerBox:
        return self.boxes[-1]


def make_schedule(spec: dict, k: int) -> FolnerSchedule:
    """Build a schedule from its scenario-file description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("schedule description must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind '{kind}'; known: {', '.join(SCHEDULE_KINDS)}")
    if kind == "custom":
        boxes = tuple(
            FolnerBox(tuple(int(v) for v in entry["sides"]),
                      tuple(int(v) for v in entry.get("shift", [0] * k)))
            for entry in spec["entries"]
        )
        if not boxes:
            raise EmptySet("custom schedules need at least one box")
        for box in boxes:
            if len(box.sides) != k or len(box.shift) != k:
                raise ValueError("custom box arity differs from the action's")
        return FolnerSchedule(kind, boxes)
    sizes = [int(v) for v in spec["sizes"]]
    if not sizes:
        raise EmptySet("schedules need at least one size")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("schedule sizes must be strictly increasing")
    if kind == "shifted_boxes":
        shift = tuple(int(v) for v in spec["shift"])
    else:
        shift = tuple(int(v) for v in spec.get("shift", [0] * k))
    if len(shift) != k:
        raise ValueError(f"schedule shift must have arity {k}")
    boxes = tuple(FolnerBox((size,) * k, shift) for size in sizes)
    return FolnerSchedule(kind, boxes)


def shifted_schedule(schedule: FolnerSchedule, t) -> FolnerSchedule:
    return FolnerSchedule(
        "shifted_boxes", tuple(box.translated(t) for box in schedule.boxes)
    )


@dataclass(frozen=True)
class ApproximateMean:
    """The uniform average over one box: positive and normalized exactly."""

    box: FolnerBox


def mean_value(mean, f: CoefficientFunction) -> float:
    """Exactly rounded uniform average of a coefficient function over a box."""
    box = mean.box if isinstance(mean, ApproximateMean) else mean
    if box.size == 0:
        raise EmptySet("cannot average over an empty box")
    values = f.eval_box(box.sides, extra_shift=box.shift)
    return math.fsum(values.tolist()) / box.size


def invariance_defect(box: FolnerBox, f: CoefficientFunction, t) -> float:
    """|average of f over the t-translate of the box - average over the box|.

    For |f| <= M on the boxes involved and t a unit shift, this is bounded by
    2 M k / (N + 1): only boundary slabs survive the cancellation.
    """
    plain = mean_value(box, f)
    translated = mean_value(box.translated(t), f)
    return abs(translated - plain)


def barycenter(action: ActionSpec, box: FolnerBox) -> np.ndarray:
    """Uniform vector average of the orbit over the box (exactly rounded sums).

    For uniform finite means the defining property — that averaging every
    linear functional of the orbit evaluates that functional at a single
    point — is solved exactly by this average, which is what makes the
    minimizer identity below an algebraic one.
    """
    if box.size == 0:
        raise EmptySet("cannot average over an empty box")
    orbit = action.orbit(box.sides, shift=box.shift)
    return column_fsums(orbit) / box.size


@dataclass(frozen=True)
class BarycenterResult:
    """Barycenters along a schedule with convergence and identity residuals."""

    point: np.ndarray
    box: FolnerBox
    schedule_tail: tuple  # (FolnerBox, barycenter) pairs actually computed
    cauchy_gap: float
    converged: bool
    minimizer_residual: Optional[float] = None
    in_set_residual: Optional[float] = None


def barycenter_converge(action: ActionSpec, schedule: FolnerSchedule, tol: float,
                        g: Optional[BregmanGenerator] = None,
                        probe=None, projection_tol: float = 1e-9) -> BarycenterResult:
    """Walk the schedule until consecutive barycenters are Cauchy within tol.

    Non-convergence at the end of the schedule is reported and counted, not
    fatal.  When a generator is supplied, the result also carries the exact
    minimizer-identity residual at the probe point (default: the base point)
    and, for strongly coercive generators, the set-membership residual
    |P(z) - z| from a divergence-minimizing projection.
    """
    tail = []
    previous = None
    gap = math.inf
    converged = False
    final_box = schedule.boxes[-1]
    for box in schedule.boxes:
        z = barycenter(action, box)
        tail.append((box, z))
        if previous is not None:
            gap = float(np.linalg.norm(z - previous))
            if gap < tol:
                converged = True
                final_box = box
                break
        previous = z
        final_box = box
    if len(schedule.boxes) == 1:
        converged, gap = True, 0.0
    if not converged:
        action.warnings.increment(
            "no_convergence",
            f"barycenter gap {gap:.3e} still above {tol:g} at the schedule end "
            f"(box sides {final_box.sides})",
        )
    point = tail[-1][1]
    minimizer_residual = None
    in_set_residual = None
    if g is not None:
        probe_point = action.base_point if probe is None else np.asarray(probe, dtype=float)
        minimizer_residual = minimizer_identity_residual(g, action, final_box, probe_point)
        if g.strongly_coercive:
            in_set_residual = barycenter_in_set(g, action, final_box, tol=projection_tol)
    return BarycenterResult(
        point=point,
        box=final_box,
        schedule_tail=tuple(tail),
        cauchy_gap=float(gap),
        converged=converged,
        minimizer_residual=minimizer_residual,
        in_set_residual=in_set_residual,
    )


def minimizer_identity_residual(g: BregmanGenerator, action: ActionSpec,
                                box: FolnerBox, x) -> float:
    """Defect of: avg_s D(T_s c, x) - avg_s D(T_s c, z) = D(z, x), z the average.

    The identity follows from linearity of the average alone, so the residual
    must stay at rounding level for every box size.  Both averages are
    computed honestly (two passes over the orbit, exactly rounded sums); the
    identity is never used to shortcut them.
    """
    xa = g.check_point(x)
    orbit = action.orbit(box.sides, shift=box.shift)
    z = column_fsums(orbit) / box.size
    if not g.domain_contains(z):
        raise DomainError(
            f"orbit average left the domain of '{g.name}'; the set is not inside the domain"
        )
    mean_to_x = math.fsum(bregman_distance_many(g, orbit, xa).tolist()) / box.size
    mean_to_z = math.fsum(bregman_distance_many(g, orbit, z).tolist()) / box.size
    return abs(mean_to_x - mean_to_z - bregman_distance(g, z, xa))


def minimizer_identity_scale(g: BregmanGenerator, action: ActionSpec,
                             box: FolnerBox, x) -> float:
    """Magnitude of the identity's terms, for scale-relative tolerances."""
    xa = g.check_point(x)
    orbit = action.orbit(box.sides, shift=box.shift)
    z = column_fsums(orbit) / box.size
    mean_to_x = math.fsum(bregman_distance_many(g, orbit, xa).tolist()) / box.size
    mean_to_z = math.fsum(bregman_distance_many(g, orbit, z).tolist()) / box.size
    return max(abs(mean_to_x), abs(mean_to_z), abs(bregman_distance(g, z, xa)))


def barycenter_in_set(g: BregmanGenerator, action: ActionSpec, box: FolnerBox,
                      tol: float = 1e-9) -> float:
    """|P(z) - z| for the divergence-minimizing projection of the barycenter.

    Zero (up to solver tolerance) when the set is convex; strictly positive
    residuals on the diagnostic non-convex sets demonstrate why convexity is
    a hypothesis and not a convenience.
    """
    z = barycenter(action, box)
    result = bregman_project(g, action.set, z, tol=tol)
    return float(np.linalg.norm(result.point - z))
