"""End-to-end verification: fixed points, attractive points, and limits.

The pipeline claims being verified at desk scale: when an action satisfies
one of the divergence inequalities and its orbit is bounded, the converged
orbit barycenter is (i) an attractive point — no map application moves any
set point divergence-closer to it is violated — and (ii) a common fixed
point of all the generating maps.  Supporting diagnostics bound the averaged
divergence between iterated sup-inf and inf-sup truncations, compare
barycenters across different box schedules, and, for the squared-norm
generator, project orbit points onto a sampled halfspace model of the
attractive set and watch the projections converge to the barycenter.

Sup/inf over the infinite semigroup are replaced by box truncations; every
report says which box was used.  Fixed-point residuals are evaluated on the
generating maps only — every element is a finite composition of them, so a
point fixed by all generators is fixed by the whole semigroup.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .actions import ActionSpec, apply_element
from .errors import EmptyModel
from .generators import BregmanGenerator, bregman_distance, bregman_distance_many
from .means import FolnerSchedule, barycenter_converge
from .numerics import fsum_dot, indexed_map, spawn_rngs
from .sets import dykstra_halfspaces


@dataclass(frozen=True)
class FixedPointReport:
    """Residual max_i |T_i z - z| over the generating maps."""

    residual: float
    per_generator: tuple
    tol: float
    point: np.ndarray

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def verify_fixed_point(action: ActionSpec, z, tol: float) -> FixedPointReport:
    za = np.asarray(z, dtype=float)
    residuals = tuple(
        float(np.linalg.norm(np.asarray(gen.eval(za), dtype=float) - za))
        for gen in action.generators
    )
    return FixedPointReport(
        residual=max(residuals), per_generator=residuals, tol=tol, point=za
    )


def refine_affine_fixed_point(action: ActionSpec, z0):
    """Nearest common fixed point of the affine generator family, if affine.

    Solves the stacked linear system (I - A_i) z = b_i in the least-squares
    sense with the minimum-norm correction to z0.  Returns ``(point,
    residual)`` where the residual is the max fixed-point defect of the
    refined point, or ``None`` when some generator has no affine form.
    """
    if any(gen.affine is None for gen in action.generators):
        return None
    za = np.asarray(z0, dtype=float)
    n = za.shape[0]
    rows = []
    rhs = []
    for gen in action.generators:
        A, b = gen.affine
        rows.append(np.eye(n) - A)
        rhs.append(b)
    M = np.vstack(rows)
    r = np.concatenate(rhs)
    delta, *_ = np.linalg.lstsq(M, r - M @ za, rcond=None)
    refined = za + delta
    report = verify_fixed_point(action, refined, tol=0.0)
    return refined, report.residual


@dataclass(frozen=True)
class AttractiveReport:
    """Max over sampled (y, s) of D(z, T_s y) - D(z, y)."""

    max_violation: float
    tol: float
    samples: int
    witness: dict
    point: np.ndarray

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def attractive_membership(g: BregmanGenerator, action: ActionSpec, z,
                          sample_count: int = 1000, seed: int = 0,
                          tol: float = 1e-8, element_side: int = 6) -> AttractiveReport:
    """Check that no map application moves sampled set points closer to z.

    This is the notion of an attractive point: D(z, T_s y) <= D(z, y) for
    all set points y and elements s, here verified on a seeded sample with
    the worst witness reported.
    """
    za = g.check_point(z)
    rngs = spawn_rngs(seed, sample_count)

    def violation_at(i):
        rng = rngs[i]
        y = action.set.sample(rng)
        s = tuple(int(v) for v in rng.integers(0, element_side + 1, size=action.k))
        ty = apply_element(action, s, y)
        value = bregman_distance(g, za, ty) - bregman_distance(g, za, y)
        return value, {"y": y.tolist(), "s": list(s)}

    results = indexed_map(violation_at, sample_count)
    value, witness = max(results, key=lambda item: item[0])
    return AttractiveReport(
        max_violation=float(value), tol=tol, samples=sample_count,
        witness=witness, point=za,
    )


@dataclass(frozen=True)
class SandwichResult:
    """Truncated sup-inf / averaged / inf-sup values of s -> D(T_s c, z).

    ``lower``/``upper`` run t and s over the box {0..side}^k inside
    D(T_{t+s} c, z); ``box_mean`` is the plain average over the box, and
    ``mean_estimate`` extrapolates the two box sizes to the limiting average
    (they coincide for k > 1, where no extrapolation is attempted).
    All three are box truncations of quantities defined over the whole
    semigroup, so the ordering is checked with a rounding allowance.
    """

    lower: float
    mean_estimate: float
    box_mean: float
    upper: float
    ordering_violation: float
    equality_gap: float
    side: int
    extrapolated: bool


def sup_inf_sandwich(g: BregmanGenerator, action: ActionSpec, z,
                     side: int = 20) -> SandwichResult:
    """Evaluate sup_t inf_s <= mean <= inf_s sup_t for f(s) = D(T_s c, z).

    Uses the orbit out to side 2*side so that t+s stays inside the enumerated
    box.  For actions that damp divergence asymptotically the two ends must
    agree; for distance-preserving actions all three coincide.
    """
    za = g.check_point(z)
    k = action.k
    orbit = action.orbit((2 * side,) * k)
    values = bregman_distance_many(g, orbit, za).reshape((2 * side + 1,) * k)
    windows = sliding_window_view(values, (side + 1,) * k)
    window_axes = tuple(range(k, 2 * k))
    base_axes = tuple(range(k))
    lower = float(windows.min(axis=window_axes).max())
    upper = float(windows.max(axis=base_axes).min())
    corner = values[(slice(0, side + 1),) * k]
    box_mean = math.fsum(corner.ravel().tolist()) / corner.size
    big_mean = math.fsum(values.ravel().tolist()) / values.size
    if k == 1:
        mean_estimate = ((2 * side + 1) * big_mean - (side + 1) * box_mean) / side
        extrapolated = True
    else:
        mean_estimate = box_mean
        extrapolated = False
    ordering_violation = max(lower - mean_estimate, mean_estimate - upper, 0.0)
    return SandwichResult(
        lower=lower,
        mean_estimate=mean_estimate,
        box_mean=box_mean,
        upper=upper,
        ordering_violation=float(ordering_violation),
        equality_gap=float(upper - lower),
        side=side,
        extrapolated=extrapolated,
    )


@dataclass(frozen=True)
class IndependenceResult:
    """Distance between barycenters of two different box schedules."""

    difference: float
    plain_point: np.ndarray
    shifted_point: np.ndarray
    plain_converged: bool
    shifted_converged: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.difference <= self.tol


def mean_independence(action: ActionSpec, schedule: FolnerSchedule, shift,
                      tol: float, converge_tol: float,
                      max_size: Optional[int] = None) -> IndependenceResult:
    """Compare barycenters from plain boxes against shifted boxes.

    Distinct approximate means must agree in the limit on where the orbit
    accumulates; the observable surrogate is that the two schedule limits
    "differ by at most tol."""
    boxes = schedule.boxes
    if max_size is not None:
        capped = tuple(box for box in boxes if max(box.sides) <= max_size)
        boxes = capped if capped else boxes[:1]
    plain = FolnerSchedule(schedule.kind, boxes)
    shifted = FolnerSchedule("shifted_boxes", tuple(b.translated(shift) for b in boxes))
    res_a = barycenter_converge(action, plain, converge_tol)
    res_b = barycenter_converge(action, shifted, converge_tol)
    return IndependenceResult(
        difference=float(np.linalg.norm(res_a.point - res_b.point)),
        plain_point=res_a.point,
        shifted_point=res_b.point,
        plain_converged=res_a.converged,
        shifted_converged=res_b.converged,
        tol=tol,
    )


@dataclass(frozen=True)
class AttractiveSetModel:
    """Sampled halfspace outer model of the attractive set (squared norm only).

    Each sampled pair (y, s) contributes the constraint
    |x - T_s y|^2 <= |x - y|^2, which is affine in x:
    2 <x, y - T_s y> <= |y|^2 - |T_s y|^2.
    """

    normals: np.ndarray
    offsets: np.ndarray
    constraint_count: int

    def project(self, x):
        point, sweeps = dykstra_halfspaces(self.normals, self.offsets, x)
        return point, sweeps


def build_attractive_model(g: BregmanGenerator, action: ActionSpec,
                           constraint_samples: int, seed: int = 0,
                           element_side: int = 6) -> AttractiveSetModel:
    if g.name != "sq_norm":
        raise ValueError(
            "the halfspace model needs the squared-norm generator, whose divergence "
            "is symmetric and affine in the constraint variable"
        )
    if constraint_samples < 1:
        raise EmptyModel("at least one sampled constraint is required")
    rngs = spawn_rngs(seed, constraint_samples)

    def constraint_at(i):
        rng = rngs[i]
        y = action.set.sample(rng)
        s = tuple(int(v) for v in rng.integers(1, element_side + 1, size=action.k))
        ty = apply_element(action, s, y)
        normal = 2.0 * (y - ty)
        offset = fsum_dot(y, y) - fsum_dot(ty, ty)
        return normal, offset

    rows = indexed_map(constraint_at, constraint_samples)
    normals = []
    offsets = []
    for normal, offset in rows:
        if float(np.linalg.norm(normal)) > 1e-12:
            normals.append(normal)
            offsets.append(offset)
    if not normals:
        raise EmptyModel("every sampled constraint was trivial (fixed sample points)")
    return AttractiveSetModel(
        normals=np.asarray(normals), offsets=np.asarray(offsets),
        constraint_count=len(normals),
    )


@dataclass(frozen=True)
class AttractiveLimitResult:
    """Distances |P_A(T_t c) - z| along the diagonal element sequence."""

    distances: tuple
    elements: tuple
    max_beyond_midpoint: float
    midpoint: int
    tol: float
    constraint_count: int

    @property
    def passed(self) -> bool:
        return self.max_beyond_midpoint <= self.tol


def attractive_projection_limit(g: BregmanGenerator, action: ActionSpec, z,
                                constraint_samples: int = 1000, seed: int = 0,
                                t_max: int = 20, tol: float = 1e-3,
                                element_side: int = 6) -> AttractiveLimitResult:
    """Project orbit points onto the sampled attractive model; watch the limit.

    The projections of T_t c onto the model must approach the barycenter z
    along any cofinal sequence of t; here t walks the diagonal (j, ..., j).
    The verdict only inspects the tail beyond the sequence midpoint.
    """
    za = np.asarray(z, dtype=float)
    model = build_attractive_model(g, action, constraint_samples, seed=seed,
                                   element_side=element_side)
    elements = [(j,) * action.k for j in range(t_max + 1)]
    distances = []
    for elem in elements:
        point = apply_element(action, elem, action.base_point)
        projected, _ = model.project(point)
        distances.append(float(np.linalg.norm(projected - za)))
    midpoint = t_max // 2
    tail = distances[midpoint + 1 :] or distances[-1:]
    return AttractiveLimitResult(
        distances=tuple(distances),
        elements=tuple(elements),
        max_beyond_midpoint=max(tail),
        midpoint=midpoint,
        tol=tol,
        constraint_count=model.constraint_count,
    )


@dataclass(frozen=True)
class OrbitDiagnostics:
    """Orbit-level hypotheses: nonexpansive orbit, precompactness, regularity.

    ``epsilon_net_size`` is the cardinality of a greedy epsilon-net of the
    truncated orbit (a precompactness proxy); ``lipschitz`` is the empirical
    Lipschitz constant of the generator on the orbit hull.  These report
    whether hypotheses hold on the truncation — never membership proofs.
    """

    nonexpansive_violation: float
    witness: dict
    epsilon: float
    epsilon_net_size: int
    lipschitz: Optional[float]
    orbit_points: int

    @property
    def orbit_nonexpansive(self) -> bool:
        return self.nonexpansive_violation <= 1e-8


def greedy_epsilon_net(points: np.ndarray, epsilon: float) -> int:
    """Size of a greedy epsilon-net over the rows, in enumeration order."""
    net = []
    for row in points:
        if not net or float(np.min(np.linalg.norm(np.asarray(net) - row, axis=1))) > epsilon:
            net.append(row)
    return len(net)


def orbit_diagnostics(action: ActionSpec, sides, epsilon: float,
                      g: Optional[BregmanGenerator] = None,
                      sample_count: int = 200, seed: int = 0) -> OrbitDiagnostics:
    orbit = action.orbit(tuple(sides))
    dims = tuple(side + 1 for side in sides)
    rngs = spawn_rngs(seed, sample_count)

    def triple_at(i):
        rng = rngs[i]
        t = tuple(int(v) for v in rng.integers(0, np.asarray(dims), size=action.k))
        t2 = tuple(int(v) for v in rng.integers(0, np.asarray(dims), size=action.k))
        s = tuple(int(v) for v in rng.integers(0, np.asarray(dims), size=action.k))
        a = orbit[int(np.ravel_multi_index(t, dims))]
        b = orbit[int(np.ravel_multi_index(t2, dims))]
        moved = float(np.linalg.norm(apply_element(action, s, a) - apply_element(action, s, b)))
        original = float(np.linalg.norm(a - b))
        return moved - original, {"t": list(t), "t_prime": list(t2), "s": list(s)}

    results = indexed_map(triple_at, sample_count)
    violation, witness = max(results, key=lambda item: item[0])
    net_size = greedy_epsilon_net(orbit, epsilon)
    lipschitz = None
    if g is not None:
        worst = 0.0
        for rng in spawn_rngs(seed + 1, sample_count):
            i, j = rng.integers(0, orbit.shape[0], size=2)
            lam, mu = rng.uniform(size=2)
            u = lam * orbit[int(i)] + (1.0 - lam) * orbit[int(j)]
            v = mu * orbit[int(i)] + (1.0 - mu) * orbit[int(j)]
            gap = float(np.linalg.norm(u - v))
            if gap > 1e-9 and g.domain_contains(u) and g.domain_contains(v):
                worst = max(worst, abs(g.evaluate(u) - g.evaluate(v)) / gap)
        lipschitz = worst
    return OrbitDiagnostics(
        nonexpansive_violation=float(violation),
        witness=witness,
        epsilon=epsilon,
        epsilon_net_size=net_size,
        lipschitz=lipschitz,
        orbit_points=int(orbit.shape[0]),
    )
