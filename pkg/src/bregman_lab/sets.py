"""Convex-set oracles and divergence-minimizing projections.

Each set carries a membership violation measure, a Euclidean projection, a
seeded sampler, and a bounding radius.  The projection of a point ``x`` under
a generator ``g`` minimizes ``y -> D(y, x)`` over the set; since this equals
``g(y) - <y, grad g(x)>`` plus a constant, projected gradient descent with
the set's Euclidean oracle solves it whenever ``g`` is strongly coercive.

The built-in library covers balls, boxes, probability simplices, halfspace
intersections (Euclidean oracle via Dykstra's alternating projections), and a
deliberately non-convex circle used by diagnostics that probe why convexity
is needed.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    DomainExit,
    EmptySet,
    InfeasibleModel,
    MaxIterations,
    NoProgress,
    SamplerFailure,
)
from .generators import BregmanGenerator, bregman_distance
from .numerics import fsum_dot, indexed_map, spawn_rngs

SET_NAMES = ("ball", "box", "simplex", "halfspaces", "circle")

DYKSTRA_MAX_SWEEPS = 1000
DYKSTRA_TOL = 1e-12


@dataclass(frozen=True)
class ConvexSet:
    """Membership, Euclidean projection, and sampling oracles for one set.

    ``violation`` maps a point to a signed constraint defect (<= 0 inside);
    ``violation_many`` is its row-wise form.  ``anchor`` is a known set point
    used to pull iterates back into open generator domains.  ``convex`` is
    False only for diagnostic sets; convexity-dependent callers must check it.
    """

    name: str
    dimension: int
    euclid_project: Callable[[np.ndarray], np.ndarray]
    sample: Callable[[np.random.Generator], np.ndarray]
    violation: Callable[[np.ndarray], float]
    violation_many: Callable[[np.ndarray], np.ndarray]
    bounding_radius: float
    anchor: np.ndarray
    convex: bool = True
    spec: dict = field(default_factory=dict)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.violation(np.asarray(x, dtype=float)) <= tol

    def check_point(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dimension,):
            raise DimensionMismatch(
                f"expected a {self.dimension}-vector for set '{self.name}', got {arr.shape}"
            )
        return arr


def ball_set(center, radius: float) -> ConvexSet:
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    n = c.shape[0]

    def project(x):
        d = x - c
        norm = math.sqrt(fsum_dot(d, d))
        if norm <= radius:
            return np.array(x, dtype=float)
        return c + d * (radius / norm)

    def sample(rng):
        direction = rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        r = radius * rng.uniform() ** (1.0 / n)
        return c + r * direction

    return ConvexSet(
        name="ball",
        dimension=n,
        euclid_project=project,
        sample=sample,
        violation=lambda x: float(np.linalg.norm(x - c) - radius),
        violation_many=lambda X: np.linalg.norm(X - c, axis=1) - radius,
        bounding_radius=float(np.linalg.norm(c) + radius),
        anchor=c.copy(),
        spec={"set": "ball", "center": c.tolist(), "radius": float(radius)},
    )


def box_set(lo, hi) -> ConvexSet:
    lo_a = np.asarray(lo, dtype=float)
    hi_a = np.asarray(hi, dtype=float)
    if lo_a.shape != hi_a.shape or lo_a.ndim != 1:
        raise DimensionMismatch(f"box bounds must be equal-length vectors")
    if np.any(lo_a >= hi_a):
        raise EmptySet("box bounds must satisfy lo < hi componentwise")
    corner = np.maximum(np.abs(lo_a), np.abs(hi_a))

    return ConvexSet(
        name="box",
        dimension=lo_a.shape[0],
        euclid_project=lambda x: np.clip(x, lo_a, hi_a),
        sample=lambda rng: rng.uniform(lo_a, hi_a),
        violation=lambda x: float(np.max(np.maximum(x - hi_a, lo_a - x))),
        violation_many=lambda X: np.max(np.maximum(X - hi_a, lo_a - X), axis=1),
        bounding_radius=float(np.linalg.norm(corner)),
        anchor=0.5 * (lo_a + hi_a),
        spec={"set": "box", "lo": lo_a.tolist(), "hi": hi_a.tolist()},
    )


def euclid_project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorting method)."""
    u = np.sort(np.asarray(v, dtype=float))[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, u.shape[0] + 1)
    mask = u - css / ks > 0
    rho = ks[mask][-1]
    theta = css[mask][-1] / rho
    return np.maximum(v - theta, 0.0)


def simplex_set(dimension: int, sample_floor: float = 1e-9) -> ConvexSet:
    if dimension < 1:
        raise ValueError("simplex dimension must be positive")

    def violation(x):
        return float(max(abs(math.fsum(x.tolist()) - 1.0), -float(np.min(x))))

    def violation_many(X):
        return np.maximum(np.abs(X.sum(axis=1) - 1.0), -X.min(axis=1))

    def sample(rng):
        # Exponential spacings give the uniform distribution on the simplex;
        # coordinates below the floor are resampled so entropy-type
        # generators always accept the point.
        for _ in range(100):
            e = rng.standard_exponential(dimension)
            p = e / math.fsum(e.tolist())
            if np.min(p) >= sample_floor:
                return p
        raise SamplerFailure(
            f"simplex sampler could not clear its floor {sample_floor:g} in 100 tries"
        )

    return ConvexSet(
        name="simplex",
        dimension=dimension,
        euclid_project=euclid_project_simplex,
        sample=sample,
        violation=violation,
        violation_many=violation_many,
        bounding_radius=1.0,
        anchor=np.full(dimension, 1.0 / dimension),
        spec={"set": "simplex"},
    )


def dykstra_halfspaces(normals, offsets, x, max_sweeps: int = DYKSTRA_MAX_SWEEPS,
                       tol: float = DYKSTRA_TOL):
    """Euclidean projection onto an intersection of halfspaces a_i.x <= b_i.

    Dykstra's alternating projections with one correction per constraint.
    Returns ``(point, sweeps)``; raises :class:`InfeasibleModel` when the
    sweep limit is hit while constraints remain violated, which signals an
    inconsistent constraint system rather than slow convergence.
    """
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    p = np.array(x, dtype=float)
    m = A.shape[0]
    if m == 0:
        return p, 0
    sq = np.einsum("ij,ij->i", A, A)
    if np.any(sq <= 0):
        raise ValueError("halfspace normals must be nonzero")
    if np.max(A @ p - b) <= 0.0:
        return p, 0
    corrections = np.zeros_like(A)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start = p.copy()
        for i in range(m):
            y = p + corrections[i]
            gap = float(y @ A[i]) - b[i]
            if gap > 0.0:
                p = y - (gap / sq[i]) * A[i]
            else:
                p = y
            corrections[i] = y - p
        if float(np.max(np.abs(p - start))) < tol:
            break
    residual = float(np.max(A @ p - b))
    if residual > 1e-6 * (1.0 + float(np.max(np.abs(b)))):
        raise InfeasibleModel(
            f"alternating projections stalled with violation {residual:.3e} "
            f"after {sweeps} sweeps; the halfspace system looks inconsistent"
        )
    return p, sweeps


def halfspace_set(normals, offsets, dimension: Optional[int] = None,
                  radius: float = 10.0) -> ConvexSet:
    """Intersection of halfspaces; with no constraints, the whole space.

    The sampler draws Gaussian points at the scale of ``radius`` and projects
    them into the set, which is a valid (if boundary-biased) set sampler.
    """
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    if A.size == 0:
        if dimension is None:
            raise ValueError("dimension is required for an unconstrained halfspace set")
        A = A.reshape(0, dimension)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise DimensionMismatch("normals must be (m, n) and offsets (m,)")
    n = A.shape[1]
    if dimension is not None and dimension != n:
        raise DimensionMismatch(f"normals have {n} columns, expected {dimension}")
    m = A.shape[0]

    def project(x):
        point, _ = dykstra_halfspaces(A, b, x)
        return point

    def sample(rng):
        z = rng.standard_normal(n) * (radius / 3.0)
        return project(z) if m else z

    def violation(x):
        return float(np.max(A @ x - b)) if m else -math.inf

    def violation_many(X):
        if m == 0:
            return np.full(X.shape[0], -math.inf)
        return np.max(X @ A.T - b, axis=1)

    anchor = project(np.zeros(n)) if m else np.zeros(n)
    return ConvexSet(
        name="halfspaces",
        dimension=n,
        euclid_project=project,
        sample=sample,
        violation=violation,
        violation_many=violation_many,
        bounding_radius=float(radius),
        anchor=anchor,
        spec={"set": "halfspaces", "normals": A.tolist(), "offsets": b.tolist(),
              "radius": float(radius)},
    )


def circle_set(center, radius: float) -> ConvexSet:
    """The circle (sphere in 2-d) itself: a non-convex diagnostic set.

    Averages of circle points fall inside the disk, so set-membership
    residuals of barycenters are strictly positive here; that failure is the
    point of the diagnostic.  Points at the center project to a fixed
    deterministic spot on the circle.
    """
    c = np.asarray(center, dtype=float)
    if c.shape != (2,):
        raise DimensionMismatch("circle sets are 2-dimensional")
    if radius <= 0:
        raise ValueError("circle radius must be positive")

    def project(x):
        d = np.asarray(x, dtype=float) - c
        norm = float(np.linalg.norm(d))
        if norm < 1e-12:
            return c + np.array([radius, 0.0])
        return c + d * (radius / norm)

    def sample(rng):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        return c + radius * np.array([math.cos(theta), math.sin(theta)])

    return ConvexSet(
        name="circle",
        dimension=2,
        euclid_project=project,
        sample=sample,
        violation=lambda x: float(abs(np.linalg.norm(x - c) - radius)),
        violation_many=lambda X: np.abs(np.linalg.norm(X - c, axis=1) - radius),
        bounding_radius=float(np.linalg.norm(c) + radius),
        anchor=c + np.array([radius, 0.0]),
        convex=False,
        spec={"set": "circle", "center": c.tolist(), "radius": float(radius)},
    )


def make_set(spec: dict, dimension: Optional[int] = None) -> ConvexSet:
    """Build a set from its scenario-file description."""
    if not isinstance(spec, dict) or "set" not in spec:
        raise ValueError("set description must be an object with a 'set' field")
    kind = spec["set"]
    if kind == "ball":
        return ball_set(spec["center"], spec["radius"])
    if kind == "box":
        return box_set(spec["lo"], spec["hi"])
    if kind == "simplex":
        if dimension is None:
            raise ValueError("simplex sets need the ambient dimension")
        return simplex_set(dimension)
    if kind == "halfspaces":
        return halfspace_set(
            spec.get("normals", []),
            spec.get("offsets", []),
            dimension=dimension,
            radius=spec.get("radius", 10.0),
        )
    if kind == "circle":
        return circle_set(spec["center"], spec["radius"])
    raise ValueError(f"unknown set kind '{kind}'; known: {', '.join(SET_NAMES)}")


# ---------------------------------------------------------------------------
# Divergence-minimizing projection.
# ---------------------------------------------------------------------------

ARMIJO_SLOPE = 1e-4
ARMIJO_SHRINK = 0.5
MAX_HALVINGS = 60


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of a divergence-minimizing projection."""

    point: np.ndarray
    objective_gap: float
    iterations: int
    certificate_violation: Optional[float] = None


def _pull_into_domain(g: BregmanGenerator, point: np.ndarray, anchor: np.ndarray,
                      context: str) -> np.ndarray:
    """Move a set point toward an in-domain anchor until it enters the domain.

    Both endpoints lie in the (convex) set, so every intermediate point does
    too; the anchor is strictly inside the open domain, so bisection from the
    outside terminates.
    """
    if g.domain_contains(point):
        return point
    lo, hi = 0.0, 1.0  # fraction of the way toward the anchor
    candidate = point
    for _ in range(MAX_HALVINGS):
        mid = 0.5 * (lo + hi)
        candidate = point + mid * (anchor - point)
        if g.domain_contains(candidate):
            hi = mid
        else:
            lo = mid
    candidate = point + hi * (anchor - point)
    if not g.domain_contains(candidate):
        raise DomainExit(f"{context}: could not pull the iterate into the domain")
    return candidate


def bregman_project(g: BregmanGenerator, C: ConvexSet, x, tol: float = 1e-9,
                    max_iter: int = 2000) -> ProjectionResult:
    """Minimize y -> D(y, x) over the set by projected gradient descent.

    Backtracking (Armijo) line search from unit step; iterates that leave an
    open domain are pulled back toward the previous iterate.  Stops when the
    unit-step projected-gradient displacement falls below ``tol`` relative to
    the iterate scale, when an accepted step stops moving the iterate
    (possible on non-convex sets, where the point is stationary but the
    gradient-map test never fires), or when an exhausted line search ends
    within rounding width of the iterate.  Requires a strongly coercive
    generator — minimizers need not exist otherwise.
    """
    if not g.strongly_coercive:
        raise ValueError(
            f"generator '{g.name}' is not strongly coercive; projection is undefined"
        )
    xa = g.check_point(x)
    grad_x = g.gradient(xa)

    def objective(y):
        return g.evaluate(y) - fsum_dot(y, grad_x)

    anchor = _pull_into_domain(g, C.anchor.copy(), C.anchor, "anchor")
    y = np.asarray(C.euclid_project(xa), dtype=float)
    if not g.domain_contains(y):
        y = _pull_into_domain(g, y, anchor, "start")
        # A hair inside an open domain is still a region of explosive
        # curvature (the entropy gradient is ~log of the smallest
        # coordinate), where Armijo steps shrink below rounding before they
        # can escape.  Start a fixed fraction toward the interior anchor
        # instead; both endpoints lie in the set, so the blend does too.
        y = y + 1e-3 * (anchor - y)
    f_y = objective(y)
    iterations = 0
    last_drop = 0.0

    for _ in range(max_iter):
        grad = g.gradient(y) - grad_x
        full = np.asarray(C.euclid_project(y - grad), dtype=float)
        if not g.domain_contains(full):
            full = _pull_into_domain(g, full, y, "unit step")
        if float(np.linalg.norm(full - y)) <= tol * (1.0 + float(np.linalg.norm(y))):
            break
        step = 1.0
        accepted = False
        candidate, f_candidate = full, objective(full)
        for _ in range(MAX_HALVINGS):
            if f_candidate <= f_y + ARMIJO_SLOPE * fsum_dot(grad, candidate - y):
                accepted = True
                break
            step *= ARMIJO_SHRINK
            candidate = np.asarray(C.euclid_project(y - step * grad), dtype=float)
            if not g.domain_contains(candidate):
                candidate = _pull_into_domain(g, candidate, y, "line search")
            f_candidate = objective(candidate)
        if not accepted:
            # With the step below 2^-60 the feasible arc has collapsed to
            # rounding width (the set projection re-applies a constant
            # offset of a few ulp, so the candidate never reaches y
            # exactly).  If the candidate is that close, y is stationary;
            # anything farther is a genuine failure.
            if float(np.linalg.norm(candidate - y)) <= 1e-8 * (1.0 + float(np.linalg.norm(y))):
                break
            raise NoProgress(
                f"line search stalled after {MAX_HALVINGS} halvings "
                f"(iteration {iterations}, set '{C.name}')"
            )
        last_drop = max(0.0, f_y - f_candidate)
        moved = float(np.linalg.norm(candidate - y))
        y, f_y = candidate, f_candidate
        iterations += 1
        if moved <= 1e-14 * (1.0 + float(np.linalg.norm(y))):
            # On non-convex sets the accepted step can coincide with the
            # current iterate (stationary but not tol-small gradient map);
            # accepting it forever would spin to the iteration cap.
            break
    else:
        raise MaxIterations(
            f"projection did not reach tolerance {tol:g} in {max_iter} iterations"
        )
    return ProjectionResult(point=y, objective_gap=last_drop, iterations=iterations)


def projection_certificate(g: BregmanGenerator, C: ConvexSet, x, xhat,
                           sample_count: int = 1000, seed: int = 0) -> float:
    """Max over sampled set points y of D(y, xhat) + D(xhat, x) - D(y, x).

    Nonpositive (up to tolerance) exactly when ``xhat`` is the true
    projection of ``x``; a strictly positive value exhibits a better point.
    """
    xa = g.check_point(x)
    xh = g.check_point(xhat)
    through = bregman_distance(g, xh, xa)
    rngs = spawn_rngs(seed, sample_count)

    def violation_at(i):
        y = C.sample(rngs[i])
        if not g.domain_contains(y):
            raise SamplerFailure(
                f"set '{C.name}' sampled a point outside the domain of '{g.name}'"
            )
        return bregman_distance(g, y, xh) + through - bregman_distance(g, y, xa)

    values = indexed_map(violation_at, sample_count)
    if not values:
        raise SamplerFailure("certificate needs at least one sample")
    return max(values)


def variational_inequality(g: BregmanGenerator, C: ConvexSet, x, xhat,
                           sample_count: int = 1000, seed: int = 0) -> float:
    """Min over sampled y of <grad g(xhat) - grad g(x), y - xhat>.

    Nonnegative (up to tolerance) at the projection; this is the first-order
    optimality condition equivalent to the certificate inequality.
    """
    xa = g.check_point(x)
    xh = g.check_point(xhat)
    direction = g.gradient(xh) - g.gradient(xa)
    rngs = spawn_rngs(seed, sample_count)

    def inner_at(i):
        y = C.sample(rngs[i])
        return fsum_dot(direction, y - xh)

    values = indexed_map(inner_at, sample_count)
    if not values:
        raise SamplerFailure("variational inequality needs at least one sample")
    return min(values)
