"""Strictly convex generator functions and the divergences they induce.

A generator ``g`` is a strictly convex, differentiable function on an open
domain of ``R^n``.  It induces the divergence

    D(x, y) = g(x) - g(y) - <x - y, grad g(y)>,

which is nonnegative, vanishes exactly on the diagonal, and is in general
asymmetric.  Five named generators are provided: the squared norm, negative
entropy, and three positive-domain generators that mirror the matrix
divergences coordinatewise (their diagonal embeddings).  The matrix
divergences themselves act on symmetric positive-definite matrices through
eigendecompositions.

Inner products that feed identity checks use exactly rounded summation so the
algebraic identities (three-point, minimizer) hold to machine precision.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError, NotPositiveDefinite
from .numerics import fsum_dot

# Points with any coordinate at or below this floor are outside the
# entropy-type domains; they are rejected, never clamped.
DOMAIN_FLOOR = 1e-12
# Matrices with an eigenvalue at or below this floor are not accepted as
# positive definite (log and sqrt need strict positivity).
PD_FLOOR = 1e-10

GENERATOR_NAMES = ("sq_norm", "neg_entropy", "mat_classical", "mat_umegaki", "mat_quantum")


@dataclass(frozen=True)
class BregmanGenerator:
    """A strictly convex differentiable function with gradient oracle.

    ``evaluate``/``gradient`` act on single points; the ``*_many`` variants
    act on ``(m, n)`` row stacks and exist so orbit-sized averages stay cheap.
    ``lipschitz_bound``, when present, maps a radius r to a bound on
    ``|grad g|`` over the ball of that radius intersected with the domain.
    Generators without ``strongly_coercive`` do not support projections.
    """

    name: str
    dimension: int
    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    domain_contains: Callable[[np.ndarray], bool]
    evaluate_many: Callable[[np.ndarray], np.ndarray]
    gradient_many: Callable[[np.ndarray], np.ndarray]
    strongly_coercive: bool = True
    locally_bounded: bool = True
    lipschitz_bound: Optional[Callable[[float], float]] = None
    domain_description: str = "all of R^n"

    def check_point(self, x, *, require_domain=True) -> np.ndarray:
        """Validate shape and domain membership; return the point as floats."""
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dimension,):
            raise DimensionMismatch(
                f"expected a {self.dimension}-vector for generator '{self.name}', "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"non-finite coordinates in point for '{self.name}'")
        if require_domain and not self.domain_contains(arr):
            raise DomainError(
                f"point outside the domain of '{self.name}' ({self.domain_description})"
            )
        return arr


def _positive_domain(floor):
    def contains(x):
        return bool(np.all(x > floor))

    return contains


def make_generator(name: str, dimension: int) -> BregmanGenerator:
    """Build one of the named generators in the given dimension.

    Identifiers: ``sq_norm`` (g = |x|^2 on all of R^n), ``neg_entropy``
    (g = sum x log x on the open positive orthant), and the coordinatewise
    twins of the matrix divergences, ``mat_classical`` (squared norm on the
    positive orthant), ``mat_umegaki`` (entropy on the positive orthant) and
    ``mat_quantum`` (g = sum (sqrt x - 1)^2, not strongly coercive).
    """
    if dimension < 1:
        raise ValueError(f"dimension must be positive, got {dimension}")
    if name == "sq_norm":
        return BregmanGenerator(
            name=name,
            dimension=dimension,
            evaluate=lambda x: fsum_dot(x, x),
            gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
            domain_contains=lambda x: True,
            evaluate_many=lambda X: np.einsum("ij,ij->i", X, X),
            gradient_many=lambda X: 2.0 * X,
            strongly_coercive=True,
            lipschitz_bound=lambda r: 2.0 * r,
            domain_description="all of R^n",
        )
    if name in ("neg_entropy", "mat_umegaki"):
        floor = DOMAIN_FLOOR if name == "neg_entropy" else PD_FLOOR
        return BregmanGenerator(
            name=name,
            dimension=dimension,
            evaluate=lambda x: math.fsum((x * np.log(x)).tolist()),
            gradient=lambda x: 1.0 + np.log(x),
            domain_contains=_positive_domain(floor),
            evaluate_many=lambda X: np.sum(X * np.log(X), axis=1),
            gradient_many=lambda X: 1.0 + np.log(X),
            strongly_coercive=True,
            lipschitz_bound=None,
            domain_description=f"coordinates > {floor:g}",
        )
    if name == "mat_classical":
        return BregmanGenerator(
            name=name,
            dimension=dimension,
            evaluate=lambda x: fsum_dot(x, x),
            gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
            domain_contains=_positive_domain(PD_FLOOR),
            evaluate_many=lambda X: np.einsum("ij,ij->i", X, X),
            gradient_many=lambda X: 2.0 * X,
            strongly_coercive=True,
            lipschitz_bound=lambda r: 2.0 * r,
            domain_description=f"coordinates > {PD_FLOOR:g}",
        )
    if name == "mat_quantum":
        return BregmanGenerator(
            name=name,
            dimension=dimension,
            evaluate=lambda x: math.fsum(((np.sqrt(x) - 1.0) ** 2).tolist()),
            gradient=lambda x: 1.0 - 1.0 / np.sqrt(x),
            domain_contains=_positive_domain(PD_FLOOR),
            evaluate_many=lambda X: np.sum((np.sqrt(X) - 1.0) ** 2, axis=1),
            gradient_many=lambda X: 1.0 - 1.0 / np.sqrt(X),
            # g grows only linearly, so g(x)/|x| does not diverge: projections
            # onto unbounded sets are not guaranteed and are refused.
            strongly_coercive=False,
            lipschitz_bound=None,
            domain_description=f"coordinates > {PD_FLOOR:g}",
        )
    raise ValueError(f"unknown generator '{name}'; known: {', '.join(GENERATOR_NAMES)}")


def bregman_distance(g: BregmanGenerator, x, y) -> float:
    """D(x, y) = g(x) - g(y) - <x - y, grad g(y)>; nonnegative up to rounding."""
    xa = g.check_point(x)
    ya = g.check_point(y)
    return g.evaluate(xa) - g.evaluate(ya) - fsum_dot(xa - ya, g.gradient(ya))


def bregman_distance_many(g: BregmanGenerator, points: np.ndarray, y) -> np.ndarray:
    """Row-wise D(points[i], y) for an (m, n) stack of domain points."""
    ya = g.check_point(y)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != g.dimension:
        raise DimensionMismatch(
            f"expected an (m, {g.dimension}) stack, got shape {pts.shape}"
        )
    grad_y = g.gradient(ya)
    return g.evaluate_many(pts) - g.evaluate(ya) - (pts - ya) @ grad_y


def bregman_distance_from_many(g: BregmanGenerator, x, points: np.ndarray) -> np.ndarray:
    """Row-wise D(x, points[i]): distances *to* each row from a fixed point."""
    xa = g.check_point(x)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != g.dimension:
        raise DimensionMismatch(
            f"expected an (m, {g.dimension}) stack, got shape {pts.shape}"
        )
    grads = g.gradient_many(pts)
    return (
        g.evaluate(xa)
        - g.evaluate_many(pts)
        - np.einsum("ij,ij->i", xa[None, :] - pts, grads)
    )


def three_point_residual(g: BregmanGenerator, x, y, z) -> float:
    """Defect of D(x,z) = D(x,y) + D(y,z) + <x - y, grad g(y) - grad g(z)>.

    Zero up to rounding for every generator; nonzero values signal a broken
    gradient oracle.
    """
    xa = g.check_point(x)
    ya = g.check_point(y)
    za = g.check_point(z)
    lhs = bregman_distance(g, xa, za)
    rhs = bregman_distance(g, xa, ya) + bregman_distance(g, ya, za)
    cross = fsum_dot(xa - ya, g.gradient(ya) - g.gradient(za))
    return lhs - rhs - cross


def gradient_check(g: BregmanGenerator, x, step: float) -> float:
    """Max coordinatewise gap between central differences and the gradient."""
    xa = g.check_point(x)
    if step <= 0:
        raise ValueError("step must be positive")
    grad = g.gradient(xa)
    worst = 0.0
    for i in range(g.dimension):
        plus = xa.copy()
        minus = xa.copy()
        plus[i] += step
        minus[i] -= step
        if not (g.domain_contains(plus) and g.domain_contains(minus)):
            raise DomainError(
                f"step {step:g} leaves the domain of '{g.name}' at coordinate {i}"
            )
        diff = (g.evaluate(plus) - g.evaluate(minus)) / (2.0 * step)
        worst = max(worst, abs(diff - grad[i]))
    return worst


def asymmetry_witness(g: BregmanGenerator, x, y):
    """The ordered pair (D(x, y), D(y, x)); equal only for symmetric cases."""
    return bregman_distance(g, x, y), bregman_distance(g, y, x)


# ---------------------------------------------------------------------------
# Matrix divergences on symmetric positive-definite matrices.
# ---------------------------------------------------------------------------

MATRIX_DIVERGENCE_KINDS = ("classical", "umegaki", "quantum")


def check_pd_matrix(A, *, floor: float = PD_FLOOR):
    """Validate symmetry and strict positive-definiteness; return (A, eigh).

    Symmetry is required to machine tolerance; eigenvalues at or below the
    floor raise :class:`NotPositiveDefinite`.
    """
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    if not np.allclose(arr, arr.T, atol=1e-10 * (1.0 + scale), rtol=0.0):
        raise NotPositiveDefinite("matrix is not symmetric to machine tolerance")
    sym = 0.5 * (arr + arr.T)
    w, v = np.linalg.eigh(sym)
    if w.min() <= floor:
        raise NotPositiveDefinite(
            f"minimum eigenvalue {w.min():.3e} is at or below the floor {floor:g}"
        )
    return sym, (w, v)


def _matrix_function(w, v, fn):
    return (v * fn(w)) @ v.T


def matrix_divergence(kind: str, A, B) -> float:
    """Divergence between positive-definite matrices, by eigendecomposition.

    ``classical``: trace(A^2) + trace(B^2) - 2 trace(BA) (the squared
    Frobenius distance, written as trace arithmetic).  ``umegaki``:
    trace[A (log A - log B)].  ``quantum``: squared Hilbert-Schmidt norm of
    sqrt(A) - sqrt(B).
    """
    if kind not in MATRIX_DIVERGENCE_KINDS:
        raise ValueError(
            f"unknown matrix divergence '{kind}'; known: {', '.join(MATRIX_DIVERGENCE_KINDS)}"
        )
    Am, (wa, va) = check_pd_matrix(A)
    Bm, (wb, vb) = check_pd_matrix(B)
    if Am.shape != Bm.shape:
        raise DimensionMismatch(f"matrix shapes differ: {Am.shape} vs {Bm.shape}")
    if kind == "classical":
        return (
            float(np.trace(Am @ Am))
            + float(np.trace(Bm @ Bm))
            - 2.0 * float(np.trace(Bm @ Am))
        )
    if kind == "umegaki":
        log_a = _matrix_function(wa, va, np.log)
        log_b = _matrix_function(wb, vb, np.log)
        return fsum_dot(Am, log_a - log_b)
    sqrt_a = _matrix_function(wa, va, np.sqrt)
    sqrt_b = _matrix_function(wb, vb, np.sqrt)
    diff = sqrt_a - sqrt_b
    return fsum_dot(diff, diff)


def scalar_divergence(kind: str, x, y) -> float:
    """Coordinatewise counterpart of :func:`matrix_divergence`.

    On diagonal matrices the matrix forms reduce to these sums over the
    diagonals: classical -> sum (x-y)^2, umegaki -> sum x (log x - log y),
    quantum -> sum (sqrt x - sqrt y)^2.
    """
    if kind not in MATRIX_DIVERGENCE_KINDS:
        raise ValueError(
            f"unknown matrix divergence '{kind}'; known: {', '.join(MATRIX_DIVERGENCE_KINDS)}"
        )
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise DimensionMismatch(f"expected equal-length vectors, got {xa.shape}, {ya.shape}")
    if np.any(xa <= PD_FLOOR) or np.any(ya <= PD_FLOOR):
        raise NotPositiveDefinite(f"coordinates must exceed the floor {PD_FLOOR:g}")
    if kind == "classical":
        return math.fsum(((xa - ya) ** 2).tolist())
    if kind == "umegaki":
        return math.fsum((xa * (np.log(xa) - np.log(ya))).tolist())
    return math.fsum(((np.sqrt(xa) - np.sqrt(ya)) ** 2).tolist())
