"""Set oracles and divergence-minimizing projections.

Euclidean projections are checked against cvxpy (an entirely independent
QP route); the KL projection onto the simplex is checked against a dense
grid search.  Certificate and variational-inequality checks are exercised
both at true projections (must accept) and at deliberately wrong points
(must reject).
"""

import math

import cvxpy as cp
import numpy as np
import pytest

from bregman_lab.errors import (
    DimensionMismatch,
    EmptySet,
    InfeasibleModel,
    SamplerFailure,
)
from bregman_lab.generators import bregman_distance, bregman_distance_many, make_generator
from bregman_lab.sets import (
    ball_set,
    box_set,
    bregman_project,
    circle_set,
    dykstra_halfspaces,
    euclid_project_simplex,
    halfspace_set,
    make_set,
    projection_certificate,
    simplex_set,
    variational_inequality,
)


def cvxpy_project(x, constraints_for):
    """Minimum-norm point of a cvxpy-described set: the independent oracle."""
    p = cp.Variable(len(x))
    problem = cp.Problem(cp.Minimize(cp.sum_squares(p - x)), constraints_for(p))
    problem.solve()
    assert problem.status == cp.OPTIMAL
    return np.asarray(p.value)


# ---------------------------------------------------------------------------
# Euclidean oracles against cvxpy.
# ---------------------------------------------------------------------------


def test_ball_projection_matches_cvxpy(rng):
    C = ball_set([0.5, -1.0, 0.0], 2.0)
    for _ in range(10):
        x = rng.standard_normal(3) * 4.0
        ours = C.euclid_project(x)
        oracle = cvxpy_project(x, lambda p: [cp.norm(p - np.array([0.5, -1.0, 0.0])) <= 2.0])
        assert np.linalg.norm(ours - oracle) < 1e-6


def test_box_projection_matches_cvxpy(rng):
    lo, hi = np.array([-1.0, 0.0]), np.array([1.0, 3.0])
    C = box_set(lo, hi)
    for _ in range(10):
        x = rng.standard_normal(2) * 4.0
        ours = C.euclid_project(x)
        oracle = cvxpy_project(x, lambda p: [p >= lo, p <= hi])
        assert np.linalg.norm(ours - oracle) < 1e-6


def test_simplex_projection_matches_cvxpy(rng):
    for _ in range(20):
        x = rng.standard_normal(4) * 2.0
        ours = euclid_project_simplex(x)
        oracle = cvxpy_project(x, lambda p: [cp.sum(p) == 1.0, p >= 0.0])
        assert np.linalg.norm(ours - oracle) < 1e-6


def test_dykstra_matches_cvxpy_on_random_feasible_systems(rng):
    for _ in range(10):
        A = rng.standard_normal((5, 3))
        interior = rng.standard_normal(3)
        b = A @ interior + rng.uniform(0.1, 1.0, size=5)
        x = rng.standard_normal(3) * 3.0
        ours, sweeps = dykstra_halfspaces(A, b, x)
        oracle = cvxpy_project(x, lambda p: [A @ p <= b])
        assert np.linalg.norm(ours - oracle) < 1e-5
        assert sweeps <= 1000


def test_dykstra_short_circuits_on_feasible_input():
    A = np.array([[1.0, 0.0]])
    b = np.array([1.0])
    inside = np.array([0.0, 5.0])
    point, sweeps = dykstra_halfspaces(A, b, inside)
    assert sweeps == 0
    assert point is not inside  # a copy, never an alias
    np.testing.assert_array_equal(point, inside)


def test_dykstra_flags_inconsistent_constraints():
    # x <= -1 together with x >= 1 is empty.
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])
    with pytest.raises(InfeasibleModel):
        dykstra_halfspaces(A, b, np.array([0.0]), max_sweeps=50)


def test_dykstra_rejects_zero_normals():
    with pytest.raises(ValueError, match="nonzero"):
        dykstra_halfspaces(np.zeros((1, 2)), np.ones(1), np.zeros(2))


# ---------------------------------------------------------------------------
# Set construction and membership.
# ---------------------------------------------------------------------------


def test_make_set_dispatch_and_validation():
    assert make_set({"set": "ball", "center": [0.0], "radius": 1.0}).name == "ball"
    assert make_set({"set": "simplex"}, dimension=3).dimension == 3
    with pytest.raises(ValueError, match="unknown set kind"):
        make_set({"set": "polytope"})
    with pytest.raises(ValueError, match="'set' field"):
        make_set({"kind": "ball"})
    with pytest.raises(EmptySet):
        box_set([0.0, 0.0], [1.0, -1.0])
    with pytest.raises(ValueError, match="radius"):
        ball_set([0.0], -1.0)
    with pytest.raises(ValueError, match="dimension"):
        halfspace_set([], [])
    with pytest.raises(DimensionMismatch):
        circle_set([0.0, 0.0, 0.0], 1.0)


def test_unconstrained_halfspace_set_is_whole_space(rng):
    C = halfspace_set([], [], dimension=2, radius=4.0)
    assert C.violation(np.array([100.0, -50.0])) == -math.inf
    z = C.sample(rng)
    assert z.shape == (2,)
    np.testing.assert_array_equal(C.euclid_project(np.array([3.0, 4.0])), [3.0, 4.0])


def test_violation_signs_and_contains():
    C = ball_set([0.0, 0.0], 1.0)
    assert C.violation(np.array([0.5, 0.0])) < 0
    assert C.violation(np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert C.contains([1.0, 0.0], tol=1e-9)
    assert not C.contains([1.1, 0.0], tol=1e-9)
    many = C.violation_many(np.array([[0.0, 0.0], [3.0, 0.0]]))
    np.testing.assert_allclose(many, [-1.0, 2.0])


def test_samplers_stay_in_their_sets(rng):
    sets = [
        ball_set([1.0, 2.0], 0.5),
        box_set([-1.0, 0.0], [1.0, 2.0]),
        simplex_set(3),
        halfspace_set([[1.0, 0.0]], [0.5], radius=3.0),
        circle_set([0.0, 0.0], 2.0),
    ]
    for C in sets:
        for _ in range(50):
            assert C.violation(C.sample(rng)) <= 1e-9


def test_simplex_sampler_floor_failure():
    C = simplex_set(2, sample_floor=0.9)  # impossible: both coords >= 0.9
    with pytest.raises(SamplerFailure):
        C.sample(np.random.default_rng(0))


def test_circle_center_projects_to_fixed_spot():
    C = circle_set([1.0, 1.0], 2.0)
    np.testing.assert_allclose(C.euclid_project(np.array([1.0, 1.0])), [3.0, 1.0])
    assert C.convex is False


# ---------------------------------------------------------------------------
# Divergence-minimizing projection.
# ---------------------------------------------------------------------------


def test_sq_norm_projection_equals_euclidean(rng):
    g = make_generator("sq_norm", 2)
    C = ball_set([0.0, 0.0], 1.0)
    for _ in range(10):
        x = rng.standard_normal(2) * 3.0
        result = bregman_project(g, C, x)
        np.testing.assert_allclose(result.point, C.euclid_project(x), atol=1e-8)


def test_projection_of_interior_point_is_identity():
    g = make_generator("sq_norm", 2)
    C = box_set([-1.0, -1.0], [1.0, 1.0])
    result = bregman_project(g, C, [0.3, -0.4])
    np.testing.assert_allclose(result.point, [0.3, -0.4], atol=1e-12)
    assert result.iterations == 0


def test_kl_projection_onto_simplex_matches_grid_oracle():
    # Minimizing y -> D(y, x) for the entropy generator over the simplex is
    # the generalized I-projection; for x = (0.2, 0.2) symmetry forces
    # (0.5, 0.5), and a dense 1-d grid search agrees.
    g = make_generator("neg_entropy", 2)
    C = simplex_set(2)
    x = np.array([0.2, 0.2])
    result = bregman_project(g, C, x)
    np.testing.assert_allclose(result.point, [0.5, 0.5], atol=1e-6)
    ts = np.linspace(1e-4, 1.0 - 1e-4, 9999)
    values = bregman_distance_many(g, np.column_stack([ts, 1.0 - ts]), x)
    t_star = ts[int(np.argmin(values))]
    assert abs(t_star - result.point[0]) < 1e-4


def test_kl_projection_onto_shifted_box(rng):
    # Coordinates decouple: minimize y log(y/x) - y + x over [lo, hi] per
    # coordinate; the unconstrained minimizer is y = x, so the solution is
    # the clamp of x into the box.
    g = make_generator("neg_entropy", 2)
    C = box_set([0.5, 0.5], [2.0, 2.0])
    x = np.array([0.1, 1.3])
    result = bregman_project(g, C, x)
    np.testing.assert_allclose(result.point, [0.5, 1.3], atol=1e-7)


def test_projection_refused_without_strong_coercivity():
    g = make_generator("mat_quantum", 2)
    C = box_set([1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError, match="coercive"):
        bregman_project(g, C, [1.5, 1.5])


def test_projection_on_circle_terminates_despite_nonconvexity():
    # From the center every step of the gradient map can return the iterate
    # itself; the stall exit must fire instead of the iteration cap.
    g = make_generator("sq_norm", 2)
    C = circle_set([0.0, 0.0], 1.0)
    result = bregman_project(g, C, [2.0, 0.0])
    np.testing.assert_allclose(result.point, [1.0, 0.0], atol=1e-8)
    result = bregman_project(g, C, [0.0, 0.0])
    assert abs(np.linalg.norm(result.point) - 1.0) < 1e-8


# ---------------------------------------------------------------------------
# Certificates.
# ---------------------------------------------------------------------------


def test_certificate_and_vi_accept_true_projections(rng):
    g = make_generator("sq_norm", 3)
    cases = [
        (ball_set([0.0, 0.0, 0.0], 1.0), rng.standard_normal(3) * 2.0),
        (box_set([-1.0] * 3, [1.0] * 3), rng.standard_normal(3) * 2.0),
        (simplex_set(3), rng.standard_normal(3)),
    ]
    for C, x in cases:
        xhat = bregman_project(g, C, x).point
        assert projection_certificate(g, C, x, xhat, sample_count=500, seed=3) <= 1e-6
        assert variational_inequality(g, C, x, xhat, sample_count=500, seed=3) >= -1e-9


def test_certificate_and_vi_reject_wrong_points():
    g = make_generator("sq_norm", 2)
    C = ball_set([0.0, 0.0], 1.0)
    x = np.array([3.0, 0.0])
    wrong = np.array([0.0, 1.0])  # on the set but far from the projection (1, 0)
    assert projection_certificate(g, C, x, wrong, sample_count=500, seed=3) > 1e-3
    assert variational_inequality(g, C, x, wrong, sample_count=500, seed=3) < -1e-3


def test_certificate_identity_under_sq_norm(rng):
    # For the squared norm the certificate expression telescopes to
    # 2 <y - xhat, xhat - x>, so at the Euclidean projection on a ball the
    # max over the set is exactly 0 (attained at y = xhat).
    g = make_generator("sq_norm", 2)
    C = ball_set([0.0, 0.0], 1.0)
    x = np.array([2.0, 0.0])
    xhat = np.array([1.0, 0.0])
    value = projection_certificate(g, C, x, xhat, sample_count=2000, seed=9)
    assert value <= 1e-12
