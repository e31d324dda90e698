"""Box averages, translation defects, and orbit barycenters.

The halving map's orbit is the geometric sequence 2^{-s}, whose box sums are
exact dyadic rationals, so averages and defects here are pinned to equality,
not tolerance.  The minimizer identity is algebraic and must hold at rounding
level for every box size; tests check both the residual and the argmin
consequence it encodes.
"""

import math

import numpy as np
import pytest

from bregman_lab.actions import CoefficientFunction, make_action
from bregman_lab.errors import DomainError, EmptySet
from bregman_lab.generators import bregman_distance, bregman_distance_many, make_generator
from bregman_lab.means import (
    ApproximateMean,
    FolnerBox,
    FolnerSchedule,
    barycenter,
    barycenter_converge,
    barycenter_in_set,
    invariance_defect,
    make_schedule,
    mean_value,
    minimizer_identity_residual,
    minimizer_identity_scale,
    shifted_schedule,
)
from bregman_lab.sets import ball_set, box_set, circle_set, halfspace_set


def halving_action(base=1.0):
    C = box_set([-1.0], [1.0])
    return make_action([{"kind": "scaling", "factor": 0.5}], C, [base])


def rotation_action(angle=1.0):
    C = ball_set([0.0, 0.0], 1.0)
    return make_action([{"kind": "rotation", "angle": angle}], C, [1.0, 0.0])


# ---------------------------------------------------------------------------
# Boxes and schedules.
# ---------------------------------------------------------------------------


def test_box_size_translation_and_description():
    box = FolnerBox((4, 9), (0, 0))
    assert box.size == 50
    moved = box.translated((2, 3))
    assert moved.sides == (4, 9) and moved.shift == (2, 3)
    assert box.describe() == {"sides": [4, 9], "shift": [0, 0], "size": 50}
    with pytest.raises(ValueError):
        box.translated((1,))


def test_make_schedule_kinds_and_validation():
    schedule = make_schedule({"kind": "boxes", "sizes": [10, 100]}, k=2)
    assert [b.sides for b in schedule.boxes] == [(10, 10), (100, 100)]
    assert schedule.largest().sides == (100, 100)

    shifted = make_schedule({"kind": "shifted_boxes", "sizes": [5], "shift": [1, 2]}, k=2)
    assert shifted.boxes[0].shift == (1, 2)

    custom = make_schedule(
        {"kind": "custom", "entries": [{"sides": [3, 4], "shift": [1, 0]}]}, k=2
    )
    assert custom.boxes[0].sides == (3, 4)

    with pytest.raises(ValueError, match="unknown schedule kind"):
        make_schedule({"kind": "spiral", "sizes": [1]}, k=1)
    with pytest.raises(ValueError, match="strictly increasing"):
        make_schedule({"kind": "boxes", "sizes": [10, 10]}, k=1)
    with pytest.raises(EmptySet):
        make_schedule({"kind": "boxes", "sizes": []}, k=1)
    with pytest.raises(ValueError, match="arity"):
        make_schedule({"kind": "shifted_boxes", "sizes": [5], "shift": [1]}, k=2)


def test_shifted_schedule_translates_every_box():
    schedule = make_schedule({"kind": "boxes", "sizes": [2, 5]}, k=1)
    moved = shifted_schedule(schedule, (3,))
    assert [b.shift for b in moved.boxes] == [(3,), (3,)]


# ---------------------------------------------------------------------------
# Averages of the geometric sequence: exact dyadic oracles.
# ---------------------------------------------------------------------------


def test_mean_of_geometric_sequence_is_exact():
    # f(s) = 2^{-s}; sum over {0..9} = 2 - 2^{-9}, so the average is exactly
    # (2 - 2^{-9}) / 10 = 0.1998046875.
    action = halving_action()
    f = CoefficientFunction("linear", action, np.array([1.0]))
    value = mean_value(ApproximateMean(FolnerBox((9,), (0,))), f)
    assert value == 0.1998046875


def test_unit_shift_defect_at_n_nine_is_exact():
    # Translate {0..9} by 1: the average becomes (1 - 2^{-10}) / 10 and the
    # defect telescopes to (1 - 2^{-9} + 2^{-10}) / 10 = 0.09990234375.
    action = halving_action()
    f = CoefficientFunction("linear", action, np.array([1.0]))
    defect = invariance_defect(FolnerBox((9,), (0,)), f, (1,))
    assert defect == 0.09990234375
    assert abs(defect - 0.0999) <= 1e-4


def test_defect_times_box_size_respects_boundary_bound():
    # |avg over translated box - avg| <= 2 sup|f| k / (N+1); here sup|f| = 1
    # and k = 1, so defect * (N+1) <= 2 for every N.
    action = halving_action()
    f = CoefficientFunction("linear", action, np.array([1.0]))
    for n in (100, 1000, 10000):
        defect = invariance_defect(FolnerBox((n,), (0,)), f, (1,))
        assert defect * (n + 1) <= 2.0


def test_mean_is_positive_and_normalized():
    # Averaging the constant 1 gives exactly 1 (normalization); averaging a
    # nonnegative sequence is nonnegative (positivity).
    action = rotation_action()
    box = FolnerBox((25,), (0,))
    g = make_generator("sq_norm", 2)
    const = CoefficientFunction("dist_to", action, np.array([0.0, 0.0]), g=g)
    assert mean_value(box, const) == pytest.approx(1.0, abs=1e-14)  # |T_s c|^2 = 1
    nonneg = CoefficientFunction("dist_to", action, np.array([0.2, 0.1]), g=g)
    assert mean_value(box, nonneg) >= 0.0


def test_barycenter_of_halving_orbit_is_exact():
    action = halving_action()
    z = barycenter(action, FolnerBox((9,), (0,)))
    assert z[0] == 0.1998046875


def test_barycenter_is_linear_in_the_datum(rng):
    # <barycenter, d> must equal the averaged linear coefficient for any d.
    action = rotation_action()
    box = FolnerBox((50,), (0,))
    z = barycenter(action, box)
    for _ in range(10):
        d = rng.standard_normal(2)
        f = CoefficientFunction("linear", action, d)
        assert mean_value(box, f) == pytest.approx(float(z @ d), abs=1e-13)


# ---------------------------------------------------------------------------
# Convergence along schedules.
# ---------------------------------------------------------------------------


def test_barycenter_converge_walks_until_cauchy():
    action = rotation_action()
    schedule = make_schedule({"kind": "boxes", "sizes": [10, 100, 1000, 10000]}, k=1)
    result = barycenter_converge(action, schedule, tol=1e-2)
    assert result.converged
    assert result.cauchy_gap < 1e-2
    assert result.box.sides in [(100,), (1000,)]  # stops as soon as Cauchy
    assert len(result.schedule_tail) < len(schedule.boxes) + 1


def test_single_box_schedule_converges_trivially():
    action = rotation_action()
    schedule = make_schedule({"kind": "boxes", "sizes": [50]}, k=1)
    result = barycenter_converge(action, schedule, tol=1e-12)
    assert result.converged and result.cauchy_gap == 0.0


def test_non_convergence_is_counted_not_fatal():
    C = halfspace_set([], [], dimension=1, radius=4.0)
    action = make_action([{"kind": "scaling", "factor": 2.0}], C, [1.0])
    schedule = make_schedule({"kind": "boxes", "sizes": [5, 10]}, k=1)
    result = barycenter_converge(action, schedule, tol=1e-8)
    assert not result.converged
    assert action.warnings.as_dict()["no_convergence"] == 1


def test_converge_attaches_identity_and_set_residuals():
    action = rotation_action()
    g = make_generator("sq_norm", 2)
    schedule = make_schedule({"kind": "boxes", "sizes": [10, 100]}, k=1)
    result = barycenter_converge(action, schedule, tol=10.0, g=g, probe=[0.3, 0.3])
    assert result.minimizer_residual is not None and result.minimizer_residual < 1e-12
    assert result.in_set_residual is not None and result.in_set_residual < 1e-6


# ---------------------------------------------------------------------------
# The minimizer identity: exact for every box size.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("side", [1, 10, 100, 1000])
def test_minimizer_identity_is_box_size_independent(side):
    action = rotation_action()
    g = make_generator("sq_norm", 2)
    box = FolnerBox((side,), (0,))
    residual = minimizer_identity_residual(g, action, box, [0.3, -0.2])
    scale = minimizer_identity_scale(g, action, box, [0.3, -0.2])
    assert residual < 1e-10 * (1.0 + scale)


def test_minimizer_identity_for_entropy_on_the_simplex():
    from bregman_lab.sets import simplex_set

    g = make_generator("neg_entropy", 2)
    C = simplex_set(2)
    action = make_action(
        [{"kind": "affine", "matrix": [[0.5, 0.5], [0.5, 0.5]], "offset": [0.0, 0.0]}],
        C, [0.3, 0.7],
    )
    box = FolnerBox((100,), (0,))
    residual = minimizer_identity_residual(g, action, box, [0.2, 0.8])
    scale = minimizer_identity_scale(g, action, box, [0.2, 0.8])
    assert residual < 1e-10 * (1.0 + scale)


def test_minimizer_identity_implies_argmin(rng):
    # avg_s D(T_s c, x) - avg_s D(T_s c, z) = D(z, x) >= 0: no probe beats
    # the barycenter.
    action = rotation_action()
    g = make_generator("sq_norm", 2)
    box = FolnerBox((200,), (0,))
    orbit = action.orbit(box.sides)
    z = barycenter(action, box)
    mean_at_z = math.fsum(bregman_distance_many(g, orbit, z).tolist()) / box.size
    for _ in range(10):
        x = rng.standard_normal(2)
        mean_at_x = math.fsum(bregman_distance_many(g, orbit, x).tolist()) / box.size
        assert mean_at_x >= mean_at_z - 1e-12
        assert mean_at_x - mean_at_z == pytest.approx(
            bregman_distance(g, z, x), abs=1e-10
        )


def test_identity_rejects_out_of_domain_averages():
    # The sign flip's orbit {1, -1} averages to 0, outside the entropy
    # domain; the identity must refuse, not fabricate.
    g = make_generator("neg_entropy", 1)
    C = box_set([-1.0], [1.0])
    action = make_action([{"kind": "scaling", "factor": -1.0}], C, [1.0])
    with pytest.raises(DomainError):
        minimizer_identity_residual(g, action, FolnerBox((1,), (0,)), [0.5])


# ---------------------------------------------------------------------------
# Set membership of barycenters.
# ---------------------------------------------------------------------------


def test_barycenter_lands_in_convex_sets():
    action = rotation_action()
    g = make_generator("sq_norm", 2)
    residual = barycenter_in_set(g, action, FolnerBox((500,), (0,)))
    assert residual < 1e-6


def test_barycenter_misses_the_nonconvex_circle():
    C = circle_set([0.0, 0.0], 1.0)
    action = make_action([{"kind": "rotation", "angle": 1.0}], C, [1.0, 0.0])
    g = make_generator("sq_norm", 2)
    residual = barycenter_in_set(g, action, FolnerBox((1000,), (0,)))
    assert residual > 0.9  # the average sits near the center, radius away
