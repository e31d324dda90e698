"""Divergence geometry lab: generators, projections, semigroup averaging.

The package computes Bregman-type divergences from strictly convex
generators, projects onto convex sets by minimizing those divergences,
averages bounded orbits of commuting map families over growing index boxes,
and verifies — at desk scale, with seeded sampling and explicit witnesses —
that the averaged points behave like common fixed points and attractive
points.  The ``bregman-lab`` command drives everything from JSON scenario
files.
"""

from .actions import (
    ActionSpec,
    ClassificationReport,
    CoefficientFunction,
    GeneratorMap,
    apply_element,
    asymptotic_defect,
    check_generalized_hybrid,
    check_nonexpansive,
    check_nonspreading,
    eval_coefficient,
    left_translate,
    make_action,
    make_generator_map,
    orbit_array,
    orbit_bound,
    validate_action,
)
from .errors import (
    BregmanLabError,
    DimensionMismatch,
    DomainError,
    DomainExit,
    EmptyModel,
    EmptySet,
    InfeasibleModel,
    MaxIterations,
    NoProgress,
    NotPositiveDefinite,
    SamplerFailure,
    ScenarioParseError,
    ScenarioValidationError,
)
from .fixed_point import (
    attractive_membership,
    attractive_projection_limit,
    build_attractive_model,
    mean_independence,
    orbit_diagnostics,
    refine_affine_fixed_point,
    sup_inf_sandwich,
    verify_fixed_point,
)
from .generators import (
    BregmanGenerator,
    asymmetry_witness,
    bregman_distance,
    bregman_distance_from_many,
    bregman_distance_many,
    gradient_check,
    make_generator,
    matrix_divergence,
    scalar_divergence,
    three_point_residual,
)
from .means import (
    ApproximateMean,
    BarycenterResult,
    FolnerBox,
    FolnerSchedule,
    barycenter,
    barycenter_converge,
    barycenter_in_set,
    invariance_defect,
    make_schedule,
    mean_value,
    minimizer_identity_residual,
)
from .report import TOOL_VERSION as __version__
from .report import canonical_json, exit_code, render_report, run
from .scenarios import Scenario, load_scenario, scenario_from_dict
from .sets import (
    ConvexSet,
    ProjectionResult,
    bregman_project,
    make_set,
    projection_certificate,
    variational_inequality,
)

__all__ = [
    "ActionSpec",
    "ApproximateMean",
    "BarycenterResult",
    "BregmanGenerator",
    "BregmanLabError",
    "ClassificationReport",
    "CoefficientFunction",
    "ConvexSet",
    "DimensionMismatch",
    "DomainError",
    "DomainExit",
    "EmptyModel",
    "EmptySet",
    "FolnerBox",
    "FolnerSchedule",
    "GeneratorMap",
    "InfeasibleModel",
    "MaxIterations",
    "NoProgress",
    "NotPositiveDefinite",
    "ProjectionResult",
    "SamplerFailure",
    "Scenario",
    "ScenarioParseError",
    "ScenarioValidationError",
    "apply_element",
    "asymmetry_witness",
    "asymptotic_defect",
    "attractive_membership",
    "attractive_projection_limit",
    "barycenter",
    "barycenter_converge",
    "barycenter_in_set",
    "bregman_distance",
    "bregman_distance_from_many",
    "bregman_distance_many",
    "bregman_project",
    "build_attractive_model",
    "canonical_json",
    "check_generalized_hybrid",
    "check_nonexpansive",
    "check_nonspreading",
    "eval_coefficient",
    "exit_code",
    "gradient_check",
    "invariance_defect",
    "left_translate",
    "load_scenario",
    "make_action",
    "make_generator",
    "make_generator_map",
    "make_schedule",
    "make_set",
    "matrix_divergence",
    "mean_independence",
    "mean_value",
    "minimizer_identity_residual",
    "orbit_array",
    "orbit_bound",
    "orbit_diagnostics",
    "projection_certificate",
    "refine_affine_fixed_point",
    "render_report",
    "run",
    "scalar_divergence",
    "scenario_from_dict",
    "sup_inf_sandwich",
    "three_point_residual",
    "validate_action",
    "variational_inequality",
    "verify_fixed_point",
    "__version__",
]
