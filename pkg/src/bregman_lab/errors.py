"""Exception types shared across the package."""


class BregmanLabError(Exception):
    """Base class for every package-specific failure."""


class DomainError(BregmanLabError):
    """A point lies outside the open domain of a generator."""


class DimensionMismatch(BregmanLabError):
    """Operands disagree on ambient dimension or shape."""


class NotPositiveDefinite(BregmanLabError):
    """A matrix argument is not symmetric positive definite above the eigenvalue floor."""


class NoProgress(BregmanLabError):
    """A backtracking line search stalled before reaching the requested tolerance."""


class DomainExit(BregmanLabError):
    """An iterate left the generator domain and could not be pulled back inside."""


class MaxIterations(BregmanLabError):
    """Iteration budget exhausted before the stopping criterion was met."""


class SamplerFailure(BregmanLabError):
    """A set sampler failed to produce usable points."""


class EmptySet(BregmanLabError):
    """An averaging set, schedule, or box is empty."""


class EmptyModel(BregmanLabError):
    """An attractive-set model holds no constraints."""


class InfeasibleModel(BregmanLabError):
    """Alternating projections diverged; the sampled constraints look inconsistent."""


class ScenarioParseError(BregmanLabError):
    """Scenario file is not valid JSON; carries position information when known."""


class ScenarioValidationError(BregmanLabError):
    """Scenario parsed but violates the schema.  Lists every violation found."""

    def __init__(self, problems, origin=None):
        self.problems = list(problems)
        self.origin = origin
        prefix = f"{origin}: " if origin else ""
        super().__init__(prefix + "; ".join(self.problems))
