"""Exception hierarchy.

Hypothesis failures (the design conditions do not hold for the given data)
are kept apart from solver failures so callers, and the CLI exit codes,
can tell "this point cannot be certified" from "the numerics gave up".
"""


class SwitchctlError(Exception):
    """Base class for all toolkit errors."""


class HypothesisError(SwitchctlError):
    """A hypothesis of the synthesis or certification result is violated."""

    hypothesis = "hypothesis"


class NotSingular(HypothesisError):
    hypothesis = "NotSingular"


class AssumptionViolated(HypothesisError):
    """Zero is a defective eigenvalue of the convex combination."""

    hypothesis = "AssumptionViolated"


class NoEquilibrium(HypothesisError):
    hypothesis = "NoEquilibrium"


class InteriorConditionFailed(HypothesisError):
    hypothesis = "InteriorConditionFailed"


class LmiInfeasible(HypothesisError):
    hypothesis = "LmiInfeasible"


class ParticularNullspaceUnsupported(HypothesisError):
    hypothesis = "ParticularNullspaceUnsupported"


class RankDeficient(HypothesisError):
    """rank(M L) < m, so no local rate can be certified."""

    hypothesis = "RankDeficient"


class SosInfeasible(HypothesisError):
    hypothesis = "SosInfeasible"


class DomainError(SwitchctlError, ValueError):
    """A perturbed simplex vector would leave the simplex."""


class SolverError(SwitchctlError):
    """The numerical backend failed (iteration limit, breakdown)."""


class SimulationDiverged(SwitchctlError):
    pass
