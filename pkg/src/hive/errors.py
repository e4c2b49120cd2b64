"""Exception hierarchy for the hive engine."""


class HiveError(Exception):
    """Base class for all engine errors."""


class MalformedDocument(HiveError):
    """Config document cannot be parsed as structured text."""


class DimensionMismatch(HiveError):
    """Array length in a config document disagrees with the declared S or M."""


class DomainViolation(HiveError):
    """A parameter value violates a positivity / simplex / row-sum constraint."""


class NoActiveFamily(HiveError):
    """Every family population is zero; the allocation problem is empty."""


class SolverDivergence(HiveError):
    """The dual Newton solver and the primal fallback both failed."""


class NonFiniteOutput(HiveError):
    """A family output of zero makes utility unbounded below (sigma >= 1)."""


class TooLarge(HiveError):
    """Problem dimensions exceed a brute-force guard."""


class AllocationFailure(HiveError):
    """Inner allocation failed while evaluating marginal values."""


class StepFailure(HiveError):
    """The allocation solver failed inside an integrator stage."""


class MaxIterations(HiveError):
    """An iterative scheme hit its iteration cap before converging."""


class NoConvergence(HiveError):
    """Newton steady-state search failed to converge."""


class FDFailure(HiveError):
    """A finite-difference probe point could not be evaluated."""
