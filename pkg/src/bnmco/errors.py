"""Exception types shared across the planner pipeline."""


class BnmcoError(Exception):
    """Base class for all planner errors."""


class ScenarioFormatError(BnmcoError):
    """A scenario or config file is malformed; message names the offending field."""


class DegenerateBatchError(BnmcoError):
    """Every sample in a batch carried zero density mass."""


class SeedingFailedError(BnmcoError):
    """All uniform seed waypoints were deleted by the likelihood filter."""


class ExpansionFailedError(BnmcoError):
    """Net expansion produced two degenerate batches in a row.

    Carries the partially built net for post-mortem inspection.
    """

    def __init__(self, message, net=None):
        super().__init__(message)
        self.net = net


class NoSatisfyingNodeError(BnmcoError):
    """Roadmap construction was asked for a net without a satisfying node."""


class PairingFailedError(BnmcoError):
    """No bridge exists between the two roadmaps."""


class AssemblyFailedError(BnmcoError):
    """No path candidate had both bridge endpoints reachable."""


class GoalSamplingError(BnmcoError):
    """Rejection sampling found no goal-satisfying configuration within the cap."""


class BudgetExceededError(BnmcoError):
    """The wall-clock budget for a single run expired."""


class PlanningFailedError(BnmcoError):
    """Top-level planning failure; records which phase gave up."""

    def __init__(self, message, phase, diagnostics=None):
        super().__init__(message)
        self.phase = phase
        self.diagnostics = diagnostics or {}
