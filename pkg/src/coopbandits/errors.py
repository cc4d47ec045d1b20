"""Exception types raised by the simulator.

Everything derives from SimulationError so callers can catch broadly;
validation-style errors also derive from ValueError.
"""


class SimulationError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SimulationError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class InvariantViolationError(SimulationError):
    """A runtime invariant check failed (debug mode)."""


# --- environment / instance construction ---

class NonDecreasingMeansError(SimulationError, ValueError):
    """Arm means are not strictly decreasing."""


class MeanOutOfRangeError(SimulationError, ValueError):
    """An arm mean lies outside [0, b]."""


class EmptyArmSetError(SimulationError, ValueError):
    """An agent has an empty arm set."""


class SingletonArmSetError(SimulationError, ValueError):
    """A heterogeneous agent has fewer than two arms."""


class InfeasibleGapBudgetError(SimulationError, ValueError):
    """Requested mean gaps cannot fit in the sampling interval."""


class ArmOutOfRangeError(SimulationError, IndexError):
    """Arm id outside 1..K."""


class AgentOutOfRangeError(SimulationError, IndexError):
    """Agent id outside 1..M."""


class UnknownFixtureError(SimulationError, KeyError):
    """No fixture registered under the requested name."""


# --- victim algorithms ---

class ZeroCountError(SimulationError, ValueError):
    """A statistic that requires at least one sample was queried at count 0."""


class HeterogeneousNotSupportedError(SimulationError, ValueError):
    """Algorithm only runs on homogeneous instances."""


# --- attack strategies ---

class TargetArmPulledError(SimulationError, ValueError):
    """Attack value requested for the target arm itself."""


class NotTargetAgentError(SimulationError, ValueError):
    """Attack value requested for an agent outside the target agent set."""


class ArmNotAttackedError(SimulationError, ValueError):
    """Attack value requested for an arm outside the attacked arm set."""


class ZeroGapError(SimulationError, ValueError):
    """A strictly positive mean gap parameter was zero."""


class EmptyResidualArmSetError(SimulationError, ValueError):
    """An affected agent has no arm left outside the attacked set."""


class WrongStageError(SimulationError, ValueError):
    """Learning-stage operation invoked outside the learning stage."""


class NotAtThresholdError(SimulationError, ValueError):
    """Recovery requested for an arm that has not just reached the threshold."""


class TooLargeError(SimulationError, ValueError):
    """Exhaustive enumeration refused: instance too large."""


class DegenerateGapError(SimulationError, ValueError):
    """A mean gap appearing in a denominator is zero."""


class MissingParamError(SimulationError, ValueError):
    """A bound formula is missing a required parameter."""


# --- metrics ---

class ModeMismatchError(SimulationError, ValueError):
    """Regret mode incompatible with the instance."""
