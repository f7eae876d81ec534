"""Exception and warning types shared across the package."""


class ConsensusLabError(Exception):
    """Base class for all package errors."""


class GraphError(ConsensusLabError, ValueError):
    pass


class IndexOutOfRange(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DisconnectedGraph(GraphError):
    pass


class NoConvergence(ConsensusLabError, ArithmeticError):
    """An iterative numerical routine exhausted its iteration budget."""


class NoRoot(ConsensusLabError, ArithmeticError):
    pass


class MarginalStability(ConsensusLabError):
    """A characteristic root sits on the unit circle to within tolerance."""


class StepsizeOutOfRange(ConsensusLabError, ValueError):
    pass


class ConfigMismatch(ConsensusLabError, ValueError):
    pass


class LengthMismatch(ConsensusLabError, ValueError):
    pass


class InsufficientData(ConsensusLabError, ValueError):
    pass


class DegenerateModeWarning(UserWarning):
    """A mode with delta*lambda == 1 was met in the acceleration bound."""
