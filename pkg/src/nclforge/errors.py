"""Exception hierarchy shared by every module."""


class NclForgeError(Exception):
    """Base class for all errors raised by the toolkit."""


class GraphError(NclForgeError):
    """Malformed graph, unknown ids, or a violated structural invariant."""


class IllegalMoveError(NclForgeError):
    """A move was rejected by the rules of the game it was applied to."""


class BoundExceeded(NclForgeError):
    """A search ran past its state or time budget."""


class ReductionError(NclForgeError):
    """The input graph does not satisfy a reduction's preconditions."""
