"""Exception types shared across cvrlab modules."""


class CvrlabError(Exception):
    """Base class for all cvrlab errors."""


class ConfigurationError(CvrlabError):
    """Invalid configuration value (empty radius set, bad horizon, ...)."""


class SizeLimitError(CvrlabError):
    """Problem exceeds a solver's configured size budget."""


class InfeasibleError(CvrlabError):
    """No feasible solution exists (e.g. a coalition member owns no customers)."""


class IllegalActionError(CvrlabError):
    """A bargaining action violated a protocol predicate; the message names it."""


class ProtocolError(CvrlabError):
    """The bargaining state machine was driven out of order."""
