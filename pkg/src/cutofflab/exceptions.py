"""Exception types raised across the package."""


class CutoffLabError(Exception):
    """Base class."""


class DimensionMismatchError(CutoffLabError, ValueError):
    pass


class GridMismatchError(CutoffLabError, ValueError):
    pass


class PreconditionError(CutoffLabError, ValueError):
    """An operation was called outside the region where its statement applies."""


class NonFiniteError(CutoffLabError, FloatingPointError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class EigensolverError(CutoffLabError, RuntimeError):
    pass


class ProxSolverError(CutoffLabError, RuntimeError):
    """Inner proximal solver hit its iteration cap."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class RejectionLimitError(CutoffLabError, RuntimeError):
    """Restricted Gaussian oracle exhausted ``max_rejection_rounds``."""

    def __init__(self, message, chain=None, step=None):
        super().__init__(message)
        self.chain = chain
        self.step = step


class HorizonError(CutoffLabError, ValueError):
    """A mixing profile never reached the requested threshold."""


class ConfigError(CutoffLabError, ValueError):
    pass
