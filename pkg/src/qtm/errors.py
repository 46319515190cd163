"""Exception types raised by the library."""


class QTMError(Exception):
    """Base class for every error raised by :mod:`qtm`."""


class NotHermitian(QTMError, ValueError):
    pass


class NoConvergence(QTMError, RuntimeError):
    pass


class DimensionMismatch(QTMError, ValueError):
    pass


class NotPositive(QTMError, ValueError):
    """A would-be density operator has an eigenvalue below -1e-12."""


class NotUnitary(QTMError, ValueError):
    pass


class InvalidObservable(QTMError, ValueError):
    """Observable violates the ``lambda_min(G) = 0`` convention."""


class DegenerateObservable(QTMError, ValueError):
    """``E[G^r]`` vanishes, so moment ratios are undefined."""


class Saturated(QTMError, ValueError):
    """The zero-outcome probability (or its bound) reached 1."""


class ValidityViolated(QTMError, ValueError):
    """Coherent-bound precondition ``(d_S/d_E) e^{-Phi} - d_S lambda_min C > 0`` fails."""


class InfeasibleSaturation(QTMError, ValueError):
    pass


class TooManyAncillae(QTMError, ValueError):
    pass


class IrreversibleEdge(QTMError, ValueError):
    """A one-way transition makes the maximal rate ratio infinite."""


class ConfigError(QTMError, ValueError):
    pass
