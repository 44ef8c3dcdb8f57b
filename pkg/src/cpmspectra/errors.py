"""Exception hierarchy shared by all modules."""


class CpmError(Exception):
    """Base class for every error raised by :mod:`cpmspectra`."""


class InvalidDimensionError(CpmError, ValueError):
    pass


class InvalidFormatError(CpmError, ValueError):
    pass


class InvalidSymbolError(CpmError, ValueError):
    pass


class ConfigError(CpmError, ValueError):
    pass


class NearSingularResolventError(CpmError, ArithmeticError):
    """The resolvent ``(lam*I - F)^-1`` was requested too close to the spectrum of F."""

    def __init__(self, lam, measure, threshold):
        self.lam = complex(lam)
        self.measure = float(measure)
        self.threshold = float(threshold)
        super().__init__(
            f"near-singular resolvent at lambda={self.lam:.6g} "
            f"(measure {self.measure:.3g} < threshold {self.threshold:.3g})"
        )


class StructureViolationError(CpmError, RuntimeError):
    """A block that must be structurally zero carries a nonzero entry."""


class ClassificationError(CpmError, RuntimeError):
    """The per-trajectory chain is not irreducible (parity logic failure)."""
