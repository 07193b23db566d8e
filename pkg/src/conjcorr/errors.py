"""Exception hierarchy.

Errors that signal a numerical tolerance being violated derive from
:class:`NumericalToleranceError`; the CLI maps those to a distinct exit code.
"""


class ConjCorrError(Exception):
    """Base class for all package errors."""


class ConfigError(ConjCorrError, ValueError):
    """Malformed or inconsistent run configuration."""


class InvalidRangeError(ConjCorrError, ValueError):
    pass


class LengthMismatchError(ConjCorrError, ValueError):
    pass


class HermiteRangeError(ConjCorrError, ValueError):
    pass


class ZeroStateError(ConjCorrError, ValueError):
    pass


class ScheduleDirectionError(ConjCorrError, ValueError):
    pass


class InsufficientSamplesError(ConjCorrError, ValueError):
    pass


class UnsupportedPairError(ConjCorrError, ValueError):
    """Requested variables do not commute, so no joint density is claimed."""


class UnsupportedPointError(ConjCorrError, ValueError):
    """Conditional quantity requested where the marginal density is below threshold."""


class OutOfSupportError(UnsupportedPointError):
    pass


class NumericalToleranceError(ConjCorrError, ArithmeticError):
    """A numerical accuracy guard tripped."""


class GridTooCoarseError(NumericalToleranceError):
    pass


class GridSpanError(NumericalToleranceError):
    pass


class EdgeLeakageError(NumericalToleranceError):
    pass


class NotNormalizedError(NumericalToleranceError):
    pass


class CoverageError(NumericalToleranceError):
    pass


class DegenerateDensityError(NumericalToleranceError):
    pass


class InfeasibleCombinationError(ConjCorrError):
    """No convex weights in [0, 1] reproduce the target global correlation.

    Carries the numbers so callers can report the outcome instead of failing.
    """

    def __init__(self, quantum_global, global_plus, global_minus):
        self.quantum_global = quantum_global
        self.global_plus = global_plus
        self.global_minus = global_minus
        super().__init__(
            f"quantum global correlation {quantum_global:.6g} lies outside the "
            f"causal range [{global_minus:.6g}, {global_plus:.6g}]"
        )
