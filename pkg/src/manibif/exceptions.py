"""Exception and warning types shared across the toolkit."""


class ManibifError(Exception):
    """Base class for all toolkit errors."""


class InvalidParamsError(ManibifError):
    """Deformation parameter vector has the wrong shape or values."""


class DomainError(ManibifError):
    """Coordinate lies outside a non-periodic chart."""


class ExpressionError(ManibifError):
    """Malformed expression string or unknown symbol."""


class ModelInconsistencyError(ManibifError):
    """Model data violates a structural precondition (e.g. a(0,x) != 0)."""


class ConstantCorankViolation(ManibifError):
    """Kernel dimension of the linearisation is not d+k at some sample."""

    def __init__(self, msg, x=None, singular_values=None):
        super().__init__(msg)
        self.x = x
        self.singular_values = singular_values


class NontrivialBundleError(ManibifError):
    """Kernel line bundle is orientation-reversing around the circle."""


class OutsideValidityError(ManibifError):
    """Slave Newton iteration failed to converge inside the validity box."""


class FlatComponentError(ManibifError):
    """No nonvanishing y-derivative up to the probed order."""


class VariantMismatchError(ManibifError):
    """Branching variant preconditions violated (e.g. vanishing r_i for Uniform)."""


class UnsupportedDimensionError(ManibifError):
    """Operation restricted to d = 1 received higher-dimensional data."""


class NoBranchError(ManibifError):
    """No solution found at the smallest parameter value of a trace."""


class QuadraticCaseViolation(ManibifError):
    """Second derivative v''(x1*) vanishes; quadratic reduction unavailable."""


class DegeneracyCheckFailure(ManibifError):
    """Quartic fit found a significant quadratic term (wrong level or mode)."""


class ManibifWarning(UserWarning):
    """Base class for toolkit warnings."""


class NonUnitDirectionWarning(ManibifWarning):
    """Direction vector was not unit length and has been normalised."""


class ConditioningWarning(ManibifWarning):
    """Singular values close to the kernel threshold."""


class WindowWarning(ManibifWarning):
    """Suspiciously many zeros; search window may be too large."""


class BorderlineWarning(ManibifWarning):
    """Near-miss of a resonance/threshold condition."""


class OracleInconsistencyWarning(ManibifWarning):
    """Solution counts jumped by an odd amount between adjacent angles."""
