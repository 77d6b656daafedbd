"""Exception hierarchy shared across the package."""


class CurveShapeError(Exception):
    """Base class for all package errors."""


class DataError(CurveShapeError):
    """Malformed input data, configs, or infeasible model setups."""


class NumericalError(CurveShapeError):
    """Numerical failure inside a solver (rank deficiency, singularity)."""


class DegenerateScaleWarning(UserWarning):
    """A robust scale collapsed to zero and a fallback was applied."""
