"""Exception hierarchy.

Everything raised on purpose by this package derives from PrbmLdmError so
callers can catch one base class at the CLI boundary and map it to an exit
code.
"""
from __future__ import annotations


class PrbmLdmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PrbmLdmError, ValueError):
    """A value object was constructed with an out-of-domain field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParameterError(PrbmLdmError, ValueError):
    """A function argument is outside its documented domain."""


class ConfigError(PrbmLdmError):
    """A configuration file is missing, unreadable, or malformed."""


class TraceFileError(PrbmLdmError):
    """A trace CSV failed structural validation.

    row is 1-based (header is row 1) and None when the problem is not tied
    to a single row.
    """

    def __init__(self, path, message: str, row: int | None = None):
        self.path = str(path)
        self.row = row
        where = f"{path}" if row is None else f"{path}, row {row}"
        super().__init__(f"{where}: {message}")


class EstimationError(PrbmLdmError):
    """Identification from a trace is impossible."""


class InsufficientPeaksError(EstimationError):
    def __init__(self, n_found: int):
        self.n_found = n_found
        super().__init__(
            f"need at least 2 oscillation peaks, found {n_found}")


class NonDecayingError(EstimationError):
    """Last peak exceeds the first one, so the decrement would be negative."""


class NotUnderdampedError(EstimationError):
    """Estimated damping ratio is not inside [0, 1)."""


class DegenerateFitError(EstimationError):
    """Regression input has no spread along the raw axis."""


class DivergenceError(PrbmLdmError):
    """Integration produced a non-finite state."""

    def __init__(self, dt_s: float, t_s: float):
        self.dt_s = dt_s
        self.t_s = t_s
        super().__init__(
            f"state became non-finite at t={t_s:.6g} s (dt={dt_s:.6g} s); "
            f"reduce dt_s or check the configuration")


class InstabilityError(PrbmLdmError):
    """A closed-loop run left the plausible operating envelope."""

    def __init__(self, theta_rad: float, t_s: float):
        self.theta_rad = theta_rad
        self.t_s = t_s
        super().__init__(
            f"|theta|={abs(theta_rad):.3g} rad at t={t_s:.6g} s exceeds the "
            f"instability threshold; controller gains are likely unstable "
            f"for this plant")
