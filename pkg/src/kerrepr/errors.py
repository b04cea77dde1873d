"""Exception hierarchy shared by all modules."""


class KerrEPRError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(KerrEPRError, ValueError):
    """A configuration value violates its documented invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class RangeError(KerrEPRError, ValueError):
    """A query falls outside a tabulated range."""


class SteadyStateError(KerrEPRError):
    """A steady state does not satisfy the mean-field equations."""


class ContinuationError(KerrEPRError):
    """Branch tracking could not resolve a gap in the drive grid."""

    def __init__(self, lo: float, hi: float, jump: float):
        self.lo, self.hi, self.jump = lo, hi, jump
        super().__init__(
            f"grid too coarse to track branch between a_in={lo:.6g} and a_in={hi:.6g} "
            f"(state jump {jump:.3g} exceeds continuation tolerance)"
        )


class ThresholdError(KerrEPRError):
    """No oscillation threshold below the configured power ceiling."""

    def __init__(self, ceiling: float, reason: str = ""):
        self.ceiling = ceiling
        msg = f"threshold above ceiling ({ceiling:.6g} W)"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class SingularSpectrumError(KerrEPRError):
    """(i omega I - M_a) is numerically singular."""


class NoEntanglementError(KerrEPRError):
    """C_s never drops below zero on the requested grid."""


class StageAbsentError(SteadyStateError):
    """The requested hysteresis stage does not exist at this drive."""
