from __future__ import annotations


class StateError(ValueError):
    """Matrix or parameter set that is not a valid quantum state."""


class SubsystemError(ValueError):
    """Subsystem index outside the state's tensor structure."""


class DimensionMismatchError(ValueError):
    pass


class ChannelError(ValueError):
    """Kraus list violating completeness or the target dimension."""


class ConfigError(ValueError):
    pass


class ClaimComputationError(RuntimeError):
    def __init__(self, claim_id: str, cause: BaseException):
        super().__init__(f"claim {claim_id!r} failed: {cause}")
        self.claim_id = claim_id
        self.cause = cause


class NoiseRegimeWarning(UserWarning):
    """Channel noise below the zero-capacity regime of the phase flip channel."""
