"""Exception types shared across the package."""

from __future__ import annotations


class CavityAnnealError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CavityAnnealError, ValueError):
    """Invalid geometry, pose or experiment configuration."""


class NumericalError(CavityAnnealError, ArithmeticError):
    """A numerical routine failed an internal accuracy check."""


class ValidationError(CavityAnnealError, ValueError):
    """An input violates a structural precondition (shape, symmetry, ...)."""


class SynthesisError(CavityAnnealError):
    """The mode basis cannot be inverted reliably."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class DegenerateProgramError(CavityAnnealError):
    """The programmed matrix sum vanishes, so no strength can be assigned."""


class PumpSignError(CavityAnnealError, ValueError):
    """Input parameter and detuning signs would require an imaginary pump."""


class InfeasibleSelectionError(CavityAnnealError):
    """The candidate pool cannot supply enough independent modes."""


class ReconstructionError(CavityAnnealError):
    """The readout linear system is rank deficient."""

    def __init__(self, message: str, null_dim: int):
        super().__init__(f"{message} (null-space dimension {null_dim})")
        self.null_dim = null_dim


class IntegrationError(CavityAnnealError):
    """Time integration lost accuracy (norm drift or step underflow)."""


class StageError(CavityAnnealError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
