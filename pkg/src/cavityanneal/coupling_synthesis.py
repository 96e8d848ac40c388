"""Programming an interaction matrix into per-mode laser input parameters.

A target symmetric matrix ``A`` is expanded in the single-mode matrices
``V_m``; the expansion coefficients are the input parameters ``f_m``.
Finite laser control is modelled by rounding ``f / zeta`` to a fixed step,
and the matrix actually realised is reconstructed from the rounded values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateProgramError, PumpSignError, SynthesisError, ValidationError

MAX_CONDITION = 1e12


def gram_matrix(matrices) -> np.ndarray:
    """G_mn = Tr(V_m V_n^T) for a stack of (M, N, N) matrices."""
    mats = np.asarray(matrices, dtype=float)
    flat = mats.reshape(len(mats), -1)
    g = flat @ flat.T
    return 0.5 * (g + g.T)


def trace_norm(matrix) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)))


def _check_symmetric(a: np.ndarray, name: str = "A") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValidationError(f"{name} is not symmetric")


@dataclass(frozen=True)
class ModeBasis:
    """Single-mode matrices with their Gram matrix and its Cholesky factor."""

    matrices: np.ndarray
    labels: tuple = ()
    gram: np.ndarray = field(init=False, repr=False)
    condition_number: float = field(init=False)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError(f"expected a stack of square matrices, got {mats.shape}")
        object.__setattr__(self, "matrices", mats)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(mats))))
        g = gram_matrix(mats)
        object.__setattr__(self, "gram", g)
        ev = np.linalg.eigvalsh(g)
        cond = float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
        object.__setattr__(self, "condition_number", cond)

    @classmethod
    def from_vectors(cls, vectors, labels: Sequence = ()) -> "ModeBasis":
        v = np.asarray(vectors, dtype=float)
        return cls(np.einsum("mi,mj->mij", v, v), tuple(labels))

    @property
    def size(self) -> int:
        return len(self.matrices)

    @property
    def n_sites(self) -> int:
        return self.matrices.shape[1]

    def combine(self, coefficients) -> np.ndarray:
        return np.tensordot(np.asarray(coefficients, dtype=float), self.matrices, axes=1)

    def factor(self):
        if not self.condition_number <= MAX_CONDITION:
            raise SynthesisError("Gram matrix singular or ill-conditioned", self.condition_number)
        try:
            return cho_factor(self.gram)
        except LinAlgError:
            raise SynthesisError("Gram matrix is not positive definite", self.condition_number)


def synthesize_inputs(a, basis: ModeBasis, zeta: float = 1.0) -> np.ndarray:
    """Input parameters f with sum_m f_m V_m = zeta A when A lies in the span."""
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    rhs = basis.matrices.reshape(basis.size, -1) @ a.ravel()
    return zeta * cho_solve(basis.factor(), rhs)


def quantize_inputs(f, step: float) -> np.ndarray:
    """Round to the nearest multiple of ``step``, ties away from zero."""
    f = np.asarray(f, dtype=float)
    if step <= 0:
        raise ValueError("quantization step must be positive")
    # relative nudge so decimal ties like 0.25/0.1 round away from zero
    k = np.floor(np.abs(f) / step + 0.5 + 1e-9)
    return np.sign(f) * k * step


def recovered_matrix(f_tilde, basis: ModeBasis) -> tuple[np.ndarray, float]:
    """Unit-trace-norm realised matrix and the effective strength zeta'."""
    s = basis.combine(f_tilde)
    strength = trace_norm(s)
    if strength <= 1e-300:
        raise DegenerateProgramError("input parameters realise the zero matrix")
    return s / strength, strength


@dataclass(frozen=True)
class InteractionProgram:
    """A target matrix programmed into a mode basis.

    ``inputs`` and ``quantized`` are in energy units (``zeta`` times the
    dimensionless values). ``recovered`` is sum_m (f~_m / zeta) V_m, i.e. on the
    same scale as ``target``; ``normalized`` is the unit-trace-norm form with
    ``effective_strength`` the trace norm of sum_m f~_m V_m.
    """

    target: np.ndarray
    strength: float
    inputs: np.ndarray
    quantized: np.ndarray
    recovered: np.ndarray
    normalized: np.ndarray
    effective_strength: float
    step: float
    labels: tuple = ()

    @property
    def scaled_inputs(self) -> np.ndarray:
        return self.quantized / self.strength

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.recovered - self.target).max())

    def to_dict(self) -> dict:
        return {
            "target": self.target.tolist(),
            "strength": self.strength,
            "step": self.step,
            "labels": [list(lab) if isinstance(lab, tuple) else lab for lab in self.labels],
            "inputs": self.inputs.tolist(),
            "quantized": self.quantized.tolist(),
            "recovered": self.recovered.tolist(),
            "normalized": self.normalized.tolist(),
            "effective_strength": self.effective_strength,
        }


def program_matrix(a, basis: ModeBasis, zeta: float = 1.0, step: float | None = 0.1) -> InteractionProgram:
    """Synthesize, quantize (step in units of zeta; None or 0 skips) and reconstruct."""
    a = np.asarray(a, dtype=float)
    f = synthesize_inputs(a, basis, zeta)
    if step:
        f_tilde = zeta * quantize_inputs(f / zeta, step)
    else:
        f_tilde = f.copy()
    normalized, eff = recovered_matrix(f_tilde, basis)
    return InteractionProgram(
        target=a, strength=zeta, inputs=f, quantized=f_tilde,
        recovered=basis.combine(f_tilde) / zeta, normalized=normalized,
        effective_strength=eff, step=step or 0.0, labels=basis.labels,
    )


@dataclass(frozen=True)
class PumpSettings:
    """Per-mode pump strength, pump-cavity detuning and field decay rate."""

    strength: np.ndarray
    detuning: np.ndarray
    decay: np.ndarray

    @property
    def input_parameters(self) -> np.ndarray:
        return input_parameters(self.strength, self.detuning, self.decay)

    @property
    def scattering_factor(self) -> np.ndarray:
        """eta^2 / (Delta^2 + kappa^2), the intensity prefactor."""
        return self.strength ** 2 / (self.detuning ** 2 + self.decay ** 2)

    def to_dict(self) -> dict:
        return {
            "strength": self.strength.tolist(),
            "detuning": self.detuning.tolist(),
            "decay": self.decay.tolist(),
        }


def input_parameters(strength, detuning, decay, hbar: float = 1.0) -> np.ndarray:
    eta, delta, kappa = (np.asarray(x, dtype=float) for x in (strength, detuning, decay))
    return -hbar * delta * eta ** 2 / (delta ** 2 + kappa ** 2)


def pump_parameters(f, kappa, detuning=None, hbar: float = 1.0) -> PumpSettings:
    """Pump settings realising input parameters ``f``.

    By default each detuning is ``sgn(-f_m) * kappa_m``; explicit detunings
    may be passed instead and must have the opposite sign of ``f``.
    """
    f = np.asarray(f, dtype=float)
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), f.shape).copy()
    if np.any(kappa <= 0):
        raise ValueError("decay rates must be positive")
    if detuning is None:
        sign = np.where(f > 0, -1.0, 1.0)
        delta = sign * kappa
    else:
        delta = np.broadcast_to(np.asarray(detuning, dtype=float), f.shape).copy()
        if np.any(delta == 0):
            raise PumpSignError("zero detuning cannot realise a non-zero input parameter")
    ratio = -f * (delta ** 2 + kappa ** 2) / (hbar * delta)
    if np.any(ratio < 0):
        bad = np.flatnonzero(ratio < 0).tolist()
        raise PumpSignError(f"detuning sign matches the sign of f for modes {bad}")
    return PumpSettings(np.sqrt(ratio), delta, kappa)
