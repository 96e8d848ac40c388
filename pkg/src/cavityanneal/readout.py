"""Cavity output fields and intensities of an atomic state, and their inversion.

In the bad-cavity limit each field follows the site occupations,
``a_m = eta_m sum_i v_m^i n_i / (Delta_m + i kappa_m)``, so intensities probe
the two-point correlations ``<n_i n_j>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling_synthesis import PumpSettings
from .errors import ReconstructionError
from .spin_system import SpinSector


def occupations(state, sector: SpinSector) -> np.ndarray:
    prob = np.abs(np.asarray(state)) ** 2
    return (prob / prob.sum()) @ sector.occupations


def correlations(state, sector: SpinSector) -> np.ndarray:
    """<n_i n_j> as an (N, N) matrix."""
    prob = np.abs(np.asarray(state)) ** 2
    prob = prob / prob.sum()
    occ = sector.occupations.astype(float)
    return occ.T @ (prob[:, None] * occ)


def field_expectations(state, sector: SpinSector, vectors, pump: PumpSettings) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    return pump.strength * (v @ occupations(state, sector)) / (pump.detuning + 1j * pump.decay)


def intensities(state, sector: SpinSector, vectors, pump: PumpSettings) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    c = correlations(state, sector)
    return pump.scattering_factor * np.einsum("mi,ij,mj->m", v, c, v)


def add_noise(signal, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """Additive Gaussian noise; complex signals get independent real/imag parts."""
    signal = np.asarray(signal)
    noise = amplitude * rng.standard_normal(signal.shape)
    if np.iscomplexobj(signal):
        noise = noise + 1j * amplitude * rng.standard_normal(signal.shape)
    return signal + noise


@dataclass
class Reconstruction:
    correlations: np.ndarray
    occupations: np.ndarray
    spins: np.ndarray
    residual: float
    condition_number: float
    ridge: float = 0.0

    def spin_pattern(self) -> np.ndarray:
        return np.where(self.spins >= 0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "correlations": self.correlations.tolist(),
            "occupations": self.occupations.tolist(),
            "spins": self.spins.tolist(),
            "pattern": self.spin_pattern().tolist(),
            "residual": self.residual,
            "condition_number": self.condition_number,
            "ridge": self.ridge,
        }


def _solve(design: np.ndarray, rhs: np.ndarray, ridge: float, n_unknown: int):
    rank = np.linalg.matrix_rank(design)
    if rank < n_unknown:
        raise ReconstructionError("readout system is rank deficient", n_unknown - rank)
    if ridge > 0:
        a = np.vstack([design, np.sqrt(ridge) * np.eye(n_unknown)])
        b = np.concatenate([rhs, np.zeros(n_unknown)])
    else:
        a, b = design, rhs
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return x, float(np.linalg.norm(design @ x - rhs)), float(np.linalg.cond(design))


def invert_intensities(intensity, vectors, pump: PumpSettings, ridge: float = 0.0) -> Reconstruction:
    """Least-squares estimate of <n_i n_j> from per-mode intensities."""
    v = np.asarray(vectors, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    N = v.shape[1]
    lit = pump.strength > 0
    iu, ju = np.triu_indices(N)
    weight = np.where(iu == ju, 1.0, 2.0)
    design = v[lit][:, iu] * v[lit][:, ju] * weight
    rhs = intensity[lit] / pump.scattering_factor[lit]
    x, res, cond = _solve(design, rhs, ridge, len(iu))
    c = np.zeros((N, N))
    c[iu, ju] = x
    c[ju, iu] = x
    occ = np.diag(c).copy()
    return Reconstruction(c, occ, 2 * occ - 1, res, cond, ridge)


@dataclass
class FieldReconstruction:
    occupations: np.ndarray      # NaN where unresolved
    spins: np.ndarray
    unresolved: np.ndarray       # boolean mask
    residual: float
    condition_number: float

    def spin_pattern(self) -> np.ndarray:
        return np.where(self.spins >= 0, 1, -1)


def invert_fields(fields, vectors, pump: PumpSettings, strict: bool = False) -> FieldReconstruction:
    """Least-squares occupations from complex field expectations.

    Sites not determined by the available modes come back as NaN and are
    flagged in ``unresolved``; ``strict`` raises instead.
    """
    v = np.asarray(vectors, dtype=float)
    fields = np.asarray(fields, dtype=complex)
    lit = pump.strength > 0
    design = v[lit]
    rhs = np.real(fields[lit] * (pump.detuning[lit] + 1j * pump.decay[lit]) / pump.strength[lit])
    N = v.shape[1]
    _, sv, vt = np.linalg.svd(design) if len(design) else (None, np.zeros(0), np.eye(N))
    tol = max(design.shape) * np.finfo(float).eps * (sv[0] if len(sv) else 1.0)
    rank = int(np.sum(sv > tol))
    null = vt[rank:]
    unresolved = np.linalg.norm(null, axis=0) > 1e-8 if len(null) else np.zeros(N, bool)
    if strict and rank < N:
        raise ReconstructionError("field readout is rank deficient", N - rank)
    x = np.linalg.lstsq(design, rhs, rcond=None)[0] if len(design) else np.zeros(N)
    res = float(np.linalg.norm(design @ x - rhs)) if len(design) else 0.0
    cond = float(sv[0] / sv[rank - 1]) if rank else np.inf
    occ = np.where(unresolved, np.nan, x)
    return FieldReconstruction(occ, 2 * occ - 1, unresolved, res, cond)


def probe_settings(n_modes: int, kappa: float = 1000.0, strength: float = 1.0) -> PumpSettings:
    """Equal pumping of every mode at detuning kappa, used for readout scans."""
    eta = np.sqrt(2.0 * kappa * strength) * np.ones(n_modes)
    return PumpSettings(eta, kappa * np.ones(n_modes), kappa * np.ones(n_modes))
