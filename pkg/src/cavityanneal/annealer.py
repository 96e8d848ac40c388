"""Coherent annealing: integrate i d(psi)/dt = H(zeta(t)) psi within the sector.

Units: hbar = 1, energies in J, times in 1/J.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .errors import IntegrationError
from .spin_system import SpinHamiltonian, SpinSector, build_basis, build_hamiltonian, eigenpairs


@dataclass(frozen=True)
class AnnealSchedule:
    """Ramp zeta(t) from 0 to ``zeta_final`` over ``tau``.

    ``shape`` is ``"linear"`` or ``"frozen"`` (zeta held at ``zeta_final``,
    for energy-conservation checks). ``j_decay`` > 0 switches on an
    exponential reduction J(t) = J exp(-j_decay t).
    """

    tau: float = 50.0
    zeta_final: float = 2.0
    shape: str = "linear"
    samples: int = 500
    tunneling: float = 1.0
    j_decay: float = 0.0

    def __post_init__(self):
        if self.tau < 0 or self.samples < 2:
            raise ValueError("need tau >= 0 and at least two samples")
        if self.shape not in ("linear", "frozen"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")

    def zeta(self, t):
        if self.shape == "frozen":
            return self.zeta_final + 0.0 * np.asarray(t, dtype=float)
        if self.tau == 0:
            return np.full_like(np.asarray(t, dtype=float), self.zeta_final)
        return self.zeta_final * np.asarray(t, dtype=float) / self.tau

    def j(self, t):
        return self.tunneling * np.exp(-self.j_decay * np.asarray(t, dtype=float))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.samples)


@dataclass
class AnnealRecord:
    times: np.ndarray
    zetas: np.ndarray
    states: np.ndarray                  # (samples, dim) complex
    magnetization: np.ndarray           # (samples, N) <sigma^z_i>
    ground_overlap: np.ndarray | None   # |<phi_0(zeta(t))|psi(t)>|^2
    target_overlap: np.ndarray | None
    norm_drift: float
    energy: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def total_magnetization(self) -> np.ndarray:
        return self.magnetization.sum(axis=1)


def initial_state(h: SpinHamiltonian, tunneling: float | None = None) -> np.ndarray:
    """Ground state of the pure hopping Hamiltonian."""
    if tunneling is not None:
        h = _with_tunneling(h, tunneling)
    _, v = eigenpairs(h, 1, zeta=0.0)
    return v[:, 0].astype(complex)


def site_magnetization(states: np.ndarray, sector: SpinSector) -> np.ndarray:
    """<sigma^z_i> for each row of ``states``, normalised by the state norm."""
    prob = np.abs(np.atleast_2d(states)) ** 2
    prob = prob / prob.sum(axis=1, keepdims=True)
    return prob @ sector.spins


def evolve(h: SpinHamiltonian, schedule: AnnealSchedule, psi0=None, target=None,
           track_ground: bool = True, method: str = "DOP853", rtol: float = 1e-10,
           atol: float = 1e-12, magnus_steps: int | None = None,
           max_norm_drift: float = 1e-6) -> AnnealRecord:
    """Integrate the sector Schroedinger equation along ``schedule``.

    ``method`` is any explicit ``solve_ivp`` scheme or ``"magnus"`` for
    exponential-midpoint stepping (``magnus_steps`` substeps in total).
    """
    sector = h.sector
    hop = h.hopping
    diag = h.diagonal
    psi0 = initial_state(h, float(schedule.j(0.0))) if psi0 is None else np.asarray(psi0, dtype=complex)
    times = schedule.times

    def rhs(t, y):
        return -1j * (schedule.j(t) * (hop @ y) + schedule.zeta(t) * diag * y)

    if schedule.tau == 0:
        states = np.repeat(psi0[None, :], len(times), axis=0)
    elif method == "magnus":
        states = _magnus(h, schedule, psi0, times, magnus_steps)
    else:
        sol = solve_ivp(rhs, (0.0, schedule.tau), psi0, method=method, t_eval=times,
                        rtol=rtol, atol=atol)
        if sol.status != 0:
            raise IntegrationError(f"integrator stopped: {sol.message}")
        states = sol.y.T

    norms = np.linalg.norm(states, axis=1)
    drift = float(np.abs(norms - 1.0).max())
    if drift > max_norm_drift:
        raise IntegrationError(f"norm drift {drift:.3e} exceeds {max_norm_drift:.1e}")

    zetas = schedule.zeta(times)
    gs = None
    if track_ground:
        gs = np.empty(len(times))
        for n, (t, z) in enumerate(zip(times, zetas)):
            _, v = eigenpairs(_with_tunneling(h, float(schedule.j(t))), 1, zeta=z)
            gs[n] = abs(np.vdot(v[:, 0], states[n])) ** 2 / norms[n] ** 2
    tgt = None
    if target is not None:
        tgt = np.abs(states[:, sector.index(target)]) ** 2 / norms ** 2
    return AnnealRecord(
        times=times, zetas=zetas, states=states,
        magnetization=site_magnetization(states, sector),
        ground_overlap=gs, target_overlap=tgt, norm_drift=drift,
        meta={"method": method, "rtol": rtol, "atol": atol, "tau": schedule.tau,
              "zeta_final": schedule.zeta_final},
    )


def _with_tunneling(h: SpinHamiltonian, j: float) -> SpinHamiltonian:
    return SpinHamiltonian(h.sector, j, h.zeta, h.interaction, h.periodic, h.hopping, h.diagonal)


def _magnus(h, schedule, psi0, times, steps):
    steps = steps or max(200, int(20 * schedule.tau))
    grid = np.linspace(0.0, schedule.tau, steps + 1)
    out = np.empty((len(times), len(psi0)), dtype=complex)
    psi = psi0.copy()
    k = 0
    for a, b in zip(grid[:-1], grid[1:]):
        while k < len(times) and times[k] <= a + 1e-12:
            out[k] = psi
            k += 1
        mid = 0.5 * (a + b)
        m = h.matrix(float(schedule.zeta(mid)), float(schedule.j(mid)))
        psi = expm_multiply(-1j * (b - a) * m, psi)
    while k < len(times):
        out[k] = psi
        k += 1
    return out


def expectation_energy(h: SpinHamiltonian, states: np.ndarray, zeta: float) -> np.ndarray:
    m = h.matrix(zeta)
    return np.real(np.einsum("ti,ti->t", states.conj(), (m @ states.T).T))


@dataclass
class RecallSummary:
    overlaps: dict
    winner: str
    record: AnnealRecord

    def to_dict(self) -> dict:
        rec = self.record
        return {
            "overlaps": {k: float(v) for k, v in self.overlaps.items()},
            "winner": self.winner,
            "final_ground_overlap": None if rec.ground_overlap is None else float(rec.ground_overlap[-1]),
            "final_magnetization": rec.magnetization[-1].tolist(),
            "norm_drift": rec.norm_drift,
            "tau": rec.meta.get("tau"),
            "zeta_final": rec.meta.get("zeta_final"),
        }


def recall_run(interaction, schedule: AnnealSchedule, patterns: Mapping[str, np.ndarray],
               n_up: int | None = None, periodic: bool = False, **kwargs) -> RecallSummary:
    """Anneal on ``interaction`` and compare the final state with each pattern."""
    a = np.asarray(getattr(interaction, "recovered", interaction), dtype=float)
    n = a.shape[0]
    if n_up is None:
        first = np.asarray(next(iter(patterns.values())))
        n_up = int((first > 0).sum())
    sector = build_basis(n, n_up)
    h = build_hamiltonian(sector, schedule.tunneling, schedule.zeta_final, a, periodic)
    rec = evolve(h, schedule, **kwargs)
    psi = rec.final_state / np.linalg.norm(rec.final_state)
    overlaps = {name: float(abs(psi[sector.index(p)]) ** 2) for name, p in patterns.items()}
    winner = max(overlaps, key=lambda k: overlaps[k])
    return RecallSummary(overlaps, winner, rec)


def unit_conversion(j_tau: float, j_in_er: float, er_rate: float) -> float:
    """Wall-clock anneal time in seconds for J*tau given J/E_R and E_R/hbar (1/s)."""
    if j_tau < 0 or j_in_er <= 0 or er_rate <= 0:
        raise ValueError("need j_tau >= 0 and positive J, E_R rate")
    return j_tau / (j_in_er * er_rate)
