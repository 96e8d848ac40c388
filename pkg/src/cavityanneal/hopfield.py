"""Hopfield associative-memory recall encoded as a spin interaction matrix."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError


class UnbalancedPatternWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HopfieldProblem:
    """P stored patterns, an input (probe) pattern and the bias strength nu."""

    memories: np.ndarray
    probe: np.ndarray
    nu: float = 0.7

    def __post_init__(self):
        mem = np.atleast_2d(np.asarray(self.memories, dtype=int))
        probe = np.asarray(self.probe, dtype=int)
        if mem.shape[1] != probe.shape[0]:
            raise ValidationError("memories and probe differ in length")
        if not (np.all(np.abs(mem) == 1) and np.all(np.abs(probe) == 1)):
            raise ValidationError("patterns must have entries +-1")
        if len({tuple(m) for m in mem}) != len(mem):
            raise ValidationError("memories must be distinct")
        if self.nu < 0:
            raise ValidationError("nu must be non-negative")
        object.__setattr__(self, "memories", mem)
        object.__setattr__(self, "probe", probe)

    @property
    def n_neurons(self) -> int:
        return self.memories.shape[1]

    @property
    def n_memories(self) -> int:
        return self.memories.shape[0]

    def with_nu(self, nu: float) -> "HopfieldProblem":
        return HopfieldProblem(self.memories, self.probe, nu)


def hebbian_weights(memories) -> np.ndarray:
    w = np.atleast_2d(np.asarray(memories, dtype=float))
    return w.T @ w / len(w)


def balance_check(memories) -> tuple[np.ndarray, bool]:
    """Per-pattern sums and whether any pattern is unbalanced."""
    sums = np.atleast_2d(np.asarray(memories, dtype=int)).sum(axis=1)
    return sums, bool(np.any(sums != 0))


def recall_matrix(weights, probe, nu: float, compensate: bool = False) -> np.ndarray:
    """A = W + nu diag(chi).

    With unbalanced memories the induced local fields 2 sum_j A_ij are not
    2 nu chi_i; ``compensate`` resets each diagonal entry to
    ``nu chi_i - sum_{j != i} W_ij`` so the fields come out right.
    """
    w = np.asarray(weights, dtype=float)
    chi = np.asarray(probe, dtype=float)
    a = w + nu * np.diag(chi)
    row_sum = w.sum(axis=1)
    if np.any(np.abs(row_sum) > 1e-12):
        if compensate:
            offdiag = row_sum - np.diag(w)
            np.fill_diagonal(a, nu * chi - offdiag)
        else:
            warnings.warn("weights have non-zero row sums; local fields differ from nu*chi",
                          UnbalancedPatternWarning)
    return a


def problem_matrix(problem: HopfieldProblem, compensate: bool = False) -> np.ndarray:
    return recall_matrix(hebbian_weights(problem.memories), problem.probe, problem.nu, compensate)


def energy(s, problem: HopfieldProblem) -> float:
    """-(1/2P) sum_q <s, w_q>^2 - nu <s, chi>.

    This is <s|H_AM|s> without the constant +N/2 from the i = j terms.
    """
    s = np.asarray(s, dtype=float)
    overlaps = problem.memories @ s
    return float(-0.5 * np.sum(overlaps ** 2) / problem.n_memories - problem.nu * (problem.probe @ s))


def energies(patterns, problem: HopfieldProblem) -> np.ndarray:
    s = np.asarray(patterns, dtype=float)
    overlaps = s @ problem.memories.T
    return -0.5 * np.sum(overlaps ** 2, axis=1) / problem.n_memories - problem.nu * (s @ problem.probe)


def nu_upper_bound(problem: HopfieldProblem) -> Fraction:
    """Largest nu keeping some memory below the probe's own energy (exact)."""
    mem = problem.memories.tolist()
    chi = problem.probe.tolist()
    N, P = problem.n_neurons, problem.n_memories

    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))

    best = None
    for wp in mem:
        denom = 2 * P * (N - dot(chi, wp))
        if denom == 0:
            raise ValueError("probe coincides with a memory; the bound is undefined")
        val = Fraction(sum(dot(wp, wq) ** 2 - dot(chi, wq) ** 2 for wq in mem), denom)
        best = val if best is None else max(best, val)
    return best


_BLOCK = 1 << 16


def _patterns(codes: np.ndarray, n: int, n_up: int | None) -> np.ndarray:
    bits = ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)
    if n_up is not None:
        bits = bits[bits.sum(axis=1) == n_up]
    return 2 * bits - 1


def all_patterns(n: int, n_up: int | None = None) -> np.ndarray:
    """All +-1 patterns in lexicographic order (-1 < +1), optionally with fixed n_up."""
    return _patterns(np.arange(2 ** n, dtype=np.int64), n, n_up).astype(int)


def brute_force_ground(problem: HopfieldProblem, n_up: int | None = None,
                       tol: float = 1e-9) -> list[np.ndarray]:
    """Every minimiser of the energy, sorted lexicographically.

    The pattern space is scanned in blocks so memory stays bounded at N = 24.
    """
    n = problem.n_neurons
    if n > 24:
        raise ValueError("exhaustive search limited to N <= 24")
    best, keep = np.inf, []
    for start in range(0, 2 ** n, _BLOCK):
        pats = _patterns(np.arange(start, min(start + _BLOCK, 2 ** n), dtype=np.int64), n, n_up)
        if not len(pats):
            continue
        e = energies(pats, problem)
        lo = e.min()
        if lo < best - tol:
            keep = [p for p, x in zip(pats, e) if x <= lo + tol]
            best = lo
        elif lo <= best + tol:
            keep += [p for p, x in zip(pats, e) if x <= best + tol]
            best = min(best, lo)
    keep = [p.astype(int) for p in keep]
    return [p for p in keep if energies(p[None, :], problem)[0] <= best + tol]


@dataclass
class EnergyReport:
    memory_energies: np.ndarray
    probe_energy: float
    probe_overlaps: np.ndarray
    degenerate: bool
    nu_interval: tuple

    def to_dict(self) -> dict:
        lo, hi = self.nu_interval
        return {
            "memory_energies": self.memory_energies.tolist(),
            "probe_energy": self.probe_energy,
            "probe_overlaps": self.probe_overlaps.tolist(),
            "degenerate": self.degenerate,
            "nu_interval": [float(lo), None if hi is None else float(hi)],
            "nu_upper_exact": None if hi is None else str(hi),
        }


def energy_report(problem: HopfieldProblem) -> EnergyReport:
    mem_e = energies(problem.memories, problem.with_nu(0.0))
    try:
        hi = nu_upper_bound(problem)
    except ValueError:
        hi = None
    return EnergyReport(
        memory_energies=energies(problem.memories, problem),
        probe_energy=energy(problem.probe, problem),
        probe_overlaps=problem.memories @ problem.probe,
        degenerate=bool(np.ptp(mem_e) < 1e-12),
        nu_interval=(0.0, hi),
    )


def nu_table(problem: HopfieldProblem, nus) -> np.ndarray:
    """Rows (nu, E(probe), E(w_1), ..., E(w_P)) over a sweep of nu."""
    rows = []
    for nu in nus:
        p = problem.with_nu(float(nu))
        rows.append([nu, energy(p.probe, p), *energies(p.memories, p)])
    return np.array(rows)
