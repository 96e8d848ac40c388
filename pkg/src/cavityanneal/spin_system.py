"""Hard-core boson / spin-1/2 chain restricted to a fixed number of up spins.

Basis states are bit patterns ``(s_1, ..., s_N)`` with ``s_i = 1`` for an
occupied site (spin up). They are stored as integers with site 1 in the most
significant bit, so integer order is lexicographic order of the patterns.

The Hamiltonian is ``H = J K + zeta D`` with ``K`` nearest-neighbour hopping
(entries -1) and ``D`` the diagonal interaction energy per unit ``zeta``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConfigurationError, NumericalError, ValidationError

MAX_SITES = 28
MAX_DIM = 50_000_000
DENSE_MAX_DIM = 3432


class DegenerateGapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpinSector:
    n_sites: int
    n_up: int
    states: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N, k = self.n_sites, self.n_up
        if not (0 <= k <= N <= MAX_SITES):
            raise ConfigurationError(f"need 0 <= N_A <= N <= {MAX_SITES}, got N={N}, N_A={k}")
        if math.comb(N, k) > MAX_DIM:
            raise ConfigurationError(f"sector dimension C({N},{k}) exceeds {MAX_DIM}")
        codes = [sum(1 << (N - 1 - i) for i in c) for c in itertools.combinations(range(N), k)]
        object.__setattr__(self, "states", np.array(sorted(codes), dtype=np.int64))

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, pattern) -> int:
        """Position of a 0/1 (or +-1) pattern in the basis."""
        code = self.encode(pattern)
        i = int(np.searchsorted(self.states, code))
        if i >= self.dim or self.states[i] != code:
            raise KeyError(f"pattern {tuple(pattern)} not in sector")
        return i

    def encode(self, pattern) -> int:
        p = np.asarray(pattern)
        bits = (p > 0).astype(int)
        if len(bits) != self.n_sites:
            raise ValidationError(f"pattern length {len(bits)} != {self.n_sites}")
        return int(sum(int(b) << (self.n_sites - 1 - i) for i, b in enumerate(bits)))

    def pattern(self, i: int) -> np.ndarray:
        return self.occupations[i]

    @property
    def occupations(self) -> np.ndarray:
        """(dim, N) array of 0/1 occupations."""
        shifts = self.n_sites - 1 - np.arange(self.n_sites)
        return ((self.states[:, None] >> shifts[None, :]) & 1).astype(np.int8)

    @property
    def spins(self) -> np.ndarray:
        return 2 * self.occupations.astype(float) - 1.0


def build_basis(n_sites: int, n_up: int) -> SpinSector:
    return SpinSector(n_sites, n_up)


def _bonds(n_sites: int, periodic: bool):
    bonds = [(i, i + 1) for i in range(n_sites - 1)]
    if periodic and n_sites > 1:
        bonds.append((n_sites - 1, 0))
    return bonds


def hopping_matrix(sector: SpinSector, periodic: bool = False) -> sp.csr_matrix:
    """Nearest-neighbour exchange with entries -1 between adjacent-swap partners."""
    N = sector.n_sites
    rows, cols = [], []
    for i, j in _bonds(N, periodic):
        bi, bj = 1 << (N - 1 - i), 1 << (N - 1 - j)
        s = sector.states
        differ = ((s & bi) > 0) != ((s & bj) > 0)
        src = np.flatnonzero(differ)
        dst = np.searchsorted(sector.states, s[src] ^ (bi | bj))
        rows.append(dst)
        cols.append(src)
    if rows:
        r, c = np.concatenate(rows), np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    data = -np.ones(len(r))
    return sp.csr_matrix((data, (r, c)), shape=(sector.dim, sector.dim))


def diagonal_energies(sector: SpinSector, a) -> np.ndarray:
    """-(1/4)[s^T A s + sum_i (2 sum_j A_ij) s_i] for every basis state (zeta = 1)."""
    a = np.asarray(a, dtype=float)
    s = sector.spins
    field_ = 2.0 * a.sum(axis=1)
    return -0.25 * (np.einsum("di,ij,dj->d", s, a, s) + s @ field_)


def classical_diagonal_energy(pattern, zeta: float, a) -> float:
    s = np.asarray(pattern, dtype=float)
    a = np.asarray(a, dtype=float)
    return float(-0.25 * zeta * (s @ a @ s + s @ (2.0 * a.sum(axis=1))))


@dataclass(frozen=True)
class SpinHamiltonian:
    sector: SpinSector
    tunneling: float
    zeta: float
    interaction: np.ndarray
    periodic: bool
    hopping: sp.csr_matrix = field(repr=False)
    diagonal: np.ndarray = field(repr=False)

    def matrix(self, zeta: float | None = None, tunneling: float | None = None) -> sp.csr_matrix:
        z = self.zeta if zeta is None else zeta
        j = self.tunneling if tunneling is None else tunneling
        return (j * self.hopping + sp.diags(z * self.diagonal)).tocsr()

    def dense(self, zeta: float | None = None, tunneling: float | None = None) -> np.ndarray:
        return self.matrix(zeta, tunneling).toarray()

    def at(self, zeta: float) -> "SpinHamiltonian":
        return SpinHamiltonian(self.sector, self.tunneling, zeta, self.interaction,
                               self.periodic, self.hopping, self.diagonal)

    def norm_bound(self, zeta: float | None = None) -> float:
        z = self.zeta if zeta is None else zeta
        return float(abs(self.tunneling) * 2 * self.sector.n_sites + abs(z) * np.abs(self.diagonal).max())


def build_hamiltonian(sector: SpinSector, tunneling: float, zeta: float, a,
                      periodic: bool = False) -> SpinHamiltonian:
    a = np.asarray(a, dtype=float)
    if a.shape != (sector.n_sites, sector.n_sites):
        raise ValidationError(f"interaction matrix shape {a.shape} != ({sector.n_sites},)*2")
    if not np.array_equal(a, a.T) and not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ValidationError("interaction matrix is not symmetric")
    return SpinHamiltonian(sector, tunneling, zeta, a, periodic,
                           hopping_matrix(sector, periodic), diagonal_energies(sector, a))


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    ph = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(ph) / ph)[None, :]


def eigenpairs(h: SpinHamiltonian, k: int, zeta: float | None = None,
               dense_max_dim: int = DENSE_MAX_DIM, tol: float = 1e-8):
    """The ``k`` lowest eigenpairs at one ``zeta``, ascending, phase-fixed."""
    dim = h.sector.dim
    if k > dim:
        raise ValueError(f"requested {k} levels from a {dim}-dimensional sector")
    if dim <= dense_max_dim:
        e, v = np.linalg.eigh(h.dense(zeta))
        e, v = e[:k], v[:, :k]
    else:
        m = h.matrix(zeta)
        try:
            e, v = eigsh(m, k=k, which="SA", tol=1e-12)
        except ArpackNoConvergence as exc:
            raise NumericalError(f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} pairs")
        order = np.argsort(e)
        e, v = e[order], v[:, order]
        res = np.linalg.norm(m @ v - v * e, axis=0).max()
        if res > tol * h.norm_bound(zeta):
            raise NumericalError(f"eigen-residual {res:.3e} above tolerance")
    return e, _fix_phase(v)


@dataclass(frozen=True)
class SpectrumCurves:
    zetas: np.ndarray
    energies: np.ndarray     # (grid, k)
    vectors: np.ndarray      # (grid, dim, k)

    @property
    def gaps(self) -> np.ndarray:
        return self.energies[:, 1] - self.energies[:, 0]

    def overlaps(self, index: int, degeneracy_tol: float = 1e-9) -> np.ndarray:
        """|<phi_n|b>|^2 with basis state ``index``, summed over degenerate levels."""
        amp2 = np.abs(self.vectors[:, index, :]) ** 2
        out = np.empty_like(amp2)
        for g in range(len(self.zetas)):
            e = self.energies[g]
            for n in range(len(e)):
                same = np.abs(e - e[n]) <= degeneracy_tol * max(1.0, abs(e[n]))
                out[g, n] = amp2[g, same].sum()
        return out


def low_spectrum(h: SpinHamiltonian, k: int, zetas, dense_max_dim: int = DENSE_MAX_DIM) -> SpectrumCurves:
    zetas = np.asarray(zetas, dtype=float)
    es, vs = [], []
    for z in zetas:
        e, v = eigenpairs(h, k, z, dense_max_dim)
        es.append(e)
        vs.append(v)
    return SpectrumCurves(zetas, np.array(es), np.array(vs))


def gap_at(h: SpinHamiltonian, zeta: float) -> float:
    e, _ = eigenpairs(h, 2, zeta)
    return float(e[1] - e[0])


def min_gap(h: SpinHamiltonian, zetas, resolution: float = 1e-3) -> tuple[float, float]:
    """(zeta*, delta_min): coarse grid minimum of e1 - e0, refined by bounded search."""
    zetas = np.asarray(zetas, dtype=float)
    gaps = np.array([gap_at(h, z) for z in zetas])
    i = int(np.argmin(gaps))
    lo = zetas[max(i - 1, 0)]
    hi = zetas[min(i + 1, len(zetas) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda z: gap_at(h, z), bounds=(lo, hi), method="bounded",
                              options={"xatol": resolution / 10})
        z_star, delta = (float(res.x), float(res.fun)) if res.fun <= gaps[i] else (zetas[i], gaps[i])
    else:
        z_star, delta = float(zetas[i]), float(gaps[i])
    if delta < 1e-12:
        warnings.warn(f"gap closes ({delta:.2e}) near zeta = {z_star:.4f}", DegenerateGapWarning)
    return z_star, delta


def pattern_overlap(vector, sector: SpinSector, pattern) -> float:
    return float(abs(vector[sector.index(pattern)]) ** 2)
