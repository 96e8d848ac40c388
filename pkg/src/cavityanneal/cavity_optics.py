"""Cavity geometry, Hermite-Gauss standing-wave modes, Wannier densities and
the site coupling vectors they produce.

Lengths are measured in units of the reference wavelength (the nominal
wavelength of longitudinal order 100), energies of the lattice in recoil
energies E_R. Points are cartesian ``(x, y, z)`` with ``x = r_l``,
``y = r_m`` and ``z`` along the cavity axis, origin at the cavity centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import eval_hermite

from .errors import ConfigurationError, NumericalError

N_REF = 100
DEFAULT_LENGTH = 50.0
DEFAULT_CURVATURE_RATIO = 2.0 / 3.0


@dataclass(frozen=True)
class CavityGeometry:
    """Symmetric two-mirror cavity; ``curvature_ratio`` is R/L (``inf`` = plane mirrors).

    ``standing_wave`` picks the longitudinal factor of the mode functions:
    ``"node"`` puts a field node on both mirrors (``sin(phase + n pi/2)``),
    ``"cosine"`` uses ``cos(phase)`` for every order.
    """

    length: float = DEFAULT_LENGTH
    curvature_ratio: float = DEFAULT_CURVATURE_RATIO
    standing_wave: str = "node"

    def __post_init__(self):
        if self.standing_wave not in ("node", "cosine"):
            raise ConfigurationError(f"unknown standing-wave convention {self.standing_wave!r}")
        if not self.length > 0:
            raise ConfigurationError(f"cavity length must be positive, got {self.length}")
        if math.isinf(self.curvature_ratio):
            return
        g = 1.0 - 1.0 / self.curvature_ratio
        if not (0.0 <= g * g <= 1.0) or not self.curvature_ratio > 0.5:
            raise ConfigurationError(
                f"unstable cavity: R/L = {self.curvature_ratio} gives g^2 = {g * g:.4f}"
            )

    @property
    def radius(self) -> float:
        return self.curvature_ratio * self.length

    @property
    def rayleigh_range(self) -> float:
        if math.isinf(self.curvature_ratio):
            return math.inf
        L, R = self.length, self.radius
        return math.sqrt(L * (2 * R - L) / 4.0)

    @property
    def gouy_shift(self) -> float:
        """Gouy phase accumulated between the mirrors, 2 arctan(L / 2 z_R)."""
        return 2.0 * math.atan(self.length / (2.0 * self.rayleigh_range))


def resonant_wavenumber(geometry: CavityGeometry, n: int, l: int = 0, m: int = 0) -> float:
    if n < 1:
        raise ConfigurationError(f"longitudinal index must be >= 1, got {n}")
    if l < 0 or m < 0:
        raise ConfigurationError("transverse indices must be non-negative")
    return (n * math.pi + (1 + l + m) * geometry.gouy_shift) / geometry.length


@dataclass(frozen=True)
class HGMode:
    """Standing-wave Hermite-Gauss mode (n, l, m) of a given cavity."""

    n: int
    l: int = 0
    m: int = 0
    geometry: CavityGeometry = field(default_factory=CavityGeometry)

    @property
    def wavenumber(self) -> float:
        return resonant_wavenumber(self.geometry, self.n, self.l, self.m)

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.wavenumber

    @property
    def waist(self) -> float:
        return math.sqrt(self.geometry.rayleigh_range * self.wavelength / math.pi)

    @property
    def norm_constant(self) -> float:
        # unit L2 norm of the transverse envelope in the waist plane
        w0 = self.waist
        return (
            0.5 * w0 * w0 * math.pi * 2.0 ** (self.l + self.m)
            * math.factorial(self.l) * math.factorial(self.m)
        ) ** -0.5

    @property
    def label(self) -> tuple[int, int, int]:
        return (self.n, self.l, self.m)

    def amplitude(self, points) -> np.ndarray:
        """Real mode function at ``points`` with shape (..., 3)."""
        p = np.asarray(points, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        zr = self.geometry.rayleigh_range
        k = self.wavenumber
        w0 = self.waist
        wz = w0 * np.sqrt(1.0 + (z / zr) ** 2)
        r2 = x * x + y * y
        inv_r = z / (z * z + zr * zr)
        phase = k * z + 0.5 * k * r2 * inv_r - (1 + self.l + self.m) * np.arctan(z / zr)
        envelope = (
            (w0 / wz)
            * eval_hermite(self.l, math.sqrt(2.0) * x / wz)
            * eval_hermite(self.m, math.sqrt(2.0) * y / wz)
            * np.exp(-r2 / (wz * wz))
        )
        if self.geometry.standing_wave == "node":
            longitudinal = np.sin(phase + 0.5 * math.pi * self.n)
        else:
            longitudinal = np.cos(phase)
        return self.norm_constant * envelope * longitudinal

    __call__ = amplitude


def mode_amplitude(mode: HGMode, point) -> float | np.ndarray:
    return mode.amplitude(point)


def reference_spacing(geometry: CavityGeometry, factor: float = 1.2) -> float:
    """Lattice spacing ``factor * lambda_100 / 2`` using the (100, 0, 0) mode."""
    return factor * HGMode(N_REF, 0, 0, geometry).wavelength / 2.0


@dataclass(frozen=True)
class LatticePose:
    """Linear lattice in the z-r_l plane; ``angle`` in degrees from the z axis."""

    n_sites: int
    spacing: float
    origin: tuple[float, float, float]  # (z0, r_l0, r_m0)
    angle: float

    @property
    def direction(self) -> np.ndarray:
        phi = math.radians(self.angle)
        return np.array([math.sin(phi), 0.0, math.cos(phi)])

    def positions(self) -> np.ndarray:
        """Site coordinates as an (N, 3) array of (x, y, z)."""
        z0, rl0, rm0 = self.origin
        start = np.array([rl0, rm0, z0])
        i = np.arange(self.n_sites)[:, None]
        return start + i * self.spacing * self.direction

    def check_inside(self, geometry: CavityGeometry) -> None:
        z = self.positions()[:, 2]
        if np.any(np.abs(z) >= geometry.length / 2):
            raise ConfigurationError("lattice sites extend beyond the cavity mirrors")


def reference_pose(geometry: CavityGeometry | None = None, n_sites: int = 8,
                   spacing_factor: float = 1.2, angle: float = 47.0,
                   offset: tuple[float, float, float] = (-5.0, -2.0, 0.0)) -> LatticePose:
    """Pose with the first site at ``offset * d`` (z, r_l, r_m)."""
    geometry = geometry or CavityGeometry()
    d = reference_spacing(geometry, spacing_factor)
    pose = LatticePose(n_sites, d, tuple(o * d for o in offset), angle)
    pose.check_inside(geometry)
    return pose


# --- lattice band structure -------------------------------------------------

def _bloch_hamiltonian(q: float, depth: float, cutoff: int) -> np.ndarray:
    # V sin^2(k_L x) in units k_L = 1, E_R = 1; minima at x = 0
    j = np.arange(-cutoff, cutoff + 1)
    h = np.diag((q + 2.0 * j) ** 2 + depth / 2.0)
    off = -depth / 4.0 * np.ones(2 * cutoff)
    return h + np.diag(off, 1) + np.diag(off, -1)


def lowest_band(depth: float, quasi_momenta, cutoff: int = 15):
    """Lowest-band energies and plane-wave coefficients at each quasi-momentum."""
    energies, vectors = [], []
    for q in np.atleast_1d(quasi_momenta):
        e, v = np.linalg.eigh(_bloch_hamiltonian(float(q), depth, cutoff))
        energies.append(e[0])
        vectors.append(v[:, 0])
    return np.array(energies), np.array(vectors)


def hubbard_tunneling(depth: float, cutoff: int = 15) -> float:
    """Nearest-neighbour tunneling J (units of E_R), a quarter of the band width."""
    if depth < 0:
        raise ConfigurationError("lattice depth must be non-negative")
    e, _ = lowest_band(depth, [0.0, 1.0], cutoff)
    return (e[1] - e[0]) / 4.0


@dataclass(frozen=True)
class WannierProfile:
    """Sampled lowest-band Wannier density w^2(x) plus an exact evaluator.

    ``x`` is in units of the reference wavelength; ``density`` in 1/length.
    """

    depth: float
    spacing: float
    x: np.ndarray
    density: np.ndarray
    step: float
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float))

    @property
    def rms_width(self) -> float:
        return math.sqrt(np.trapezoid(self.x ** 2 * self.density, self.x))

    @property
    def half_window(self) -> float:
        return float(self.x[-1])


class _CosineSeries:
    def __init__(self, freqs, amps):
        self.freqs = freqs
        self.amps = amps

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = np.cos(np.multiply.outer(x, self.freqs)) @ self.amps
        return w * w


def wannier_density(depth: float, spacing: float = 0.6, *, cutoff: int = 15,
                    n_quasi: int = 64, max_step: float = 1.0 / 200,
                    window_sites: float | None = None) -> WannierProfile:
    """Lowest-band Wannier density of a ``depth * sin^2(pi x / spacing)`` lattice."""
    if not depth > 0:
        raise ConfigurationError(f"lattice depth must be positive, got {depth}")
    q = -1.0 + (2.0 * np.arange(n_quasi) + 1.0) / n_quasi
    _, coeffs = lowest_band(depth, q, cutoff)
    if np.max(np.abs(coeffs[:, [0, -1]]) ** 2) > 1e-12:
        raise NumericalError(f"plane-wave cutoff {cutoff} too small for depth {depth}")
    # gauge: Bloch function real and positive at the well centre
    coeffs = coeffs * np.sign(coeffs.sum(axis=1))[:, None]

    k_lat = math.pi / spacing
    j = np.arange(-cutoff, cutoff + 1)
    freqs = (k_lat * (q[:, None] + 2.0 * j[None, :])).ravel()
    amps = (coeffs / (n_quasi * math.sqrt(math.pi)) * math.sqrt(k_lat)).ravel()
    series = _CosineSeries(freqs, amps)

    if window_sites is None:
        window_sites = _decay_window(series, spacing, n_quasi)
    n_half = math.ceil(window_sites * spacing / max_step)
    step = window_sites * spacing / n_half
    x = step * np.arange(-n_half, n_half + 1)
    dens = series(x)
    norm = np.trapezoid(dens, x)
    if abs(norm - 1.0) > 1e-8:
        raise NumericalError(f"Wannier density integrates to {norm:.12f}, expected 1")
    return WannierProfile(depth, spacing, x, dens, step, series)


def _decay_window(series, spacing, n_quasi, tol=1e-13):
    # smallest whole-site window beyond which the density is negligible
    for sites in range(2, n_quasi // 2):
        xs = np.linspace(sites - 0.5, sites + 0.5, 41) * spacing
        if series(xs).max() * spacing < tol:
            return float(sites)
    return float(n_quasi // 2)


def gaussian_profile(sigma: float, spacing: float = 0.6, max_step: float = 1.0 / 200,
                     widths: float = 8.0) -> WannierProfile:
    """Normalized Gaussian density, e.g. the harmonic limit of a deep well."""
    def evaluator(x):
        return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

    n_half = max(math.ceil(widths * sigma / max_step), 50)
    step = widths * sigma / n_half
    x = step * np.arange(-n_half, n_half + 1)
    return WannierProfile(0.0, spacing, x, evaluator(x), step, evaluator)


def harmonic_width(depth: float, spacing: float) -> float:
    """Ground-state density width of the harmonic approximation to one well."""
    k_lat = math.pi / spacing
    return depth ** -0.25 / (math.sqrt(2.0) * k_lat)


@dataclass(frozen=True)
class HubbardParams:
    tunneling: float          # J / E_R
    interaction_integral: float  # int w^4 dx, 1/length
    depth: float


def hubbard_parameters(depth: float, spacing: float = 0.6, cutoff: int = 15) -> HubbardParams:
    prof = wannier_density(depth, spacing, cutoff=cutoff)
    u = float(np.trapezoid(prof.density ** 2, prof.x))
    return HubbardParams(hubbard_tunneling(depth, cutoff), u, depth)


# --- couplings --------------------------------------------------------------

def coupling_vector(mode, pose: LatticePose, wannier: WannierProfile,
                    rule: str = "trapezoid", gauss_nodes: int = 400) -> np.ndarray:
    """Overlap of each site's Wannier density with the cavity mode along the lattice.

    ``mode`` is any callable mapping (..., 3) points to real amplitudes. The
    pump profile is taken as 1 on the lattice line.
    """
    half = wannier.half_window
    if half < 6.0 * wannier.rms_width:
        raise NumericalError(
            f"quadrature window {half:.4g} covers less than 6 Wannier widths "
            f"({wannier.rms_width:.4g})"
        )
    if rule == "trapezoid":
        s, weights = wannier.x, np.full(wannier.x.shape, wannier.step)
        weights[[0, -1]] *= 0.5
        dens = wannier.density
    elif rule == "gauss":
        nodes, w = np.polynomial.legendre.leggauss(gauss_nodes)
        s, weights = half * nodes, half * w
        dens = wannier(s)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    points = pose.positions()[:, None, :] + s[None, :, None] * pose.direction
    return (mode(points) * dens) @ weights


def single_mode_matrix(v) -> np.ndarray:
    v = np.asarray(v)
    return np.real(np.outer(v, np.conj(v)))
