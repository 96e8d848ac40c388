"""Greedy search for a well-conditioned set of single-mode matrices.

The merit of a subset is the determinant of the Gram matrix of the
Frobenius-normalised matrices (1 for mutually orthogonal matrices, 0 for
linearly dependent ones). It is handled in log form throughout because good
36-mode sets sit many orders of magnitude below 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .cavity_optics import (
    CavityGeometry,
    HGMode,
    LatticePose,
    WannierProfile,
    coupling_vector,
)
from .errors import InfeasibleSelectionError

# Schur complements below this are treated as linear dependence
DEPENDENCE_TOL = 1e-13
TIE_TOL = 1e-12  # values this close to the best count as ties; the lowest index wins


@dataclass(frozen=True)
class CandidatePool:
    """Candidate single-mode matrices, stored flattened and normalised."""

    matrices: np.ndarray          # (K, N, N) raw
    labels: tuple
    pose: LatticePose | None = None
    vectors: np.ndarray | None = None
    unit: np.ndarray = field(init=False, repr=False)
    norms: np.ndarray = field(init=False, repr=False)
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        flat = mats.reshape(len(mats), -1)
        norms = np.linalg.norm(flat, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(norms[:, None] > 0, flat / norms[:, None], 0.0)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "unit", unit)
        g = unit @ unit.T
        object.__setattr__(self, "gram", 0.5 * (g + g.T))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(mats))))

    @classmethod
    def from_vectors(cls, vectors, labels: Sequence = (), pose: LatticePose | None = None):
        v = np.asarray(vectors, dtype=float)
        return cls(np.einsum("ki,kj->kij", v, v), tuple(labels), pose, v)

    @property
    def size(self) -> int:
        return len(self.matrices)


def build_pool(geometry: CavityGeometry, pose: LatticePose, wannier: WannierProfile,
               n_values=range(100, 200), l_values=(0, 1, 2), m_values=(0,)) -> CandidatePool:
    modes = [HGMode(n, l, m, geometry) for n in n_values for l in l_values for m in m_values]
    vectors = np.array([coupling_vector(mode, pose, wannier) for mode in modes])
    return CandidatePool.from_vectors(vectors, [mode.label for mode in modes], pose)


def log_merit(subset: Sequence[int], pool: CandidatePool) -> float:
    """log det of the normalised Gram matrix; -inf for dependent subsets."""
    idx = list(subset)
    if len(set(idx)) != len(idx):
        return -math.inf
    g = pool.gram[np.ix_(idx, idx)]
    try:
        c, _ = cho_factor(g, lower=True)
    except LinAlgError:
        return -math.inf
    d = np.diag(c)
    if np.any(d <= 0):
        return -math.inf
    return float(2.0 * np.sum(np.log(d)))


def merit(subset: Sequence[int], pool: CandidatePool) -> float:
    return math.exp(log_merit(subset, pool))


def _schur(pool: CandidatePool, subset: list[int], candidates: np.ndarray) -> np.ndarray:
    """g_cc - g_c^T G_S^{-1} g_c: the det ratio for appending each candidate to S."""
    diag = pool.gram[candidates, candidates]
    if not subset:
        return diag
    g = pool.gram[np.ix_(subset, subset)]
    b = pool.gram[np.ix_(subset, candidates)]
    x = cho_solve(cho_factor(g, lower=True), b)
    return diag - np.einsum("ik,ik->k", b, x)


def _pick(values: np.ndarray) -> int:
    return int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])


@dataclass
class SelectionResult:
    indices: list[int]
    log_merit: float
    labels: list
    norm_ratio: float
    pose: LatticePose | None = None
    phase_log_merits: dict = field(default_factory=dict)
    evaluations: dict = field(default_factory=dict)

    @property
    def merit(self) -> float:
        return math.exp(self.log_merit)

    def to_dict(self) -> dict:
        pose = None
        if self.pose is not None:
            pose = {
                "n_sites": self.pose.n_sites, "spacing": self.pose.spacing,
                "origin": list(self.pose.origin), "angle": self.pose.angle,
            }
        return {
            "indices": list(self.indices),
            "labels": [list(lab) if isinstance(lab, tuple) else lab for lab in self.labels],
            "log_merit": self.log_merit,
            "merit": self.merit,
            "norm_ratio": self.norm_ratio,
            "pose": pose,
            "phase_log_merits": self.phase_log_merits,
            "evaluations": self.evaluations,
        }


def greedy_select(pool: CandidatePool, n_modes: int, passes: int = 1) -> SelectionResult:
    """Best pair, then best single additions, then replacement passes."""
    K = pool.size
    if n_modes > K:
        raise InfeasibleSelectionError(f"pool has {K} candidates, {n_modes} requested")
    if n_modes < 2:
        raise ValueError("need at least two modes")
    counts = {"pairs": 0, "additions": 0, "replacements": 0}

    # (i) all unordered pairs; det of a 2x2 normalised Gram is 1 - g^2 (0 for a null mode)
    iu, ju = np.triu_indices(K, 1)
    d = np.diag(pool.gram)
    pair_det = d[iu] * d[ju] - pool.gram[iu, ju] ** 2
    counts["pairs"] = len(pair_det)
    best = _pick(pair_det)
    if pair_det[best] <= DEPENDENCE_TOL:
        raise InfeasibleSelectionError("no linearly independent pair in the pool")
    subset = [int(iu[best]), int(ju[best])]
    logdet = math.log(pair_det[best])
    phases = {"pair": logdet}

    # (ii) grow by the candidate with the largest Schur complement
    while len(subset) < n_modes:
        rest = np.setdiff1d(np.arange(K), subset)
        s = _schur(pool, subset, rest)
        counts["additions"] += len(rest)
        j = _pick(s)
        if s[j] <= DEPENDENCE_TOL:
            raise InfeasibleSelectionError(
                f"pool rank below {n_modes}: no independent candidate at size {len(subset)}"
            )
        subset.append(int(rest[j]))
        logdet += math.log(s[j])
    logdet = log_merit(subset, pool)
    phases["grow"] = logdet

    # (iii) tentative replacement of each selected mode, accepted only on improvement
    for _ in range(passes):
        for pos in range(n_modes):
            others = subset[:pos] + subset[pos + 1:]
            rest = np.setdiff1d(np.arange(K), subset)
            if len(rest) == 0:
                break
            s = _schur(pool, others, rest)
            counts["replacements"] += len(rest)
            j = _pick(s)
            if s[j] <= 0:
                continue
            base = log_merit(others, pool)
            trial = base + math.log(s[j])
            if trial > logdet + TIE_TOL:
                subset[pos] = int(rest[j])
                new = log_merit(subset, pool)
                assert new >= logdet - 1e-9, "replacement lowered the merit"
                logdet = new
    logdet = log_merit(subset, pool)
    phases["replace"] = logdet

    norms = pool.norms[subset]
    return SelectionResult(
        indices=subset,
        log_merit=logdet,
        labels=[pool.labels[i] for i in subset],
        norm_ratio=float(norms.max() / norms.min()),
        pose=pool.pose,
        phase_log_merits=phases,
        evaluations=counts,
    )


def pose_scan(poses: Sequence[LatticePose], pool_builder: Callable[[LatticePose], CandidatePool],
              n_modes: int, passes: int = 1, workers: int = 1) -> SelectionResult:
    """Greedy selection per pose; the highest merit wins, first pose on ties."""
    if not poses:
        raise ValueError("no poses to scan")

    def run(pose):
        try:
            return greedy_select(pool_builder(pose), n_modes, passes)
        except InfeasibleSelectionError as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, poses))
    else:
        results = [run(p) for p in poses]

    best = None
    for res in results:
        if isinstance(res, SelectionResult) and (best is None or res.log_merit > best.log_merit):
            best = res
    if best is None:
        raise InfeasibleSelectionError(f"every scanned pose is infeasible ({results[0]})")
    return best


def uniformity_filter(result: SelectionResult, max_ratio: float = 100.0) -> tuple[bool, float]:
    """Accept a selection whose raw norms span at most ``max_ratio``."""
    score = result.norm_ratio
    return score <= max_ratio, score
