from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavityanneal import benchmark as B
from cavityanneal.cavity_optics import CavityGeometry, LatticePose, reference_spacing, wannier_density
from cavityanneal.coupling_synthesis import ModeBasis, program_matrix
from cavityanneal.errors import InfeasibleSelectionError
from cavityanneal.hopfield import problem_matrix
from cavityanneal.mode_search import (
    CandidatePool,
    build_pool,
    greedy_select,
    log_merit,
    merit,
    pose_scan,
    uniformity_filter,
)


def _pool(rng, k, n):
    return CandidatePool.from_vectors(rng.standard_normal((k, n)))


def _brute_merit(subset, pool):
    u = pool.matrices[list(subset)].reshape(len(subset), -1)
    u = u / np.linalg.norm(u, axis=1)[:, None]
    g = np.array([[np.trace(a.reshape(pool.matrices.shape[1:]) @ b.reshape(pool.matrices.shape[1:]).T)
                   for b in u] for a in u])
    return float(np.linalg.det(g))


def test_pool_normalized(ref_pool):
    assert ref_pool.size == 300
    np.testing.assert_allclose(np.linalg.norm(ref_pool.unit, axis=1), 1.0, atol=1e-12)
    assert ref_pool.labels[0] == (100, 0, 0) and ref_pool.labels[-1] == (199, 2, 0)


def test_merit_examples(rng):
    pool = CandidatePool.from_vectors(np.eye(4))
    assert merit([0, 1], pool) == pytest.approx(1.0)
    assert merit([0, 1, 2, 3], pool) == pytest.approx(1.0)
    dup = CandidatePool.from_vectors(np.array([[1.0, 2.0, 0.5], [1.0, 2.0, 0.5], [0.0, 1.0, 3.0]]))
    assert merit([0, 1], dup) == 0.0
    assert log_merit([0, 1], dup) == -math.inf
    pool = _pool(rng, 6, 5)
    for subset in ([0, 1, 2], [1, 3, 5]):
        assert merit(subset, pool) == pytest.approx(_brute_merit(subset, pool), rel=1e-9, abs=1e-14)


@given(seed=st.integers(0, 2 ** 16), size=st.integers(2, 6))
def test_merit_range_and_permutation(seed, size):
    rng = np.random.default_rng(seed)
    pool = _pool(rng, 8, 4)
    subset = list(rng.choice(8, size, replace=False))
    m = merit(subset, pool)
    assert 0.0 <= m <= 1.0 + 1e-12
    perm = list(rng.permutation(subset))
    assert merit(perm, pool) == pytest.approx(m, rel=1e-9, abs=1e-15)


def test_orthogonal_subset_found(rng):
    # four mutually orthogonal rank-one matrices hidden among random candidates
    vecs = np.vstack([rng.standard_normal((3, 4)), np.eye(4)[[2, 0]], rng.standard_normal((2, 4)),
                      np.eye(4)[[3, 1]]])
    res = greedy_select(CandidatePool.from_vectors(vecs), 4)
    assert sorted(res.indices) == [3, 4, 7, 8]
    assert res.merit == pytest.approx(1.0)


def test_whole_pool_when_k_equals_m(rng):
    pool = _pool(rng, 6, 3)
    res = greedy_select(pool, 6)
    assert sorted(res.indices) == list(range(6))
    assert res.log_merit == pytest.approx(log_merit(list(range(6)), pool))


def test_infeasible_pool():
    # two sites span only a 3-dimensional space of symmetric matrices
    pool = CandidatePool.from_vectors(np.random.default_rng(1).standard_normal((6, 2)))
    with pytest.raises(InfeasibleSelectionError):
        greedy_select(pool, 4)
    with pytest.raises(InfeasibleSelectionError):
        greedy_select(pool, 7)


@given(seed=st.integers(0, 2 ** 20))
def test_small_instance_vs_exhaustive(seed):
    rng = np.random.default_rng(seed)
    pool = _pool(rng, 8, 4)
    res = greedy_select(pool, 4)
    best = max(merit(list(c), pool) for c in itertools.combinations(range(8), 4))
    assert res.merit >= 0.5 * best
    assert res.phase_log_merits["replace"] >= res.phase_log_merits["grow"] - 1e-12
    assert len(set(res.indices)) == 4


def test_step_counts(ref_selection):
    K, M = 300, 36
    ev = ref_selection.evaluations
    assert ev["pairs"] == K * (K - 1) // 2
    assert ev["additions"] < M * K
    assert ev["replacements"] <= M * (K - M)


def test_incremental_update_matches_full(rng):
    from cavityanneal.mode_search import _schur

    pool = _pool(rng, 12, 5)
    subset = [0, 3, 7]
    rest = np.array([1, 2, 4, 5, 6, 8])
    s = _schur(pool, subset, rest)
    base = log_merit(subset, pool)
    for j, sj in zip(rest, s):
        assert base + math.log(sj) == pytest.approx(log_merit(subset + [int(j)], pool), abs=1e-9)


def test_tie_breaking_lowest_index():
    vecs = np.eye(3)[[0, 1, 0, 1, 2]]
    res = greedy_select(CandidatePool.from_vectors(vecs), 3)
    assert res.indices == [0, 1, 4]


def test_reference_selection(ref_selection, ref_pool):
    res = ref_selection
    assert len(set(res.indices)) == 36
    assert np.isfinite(res.log_merit) and res.log_merit < 0
    assert res.log_merit == pytest.approx(log_merit(res.indices, ref_pool), abs=1e-9)
    p = res.phase_log_merits
    assert p["replace"] >= p["grow"] >= -math.inf
    g = ref_pool.gram[np.ix_(res.indices, res.indices)]
    assert np.linalg.matrix_rank(g) == 36


def test_reference_selection_is_deterministic(ref_pool, ref_selection):
    again = greedy_select(ref_pool, 36)
    assert again.indices == ref_selection.indices
    assert again.log_merit == ref_selection.log_merit


def test_passes_never_lower_merit(rng):
    pool = _pool(rng, 30, 5)
    one = greedy_select(pool, 10, passes=1)
    three = greedy_select(pool, 10, passes=3)
    assert three.log_merit >= one.log_merit - 1e-12


# --- pose scans -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def scan_setup():
    geo = CavityGeometry()
    d = reference_spacing(geo)
    wannier = wannier_density(10.0, d)

    def builder(pose):
        return build_pool(geo, pose, wannier, range(100, 130), (0, 1, 2))
    poses = [LatticePose(4, d, (-5 * d, -2 * d, 0.0), a) for a in (30.0, 47.0, 60.0)]
    return builder, poses


def test_pose_scan_single_equals_greedy(scan_setup):
    builder, poses = scan_setup
    a = pose_scan(poses[:1], builder, 10)
    b = greedy_select(builder(poses[0]), 10)
    assert a.indices == b.indices and a.log_merit == b.log_merit


def test_pose_scan_duplicates_and_max(scan_setup):
    builder, poses = scan_setup
    dup = pose_scan([poses[1], poses[1]], builder, 10)
    assert dup.log_merit == greedy_select(builder(poses[1]), 10).log_merit
    best = pose_scan(poses, builder, 10)
    each = [greedy_select(builder(p), 10).log_merit for p in poses]
    assert best.log_merit == max(each)
    assert best.pose == poses[int(np.argmax(each))]


def test_pose_scan_thread_invariance(scan_setup):
    builder, poses = scan_setup
    a = pose_scan(poses, builder, 10, workers=1)
    b = pose_scan(poses, builder, 10, workers=3)
    assert a.indices == b.indices and a.log_merit == b.log_merit and a.pose == b.pose


def test_pose_scan_errors(scan_setup):
    builder, _ = scan_setup
    with pytest.raises(ValueError):
        pose_scan([], builder, 10)
    with pytest.raises(InfeasibleSelectionError):
        pose_scan([LatticePose(2, 0.6, (0.0, 0.0, 0.0), 0.0)], builder, 10)


# --- uniformity ------------------------------------------------------------------------------

def test_uniformity_examples():
    equal = greedy_select(CandidatePool.from_vectors(np.eye(3)), 3)
    assert uniformity_filter(equal, 1.0) == (True, 1.0)
    uneven = greedy_select(CandidatePool.from_vectors(np.array([[1.0, 0.0], [0.0, math.sqrt(10.0)]])), 2)
    ok, score = uniformity_filter(uneven, 5.0)
    assert not ok and score == pytest.approx(10.0)


def test_accepted_selection_gives_comparable_inputs(ref_selection, ref_vectors):
    ok, _ = uniformity_filter(ref_selection, 100.0)
    assert ok
    basis = ModeBasis.from_vectors(ref_vectors)
    for which in (1, 2):
        prog = program_matrix(problem_matrix(B.recall_problem(which)), basis, 1.0, 0.1)
        mags = np.abs(prog.scaled_inputs)
        assert mags.max() / np.median(mags) <= 50


def test_null_mode_never_selected():
    vecs = np.vstack([np.zeros(3), np.eye(3)[[0, 1]], [[1.0, 1.0, 0.0]], np.zeros(3), np.eye(3)[[2]]])
    pool = CandidatePool.from_vectors(vecs)
    res = greedy_select(pool, 3)
    assert 0 not in res.indices and 4 not in res.indices
    assert log_merit([0, 1], pool) == -math.inf
