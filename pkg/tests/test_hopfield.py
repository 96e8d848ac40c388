from __future__ import annotations

import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavityanneal import benchmark as B
from cavityanneal.errors import ValidationError
from cavityanneal.hopfield import (
    HopfieldProblem,
    UnbalancedPatternWarning,
    all_patterns,
    balance_check,
    brute_force_ground,
    energies,
    energy,
    energy_report,
    hebbian_weights,
    nu_table,
    nu_upper_bound,
    problem_matrix,
    recall_matrix,
)
from cavityanneal.spin_system import build_hamiltonian

P1 = B.recall_problem(1)


def _pm(rng, shape):
    return 2 * rng.integers(0, 2, shape) - 1


def test_problem_validation():
    with pytest.raises(ValidationError):
        HopfieldProblem([[1, 0, -1, 1]], [1, 1, -1, -1])
    with pytest.raises(ValidationError):
        HopfieldProblem([[1, -1], [1, -1]], [1, 1])
    with pytest.raises(ValidationError):
        HopfieldProblem([[1, -1]], [1, 1, 1])
    with pytest.raises(ValidationError):
        HopfieldProblem([[1, -1]], [1, 1], nu=-0.1)


# --- weights and recall matrices -------------------------------------------------------------

def test_hebbian_examples(rng):
    w = _pm(rng, 6)
    np.testing.assert_array_equal(hebbian_weights([w]), np.outer(w, w))
    W = hebbian_weights(B.MEMORIES)
    assert W[0, 1] == 1 and W[3, 6] == -1
    np.testing.assert_array_equal(np.diag(W), 1.0)
    mem = _pm(rng, (3, 7))
    brute = np.zeros((7, 7))
    for i in range(7):
        for j in range(7):
            for p in range(3):
                brute[i, j] += mem[p, i] * mem[p, j] / 3
    np.testing.assert_allclose(hebbian_weights(mem), brute, atol=1e-15)


@given(st.integers(1, 5), st.integers(2, 10), st.integers(0, 2 ** 16))
def test_hebbian_properties(p, n, seed):
    W = hebbian_weights(_pm(np.random.default_rng(seed), (p, n)))
    assert np.array_equal(W, W.T)
    assert np.all(np.abs(W) <= 1 + 1e-15)
    np.testing.assert_allclose(np.diag(W), 1.0)


def test_recall_matrices_match_tabulated():
    np.testing.assert_allclose(problem_matrix(P1), B.A_CHI1, atol=1e-12)
    np.testing.assert_allclose(problem_matrix(B.recall_problem(2)), B.A_CHI2, atol=1e-12)
    d = np.diag(B.A_CHI1)
    assert set(np.round(d, 12)) == {1.7, 0.3}
    off = ~np.eye(8, dtype=bool)
    np.testing.assert_array_equal(B.A_CHI1[off], B.A_CHI2[off])
    assert not np.array_equal(np.diag(B.A_CHI1), np.diag(B.A_CHI2))
    W = hebbian_weights(B.MEMORIES)
    np.testing.assert_array_equal(recall_matrix(W, B.CHI1, 0.0), W)


def test_unbalanced_warning_and_compensation():
    mem = np.array([[1, 1, 1, -1], [1, -1, 1, 1]])
    chi = np.array([1, -1, -1, 1])
    W = hebbian_weights(mem)
    with pytest.warns(UnbalancedPatternWarning):
        recall_matrix(W, chi, 0.5)
    a = recall_matrix(W, chi, 0.5, compensate=True)
    np.testing.assert_allclose(2 * a.sum(axis=1), 2 * 0.5 * chi, atol=1e-12)
    off = ~np.eye(4, dtype=bool)
    np.testing.assert_array_equal(a[off], W[off])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        recall_matrix(hebbian_weights(B.MEMORIES), B.CHI1, 0.7)


def test_balance_check():
    sums, flag = balance_check(B.MEMORIES)
    assert sums.tolist() == [0, 0] and not flag
    sums, flag = balance_check([np.ones(8, dtype=int)])
    assert sums.tolist() == [8] and flag


# --- energies -------------------------------------------------------------------------------

def test_inner_products():
    assert B.CHI1 @ B.W1 == 4 and B.CHI1 @ B.W2 == 0
    assert B.CHI2 @ B.W2 == 4 and B.CHI2 @ B.W1 == 0
    assert B.W1 @ B.W2 == 4


@pytest.mark.parametrize("nu", [0.0, 0.7, 2.0, 3.3])
def test_energy_examples(nu):
    p = P1.with_nu(nu)
    assert energy(B.W2, p) == pytest.approx(-20.0)
    assert energy(B.W1, p) == pytest.approx(-20.0 - 4 * nu)
    assert energy(B.CHI1, p) == pytest.approx(-4.0 - 8 * nu)


def test_degenerate_memories_at_nu_zero():
    p = P1.with_nu(0.0)
    assert energy(B.W1, p) == energy(B.W2, p)
    assert energy_report(p).degenerate


def test_vectorized_energies(rng):
    pats = _pm(rng, (20, 8))
    np.testing.assert_allclose(energies(pats, P1), [energy(s, P1) for s in pats], atol=1e-12)


def test_embedding_faithfulness(sector84):
    for which in (1, 2):
        p = B.recall_problem(which)
        zeta = 1.9
        h = build_hamiltonian(sector84, 1.0, zeta, problem_matrix(p))
        diag = h.dense().diagonal()
        shift = diag - zeta / 2 * energies(sector84.spins, p)
        assert np.ptp(shift) < 1e-12


# --- nu bound ----------------------------------------------------------------------------------

def test_nu_bound_reference_instance():
    assert nu_upper_bound(P1) == Fraction(4)
    assert isinstance(nu_upper_bound(P1), Fraction)
    assert nu_upper_bound(B.recall_problem(2)) == Fraction(4)


def test_nu_bound_sign_invariance():
    # flipping a site (or every site) in all patterns at once keeps every inner product
    assert nu_upper_bound(HopfieldProblem(-B.MEMORIES, -B.CHI1)) == nu_upper_bound(P1)
    g = np.array([1, -1, 1, 1, -1, -1, 1, 1])
    assert nu_upper_bound(HopfieldProblem(B.MEMORIES * g, B.CHI1 * g)) == nu_upper_bound(P1)


def test_nu_bound_probe_is_memory():
    with pytest.raises(ValueError):
        nu_upper_bound(HopfieldProblem(B.MEMORIES, B.W1))


def test_nu_bound_orthogonal_case():
    mem = np.array([[1, 1, -1, -1], [1, -1, 1, -1]])
    chi = np.array([1, -1, -1, 1])
    p = HopfieldProblem(mem, chi)
    n, P = 4, 2
    assert nu_upper_bound(p) == Fraction(n, 2 * P)
    for nu in (0.2, 0.9):
        ground = brute_force_ground(p.with_nu(nu), n_up=2)
        assert any(np.array_equal(g, m) for g in ground for m in mem)
    for nu in (1.1, 2.0):
        ground = brute_force_ground(p.with_nu(nu), n_up=2)
        assert len(ground) == 1 and np.array_equal(ground[0], chi)


@pytest.mark.parametrize("nu,expected", [(0.1, "w1"), (0.7, "w1"), (2.0, "w1"), (3.9, "w1"),
                                         (4.1, "chi1"), (5.0, "chi1")])
def test_sector_argmin_switch(nu, expected):
    ground = brute_force_ground(P1.with_nu(nu), n_up=4)
    ref = B.W1 if expected == "w1" else B.CHI1
    assert len(ground) == 1 and np.array_equal(ground[0], ref)


def test_recall_ground_states():
    g2 = brute_force_ground(B.recall_problem(2), n_up=4)
    assert len(g2) == 1 and np.array_equal(g2[0], B.W2)


def test_ties_sorted_and_complete():
    ground = brute_force_ground(P1.with_nu(0.0), n_up=4)
    keys = [tuple(g) for g in ground]
    assert keys == sorted(keys)
    assert {tuple(B.W1), tuple(B.W2), tuple(-B.W1), tuple(-B.W2)} <= set(keys)


def test_argmin_invariant_under_shift_and_scale(sector84):
    e = energies(sector84.spins, P1)
    assert np.argmin(e) == np.argmin(3.5 * e + 11.0)


def test_all_patterns():
    assert all_patterns(3).shape == (8, 3)
    s = all_patterns(8, 4)
    assert s.shape == (70, 8) and np.all(s.sum(axis=1) == 0)
    assert [tuple(r) for r in s] == sorted(tuple(r) for r in s)
    with pytest.raises(ValueError):
        brute_force_ground(HopfieldProblem(np.ones((1, 25), dtype=int), -np.ones(25, dtype=int)))


def test_nu_table_and_report():
    t = nu_table(P1, [0.0, 1.0, 4.0])
    np.testing.assert_allclose(t[:, 1], -4.0 - 8 * t[:, 0])
    np.testing.assert_allclose(t[:, 2], -20.0 - 4 * t[:, 0])
    np.testing.assert_allclose(t[:, 3], -20.0)
    # probe and w1 cross exactly at the bound
    assert t[2, 1] == pytest.approx(t[2, 2])
    rep = energy_report(P1).to_dict()
    assert rep["nu_upper_exact"] == "4"
    assert rep["probe_overlaps"] == [4, 0]


def test_blockwise_search_matches_direct_scan(rng):
    # 2^17 patterns span two scan blocks
    p = HopfieldProblem(_pm(rng, (3, 17)), _pm(rng, 17), 0.4)
    pats = all_patterns(17)
    e = energies(pats, p)
    direct = pats[e <= e.min() + 1e-9]
    got = brute_force_ground(p)
    assert [tuple(g) for g in got] == [tuple(d) for d in direct]
