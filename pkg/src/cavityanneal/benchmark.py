"""The 8-site, two-memory recall instance and its tabulated reference data."""

from __future__ import annotations

import numpy as np

from .hopfield import HopfieldProblem

W1 = np.array([1, 1, -1, -1, 1, -1, 1, -1])
W2 = np.array([1, 1, -1, 1, 1, -1, -1, -1])
CHI1 = np.array([1, 1, 1, -1, -1, -1, 1, -1])
CHI2 = np.array([1, 1, -1, 1, -1, -1, -1, 1])
MEMORIES = np.array([W1, W2])
NU = 0.7
N_SITES = 8
N_UP = 4

# ideal recall matrix for CHI1, nu = 0.7
A_CHI1 = np.array([
    [1.7, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0],
    [1.0, 1.7, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0],
    [-1.0, -1.0, 1.7, 0.0, -1.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 0.0, 0.3, 0.0, 0.0, -1.0, 0.0],
    [1.0, 1.0, -1.0, 0.0, 0.3, -1.0, 0.0, -1.0],
    [-1.0, -1.0, 1.0, 0.0, -1.0, 0.3, 0.0, 1.0],
    [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.7, 0.0],
    [-1.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0, 0.3],
])

A_CHI2 = np.array([
    [1.7, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0],
    [1.0, 1.7, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0],
    [-1.0, -1.0, 0.3, 0.0, -1.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 0.0, 1.7, 0.0, 0.0, -1.0, 0.0],
    [1.0, 1.0, -1.0, 0.0, 0.3, -1.0, 0.0, -1.0],
    [-1.0, -1.0, 1.0, 0.0, -1.0, 0.3, 0.0, 1.0],
    [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.3, 0.0],
    [-1.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0, 1.7],
])

# matrix realised by the rounded inputs, as tabulated (two decimals)
RECOVERED_CHI1 = np.array([
    [1.72, 1.01, -1.01, 0.02, 0.99, -1.00, 0.00, -0.97],
    [1.01, 1.67, -0.91, -0.02, 0.99, -0.99, 0.00, -1.01],
    [-1.01, -0.91, 1.66, 0.03, -1.00, 0.98, 0.01, 1.01],
    [0.02, -0.02, 0.03, 0.27, 0.05, 0.03, -1.00, -0.00],
    [0.99, 0.99, -1.00, 0.05, 0.33, -0.97, -0.03, -1.00],
    [-1.00, -0.99, 0.98, 0.03, -0.97, 0.29, 0.01, 0.96],
    [0.00, 0.00, 0.01, -1.00, -0.03, 0.01, 1.70, 0.02],
    [-0.97, -1.01, 1.01, -0.00, -1.00, 0.96, 0.02, 0.30],
])

# rounded input parameters f~/zeta for the two recalls
INPUTS_CHI1 = np.array([
    -23.0, 1.5, 1.2, 0.3, 0.6, -0.2, -5.3, 1.0, -0.1,
    -0.9, -0.4, -1.3, 2.0, 1.6, -0.4, -0.6, -0.6,
    -0.2, 0.1, 2.2, -0.9, 2.4, -0.5, 0.0, -0.6, 2.0, 1.0,
    -0.1, -0.5, 2.1, -0.8, -1.7, 1.2, 6.8, 4.5, -0.6,
])
INPUTS_CHI2 = np.array([
    9.0, 1.5, 2.8, -0.1, 2.0, -2.1, 3.4, -7.7, -1.7, -1.9,
    0.6, -2.7, -1.9, 2.5, -1.4, 2.2, -1.7, -3.6, 6.5,
    5.5, -1.3, 4.9, -1.0, -0.7, -0.2, -3.5, -0.1,
    -1.6, 1.3, 0.1, 0.2, -2.4, -0.5, 12.2, 3.9, -0.2,
])

# (n, l) labels of the tabulated 36-mode basis (m = 0)
REFERENCE_BASIS = [
    (100, 2), (105, 2), (107, 1), (114, 0), (117, 1), (120, 1),
    (122, 2), (127, 1), (130, 0), (135, 0), (135, 1), (138, 1),
    (139, 2), (140, 0), (140, 2), (145, 1), (149, 2), (152, 1),
    (152, 2), (154, 0), (159, 0), (159, 1), (161, 2), (164, 0),
    (166, 1), (168, 2), (173, 2), (178, 0), (178, 2), (180, 1),
    (191, 1), (193, 2), (196, 1), (198, 0), (198, 2), (199, 0),
]
REFERENCE_LOG_MERIT = float(np.log(3.21e-11))

GOLDEN = {
    "min_gap": (0.56, 0.02),
    "min_gap_zeta": (0.28, 0.02),
    "ground_overlap_2J": (0.976, 0.005),
    "anneal_overlap_tau50": (0.959, 0.01),
}


def recall_problem(which: int = 1, nu: float = NU) -> HopfieldProblem:
    return HopfieldProblem(MEMORIES, CHI1 if which == 1 else CHI2, nu)
