from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cavityanneal.cavity_optics import CavityGeometry, reference_pose, wannier_density
from cavityanneal.coupling_synthesis import ModeBasis
from cavityanneal.mode_search import build_pool, greedy_select
from cavityanneal.spin_system import build_basis

settings.register_profile("ci", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def geometry():
    return CavityGeometry()


@pytest.fixture(scope="session")
def ref_pose(geometry):
    return reference_pose(geometry)


@pytest.fixture(scope="session")
def ref_wannier(ref_pose):
    return wannier_density(10.0, ref_pose.spacing)


@pytest.fixture(scope="session")
def ref_pool(geometry, ref_pose, ref_wannier):
    return build_pool(geometry, ref_pose, ref_wannier)


@pytest.fixture(scope="session")
def ref_selection(ref_pool):
    return greedy_select(ref_pool, 36)


@pytest.fixture(scope="session")
def ref_vectors(ref_pool, ref_selection):
    return ref_pool.vectors[ref_selection.indices]


@pytest.fixture(scope="session")
def ref_basis(ref_vectors, ref_selection):
    return ModeBasis.from_vectors(ref_vectors, ref_selection.labels)


@pytest.fixture(scope="session")
def sector84():
    return build_basis(8, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, checks, seconds)``.

    ``checks`` maps a short label to a bool; the line passes when all do.
    """
    table = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, title: str, checks: dict, seconds: float, detail: str = "") -> bool:
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        note = f"  failed: {', '.join(failed)}" if failed else ""
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}  {title}  ({seconds:.2f} s){note}"
        if detail:
            line += f"  | {detail}"
        table[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_ACCEPTANCE, {})
    if table:
        terminalreporter.section("acceptance criteria")
        for number in sorted(table):
            terminalreporter.write_line(table[number])
