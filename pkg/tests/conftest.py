import json
from pathlib import Path

import numpy as np
import pytest

from structmit import nonherm
from structmit.bench.experiment import TrainingCache
from structmit.circuit import AnsatzSpec

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bit_order():
    """Qubit k is bit k of the basis index; bit 0 = spin up = Z eigenvalue +1."""
    z = np.diag([1.0, -1.0])
    # Z on qubit 1 of a 2-qubit register
    z1 = np.kron(z, np.eye(2))
    assert np.allclose(np.diag(z1), [1, 1, -1, -1])
    # index 1 = qubit 0 down, qubit 1 up
    assert nonherm.spin_signs(2)[1].tolist() == [-1.0, 1.0]
    return "qubit k -> bit k"


@pytest.fixture(scope="session")
def tfi():
    return nonherm.TfiParams()


@pytest.fixture(scope="session")
def grid():
    return nonherm.TimeGrid()


@pytest.fixture(scope="session")
def golden_curve():
    return json.loads((DATA / "exact_curve.json").read_text())


@pytest.fixture(scope="session")
def train_cache(tmp_path_factory):
    """One training pass per ansatz shared by every test in the session."""
    return TrainingCache(tmp_path_factory.mktemp("trained"))


@pytest.fixture(scope="session")
def trained(train_cache, tfi, grid):
    from structmit.varopt import TrainConfig

    def get(layers):
        return train_cache.get(AnsatzSpec(layers=layers), tfi, grid, TrainConfig())

    return get


BENCHMARK_LAYERS = 3


@pytest.fixture(scope="session")
def benchmark(trained):
    """Trained parameters of the benchmark circuit: the shallowest ansatz whose training converges."""
    return trained(BENCHMARK_LAYERS)


_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert the outcome."""

    def check(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
