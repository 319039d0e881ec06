import numpy as np
import pytest

from translab import Ball, CoefficientTensor, Grid, HalfSpace, TransmissionProblem, solve_transmission
from translab.oracle import disk_inclusion, flat_interface


def iso(value, n=2, m=1):
    return CoefficientTensor.isotropic(n, m, value)


@pytest.fixture(scope="session")
def flat_problem():
    return TransmissionProblem(iso(1.0), iso(4.0), HalfSpace((0.0, 1.0)),
                               boundary=lambda x: flat_interface(1.0, 4.0, x)[0], label="flat")


@pytest.fixture(scope="session")
def disk_problem():
    return TransmissionProblem(iso(1.0), iso(2.0), Ball((0.0, 0.0), 0.5),
                               boundary=lambda x: disk_inclusion(2.0, 0.5, x)[0], label="disk")


@pytest.fixture(scope="session")
def flat_field(flat_problem):
    return solve_transmission(flat_problem, Grid(2, 64))


@pytest.fixture(scope="session")
def disk_field(disk_problem):
    return solve_transmission(disk_problem, Grid(2, 128))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _isolated_cwd(request, tmp_path_factory, monkeypatch):
    # CLI defaults write run.jsonl and friends into the working directory
    if request.node.module.__name__ in ("test_cli", "test_acceptance"):
        monkeypatch.chdir(tmp_path_factory.mktemp("cwd"))
