import numpy as np
import pytest

from tctsim.config import load_config
from tctsim.figures import derive_circuit


@pytest.fixture(scope="session")
def paper_config():
    return load_config()


@pytest.fixture(scope="session")
def circuit(paper_config):
    """Crossing, retuned flux and reduced models for the published parameters."""
    return derive_circuit(paper_config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, dim=4, rank=None):
    rank = rank or dim
    z = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


ACCEPTANCE: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    """Print and record one acceptance line, then fail the test if needed."""
    line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
