import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from coherent_graphs.graph import from_sparse

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")


def random_adjacency(seed: int, n: int, density: float, symmetric: bool = False) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = (rng.random((n, n)) < density) * rng.uniform(0.1, 2.0, (n, n))
    if symmetric:
        A = np.triu(A) + np.triu(A, 1).T
    return A


@st.composite
def digraphs(draw, max_n=50, symmetric=False):
    """Dense adjacency of a random weighted (di)graph, plus its seed."""
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_n))
    density = draw(st.floats(0.02, 0.6))
    return random_adjacency(seed, n, density, symmetric)


def dense_q(A: np.ndarray, w: float = 1.0) -> np.ndarray:
    """Forward-backward matrix straight from the definition (test oracle)."""
    A = A + w * np.eye(A.shape[0])
    P = A / A.sum(axis=1, keepdims=True)
    nu = P.sum(axis=0)
    return P @ np.diag(1.0 / nu) @ P.T


@pytest.fixture
def three_ring_dense():
    A = np.zeros((12, 12))
    for s in (0, 4, 8):
        for i in range(4):
            A[s + i, s + (i + 1) % 4] = 1.0
    A[3, 4] = A[7, 8] = A[11, 0] = 0.01
    return A


def graph_of(A, directed=True):
    return from_sparse(A, directed)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
