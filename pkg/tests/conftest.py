import numpy as np
import pytest

import lqshield as lq


@pytest.fixture(scope="session")
def scalar_model():
    return lq.LinearModel(A=[[1.0]], B=[[1.0]], Q=[[1.0]], R=[[1.0]])


@pytest.fixture(scope="session")
def scalar_syn(scalar_model):
    return lq.synthesize(scalar_model)


@pytest.fixture(scope="session")
def bench2_model():
    """Well-conditioned 2x2 plant used by the guarantee benchmarks."""
    A = np.array([[0.55, 0.25], [0.0, 0.45]])
    return lq.LinearModel(A=A, B=np.eye(2), Q=np.eye(2), R=np.eye(2))


@pytest.fixture(scope="session")
def bench2_syn(bench2_model):
    return lq.synthesize(bench2_model)


def random_stabilizable(rng: np.random.Generator, n: int, m: int = None):
    """Random plant on which the Riccati iteration is expected to converge.

    A is scaled to spectral radius <= 1.2 (possibly unstable) and B has
    full column rank almost surely, so (A, B) is stabilizable.
    """
    if m is None:
        m = n
    A = rng.standard_normal((n, n))
    radius = max(np.max(np.abs(np.linalg.eigvals(A))), 1e-6)
    A *= rng.uniform(0.3, 1.2) / radius
    B = rng.standard_normal((n, m))
    Q = np.eye(n)
    R = np.eye(m)
    return lq.LinearModel(A=A, B=B, Q=Q, R=R)
