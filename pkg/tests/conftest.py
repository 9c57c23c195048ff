import numpy as np
import pytest

from dcsplit.pwl import build_triangulated


def grid_points(k: int, jitter: float = 0.0, seed: int = 0) -> np.ndarray:
    """``k x k`` grid on [-1, 1]^2; interior points jittered by ``jitter * h``."""
    x = np.linspace(-1.0, 1.0, k)
    X, Y = np.meshgrid(x, x)
    P = np.column_stack([X.ravel(), Y.ravel()])
    if jitter:
        h = 2.0 / (k - 1)
        rng = np.random.default_rng(seed)
        inner = (np.abs(P) < 1 - 1e-12).all(1)
        P[inner] += rng.uniform(-jitter * h, jitter * h, (inner.sum(), 2))
    return P


def grid_triangles(k: int) -> np.ndarray:
    T = []
    for i in range(k - 1):
        for j in range(k - 1):
            a = i * k + j
            b, c = a + 1, a + k
            T += [(a, b, c + 1), (a, c + 1, c)]
    return np.array(T, dtype=np.int64)


def grid_mesh(f, k: int, jitter: float = 0.0, seed: int = 0):
    P = grid_points(k, jitter, seed)
    return build_triangulated(P, grid_triangles(k), f(P))


@pytest.fixture
def mesh_factory():
    return grid_mesh
