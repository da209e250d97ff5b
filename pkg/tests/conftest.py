"""Shared fixtures and reference constructions used across the test suite."""

import numpy as np
import pytest

from muchan.matcore import random_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def haar(d, seed):
    """Deterministic Haar unitary for test fixtures."""
    return random_unitary(d, seed)


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2.0


# Three reference 3x3 unitaries B with tr(B* B^T) = -1, used by the
# transpose-witness constructions.
B_EXAMPLES = [
    0.5 * np.array([
        [0.0, 1.0 - 1.0j, -1.0 - 1.0j],
        [-1.0 + 1.0j, -1.0j, 1.0],
        [1.0 + 1.0j, 1.0, 1.0j],
    ]),
    np.array([
        [1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
    ]),
    np.array([
        [0.0, -1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ]),
]
