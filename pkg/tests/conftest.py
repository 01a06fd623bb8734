import numpy as np
import pytest

from cvortho import StateVector, Truncation


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def random_state(trunc: Truncation, rng, support: int | None = None) -> StateVector:
    """Random normalized state with zero weight near the top of the basis."""
    if support is None:
        support = max(2, trunc.dim // 2)
    amps = np.zeros(trunc.dim, dtype=complex)
    amps[:support] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return StateVector(amps, trunc).normalized()
