import numpy as np
import pytest

from linetherm.core import SystemParams


@pytest.fixture(scope="session")
def table1() -> SystemParams:
    """Reference-device parameters used by most physics tests."""
    return SystemParams(
        f_r=7.458e9, kappa=2 * np.pi * 4.10e6, chi=2 * np.pi * (-2.70e6)
    )
