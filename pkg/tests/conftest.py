import logging

import numpy as np
import pytest

from honeydirac.dirac import characterize, detect_dirac
from honeydirac.lattice import build_geometry
from honeydirac.potential import optical_lattice

M = 8
FREE_MU = 16.0 * np.pi ** 2 / 9.0
SMALL_EPS_SLOPE = 4.0 * np.pi / 3.0


@pytest.fixture(scope="session")
def geom():
    return build_geometry(1.0)


@pytest.fixture(scope="session")
def optical():
    return optical_lattice(1.0)


@pytest.fixture(scope="session")
def report_03(geom, optical):
    return characterize(geom, optical, 0.3, M)


@pytest.fixture(scope="session")
def report_001(geom, optical):
    return characterize(geom, optical, 0.01, M)


@pytest.fixture(scope="session")
def report_01(geom, optical):
    return detect_dirac(geom, optical, 0.1, M)


@pytest.fixture(scope="session")
def report_m01(geom, optical):
    return detect_dirac(geom, optical, -0.1, M)


@pytest.fixture(autouse=True)
def _isolate_package_logger():
    """Restore the package logger's handlers so a handler bound to one test's captured stderr does not leak into the next."""
    logger = logging.getLogger("honeydirac")
    saved = list(logger.handlers)
    yield
    for handler in logger.handlers[:]:
        if handler not in saved:
            logger.removeHandler(handler)
