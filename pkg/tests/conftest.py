"""Shared constants for the test suite.

The reference geometry (675 nm, 1.12 um pitch) matches the package's
built-in defaults; short distances (a few microns) give well-conditioned
instances where predicted intensities stay strictly positive, which the
finite-difference likelihood checks need.
"""

import numpy as np
import pytest

WAVELENGTH = 675e-9
PITCH = 1.12e-6
SHORT_DISTANCES = (2.0e-6, 3.5e-6)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))
