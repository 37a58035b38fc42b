import numpy as np
import pytest

from fecso.channel import awgn_params, demodulate
from fecso.codebook import build_ebch_16_11, build_ext_hamming_8_4


@pytest.fixture(scope="session")
def ebch():
    return build_ebch_16_11()


@pytest.fixture(scope="session")
def ham8():
    return build_ext_hamming_8_4()


def noisy_observation(code, eb_n0_db, rng, x=None):
    """Transmit ``x`` (default: a random codeword) and demodulate."""
    if x is None:
        x = code.codebook[rng.integers(0, 2**code.k)]
    params = awgn_params(eb_n0_db, code.rate)
    r = (1.0 - 2.0 * np.asarray(x, dtype=np.float64)) + params.sigma * rng.standard_normal(code.n)
    return np.asarray(x, dtype=np.uint8), demodulate(r, params.sigma)
