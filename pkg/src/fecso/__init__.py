"""Blockwise soft output for GRAND and GCD list decoders, scored with the Brier score."""

from .channel import Observation, awgn_params, demodulate, observation_from_llr
from .codebook import LinearCode, build_ebch_16_11, load_code
from .gcd import gcd_decode
from .grand import QuerySchedule, grand_decode
from .scoring import brier_decomposition, brier_score
from .soft_output import parity_psi, so_forney, so_gcd, so_grand, so_grand_even, so_map

__version__ = "0.1.0"

__all__ = [
    "LinearCode",
    "Observation",
    "QuerySchedule",
    "awgn_params",
    "brier_decomposition",
    "brier_score",
    "build_ebch_16_11",
    "demodulate",
    "gcd_decode",
    "grand_decode",
    "load_code",
    "observation_from_llr",
    "parity_psi",
    "so_forney",
    "so_gcd",
    "so_grand",
    "so_grand_even",
    "so_map",
]
