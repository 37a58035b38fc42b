"""BPSK over AWGN: modulation, demodulation and noise-effect posteriors.

Bit 0 maps to +1 and bit 1 to -1, so a positive received value favours 0
and the LLR log f(r|1)/f(r|0) equals -2r/sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .codebook import pack_bits

B_FLOOR = 1e-300


@dataclass(frozen=True)
class ChannelParams:
    eb_n0_db: float
    rate: float
    sigma: float


def awgn_params(eb_n0_db: float, rate: float) -> ChannelParams:
    """Noise level for unit-energy symbols at the given Eb/N0 (dB) and code rate."""
    if not rate > 0 or rate > 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    sigma2 = 1.0 / (2.0 * rate * 10.0 ** (eb_n0_db / 10.0))
    return ChannelParams(float(eb_n0_db), float(rate), float(np.sqrt(sigma2)))


def modulate(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def transmit(x, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x)
    return modulate(x) + params.sigma * rng.standard_normal(x.shape)


@dataclass(frozen=True, eq=False)
class Observation:
    """One channel use.

    ``gamma`` is the per-bit reliability |LLR|, ``y`` the hard decisions and
    ``b`` the probability that each hard decision is wrong.
    """

    r: np.ndarray
    llr: np.ndarray
    gamma: np.ndarray
    y: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.y.size

    @cached_property
    def y_mask(self) -> int:
        return pack_bits(self.y)

    @cached_property
    def y_parity(self) -> int:
        return int(self.y.sum()) & 1

    @cached_property
    def log_p_zero(self) -> float:
        """log prod(1 - b_i): log-posterior of the all-zero noise effect."""
        return float(-np.logaddexp(0.0, -self.gamma).sum())


def observation_from_llr(llr, r=None) -> Observation:
    llr = np.array(llr, dtype=np.float64)
    gamma = np.abs(llr)
    y = (llr > 0).astype(np.uint8)
    # b = e^-g / (1 + e^-g), evaluated without overflow
    b = np.clip(np.exp(-gamma - np.logaddexp(0.0, -gamma)), B_FLOOR, 0.5)
    r = -0.5 * llr if r is None else np.array(r, dtype=np.float64)
    for a in (r, llr, gamma, y, b):
        a.setflags(write=False)
    return Observation(r, llr, gamma, y, b)


def demodulate(r, sigma: float) -> Observation:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=np.float64)
    return observation_from_llr(-2.0 * r / sigma**2, r)


def _check_len(obs: Observation, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint8)
    if z.shape != (obs.n,):
        raise ValueError(f"word length {z.size} != n = {obs.n}")
    return z


def log_noise_effect_posterior(obs: Observation, z) -> float:
    z = _check_len(obs, z)
    return obs.log_p_zero - float(obs.gamma @ z)


def noise_effect_posterior(obs: Observation, z) -> float:
    """p(z | r) = prod(1 - b_i) * prod_{z_i = 1} b_i / (1 - b_i)."""
    return float(np.exp(log_noise_effect_posterior(obs, z)))


def codeword_likelihood(obs: Observation, x) -> float:
    """Likelihood of codeword ``x`` up to a factor common to all codewords."""
    x = _check_len(obs, x)
    return noise_effect_posterior(obs, x ^ obs.y)


def observations_from_llr_batch(llr, r=None) -> list[Observation]:
    """Row-wise :func:`observation_from_llr` for an (m, n) array, vectorized."""
    llr = np.array(llr, dtype=np.float64, ndmin=2)
    gamma = np.abs(llr)
    y = (llr > 0).astype(np.uint8)
    soft = np.logaddexp(0.0, -gamma)
    b = np.clip(np.exp(-gamma - soft), B_FLOOR, 0.5)
    log_p0 = (-soft.sum(axis=1)).tolist()
    if y.shape[1] <= 62:
        y_masks = (y.astype(np.int64) @ (np.int64(1) << np.arange(y.shape[1], dtype=np.int64))).tolist()
    else:
        y_masks = [pack_bits(row) for row in y]
    r = -0.5 * llr if r is None else np.array(r, dtype=np.float64, ndmin=2)
    for a in (llr, gamma, y, b, r):
        a.setflags(write=False)
    out = []
    for i in range(llr.shape[0]):
        obs = Observation(r[i], llr[i], gamma[i], y[i], b[i])
        # prime the cached properties from the vectorized values
        obs.__dict__["log_p_zero"] = log_p0[i]
        obs.__dict__["y_mask"] = y_masks[i]
        obs.__dict__["y_parity"] = y_masks[i].bit_count() & 1
        out.append(obs)
    return out


def demodulate_batch(r, sigma: float) -> list[Observation]:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.array(r, dtype=np.float64, ndmin=2)
    return observations_from_llr_batch(-2.0 * r / sigma**2, r)
