"""Blockwise soft output: the probability that a decoding is correct.

Every list-based estimator here has the form

    s_i = phi_i / (sum_j phi_j + residual * factor)

where ``residual`` is the posterior mass the decoder has not accounted for
and ``factor`` the fraction of that mass expected to hold codewords.  The
list sum is formed in the log domain, the residual in the linear domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import Observation
from .codebook import ENUMERATION_LIMIT, LinearCode, pack_bits

NAIVE = "naive"
FORNEY = "forney"
SO_GRAND = "so_grand"
SO_GRAND_EVEN = "so_grand_even"
SO_GCD = "so_gcd"
SO_GCD_EVEN = "so_gcd_even"
MAP = "map"
SO_METHODS = (NAIVE, FORNEY, SO_GRAND, SO_GRAND_EVEN, SO_GCD, SO_GCD_EVEN, MAP)


@dataclass(frozen=True)
class SoftDecision:
    chosen: np.ndarray
    s: float
    per_candidate_s: np.ndarray
    method: str
    chosen_index: int = 0


def gallager_parity_prob(b, target_parity: int) -> float:
    """Probability that independent bit errors with rates ``b`` have the given parity."""
    prod = float(np.prod(1.0 - 2.0 * np.asarray(b, dtype=np.float64)))
    return 0.5 * (1.0 + prod) if target_parity == 0 else 0.5 * (1.0 - prod)


def parity_psi(obs: Observation) -> float:
    """Probability that the noise effect has the parity of the hard decisions."""
    return gallager_parity_prob(obs.b, obs.y_parity)


def multi_parity_psi(groups, b) -> tuple[float, int]:
    """Product of per-group parity probabilities over disjoint coordinate groups.

    ``groups`` is a sequence of ``(indices, target_parity)``.  Returns the
    product and the number of constraints.
    """
    b = np.asarray(b, dtype=np.float64)
    seen: set[int] = set()
    psi = 1.0
    for indices, target in groups:
        idx = [int(i) for i in indices]
        if seen.intersection(idx):
            raise ValueError("parity groups must be disjoint")
        seen.update(idx)
        psi *= gallager_parity_prob(b[idx], target)
    return psi, len(groups)


def observed_group_constraints(groups, obs: Observation) -> list[tuple[list[int], int]]:
    """Pair each group with the parity of the hard decisions on it."""
    return [(list(g), int(obs.y[list(g)].sum()) & 1) for g in groups]


def _logsumexp(values) -> float:
    top = max(values)
    if top == -math.inf:
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def _log_denominator(log_list_mass: float, residual: float, factor: float) -> float:
    extra = max(residual, 0.0) * factor
    if extra > 0.0:
        return _logsumexp([log_list_mass, math.log(extra)])
    return log_list_mass


def list_posteriors(log_phis, residual: float, factor: float) -> list[float]:
    """phi_i / (sum_j phi_j + max(residual, 0) * factor) for each list member."""
    if not log_phis:
        raise ValueError("soft output needs at least one candidate")
    log_den = _log_denominator(_logsumexp(log_phis), residual, factor)
    return [math.exp(v - log_den) for v in log_phis]


def list_posterior(log_phi: float, log_list_mass: float, residual: float, factor: float) -> float:
    """One entry of :func:`list_posteriors` given log(sum_j phi_j) precomputed."""
    return math.exp(log_phi - _log_denominator(log_list_mass, residual, factor))


def _list_decision(log_phis, residual: float, factor: float, method: str, codewords) -> SoftDecision:
    per = np.array(list_posteriors([float(v) for v in log_phis], residual, factor))
    best = int(np.argmax(per))
    return SoftDecision(np.asarray(codewords[best]), float(per[best]), per, method, best)


def _codewords(outcome) -> list[np.ndarray]:
    return [c.codeword for c in outcome.candidates]


def _log_phis(outcome) -> list[float]:
    return [c.log_phi for c in outcome.candidates]


def _rate_factor(k: int, n_free: int) -> float:
    """(2^k - 1) / (2^n_free - 1): the share of remaining noise effects that are codewords."""
    if n_free <= 0:
        return 0.0
    if n_free > 1000:
        return 2.0 ** (k - n_free)
    return (2.0**k - 1.0) / (2.0**n_free - 1.0)


def so_naive(outcome) -> SoftDecision:
    """Always-confident forecaster on the highest-posterior list member."""
    log_phis = _log_phis(outcome)
    if not log_phis:
        raise ValueError("soft output needs at least one candidate")
    best = int(np.argmax(log_phis))
    per = np.zeros(len(log_phis))
    per[best] = 1.0
    return SoftDecision(outcome.candidates[best].codeword, 1.0, per, NAIVE, best)


def map_log_likelihoods(code: LinearCode, obs: Observation) -> np.ndarray:
    """log p(x XOR y | r) for every codeword, in codebook order."""
    if code.k > ENUMERATION_LIMIT:
        raise ValueError(f"k = {code.k} exceeds enumeration limit {ENUMERATION_LIMIT}")
    weights = obs.gamma * (1.0 - 2.0 * obs.y)
    return obs.log_p_zero - float(obs.gamma @ obs.y) - code.codebook @ weights


def so_map(code: LinearCode, obs: Observation) -> SoftDecision:
    """Exact posterior of every codeword by full codebook summation."""
    ll = map_log_likelihoods(code, obs)
    per = np.exp(ll - logsumexp(ll))
    best = int(np.argmax(per))
    return SoftDecision(np.array(code.codebook[best]), float(per[best]), per, MAP, best)


def map_posterior_of(code: LinearCode, obs: Observation, x) -> float:
    ll = map_log_likelihoods(code, obs)
    lx = obs.log_p_zero - float(obs.gamma @ (np.asarray(x, dtype=np.uint8) ^ obs.y))
    return float(math.exp(lx - logsumexp(ll)))


def so_forney(outcome, obs: Observation | None = None) -> SoftDecision:
    """Likelihood of each list member normalised over the list only.

    ``outcome`` is a decode outcome, or a sequence of codewords together
    with ``obs``.
    """
    if hasattr(outcome, "candidates"):
        return _list_decision(_log_phis(outcome), 0.0, 0.0, FORNEY, _codewords(outcome))
    if obs is None:
        raise ValueError("a bare codeword list needs the observation")
    words = [np.asarray(x, dtype=np.uint8) for x in outcome]
    log_phis = [obs.log_p_zero - float(obs.gamma @ (x ^ obs.y)) for x in words]
    return _list_decision(log_phis, 0.0, 0.0, FORNEY, words)


def so_grand(outcome, n: int, k: int) -> SoftDecision:
    """Unqueried mass spread uniformly over the non-transmitted codewords."""
    return _list_decision(
        _log_phis(outcome), 1.0 - outcome.cum_phi, _rate_factor(k, n), SO_GRAND, _codewords(outcome)
    )


def so_grand_even(outcome, psi: float, n: int, k: int) -> SoftDecision:
    """SO-GRAND for even codes: only parity-consistent mass can hide a codeword."""
    if not outcome.code_is_even:
        raise ValueError("even soft output requires an even code")
    return _list_decision(
        _log_phis(outcome),
        psi - outcome.cum_phi_matching,
        _rate_factor(k, n - 1),
        SO_GRAND_EVEN,
        _codewords(outcome),
    )


def so_grand_constrained(outcome, psi: float, num_constraints: int, n: int, k: int) -> SoftDecision:
    """Several disjoint parity constraints; ``outcome`` must carry ``cum_phi_constrained``."""
    if outcome.cum_phi_constrained is None:
        raise ValueError("decode was run without constraint groups")
    return _list_decision(
        _log_phis(outcome),
        psi - outcome.cum_phi_constrained,
        _rate_factor(k, n - num_constraints),
        "so_grand_constrained",
        _codewords(outcome),
    )


def so_gcd(outcome, n: int, k: int, even_mode: bool = False, psi: float | None = None) -> SoftDecision:
    """Soft output from a GCD list.

    The baseline spreads the unqueried prefix mass over 2^n - 1 noise
    effects; ``even_mode`` keeps only the parity-consistent share of it.
    """
    if even_mode:
        if not outcome.code_is_even:
            raise ValueError("even soft output requires an even code")
        if psi is None:
            raise ValueError("even mode needs psi")
        return _list_decision(
            _log_phis(outcome),
            psi - outcome.cum_prefix_parity_mass,
            _rate_factor(k, n - 1),
            SO_GCD_EVEN,
            _codewords(outcome),
        )
    return _list_decision(
        _log_phis(outcome), 1.0 - outcome.cum_prefix_mass, _rate_factor(k, n), SO_GCD, _codewords(outcome)
    )


def residual_terms(method: str, outcome, n: int, k: int, psi: float | None = None) -> tuple[float, float]:
    """``(residual, factor)`` of a list-based method for a decode outcome."""
    if method == FORNEY:
        return 0.0, 0.0
    if method == SO_GRAND:
        return 1.0 - outcome.cum_phi, _rate_factor(k, n)
    if method == SO_GRAND_EVEN:
        return psi - outcome.cum_phi_matching, _rate_factor(k, n - 1)
    if method == SO_GCD:
        return 1.0 - outcome.cum_prefix_mass, _rate_factor(k, n)
    if method == SO_GCD_EVEN:
        return psi - outcome.cum_prefix_parity_mass, _rate_factor(k, n - 1)
    raise ValueError(f"{method!r} is not a list-based soft output")


def codeword_index(code: LinearCode, x) -> int:
    """Position of codeword ``x`` in :attr:`LinearCode.codebook` order."""
    return code.info_mask(pack_bits(x))
