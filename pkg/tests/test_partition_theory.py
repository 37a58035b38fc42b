import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fecso.channel import log_noise_effect_posterior, observation_from_llr
from fecso.codebook import build_ebch_16_11, build_ext_hamming_8_4
from fecso.grand import LEVEL_COMPLETE, grand_decode, logistic_weight, reliability_ranks
from fecso.partition_theory import (
    delta_bound,
    delta_closed_form,
    delta_observed,
    delta_tail,
    estimate_beta,
    generalized_pentagonal,
    parity_difference_table,
    partition_parity_counts,
    pentagonal_difference,
    pentagonal_pair_bound,
    theta,
)
from fecso.soft_output import parity_psi


def _brute_counts(w, n):
    even = odd = 0
    for size in range(n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            if sum(combo) == w:
                if size % 2:
                    odd += 1
                else:
                    even += 1
    return even, odd


def _euler_sign(w):
    """Coefficient of x^w in prod_{i>=1} (1 - x^i), by the product itself."""
    coeffs = [1] + [0] * w
    for i in range(1, w + 1):
        for v in range(w, i - 1, -1):
            coeffs[v] -= coeffs[v - i]
    return coeffs[w]


def test_pentagonal_values_to_15():
    values = [v for v, _, _ in generalized_pentagonal(15)]
    assert values == [1, 2, 5, 7, 12, 15]
    signs = {v: s for v, _, s in generalized_pentagonal(15)}
    assert signs[1] == -1 and signs[2] == -1 and signs[5] == 1 and signs[7] == 1
    assert signs[12] == -1 and signs[15] == -1
    with pytest.raises(ValueError):
        generalized_pentagonal(0)


@pytest.mark.parametrize("w,expected", [(1, (0, 1)), (3, (1, 1)), (5, (2, 1))])
def test_parity_count_examples(w, expected):
    c = partition_parity_counts(w, max(w, 1))
    assert (c.rho0, c.rho1) == expected
    assert c.total == sum(expected)


def test_pentagonal_identity_to_100():
    for w in range(1, 101):
        for n in (w, w + 1, 120):
            assert partition_parity_counts(w, n).difference == pentagonal_difference(w)
        assert pentagonal_difference(w) == _euler_sign(w)


def test_dp_matches_brute_force():
    for n in (1, 3, 7, 12):
        for w in range(0, 41):
            c = partition_parity_counts(w, n)
            assert (c.rho0, c.rho1) == _brute_counts(w, n)


def test_dp_matches_brute_force_unrestricted_parts():
    # n >= w: every distinct partition of w counts
    for w in range(0, 25):
        c = partition_parity_counts(w, w if w else 1)
        assert (c.rho0, c.rho1) == _brute_counts(w, max(w, 1))


@pytest.mark.parametrize("n", range(1, 13))
def test_euler_total_is_two_to_n(n):
    top = n * (n + 1) // 2
    assert sum(partition_parity_counts(w, n).total for w in range(top + 1)) == 2**n
    assert partition_parity_counts(top + 1, n).total == 0
    # prod (1 - x^i) vanishes at x = 1
    assert parity_difference_table(n).sum() == 0


def test_parity_counts_errors():
    with pytest.raises(ValueError):
        partition_parity_counts(-1, 4)
    with pytest.raises(ValueError):
        partition_parity_counts(3, 0)


def test_theta_examples():
    b = np.array([0.1, 0.2, 0.4])
    assert theta(0, 0.5, b) == pytest.approx(0.9 * 0.8 * 0.6, rel=1e-14)
    with pytest.raises(ValueError):
        theta(1, 0.0, b)
    n = 16
    beta = 1e-9
    b_half = 1.0 / (1.0 + np.exp(beta * np.arange(1, n + 1)))
    assert theta(50, beta, b_half) == pytest.approx(2.0**-n, rel=1e-6)


def _linear_obs(rng, n, beta):
    ranks = rng.permutation(n) + 1
    signs = rng.choice([-1.0, 1.0], n)
    return observation_from_llr(beta * ranks * signs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0))
def test_theta_is_posterior_under_linear_model(seed, beta):
    rng = np.random.default_rng(seed)
    obs = _linear_obs(rng, 10, beta)
    ranks = reliability_ranks(obs.gamma)
    for z in rng.integers(0, 2, (20, 10)).astype(np.uint8):
        w = logistic_weight(z, ranks)
        assert math.log(theta(w, beta, obs.b)) == pytest.approx(log_noise_effect_posterior(obs, z), rel=1e-12, abs=1e-12)


def test_delta_examples():
    class Out:
        cum_phi = 0.0
        cum_phi_matching = 0.0

    assert delta_observed(Out, 0.5) == 0.0
    Out.cum_phi, Out.cum_phi_matching = 1.0, 0.37
    assert delta_observed(Out, 0.37) == pytest.approx(0.0, abs=1e-15)


def test_bound_shape():
    rng = np.random.default_rng(0)
    obs = _linear_obs(rng, 16, 0.3)
    bounds = [delta_bound(w, 0.3, obs.b, 16) for w in range(17)]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))
    tail = delta_tail(0.3, obs.b, 16)
    for w, bound in enumerate(bounds):
        assert bound - tail == pytest.approx(2 * theta(w, 0.3, obs.b), rel=1e-12)
        assert pentagonal_pair_bound(w, 0.3, obs.b, 16) <= bound + 1e-15
    with pytest.raises(ValueError):
        delta_bound(17, 0.3, obs.b, 16)
    with pytest.raises(ValueError):
        pentagonal_pair_bound(17, 0.3, obs.b, 16)


def test_estimate_beta_recovers_exact_slope():
    rng = np.random.default_rng(1)
    gamma = 0.25 * (rng.permutation(16) + 1)
    assert estimate_beta(gamma) == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("beta", [0.05, 0.3, 1.0])
def test_closed_form_matches_observed_delta(beta):
    code = build_ebch_16_11()
    rng = np.random.default_rng(int(beta * 100))
    for _ in range(200):
        obs = _linear_obs(rng, 16, beta)
        out = grand_decode(code, obs, L=1, stop_policy=LEVEL_COMPLETE)
        observed = delta_observed(out, parity_psi(obs))
        closed = delta_closed_form(out.w_star, beta, obs.b, 16, obs.y_parity)
        assert observed == pytest.approx(closed, abs=1e-9)
        if out.w_star <= 16:
            assert abs(observed) <= delta_bound(out.w_star, beta, obs.b, 16) * (1 + 1e-9)


def test_closed_form_small_code_exhaustive():
    """On the (8,4) code, recompute delta from every unqueried pattern."""
    code = build_ext_hamming_8_4()
    rng = np.random.default_rng(2)
    patterns = np.array(list(itertools.product([0, 1], repeat=8)), dtype=np.uint8)
    for _ in range(50):
        beta = rng.uniform(0.05, 1.0)
        obs = _linear_obs(rng, 8, beta)
        out = grand_decode(code, obs, L=2, stop_policy=LEVEL_COMPLETE)
        ranks = reliability_ranks(obs.gamma)
        match = other = 0.0
        for z in patterns:
            if logistic_weight(z, ranks) <= out.w_star:
                continue
            p = math.exp(log_noise_effect_posterior(obs, z))
            if int(z.sum()) % 2 == obs.y_parity:
                match += p
            else:
                other += p
        assert delta_observed(out, parity_psi(obs)) == pytest.approx(match - other, abs=1e-12)
        assert delta_closed_form(out.w_star, beta, obs.b, 8, obs.y_parity) == pytest.approx(match - other, abs=1e-12)


def test_small_beta_limit_follows_cumulative_pentagonal_sum():
    """As beta -> 0, |delta| -> 2^-n |sum_{w <= w*} (rho0 - rho1)|, which is 0 or 2^-n for w* <= n."""
    n = 16
    beta = 1e-6
    b = 1.0 / (1.0 + np.exp(beta * np.arange(1, n + 1)))
    diff = parity_difference_table(n)
    for w_star in range(n + 1):
        head = int(diff[: w_star + 1].sum())
        assert head in (-1, 0, 1)
        limit = 2.0**-n * abs(head)
        got = abs(delta_closed_form(w_star, beta, b, n, 0))
        if head:
            assert got == pytest.approx(limit, rel=1e-2)
        else:
            assert got < 1e-3 * 2.0**-n
    zero_levels = [w for w in range(n + 1) if diff[: w + 1].sum() == 0]
    assert zero_levels == [1, 5, 6, 12, 13, 14]
