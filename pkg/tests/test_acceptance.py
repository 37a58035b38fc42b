"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

The two Monte-Carlo reproductions share one 10^5-trials-per-point sweep.
Run with ``pytest tests/test_acceptance.py -v`` to see the report lines;
``-m "not slow"`` skips the sweep-based criteria (1-3).
"""

import itertools
import math
import time

import numpy as np
import pytest

from fecso.channel import noise_effect_posterior, observation_from_llr
from fecso.codebook import (
    LinearCode,
    build_ebch_16_11,
    build_ext_hamming_8_4,
    build_split_parity_8_2,
    pack_bits,
)
from fecso.gcd import FIRST_SEARCH, gcd_decode
from fecso.grand import LEVEL_COMPLETE, LIST_FULL, QuerySchedule, grand_decode
from fecso.harness import ExperimentConfig, run_experiment
from fecso.harness.output import emit_results
from fecso.partition_theory import parity_difference_table, partition_parity_counts, pentagonal_difference
from fecso.scoring import bootstrap_mean_ci, brier_decomposition, brier_score, paired_brier_difference_ci
from fecso.soft_output import codeword_index, so_forney, so_grand, so_map

GRID = [float(x) for x in range(8)]
RESAMPLES = 1000


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


@pytest.fixture(scope="session")
def ebch_sweep():
    config = ExperimentConfig(
        code="ebch16_11",
        decoders=["grand", "gcd", "ml"],
        so_methods=["naive", "forney", "so_grand", "so_grand_even", "so_gcd", "so_gcd_even", "map"],
        L=[1, 2],
        eb_n0_grid=GRID,
        trials=100_000,
        master_seed=2024,
    )
    start = time.perf_counter()
    result = run_experiment(config, keep_trials=True)
    return result, time.perf_counter() - start


def _cell(result, point, decoder, L, method):
    return result.forecasts[(point, decoder, L, method)]


@pytest.mark.slow
def test_criterion_1_naive_identity(report, ebch_sweep):
    result, _ = ebch_sweep
    rows = [r for r in result.summaries if r.so_method == "naive"]
    extra = ExperimentConfig(
        decoders=["grand", "grand_even_filter", "gcd", "ml"], so_methods=["naive"], L=[1, 3],
        eb_n0_grid=[-1.0, 2.0, 5.0], trials=3000, stop_policy=LEVEL_COMPLETE,
    )
    rows += run_experiment(extra).summaries
    rows += run_experiment(ExperimentConfig(code="bch15_11", decoders=["gcd"], so_methods=["naive"],
                                            eb_n0_grid=[1.0], trials=3000, gcd_search=FIRST_SEARCH)).summaries
    worst = max(abs(r.bs - r.bler) for r in rows)
    ok = report(1, worst <= 1e-12, f"max |BS - BLER| = {worst:.2e} over {len(rows)} naive cells")
    assert ok


@pytest.mark.slow
def test_criterion_2_list_so_close_to_map(report, ebch_sweep):
    result, elapsed = ebch_sweep
    close = True
    lines = []
    for p, eb in enumerate(GRID):
        map_g = result.summary(eb, "grand", "map", 2).bs
        map_c = result.summary(eb, "gcd", "map", 2).bs
        map_ml = result.summary(eb, "ml", "map", 2).bs
        rg = result.summary(eb, "grand", "so_grand", 2).bs / map_g - 1
        rc = result.summary(eb, "gcd", "so_gcd", 2).bs / map_c - 1
        close &= abs(rg) <= 0.10 and abs(rc) <= 0.10
        lines.append(f"{eb:.0f} dB: so_grand {rg:+.3f}, so_gcd {rc:+.3f} (vs ML-decoder MAP: "
                     f"{result.summary(eb, 'grand', 'so_grand', 2).bs / map_ml - 1:+.3f}, "
                     f"{result.summary(eb, 'gcd', 'so_gcd', 2).bs / map_ml - 1:+.3f})")
    forney_worse = True
    for p in range(4):
        s_f, o = _cell(result, p, "grand", 2, "forney")
        s_g, _ = _cell(result, p, "grand", 2, "so_grand")
        lo, hi = paired_brier_difference_ci(s_f, s_g, o, resamples=RESAMPLES, seed=p)
        forney_worse &= lo > 0
        lines.append(f"{GRID[p]:.0f} dB: BS(forney) - BS(so_grand) 95% CI [{lo:.3e}, {hi:.3e}]")
    in_time = elapsed <= 300
    report("2a", close, "relative BS gap to the MAP oracle within 10% at every point\n    " + "\n    ".join(lines[:8]))
    report("2b", forney_worse, "Forney worse than SO-GRAND at 0-3 dB\n    " + "\n    ".join(lines[8:]))
    report("2 runtime", in_time, f"sweep of 8 x 10^5 trials (all decoders, L = 1, 2) took {elapsed:.0f} s")
    assert close and forney_worse and in_time


@pytest.mark.slow
def test_criterion_3_even_correction(report, ebch_sweep):
    result, _ = ebch_sweep
    lines = []
    better = True
    for p, eb in enumerate(GRID):
        s_e, o = _cell(result, p, "grand", 1, "so_grand_even")
        s_p, _ = _cell(result, p, "grand", 1, "so_grand")
        lo, hi = paired_brier_difference_ci(s_e, s_p, o, resamples=RESAMPLES, seed=p)
        if eb <= 4:
            better &= hi <= 0
        lines.append(f"L=1 {eb:.0f} dB: BS(even) - BS(plain) 95% CI [{lo:.3e}, {hi:.3e}]")
    overlap = True
    for p, eb in enumerate(GRID):
        s_e, o = _cell(result, p, "grand", 2, "so_grand_even")
        s_p, _ = _cell(result, p, "grand", 2, "so_grand")
        ci_e = bootstrap_mean_ci((s_e - o) ** 2, resamples=RESAMPLES, seed=p)
        ci_p = bootstrap_mean_ci((s_p - o) ** 2, resamples=RESAMPLES, seed=p + 100)
        overlap &= ci_e[0] <= ci_p[1] and ci_p[0] <= ci_e[1]
        lines.append(f"L=2 {eb:.0f} dB: CI(even) [{ci_e[0]:.4e}, {ci_e[1]:.4e}]  CI(plain) [{ci_p[0]:.4e}, {ci_p[1]:.4e}]")
    report("3 (L=1)", better, "even SO-GRAND <= SO-GRAND with 95% confidence at 0-4 dB\n    " + "\n    ".join(lines[:8]))
    report("3 (L=2)", overlap, "bootstrap CIs overlap at every point\n    " + "\n    ".join(lines[8:]))
    assert better and overlap


def test_criterion_4_even_filter(report):
    code = build_ebch_16_11()
    rng = np.random.default_rng(4)
    trials = 0
    mismatches = 0
    more_queries = 0
    saved = []
    for eb in (0.0, 2.0, 4.0, 6.0):
        sigma = math.sqrt(1.0 / (2 * code.rate * 10 ** (eb / 10)))
        for _ in range(2500):
            x = code.codebook[rng.integers(0, 2048)]
            obs = observation_from_llr(-2.0 * ((1.0 - 2.0 * x) + sigma * rng.standard_normal(16)) / sigma**2)
            for policy in (LIST_FULL, LEVEL_COMPLETE):
                a = grand_decode(code, obs, L=2, stop_policy=policy)
                b = grand_decode(code, obs, L=2, stop_policy=policy, even_filter=True)
                mismatches += [c.codeword_mask for c in a.candidates] != [c.codeword_mask for c in b.candidates]
                more_queries += b.num_queries > a.num_queries
                saved.append(b.num_queries / a.num_queries)
            trials += 1
    ok = mismatches == 0 and more_queries == 0
    report(4, ok, f"{trials} trials x 2 stop policies: {mismatches} list mismatches, {more_queries} cases with more "
                  f"queries; mean filtered/unfiltered query ratio {np.mean(saved):.3f}")
    assert ok


def _brute_parity(w, n):
    even = odd = 0

    def walk(remaining, cap, parts):
        nonlocal even, odd
        if remaining == 0:
            if parts % 2:
                odd += 1
            else:
                even += 1
            return
        for part in range(min(remaining, cap), 0, -1):
            walk(remaining - part, part - 1, parts + 1)

    walk(w, n, 0)
    return even, odd


def test_criterion_5_pentagonal(report):
    identity = all(
        partition_parity_counts(w, n).difference == pentagonal_difference(w)
        for w in range(1, 101) for n in (w, w + 7, 150)
    )
    brute = all(
        (partition_parity_counts(w, n).rho0, partition_parity_counts(w, n).rho1) == _brute_parity(w, n)
        for w in range(0, 41) for n in (max(w, 1), 5, 16)
    )
    ok = report(5, identity and brute, f"Euler identity w <= 100: {identity}; DP = brute force w <= 40: {brute}")
    assert ok


def _synthetic(beta, trials=10_000, L=1):
    config = ExperimentConfig(
        decoders=["grand"], so_methods=["naive"], L=[L], eb_n0_grid=[0.0], trials=trials,
        stop_policy=LEVEL_COMPLETE, delta_diagnostics=True, synthetic_linear_beta=beta, master_seed=6,
    )
    d = run_experiment(config).diagnostics[(0, "grand", L)]
    qualified = (d["w_star"] >= 0) & ~np.isnan(d["delta_bound"])
    return d, qualified


def test_criterion_6a_bound(report):
    start = time.perf_counter()
    details = []
    ok = True
    for beta in (1e-6, 0.05, 0.2, 0.5, 1.0):
        d, q = _synthetic(beta)
        within = np.abs(d["delta"][q]) <= d["delta_bound"][q] * (1 + 1e-12)
        ok &= q.sum() >= 10_000 and within.all()
        details.append(f"beta={beta:g}: {int(q.sum())} qualifying, {within.mean():.2%} within bound")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 60
    report("6a", ok, f"({elapsed:.0f} s) " + "; ".join(details))
    assert ok


@pytest.mark.xfail(strict=True, reason="the 2^-n limit does not hold when the cumulative pentagonal sum up to w* is zero")
def test_criterion_6b_small_beta_limit(report):
    d, q = _synthetic(1e-6)
    delta = np.abs(d["delta"][q])
    w_star = d["w_star"][q]
    rel = np.abs(delta / 2.0**-16 - 1)
    hit = rel <= 0.01
    head = np.cumsum(parity_difference_table(16))[w_star]
    zero = head == 0
    report(
        "6b", bool(hit.all()),
        f"|delta| = 2^-16 within 1% in {hit.mean():.2%} of {q.sum()} qualifying trials; median |delta| "
        f"{np.median(delta):.4e} vs 2^-16 = {2.0**-16:.4e}. All misses have w* in {{1,5,6,12,13,14}} "
        f"({bool(np.all(zero == ~hit))}), where the limit is 2^-n * |sum_(w<=w*) (rho0-rho1)| = 0",
    )
    assert hit.all()


def test_criterion_6b_corrected_limit(report):
    """The limit law that does hold: |delta| -> 2^-n |sum_{w <= w*} (rho0 - rho1)|."""
    d, q = _synthetic(1e-6)
    delta = np.abs(d["delta"][q])
    head = np.abs(np.cumsum(parity_difference_table(16))[d["w_star"][q]])
    limit = head * 2.0**-16
    ok = bool(np.all(np.abs(delta - limit) <= 0.01 * 2.0**-16))
    report("6b (corrected limit)", ok, f"{q.sum()} qualifying trials match 2^-n |cumulative pentagonal sum| within 1% of 2^-16")
    assert ok


def _random_code(n, k, seed):
    rng = np.random.default_rng(seed)
    while True:
        try:
            return LinearCode.from_generator(rng.integers(0, 2, (k, n)), f"rand{n}_{k}")
        except ValueError:
            continue


def test_criterion_7_oracles(report):
    checks = {}
    rng = np.random.default_rng(7)
    codes = [build_ext_hamming_8_4(), build_split_parity_8_2(), _random_code(10, 5, 1), _random_code(12, 10, 2)]
    worst = 0.0
    for code in codes:
        n = code.n
        patterns = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.uint8)
        for _ in range(5):
            obs = observation_from_llr(rng.normal(1.0, 2.0, n) * rng.choice([-1, 1], n))
            norm = math.fsum(noise_effect_posterior(obs, z) for z in patterns)
            worst = max(worst, abs(norm - 1))
            m = so_map(code, obs)
            checks.setdefault("map sums to 1", []).append(abs(m.per_candidate_s.sum() - 1) <= 1e-12)
            full = grand_decode(code, obs, L=2**code.k + 1)
            order = [codeword_index(code, c.codeword) for c in full.candidates]
            f = so_forney(full)
            checks.setdefault("forney = map on full list", []).append(
                np.allclose(f.per_candidate_s, m.per_candidate_s[order], rtol=0, atol=1e-12))
            checks.setdefault("so_grand = forney at cum_phi = 1", []).append(
                abs(full.cum_phi - 1) <= 1e-12
                and np.allclose(so_grand(full, n, code.k).per_candidate_s, f.per_candidate_s, rtol=0, atol=1e-12))
            g = gcd_decode(code, obs, L=2**code.k, search=FIRST_SEARCH)
            checks.setdefault("gcd bijection", []).append(
                len({c.prefix_mask for c in g.candidates}) == 2**code.k
                and {c.codeword_mask for c in g.candidates} == {pack_bits(x) for x in code.codebook})
    checks["noise posterior normalises"] = [worst <= 1e-12]
    for n in range(1, 13):
        seen = {pack_bits(z) for z in QuerySchedule(rng.permutation(n) + 1)}
        checks.setdefault("schedule emits 2^n distinct patterns", []).append(len(seen) == 2**n)
    ok = all(all(v) for v in checks.values())
    report(7, ok, "; ".join(f"{k}: {all(v)}" for k, v in checks.items()))
    assert ok


def test_criterion_8_decomposition(report):
    rng = np.random.default_rng(8)
    levels = np.linspace(0, 1, 11)
    s = rng.choice(levels, 50_000)
    o = (rng.random(50_000) < rng.random(50_000)).astype(int)
    cal, ref = brier_decomposition(s, o, values=levels)
    identity = abs(cal + ref - brier_score(s, o))
    n = 100_000
    s2 = rng.choice([0.2, 0.8], n)
    o2 = (rng.random(n) < s2).astype(int)
    cal2, _ = brier_decomposition(s2, o2, values=[0.2, 0.8])
    # under calibration each of the two cells adds s(1-s)/n times a chi-square(1) variable
    mean = sigma = 2 * 0.16 / n
    ok = identity <= 1e-12 and cal2 <= mean + 3 * sigma
    report(8, ok, f"|cal + ref - BS| = {identity:.1e}; calibrated calibration term {cal2:.2e} <= {mean + 3 * sigma:.2e}")
    assert ok


def test_criterion_9_determinism(report, tmp_path):
    config = ExperimentConfig(
        decoders=["grand", "grand_even_filter", "gcd", "ml"],
        so_methods=["naive", "forney", "so_grand", "so_grand_even", "so_gcd", "so_gcd_even", "map"],
        L=[1, 2], eb_n0_grid=[0.0, 2.5, 5.0], trials=3000, per_trial_log=True, chunk_size=500,
    )
    runs = {
        "serial": emit_results(run_experiment(config, workers=1), tmp_path / "serial"),
        "repeat": emit_results(run_experiment(config, workers=1), tmp_path / "repeat"),
        "parallel": emit_results(run_experiment(config, workers=3), tmp_path / "parallel"),
    }
    base = runs["serial"]
    same = all(
        runs[name].keys() == base.keys() and all(runs[name][k].read_bytes() == base[k].read_bytes() for k in base)
        for name in runs
    )
    ok = report(9, same, f"{len(base)} output files byte-identical across serial, repeated and 3-worker runs")
    assert ok
