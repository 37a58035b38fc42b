"""Seeded Monte-Carlo sweeps over Eb/N0 points.

Randomness is counter based: trial ``t`` at grid point ``p`` always reads
the same block of a Philox stream keyed on ``(master_seed, p)``, so a trial
sees identical noise whatever chunking or worker count is used.  Trials are
processed in fixed-size chunks whose score accumulators are merged in chunk
order, which keeps floating-point sums bit-identical across worker counts.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtri

from ..channel import awgn_params, demodulate_batch, observations_from_llr_batch
from ..codebook import LinearCode, load_code, pack_bits
from ..gcd import FIRST_SEARCH, gcd_decode
from ..grand import LIST_FULL, grand_decode
from ..partition_theory import delta_bound, delta_observed, estimate_beta
from ..scoring import ScoreAccumulator, ScoreSummary, bsr, summarize
from ..soft_output import MAP, NAIVE, _logsumexp, list_posterior, parity_psi, residual_terms
from .config import GCD, GRAND, GRAND_EVEN_FILTER, ML, ExperimentConfig, ConfigError, validate

log = logging.getLogger(__name__)

_TINY = 2.0**-53


def _philox_key(master_seed: int, point: int) -> np.ndarray:
    return np.random.SeedSequence([master_seed, point]).generate_state(2, np.uint64)


def trial_uniforms(master_seed: int, point: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms in [0, 1) for trials ``start..stop-1``, ``width`` per trial.

    Each trial owns ``ceil(width / 4)`` Philox counter blocks, so the values
    depend only on (master_seed, point, trial index).
    """
    blocks = -(-width // 4)
    bitgen = np.random.Philox(key=_philox_key(master_seed, point))
    if start:
        bitgen.advance(start * blocks)
    u = np.random.Generator(bitgen).random((stop - start, blocks * 4))
    return u[:, :width]


def uniform_to_normal(u) -> np.ndarray:
    # u = 0 is the only lattice point with an infinite inverse CDF
    return ndtri(np.maximum(np.asarray(u), _TINY))


_codes: dict[str, LinearCode] = {}


def _code(spec: str) -> LinearCode:
    if spec not in _codes:
        _codes[spec] = load_code(spec)
    return _codes[spec]


def _masks(words: np.ndarray) -> list[int]:
    if words.shape[1] <= 62:
        return (words.astype(np.int64) @ (np.int64(1) << np.arange(words.shape[1], dtype=np.int64))).tolist()
    return [pack_bits(w) for w in words]


def draw_trials(config: ExperimentConfig, code: LinearCode, point: int, start: int, stop: int):
    """Transmitted codeword masks and observations for a range of trials."""
    n, k = code.n, code.k
    beta = config.synthetic_linear_beta
    width = k + (2 * n if beta is not None else n)
    u = trial_uniforms(config.master_seed, point, start, stop, width)
    msgs = (u[:, :k] < 0.5).astype(np.int64)
    x = ((msgs @ code.G.astype(np.int64)) % 2).astype(np.uint8)
    if beta is None:
        params = awgn_params(config.eb_n0_grid[point], code.rate)
        r = (1.0 - 2.0 * x) + params.sigma * uniform_to_normal(u[:, k:])
        observations = demodulate_batch(r, params.sigma)
    else:
        # gamma = beta * rank exactly; hard decisions carry Bernoulli(b) errors
        ranks = np.argsort(np.argsort(u[:, k:k + n], axis=1, kind="stable"), axis=1) + 1
        gamma = beta * ranks
        b = 1.0 / (1.0 + np.exp(gamma))
        z = (u[:, k + n:] < b).astype(np.uint8)
        y = x ^ z
        observations = observations_from_llr_batch(np.where(y == 1, gamma, -gamma))
    return _masks(x), observations


@dataclass
class _ChunkResult:
    point: int
    start: int
    acc: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    forecasts: dict | None = None
    queries: dict | None = None
    diagnostics: dict | None = None


def _decode_all(decoder: str, code, obs, config: ExperimentConfig, sizes: list[int]) -> dict:
    """Decode once per needed list size; list-full decodes are truncated from the largest."""
    if decoder == GCD:
        if config.gcd_search == FIRST_SEARCH:
            full = gcd_decode(code, obs, max(sizes), order=config.gcd_order, search=FIRST_SEARCH)
            return {L: full.truncated(L) for L in sizes}
        return {L: gcd_decode(code, obs, L, order=config.gcd_order, search=config.gcd_search) for L in sizes}
    even = decoder == GRAND_EVEN_FILTER
    if config.stop_policy == LIST_FULL:
        full = grand_decode(code, obs, max(sizes), config.q_max, LIST_FULL, even)
        return {L: full.truncated(L) for L in sizes}
    return {L: grand_decode(code, obs, L, config.q_max, config.stop_policy, even) for L in sizes}


def _run_chunk(task) -> _ChunkResult:
    config, point, start, stop, keep = task
    code = _code(config.code)
    n, k = code.n, code.k
    x_masks, observations = draw_trials(config, code, point, start, stop)
    sizes = list(dict.fromkeys(config.L))
    need_map = ML in config.decoders or MAP in config.so_methods
    if need_map:
        book = code.codebook.astype(np.float64)
        book_masks = _masks(code.codebook)
        gamma = np.stack([o.gamma for o in observations])
        y = np.stack([o.y for o in observations]).astype(np.float64)
        lp0 = np.array([o.log_p_zero for o in observations])
        ll = (lp0 - (gamma * y).sum(axis=1))[:, None] - (gamma * (1.0 - 2.0 * y)) @ book.T
        lse = logsumexp(ll, axis=1).tolist()
        ml_index = np.argmax(ll, axis=1).tolist()
        ml_ll = ll[np.arange(len(observations)), ml_index].tolist()

    cells = {}
    errors = {}
    queries = {(d, L): [] for d in config.decoders for L in sizes} if keep else None
    diag = {} if config.delta_diagnostics else None
    for decoder in config.decoders:
        for L in sizes:
            errors[(decoder, L)] = 0
            for m in config.methods_for(decoder, L):
                cells[(decoder, L, m)] = ([], [])
            if diag is not None and decoder == GRAND:
                diag[(decoder, L)] = {key: [] for key in ("num_queries", "w_star", "beta", "delta", "delta_bound")}

    for t, obs in enumerate(observations):
        x = x_masks[t]
        psi = parity_psi(obs)
        for decoder in config.decoders:
            if decoder == ML:
                o = int(book_masks[ml_index[t]] == x)
                for L in sizes:
                    errors[(decoder, L)] += 1 - o
                    if queries is not None:
                        queries[(decoder, L)].append(1 << k)
                    for m in config.methods_for(decoder, L):
                        s = 1.0 if m == NAIVE else math.exp(ml_ll[t] - lse[t])
                        cells[(decoder, L, m)][0].append(s)
                        cells[(decoder, L, m)][1].append(o)
                continue
            for L, out in _decode_all(decoder, code, obs, config, sizes).items():
                cands = out.candidates
                if cands:
                    lps = [c.log_phi for c in cands]
                    best = max(range(len(lps)), key=lps.__getitem__)
                    o = int(cands[best].codeword_mask == x)
                    list_mass = _logsumexp(lps)
                else:
                    o = 0
                errors[(decoder, L)] += 1 - o
                if queries is not None:
                    queries[(decoder, L)].append(out.num_patterns if decoder == GCD else out.num_queries)
                for m in config.methods_for(decoder, L):
                    if m == NAIVE:
                        s = 1.0
                    elif not cands:
                        s = 0.0
                    elif m == MAP:
                        s = min(1.0, math.exp(lps[best] - lse[t]))
                    else:
                        residual, factor = residual_terms(m, out, n, k, psi)
                        s = list_posterior(lps[best], list_mass, residual, factor)
                    cells[(decoder, L, m)][0].append(s)
                    cells[(decoder, L, m)][1].append(o)
                if diag is not None and decoder == GRAND:
                    d = diag[(decoder, L)]
                    beta = config.synthetic_linear_beta or estimate_beta(obs.gamma)
                    w_star = out.w_star if len(cands) == L else None
                    bound = None
                    if w_star is not None and w_star <= n:
                        bound = delta_bound(w_star, beta, obs.b, n)
                    d["num_queries"].append(out.num_queries)
                    d["w_star"].append(-1 if w_star is None else w_star)
                    d["beta"].append(beta)
                    d["delta"].append(delta_observed(out, psi))
                    d["delta_bound"].append(math.nan if bound is None else bound)
    result = _ChunkResult(point, start, errors=errors)
    if keep:
        result.forecasts = {}
        result.queries = {key: np.asarray(v, dtype=np.int64) for key, v in queries.items()}
    for key, (s, o) in cells.items():
        acc = ScoreAccumulator(config.bins)
        acc.update(s, o)
        result.acc[key] = acc
        if keep:
            result.forecasts[key] = (np.asarray(s, dtype=np.float64), np.asarray(o, dtype=np.int8))
    if diag is not None:
        result.diagnostics = {key: {f: np.asarray(v) for f, v in d.items()} for key, d in diag.items()}
    return result


@dataclass
class ExperimentResult:
    """Scores for every (point, decoder, L, method) cell.

    ``forecasts`` maps ``(point_index, decoder, L, method)`` to per-trial
    ``(s, o)`` arrays, ``queries`` maps ``(point_index, decoder, L)`` to
    per-trial query (or pattern) counts and ``diagnostics`` maps the same
    keys to per-trial delta diagnostics; all are kept only on request.
    """

    config: ExperimentConfig
    summaries: list[ScoreSummary]
    forecasts: dict | None = None
    queries: dict | None = None
    diagnostics: dict | None = None

    def summary(self, eb_n0_db: float, decoder: str, so_method: str, L: int) -> ScoreSummary:
        for row in self.summaries:
            if (row.eb_n0_db, row.decoder, row.so_method, row.L) == (float(eb_n0_db), decoder, so_method, L):
                return row
        raise KeyError((eb_n0_db, decoder, so_method, L))


def _tasks(config: ExperimentConfig, keep: bool):
    for point in range(len(config.eb_n0_grid)):
        for start in range(0, config.trials, config.chunk_size):
            yield config, point, start, min(start + config.chunk_size, config.trials), keep


def _concat(parts: list) -> dict:
    out = {}
    for part in parts:
        for key, value in part.items():
            out.setdefault(key, []).append(value)
    return out


def run_experiment(config: ExperimentConfig, workers: int | None = None, keep_trials: bool = False) -> ExperimentResult:
    """Simulate every grid point and score every applicable (decoder, L, method)."""
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    workers = config.workers if workers is None else workers
    keep = keep_trials or config.per_trial_log or config.delta_diagnostics
    if config.trials == 0:
        return ExperimentResult(
            config, [], {} if keep else None, {} if keep else None, {} if config.delta_diagnostics else None
        )

    tasks = list(_tasks(config, keep))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, tasks))
    else:
        chunks = [_run_chunk(task) for task in tasks]

    sizes = list(dict.fromkeys(config.L))
    summaries = []
    forecasts = {} if keep else None
    queries = {} if keep else None
    diagnostics = {} if config.delta_diagnostics else None
    for point, eb in enumerate(config.eb_n0_grid):
        mine = [c for c in chunks if c.point == point]
        mine.sort(key=lambda c: c.start)
        errors = {}
        for c in mine:
            for key, e in c.errors.items():
                errors[key] = errors.get(key, 0) + e
        reference = min(errors.values()) / config.trials if errors else 0.0
        for decoder in config.decoders:
            for L in sizes:
                for m in config.methods_for(decoder, L):
                    acc = mine[0].acc[(decoder, L, m)]
                    for c in mine[1:]:
                        acc = acc.merge(c.acc[(decoder, L, m)])
                    row = summarize(acc, eb, decoder, m, L)
                    summaries.append(
                        ScoreSummary(
                            row.eb_n0_db, row.decoder, row.so_method, row.L, row.n, row.bs,
                            row.calibration_term, row.refinement_term, row.bler, bsr(row.bs, reference),
                        )
                    )
                    if forecasts is not None:
                        pieces = [c.forecasts[(decoder, L, m)] for c in mine]
                        forecasts[(point, decoder, L, m)] = (
                            np.concatenate([p[0] for p in pieces]),
                            np.concatenate([p[1] for p in pieces]),
                        )
        if queries is not None:
            for key, parts in _concat([c.queries for c in mine]).items():
                queries[(point, *key)] = np.concatenate(parts)
        if diagnostics is not None:
            merged = _concat([c.diagnostics for c in mine])
            for key, parts in merged.items():
                diagnostics[(point, *key)] = {f: np.concatenate([p[f] for p in parts]) for f in parts[0]}
        log.info("Eb/N0 %.2f dB done (%d trials)", eb, config.trials)
    return ExperimentResult(config, summaries, forecasts, queries, diagnostics)
