"""Guessing Codeword Decoding over a fixed systematic information set.

Error patterns on the k information bits are enumerated best first; each
pattern is flipped into the hard decisions on the information set and
re-encoded, so every pattern yields exactly one codeword.

Two searches are offered.  ``"ml"`` keeps the L most likely codewords seen
and stops once no unvisited pattern can beat the L-th of them, which makes
the list the L most likely codewords of the whole code.  ``"first"`` keeps
the codewords of the first L patterns and stops there.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from . import _scan
from .channel import Observation, observation_from_llr
from .codebook import LinearCode, unpack_bits
from .grand import _partition_levels, reliability_ranks

EXACT = "exact"
LOGISTIC = "logistic"
PATTERN_ORDERS = (EXACT, LOGISTIC)
ML_SEARCH = "ml"
FIRST_SEARCH = "first"
SEARCHES = (ML_SEARCH, FIRST_SEARCH)


@dataclass(frozen=True)
class SystematicView:
    """A code and observation with the information set moved to the front."""

    code: LinearCode
    obs: Observation
    perm: np.ndarray

    def permute(self, x) -> np.ndarray:
        return np.asarray(x)[self.perm]

    def unpermute(self, x) -> np.ndarray:
        out = np.empty_like(np.asarray(x))
        out[self.perm] = x
        return out


def systematize(code: LinearCode, obs: Observation) -> SystematicView:
    perm = code.systematic_order
    permuted = LinearCode.from_generator(code.G[:, perm], code.name + "_sys")
    return SystematicView(permuted, observation_from_llr(obs.llr[perm], obs.r[perm]), perm)


def _exact_patterns(costs) -> Iterator[tuple[float, tuple[int, ...]]]:
    """Yield ``(total_cost, indices)`` over all subsets in non-decreasing total cost.

    Best-first search over the subset tree on cost-sorted positions: a
    subset whose largest sorted position is j spawns "append j+1" and
    "replace j by j+1", both no cheaper than their parent.  Heap entries are
    (cost, bitmask over sorted positions, j), so ties break on the mask.
    """
    costs = np.asarray(costs, dtype=np.float64)
    order = np.argsort(costs, kind="stable").tolist()
    c = costs[order].tolist()
    k = len(c)
    heap: list[tuple[float, int, int]] = [(0.0, 0, -1)]
    while heap:
        total, mask, j = heapq.heappop(heap)
        yield total, tuple(sorted(order[i] for i in range(j + 1) if mask >> i & 1))
        if j < 0:
            if k:
                heapq.heappush(heap, (c[0], 1, 0))
        elif j + 1 < k:
            bit = 1 << (j + 1)
            heapq.heappush(heap, (total + c[j + 1], mask | bit, j + 1))
            heapq.heappush(heap, (total - c[j] + c[j + 1], (mask ^ (1 << j)) | bit, j + 1))


def _logistic_patterns(costs) -> Iterator[tuple[float, tuple[int, ...]]]:
    costs = np.asarray(costs, dtype=np.float64)
    k = costs.size
    position = np.empty(k + 1, dtype=np.int64)
    position[reliability_ranks(costs)] = np.arange(k)
    pos = position.tolist()
    c = costs.tolist()
    for _, parts in _partition_levels(k):
        idx = tuple(sorted(pos[p] for p in parts))
        yield sum(c[i] for i in idx), idx


def info_pattern_iterator(prefix_b, order: str = EXACT) -> Iterator[np.ndarray]:
    """Yield every k-bit error pattern, most probable first.

    ``prefix_b`` holds the bit-error probabilities of the information bits.
    """
    b = np.asarray(prefix_b, dtype=np.float64)
    if np.any(b <= 0) or np.any(b > 0.5):
        raise ValueError("bit-error probabilities must lie in (0, 1/2]")
    costs = np.log1p(-b) - np.log(b)
    gen = _exact_patterns(costs) if order == EXACT else _logistic_patterns(costs)
    for _, idx in gen:
        z = np.zeros(b.size, dtype=np.uint8)
        z[list(idx)] = 1
        yield z


@dataclass(frozen=True)
class GcdCandidate:
    codeword_mask: int
    noise_mask: int
    prefix_mask: int
    log_phi: float
    log_prefix_mass: float
    psi_prime: float
    pattern_index: int
    n: int
    # accumulators including this pattern (first-L search) or final totals (ML search)
    cum_prefix_mass: float = 0.0
    cum_prefix_parity_mass: float = 0.0

    @property
    def codeword(self) -> np.ndarray:
        return unpack_bits(self.codeword_mask, self.n)

    @property
    def noise(self) -> np.ndarray:
        return unpack_bits(self.noise_mask, self.n)

    @property
    def phi(self) -> float:
        return math.exp(self.log_phi)

    @property
    def prefix_mass(self) -> float:
        return math.exp(self.log_prefix_mass)


@dataclass
class GcdOutcome:
    """Result of one GCD decoding.

    ``candidates`` are sorted by decreasing posterior for the ML search and
    by emission for the first-L search.  The prefix accumulators cover
    every emitted pattern, listed or not.
    """

    candidates: list[GcdCandidate]
    cum_prefix_mass: float
    cum_prefix_parity_mass: float
    num_patterns: int
    n: int
    k: int
    code_is_even: bool
    y_parity: int
    list_size: int
    search: str = FIRST_SEARCH

    @property
    def log_phis(self) -> np.ndarray:
        return np.array([c.log_phi for c in self.candidates])

    def truncated(self, L: int) -> "GcdOutcome":
        """The outcome a first-L search with list size ``L`` <= list_size returns."""
        if L == self.list_size:
            return self
        if self.search != FIRST_SEARCH:
            raise ValueError("only first-L outcomes can be truncated; the ML search stops on list contents")
        if not 1 <= L < self.list_size:
            raise ValueError(f"cannot truncate a list of size {self.list_size} to L = {L}")
        if L > len(self.candidates):
            return replace(self, list_size=L)
        last = self.candidates[L - 1]
        return GcdOutcome(
            self.candidates[:L], last.cum_prefix_mass, last.cum_prefix_parity_mass,
            L, self.n, self.k, self.code_is_even, self.y_parity, L, FIRST_SEARCH,
        )


def gcd_decode(
    code: LinearCode,
    obs: Observation,
    L: int = 1,
    p_max: int | None = None,
    order: str = EXACT,
    search: str = ML_SEARCH,
    engine: str = "auto",
) -> GcdOutcome:
    """List-decode ``obs`` by guessing information-bit error patterns.

    ``p_max`` caps the number of patterns; when it binds, the ML search
    returns the best codewords seen so far.  The ML stopping test compares
    each pattern's prefix posterior times the largest possible parity-part
    posterior against the L-th best codeword found, so it is only exact for
    the ``"exact"`` pattern order.

    ``engine="python"`` forces the interpreted loop; by default the exact
    order runs compiled whenever n fits a machine word.
    """
    if L < 1:
        raise ValueError("list size must be at least 1")
    if order not in PATTERN_ORDERS:
        raise ValueError(f"unknown pattern order {order!r}")
    if search not in SEARCHES:
        raise ValueError(f"unknown search {search!r}")
    if engine not in ("auto", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    n, k = code.n, code.k
    if obs.n != n:
        raise ValueError(f"observation length {obs.n} != n = {n}")
    total = 1 << k
    budget = total if p_max is None else min(total, p_max)
    if search == FIRST_SEARCH:
        budget = min(budget, L)

    info = list(code.info_positions)
    parity = list(code.parity_positions)
    gamma = obs.gamma
    gam = gamma.tolist()
    info_gamma = gamma[info]
    log_p0 = obs.log_p_zero
    log_p_info = float(-np.logaddexp(0.0, -info_gamma).sum())
    # largest posterior any parity-part noise effect can have
    log_parity_cap = float(-np.logaddexp(0.0, -gamma[parity]).sum())
    parity_prod = float(np.prod(1.0 - 2.0 * obs.b[parity]))
    psi_same = 0.5 * (1.0 + parity_prod)
    psi_flip = 0.5 * (1.0 - parity_prod)
    y_mask = obs.y_mask
    y_par = obs.y_parity
    y_info = code.info_mask(y_mask)
    info_all = 0
    for p in info:
        info_all |= 1 << p
    if engine == "auto" and order == EXACT and n <= 62:
        return _gcd_compiled(
            code, obs, L, budget, search, info_gamma, log_p_info, log_parity_cap, psi_same, psi_flip, info_all
        )

    gen = _exact_patterns(info_gamma) if order == EXACT else _logistic_patterns(info_gamma)
    cands: list[GcdCandidate] = []
    worst = 0  # slot of the weakest kept candidate (smallest log_phi, latest on ties)
    masses: list[float] = []
    parity_masses: list[float] = []
    emitted = 0
    for cost, sub in gen:
        log_prefix = log_p_info - cost
        if search == ML_SEARCH and len(cands) == L and log_prefix + log_parity_cap <= cands[worst].log_phi:
            break
        emitted += 1
        zk = 0
        for j in sub:
            zk |= 1 << j
        x = code.encode_mask(y_info ^ zk)
        zn = x ^ y_mask
        c = 0.0
        m = zn
        while m:
            low = m & -m
            c += gam[low.bit_length() - 1]
            m ^= low
        lp = log_p0 - c
        psi_prime = psi_same if (y_par ^ (len(sub) & 1)) == 0 else psi_flip
        mass = math.exp(log_prefix)
        masses.append(mass)
        parity_masses.append(mass * psi_prime)
        if search == FIRST_SEARCH:
            cands.append(
                GcdCandidate(
                    x, zn, zn & info_all, lp, log_prefix, psi_prime, emitted, n,
                    math.fsum(masses), math.fsum(parity_masses),
                )
            )
            if emitted >= budget:
                break
            continue
        cand = GcdCandidate(x, zn, zn & info_all, lp, log_prefix, psi_prime, emitted, n)
        if len(cands) < L:
            cands.append(cand)
        elif lp > cands[worst].log_phi:
            cands[worst] = cand
        else:
            cand = None
        if cand is not None:
            worst = min(range(len(cands)), key=lambda s: (cands[s].log_phi, -cands[s].pattern_index))
        if emitted >= budget:
            break
    cum_mass = math.fsum(masses)
    cum_parity_mass = math.fsum(parity_masses)
    if search == ML_SEARCH:
        cands.sort(key=lambda cd: (-cd.log_phi, cd.pattern_index))
        cands = [replace(cd, cum_prefix_mass=cum_mass, cum_prefix_parity_mass=cum_parity_mass) for cd in cands]
    return GcdOutcome(
        cands, cum_mass, cum_parity_mass, emitted,
        n, k, code.is_even, y_par, L, search,
    )


def _gcd_compiled(code, obs, L, budget, search, info_gamma, log_p_info, log_parity_cap, psi_same, psi_flip, info_all):
    n = code.n
    order = np.argsort(info_gamma, kind="stable")
    g_rows = np.array(code.g_rows, dtype=np.int64)
    y_mask = obs.y_mask
    y_par = obs.y_parity
    masses, parity_masses, kept, lp, xs, zs, prefix, psis, idx = _scan.gcd_scan(
        info_gamma[order], g_rows[order], code.encode_mask(code.info_mask(y_mask)), y_mask,
        obs.gamma, log_p_info, log_parity_cap, obs.log_p_zero, psi_same, psi_flip, y_par,
        L, budget, search == ML_SEARCH,
    )
    masses = masses.tolist()
    parity_masses = parity_masses.tolist()
    cum_mass = math.fsum(masses)
    cum_parity_mass = math.fsum(parity_masses)
    cands = []
    for s in range(kept):
        i = int(idx[s])
        if search == FIRST_SEARCH:
            snap = (math.fsum(masses[:i]), math.fsum(parity_masses[:i]))
        else:
            snap = (cum_mass, cum_parity_mass)
        z = int(zs[s])
        cands.append(
            GcdCandidate(int(xs[s]), z, z & info_all, float(lp[s]), float(prefix[s]), float(psis[s]), i, n, *snap)
        )
    if search == ML_SEARCH:
        cands.sort(key=lambda cd: (-cd.log_phi, cd.pattern_index))
    return GcdOutcome(cands, cum_mass, cum_parity_mass, len(masses), n, code.k, code.is_even, y_par, L, search)
