"""ORBGRAND list decoding.

Noise effects are queried in non-decreasing Logistic Weight, the sum of the
reliability ranks of the flipped bits.  The patterns of weight ``w`` are the
distinct partitions of ``w`` with parts at most ``n``, each part naming the
rank of a bit to flip.  Partitions of one weight are emitted largest first
part first (reverse lexicographic), generated in place by a successor rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .channel import Observation
from . import _scan
from .codebook import LinearCode, unpack_bits

LIST_FULL = "list_full"
LEVEL_COMPLETE = "level_complete"
QUERY_BUDGET = "query_budget"
STOP_POLICIES = (LIST_FULL, LEVEL_COMPLETE)


def default_query_budget(n: int) -> int:
    return 2**n if n <= 20 else 2**22


def reliability_ranks(gamma) -> np.ndarray:
    """Rank of each bit's reliability, 1 = least reliable; ties keep index order."""
    gamma = np.asarray(gamma)
    ranks = np.empty(gamma.size, dtype=np.int64)
    ranks[np.argsort(gamma, kind="stable")] = np.arange(1, gamma.size + 1)
    return ranks


def logistic_weight(z, ranks) -> int:
    z = np.asarray(z)
    ranks = np.asarray(ranks)
    if z.shape != ranks.shape:
        raise ValueError("noise effect and rank vector lengths differ")
    return int(ranks[z.astype(bool)].sum())


def _partition_levels(n: int, max_weight: int | None = None) -> Iterator[tuple[int, list[int]]]:
    """Yield ``(w, parts)`` for every distinct partition with parts <= n.

    ``parts`` is decreasing and is mutated in place between yields.
    """
    top = n * (n + 1) // 2
    if max_weight is not None:
        top = min(top, max_weight)
    parts: list[int] = []
    yield 0, parts
    for w in range(1, top + 1):
        del parts[:]
        r, cap = w, n
        while r:
            a = r if r < cap else cap
            parts.append(a)
            r -= a
            cap = a - 1
        yield w, parts
        while True:
            # Rightmost part that can drop by one while the tail still fits
            # into distinct parts below it; refill the tail greedily.
            i = len(parts) - 1
            head = w - parts[i]
            while i >= 0:
                v = parts[i] - 1
                rem = w - head - v
                if v >= 1 and rem <= v * (v - 1) // 2:
                    del parts[i:]
                    parts.append(v)
                    cap = v - 1
                    while rem:
                        a = rem if rem < cap else cap
                        parts.append(a)
                        rem -= a
                        cap = a - 1
                    break
                i -= 1
                if i >= 0:
                    head -= parts[i]
            else:
                break
            yield w, parts


def distinct_partitions(w: int, max_part: int) -> Iterator[tuple[int, ...]]:
    """Distinct partitions of ``w`` with parts <= ``max_part``, reverse lexicographic."""
    for level, parts in _partition_levels(max_part, w):
        if level == w:
            yield tuple(parts)


class QuerySchedule:
    """Stateful ORBGRAND query generator for one observation.

    ``ranks[i]`` is the reliability rank of bit ``i``.  With ``parity_filter``
    set, only noise effects of that Hamming-weight parity are emitted.
    """

    def __init__(self, ranks, parity_filter: int | None = None):
        ranks = np.asarray(ranks, dtype=np.int64)
        self.n = ranks.size
        if sorted(ranks.tolist()) != list(range(1, self.n + 1)):
            raise ValueError("ranks must be a permutation of 1..n")
        self.ranks = ranks
        self.parity_filter = parity_filter
        self._position = np.empty(self.n + 1, dtype=np.int64)
        self._position[ranks] = np.arange(self.n)
        self._levels = _partition_levels(self.n)
        self.weight = 0
        self.exhausted = False

    @classmethod
    def from_gamma(cls, gamma, parity_filter: int | None = None) -> "QuerySchedule":
        return cls(reliability_ranks(gamma), parity_filter)

    def next_partition(self) -> tuple[int, ...] | None:
        for w, parts in self._levels:
            if self.parity_filter is not None and (len(parts) & 1) != self.parity_filter:
                continue
            self.weight = w
            return tuple(parts)
        self.exhausted = True
        return None

    def next_query(self) -> np.ndarray | None:
        parts = self.next_partition()
        if parts is None:
            return None
        z = np.zeros(self.n, dtype=np.uint8)
        z[self._position[list(parts)]] = 1
        return z

    def __iter__(self):
        while (z := self.next_query()) is not None:
            yield z


@dataclass(frozen=True)
class GrandCandidate:
    codeword_mask: int
    noise_mask: int
    query_index: int
    log_phi: float
    parity_match: bool
    weight: int
    n: int
    # accumulator values at the moment of this hit
    cum_phi: float = 0.0
    cum_phi_matching: float = 0.0
    cum_phi_constrained: float | None = None

    @property
    def codeword(self) -> np.ndarray:
        return unpack_bits(self.codeword_mask, self.n)

    @property
    def noise(self) -> np.ndarray:
        return unpack_bits(self.noise_mask, self.n)

    @property
    def phi(self) -> float:
        return math.exp(self.log_phi)


@dataclass
class DecodeOutcome:
    """Result of one GRAND decoding.

    ``cum_phi`` sums the posterior of every emitted query and
    ``cum_phi_matching`` only those whose parity equals that of the hard
    decisions.  ``w_star`` is the Logistic Weight of the L-th hit.
    """

    candidates: list[GrandCandidate]
    cum_phi: float
    cum_phi_matching: float
    num_queries: int
    stop_reason: str
    n: int
    k: int
    code_is_even: bool
    y_parity: int
    list_size: int
    w_star: int | None = None
    last_weight: int = 0
    cum_phi_constrained: float | None = None
    trace: list[tuple[int, int, float]] | None = field(default=None, repr=False)

    @property
    def log_phis(self) -> np.ndarray:
        return np.array([c.log_phi for c in self.candidates])

    def truncated(self, L: int) -> "DecodeOutcome":
        """The outcome a list-full decode with list size ``L`` <= list_size returns."""
        if L == self.list_size:
            return self
        if not 1 <= L < self.list_size:
            raise ValueError(f"cannot truncate a list of size {self.list_size} to L = {L}")
        if L > len(self.candidates):
            # the query budget ran out before L hits either way
            return replace(self, list_size=L, trace=self.trace)
        last = self.candidates[L - 1]
        return DecodeOutcome(
            candidates=self.candidates[:L],
            cum_phi=last.cum_phi,
            cum_phi_matching=last.cum_phi_matching,
            num_queries=last.query_index,
            stop_reason=LIST_FULL,
            n=self.n,
            k=self.k,
            code_is_even=self.code_is_even,
            y_parity=self.y_parity,
            list_size=L,
            w_star=last.weight,
            last_weight=last.weight,
            cum_phi_constrained=last.cum_phi_constrained,
            trace=None if self.trace is None else self.trace[: last.query_index],
        )


def grand_decode(
    code: LinearCode,
    obs: Observation,
    L: int = 1,
    q_max: int | None = None,
    stop_policy: str = LIST_FULL,
    even_filter: bool = False,
    constraint_groups=None,
    trace: bool = False,
    engine: str = "auto",
) -> DecodeOutcome:
    """List-decode ``obs`` with basic ORBGRAND.

    Every emitted query contributes to the posterior accumulators, hit or
    not.  ``constraint_groups`` is an optional sequence of coordinate sets;
    queries whose parity on every group equals that of the hard decisions
    are summed into ``cum_phi_constrained``.

    ``engine="python"`` forces the interpreted query loop; the default uses
    the compiled loop whenever no trace or constraint groups are requested
    and n fits a machine word.
    """
    if L < 1:
        raise ValueError("list size must be at least 1")
    if stop_policy not in STOP_POLICIES:
        raise ValueError(f"unknown stop policy {stop_policy!r}")
    n = code.n
    if obs.n != n:
        raise ValueError(f"observation length {obs.n} != n = {n}")
    if q_max is None:
        q_max = default_query_budget(n)
    if q_max < 1:
        raise ValueError("query budget must be at least 1")

    if engine not in ("auto", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "auto" and constraint_groups is None and not trace and n <= 62:
        return _grand_decode_compiled(code, obs, L, q_max, stop_policy, even_filter)

    order = np.argsort(obs.gamma, kind="stable")
    synd = [0] + [code.h_cols[p] for p in order.tolist()]
    gam = [0.0] + obs.gamma[order].tolist()
    bit = [0] + [1 << p for p in order.tolist()]
    log_p0 = obs.log_p_zero
    y_mask = obs.y_mask
    y_synd = code.syndrome(y_mask)
    y_par = obs.y_parity
    target = y_par if even_filter else None

    groups = None
    if constraint_groups is not None:
        groups = []
        for g in constraint_groups:
            gm = 0
            for i in g:
                gm |= 1 << int(i)
            groups.append((gm, (y_mask & gm).bit_count() & 1))
    constrained: list[float] = []

    exp = math.exp
    phis: list[float] = []
    matching: list[float] = []
    cands: list[GrandCandidate] = []
    log: list[tuple[int, int, float]] | None = [] if trace else None
    q = 0
    w_star = None
    stop_level = None
    last_w = 0
    reason = QUERY_BUDGET
    for w, parts in _partition_levels(n):
        if stop_level is not None and w > stop_level:
            reason = LEVEL_COMPLETE
            break
        par = len(parts) & 1
        if target is not None and par != target:
            continue
        q += 1
        last_w = w
        s = y_synd
        cost = 0.0
        for p in parts:
            s ^= synd[p]
            cost += gam[p]
        lp = log_p0 - cost
        phi = exp(lp)
        phis.append(phi)
        if par == y_par:
            matching.append(phi)
        if groups is not None or log is not None or (s == 0 and len(cands) < L):
            z = 0
            for p in parts:
                z |= bit[p]
            if log is not None:
                log.append((z, w, lp))
            if groups is not None and all(((z & gm).bit_count() & 1) == gp for gm, gp in groups):
                constrained.append(phi)
            if s == 0 and len(cands) < L:
                cands.append(
                    GrandCandidate(
                        y_mask ^ z, z, q, lp, par == y_par, w, n,
                        math.fsum(phis),
                        math.fsum(matching),
                        math.fsum(constrained) if groups is not None else None,
                    )
                )
                if len(cands) == L:
                    w_star = w
                    if stop_policy == LIST_FULL:
                        reason = LIST_FULL
                        break
                    stop_level = w
        if q >= q_max:
            reason = QUERY_BUDGET
            break
    else:
        if stop_level is not None:
            reason = LEVEL_COMPLETE

    return DecodeOutcome(
        candidates=cands,
        cum_phi=math.fsum(phis),
        cum_phi_matching=math.fsum(matching),
        num_queries=q,
        stop_reason=reason,
        n=n,
        k=code.k,
        code_is_even=code.is_even,
        y_parity=y_par,
        list_size=L,
        w_star=w_star,
        last_weight=last_w,
        cum_phi_constrained=math.fsum(constrained) if groups is not None else None,
        trace=log,
    )


_REASONS = {_scan.REASON_LIST_FULL: LIST_FULL, _scan.REASON_LEVEL_COMPLETE: LEVEL_COMPLETE, _scan.REASON_BUDGET: QUERY_BUDGET}
_rank_tables: dict[int, tuple] = {}


def _grand_decode_compiled(code, obs, L, q_max, stop_policy, even_filter) -> DecodeOutcome:
    n = code.n
    order = np.argsort(obs.gamma, kind="stable")
    tables = _rank_tables.get(id(code))
    if tables is None or tables[0] is not code:
        h = np.array(code.h_cols, dtype=np.int64)
        tables = (code, h, np.int64(1) << np.arange(n, dtype=np.int64))
        _rank_tables[id(code)] = tables
    _, h, bits = tables
    synd = np.zeros(n + 1, dtype=np.int64)
    synd[1:] = h[order]
    gam = np.zeros(n + 1, dtype=np.float64)
    gam[1:] = obs.gamma[order]
    bit = np.zeros(n + 1, dtype=np.int64)
    bit[1:] = bits[order]
    y_mask = obs.y_mask
    y_par = obs.y_parity
    log_p0 = obs.log_p_zero
    lps, phi, phi_match, hits, hit_q, hit_z, hit_w, last_w, reason = _scan.scan(
        synd, gam, bit, code.syndrome(y_mask), y_par, log_p0, L, q_max,
        y_par if even_filter else -1, stop_policy == LEVEL_COMPLETE,
    )
    phis = phi.tolist()
    matching = phi_match.tolist()
    cands = []
    for j in range(hits):
        qi = int(hit_q[j])
        z = int(hit_z[j])
        cands.append(
            GrandCandidate(
                y_mask ^ z, z, qi, float(lps[qi - 1]), (z.bit_count() & 1) == y_par,
                int(hit_w[j]), n, math.fsum(phis[:qi]), math.fsum(matching[:qi]),
            )
        )
    return DecodeOutcome(
        candidates=cands,
        cum_phi=math.fsum(phis),
        cum_phi_matching=math.fsum(matching),
        num_queries=len(phis),
        stop_reason=_REASONS[int(reason)],
        n=n,
        k=code.k,
        code_is_even=code.is_even,
        y_parity=y_par,
        list_size=L,
        w_star=int(hit_w[L - 1]) if hits == L else None,
        last_weight=int(last_w),
        cum_phi_constrained=None,
    )
