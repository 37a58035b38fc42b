"""Compiled inner loops of the GRAND and GCD decoders.

:func:`scan` walks the same Logistic-Weight partition schedule as
:func:`fecso.grand._partition_levels`; :func:`gcd_scan` walks the same
best-first pattern order as :func:`fecso.gcd._exact_patterns`.  Both return
per-query quantities so that the callers can form exact accumulators
without a Python loop per query.  Scan reason codes: 0 list full, 1 level
complete, 2 budget.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit

REASON_LIST_FULL = 0
REASON_LEVEL_COMPLETE = 1
REASON_BUDGET = 2


@njit(cache=True)
def _grow(a, size):
    out = np.empty(max(size, 2 * a.size), dtype=a.dtype)
    out[: a.size] = a
    return out


@njit(cache=True)
def scan(synd, gam, bit, y_synd, y_par, log_p0, L, q_max, target, level_complete):
    """Run the query loop on rank-indexed syndromes, reliabilities and bit masks.

    Index 0 of ``synd``, ``gam`` and ``bit`` is a placeholder so that rank r
    lives at index r.  ``target`` is the required part-count parity, or -1.
    Returns per-query log-posteriors, posteriors and parity-matching
    posteriors (zero where the parity differs from ``y_par``), the hits
    (query index, noise mask, weight) and the stop information.
    """
    n = synd.size - 1
    top = n * (n + 1) // 2
    log_phi = np.empty(256, dtype=np.float64)
    phi = np.empty(256, dtype=np.float64)
    phi_match = np.empty(256, dtype=np.float64)
    hit_q = np.zeros(L, dtype=np.int64)
    hit_z = np.zeros(L, dtype=np.int64)
    hit_w = np.zeros(L, dtype=np.int64)
    parts = np.zeros(n + 1, dtype=np.int64)
    hits = 0
    q = 0
    last_w = 0
    stop_level = -1
    reason = REASON_BUDGET
    w = 0
    m = 0  # number of parts
    done = False
    while not done:
        # emit the current partition (w, parts[:m])
        if stop_level >= 0 and w > stop_level:
            reason = REASON_LEVEL_COMPLETE
            break
        p_par = m & 1
        if target < 0 or p_par == target:
            if q == log_phi.size:
                log_phi = _grow(log_phi, q + 1)
                phi = _grow(phi, q + 1)
                phi_match = _grow(phi_match, q + 1)
            s = y_synd
            cost = 0.0
            for j in range(m):
                s ^= synd[parts[j]]
                cost += gam[parts[j]]
            lp = log_p0 - cost
            e = math.exp(lp)
            log_phi[q] = lp
            phi[q] = e
            phi_match[q] = e if p_par == y_par else 0.0
            q += 1
            last_w = w
            if s == 0 and hits < L:
                z = 0
                for j in range(m):
                    z |= bit[parts[j]]
                hit_q[hits] = q
                hit_z[hits] = z
                hit_w[hits] = w
                hits += 1
                if hits == L:
                    if not level_complete:
                        reason = REASON_LIST_FULL
                        break
                    stop_level = w
            if q >= q_max:
                reason = REASON_BUDGET
                break
        # advance to the next partition
        advanced = False
        if m > 0:
            i = m - 1
            head = w - parts[i]
            while i >= 0:
                v = parts[i] - 1
                rem = w - head - v
                if v >= 1 and rem <= v * (v - 1) // 2:
                    parts[i] = v
                    m = i + 1
                    cap = v - 1
                    while rem:
                        a = rem if rem < cap else cap
                        parts[m] = a
                        m += 1
                        rem -= a
                        cap = a - 1
                    advanced = True
                    break
                i -= 1
                if i >= 0:
                    head -= parts[i]
        if not advanced:
            w += 1
            if w > top:
                if stop_level >= 0:
                    reason = REASON_LEVEL_COMPLETE
                done = True
                break
            r = w
            cap = n
            m = 0
            while r:
                a = r if r < cap else cap
                parts[m] = a
                m += 1
                r -= a
                cap = a - 1
    return log_phi[:q], phi[:q], phi_match[:q], hits, hit_q, hit_z, hit_w, last_w, reason


@njit(cache=True)
def gcd_scan(costs, g_sorted, x0, y_mask, gam, log_p_info, log_parity_cap, log_p0,
             psi_same, psi_flip, y_par, L, budget, ml):
    """Best-first GCD over information-bit patterns.

    ``costs`` are the sorted per-bit flip costs log((1-b)/b) of the
    information bits and ``g_sorted`` the generator rows in the same order;
    ``x0`` encodes the hard decisions on the information set.  Patterns are
    heap entries (cost, mask over sorted positions, largest position).
    Returns per-pattern prefix masses and parity masses, and the kept list
    as (log_phi, codeword, noise, log_prefix, psi', pattern index) arrays.
    With ``ml`` the list holds the L best codewords seen and the search
    stops when no later pattern can beat the L-th of them; otherwise the
    first L patterns are kept.
    """
    k = costs.size
    n = gam.size
    masses = np.empty(64, dtype=np.float64)
    parity_masses = np.empty(64, dtype=np.float64)
    keep_lp = np.empty(L, dtype=np.float64)
    keep_x = np.zeros(L, dtype=np.int64)
    keep_z = np.zeros(L, dtype=np.int64)
    keep_prefix = np.zeros(L, dtype=np.float64)
    keep_psi = np.zeros(L, dtype=np.float64)
    keep_idx = np.zeros(L, dtype=np.int64)
    kept = 0
    worst = 0  # slot of the smallest kept log_phi
    heap = [(0.0, np.int64(0), np.int64(-1))]
    emitted = 0
    while len(heap) > 0:
        total, mask, j = heapq.heappop(heap)
        log_prefix = log_p_info - total
        if ml and kept == L and log_prefix + log_parity_cap <= keep_lp[worst]:
            break
        emitted += 1
        x = x0
        flips = 0
        m = mask
        pos = 0
        while m:
            if m & 1:
                x ^= g_sorted[pos]
                flips += 1
            m >>= 1
            pos += 1
        zn = x ^ y_mask
        c = 0.0
        for i in range(n):
            if (zn >> i) & 1:
                c += gam[i]
        lp = log_p0 - c
        psi_prime = psi_same if (y_par ^ (flips & 1)) == 0 else psi_flip
        mass = math.exp(log_prefix)
        if emitted > masses.size:
            masses = _grow(masses, emitted)
            parity_masses = _grow(parity_masses, emitted)
        masses[emitted - 1] = mass
        parity_masses[emitted - 1] = mass * psi_prime
        slot = -1
        if kept < L:
            slot = kept
            kept += 1
        elif ml and lp > keep_lp[worst]:
            slot = worst
        if slot >= 0:
            keep_lp[slot] = lp
            keep_x[slot] = x
            keep_z[slot] = zn
            keep_prefix[slot] = log_prefix
            keep_psi[slot] = psi_prime
            keep_idx[slot] = emitted
            worst = 0
            for s in range(1, kept):
                if keep_lp[s] < keep_lp[worst] or (keep_lp[s] == keep_lp[worst] and keep_idx[s] > keep_idx[worst]):
                    worst = s
        if emitted >= budget:
            break
        # successors of the subset whose largest sorted position is j
        if j < 0:
            if k > 0:
                heapq.heappush(heap, (costs[0], np.int64(1), np.int64(0)))
        elif j + 1 < k:
            bit = np.int64(1) << (j + 1)
            heapq.heappush(heap, (total + costs[j + 1], mask | bit, j + 1))
            heapq.heappush(heap, (total - costs[j] + costs[j + 1], (mask ^ (np.int64(1) << j)) | bit, j + 1))
    return (masses[:emitted], parity_masses[:emitted], kept,
            keep_lp, keep_x, keep_z, keep_prefix, keep_psi, keep_idx)
