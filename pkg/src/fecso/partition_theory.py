"""Distinct-partition parity counts and the ORBGRAND even/odd mass diagnostics.

Under a linear reliability model, gamma_i = beta * rank_i, every noise
effect of Logistic Weight ``w`` has posterior ``theta(w)``.  The gap between
the plain and even-code unvisited-mass estimates is then governed by the
difference between even- and odd-length distinct partitions of each weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParityCounts:
    w: int
    n: int
    rho0: int
    rho1: int

    @property
    def difference(self) -> int:
        return self.rho0 - self.rho1

    @property
    def total(self) -> int:
        return self.rho0 + self.rho1


def generalized_pentagonal(limit: int) -> list[tuple[int, int, int]]:
    """All ``(k(3k -+ 1)/2, k, (-1)^k)`` with value <= ``limit``, sorted by value."""
    if limit < 1:
        raise ValueError("limit must be at least 1")
    out = []
    k = 1
    while k * (3 * k - 1) // 2 <= limit:
        sign = -1 if k % 2 else 1
        for value in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if value <= limit:
                out.append((value, k, sign))
        k += 1
    return sorted(out)


def pentagonal_difference(w: int) -> int:
    """(-1)^k if ``w`` is a generalized pentagonal number k(3k -+ 1)/2, else 0 (w >= 1)."""
    for value, _, sign in generalized_pentagonal(max(w, 1)):
        if value == w:
            return sign
    return 0


class _ParityTable:
    """even[w], odd[w]: distinct partitions of w with parts <= n, by part-count parity."""

    def __init__(self, n: int):
        self.n = n
        self.top = n * (n + 1) // 2
        self.size = 0
        self.even: list[int] = []
        self.odd: list[int] = []

    def ensure(self, w: int) -> None:
        if w < self.size:
            return
        size = min(max(w + 1, 2 * self.size, 64), self.top + 1)
        even = [0] * size
        odd = [0] * size
        even[0] = 1
        for part in range(1, self.n + 1):
            # 0/1 knapsack over parts: adding a part swaps parity classes
            for v in range(size - 1, part - 1, -1):
                e, o = even[v - part], odd[v - part]
                if e or o:
                    even[v] += o
                    odd[v] += e
        self.even, self.odd, self.size = even, odd, size


_tables: dict[int, _ParityTable] = {}


def partition_parity_counts(w: int, n: int) -> ParityCounts:
    if w < 0 or n < 1:
        raise ValueError("need w >= 0 and n >= 1")
    table = _tables.get(n)
    if table is None:
        table = _tables[n] = _ParityTable(n)
    if w > table.top:
        return ParityCounts(w, n, 0, 0)
    table.ensure(w)
    return ParityCounts(w, n, table.even[w], table.odd[w])


def parity_difference_table(n: int) -> np.ndarray:
    """rho0(w, n) - rho1(w, n) for w = 0 .. n(n+1)/2 as floats."""
    top = n * (n + 1) // 2
    partition_parity_counts(top, n)
    t = _tables[n]
    return np.array([float(t.even[w] - t.odd[w]) for w in range(top + 1)])


def log_prod_one_minus(b) -> float:
    return float(np.log1p(-np.asarray(b, dtype=np.float64)).sum())


def theta(w, beta: float, b) -> float | np.ndarray:
    """exp(-beta * w) * prod(1 - b_i)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.exp(-beta * np.asarray(w, dtype=np.float64) + log_prod_one_minus(b))


def delta_observed(outcome, psi: float) -> float:
    """2 psi - 2 * (parity-matching queried mass) - 1 + (queried mass)."""
    return 2.0 * psi - 2.0 * outcome.cum_phi_matching - 1.0 + outcome.cum_phi


def delta_tail(beta: float, b, n: int) -> float:
    """|sum over w = n+1 .. n(n+1)/2 of theta(w) (rho0 - rho1)|, independent of w*."""
    diff = parity_difference_table(n)
    w = np.arange(n + 1, diff.size)
    if w.size == 0:
        return 0.0
    return float(abs(math.fsum(theta(w, beta, b) * diff[n + 1:])))


def delta_bound(w_star: int, beta: float, b, n: int) -> float:
    """Upper bound 2 theta(w*) + tail on |delta| for a level-complete stop at w* <= n."""
    if w_star > n:
        raise ValueError(f"w* = {w_star} exceeds n = {n}; bound does not apply")
    return 2.0 * float(theta(w_star, beta, b)) + delta_tail(beta, b, n)


def pentagonal_pair_bound(w_star: int, beta: float, b, n: int) -> float:
    """theta(k1) + theta(k2) + tail, k1 < k2 the first generalized pentagonals above w*.

    The sign between the two theta terms is not pinned down, so both are
    added; the result never exceeds :func:`delta_bound`.
    """
    if w_star > n:
        raise ValueError(f"w* = {w_star} exceeds n = {n}; bound does not apply")
    above = [v for v, _, _ in generalized_pentagonal(w_star + 64) if w_star < v <= n][:2]
    head = sum(float(theta(v, beta, b)) for v in above)
    return head + delta_tail(beta, b, n)


def delta_closed_form(w_star: int, beta: float, b, n: int, y_parity: int) -> float:
    """Delta under the exact linear model after a level-complete stop at ``w_star``.

    Sum over all unqueried levels of theta(w) (rho0 - rho1), signed by the
    parity of the hard decisions.
    """
    diff = parity_difference_table(n)
    w = np.arange(w_star + 1, diff.size)
    total = math.fsum(theta(w, beta, b) * diff[w_star + 1:]) if w.size else 0.0
    return total if y_parity == 0 else -total


def estimate_beta(gamma) -> float:
    """Zero-intercept least-squares slope of sorted reliabilities against rank."""
    g = np.sort(np.asarray(gamma, dtype=np.float64))
    ranks = np.arange(1, g.size + 1, dtype=np.float64)
    return float(g @ ranks / (ranks @ ranks))
