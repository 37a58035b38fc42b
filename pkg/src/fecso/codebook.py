"""Binary linear block codes over GF(2).

A :class:`LinearCode` keeps its generator in reduced systematic form (the
columns at ``info_positions`` form an identity), a matching parity-check
matrix, and bit-packed copies of both so that encoding and syndrome checks
reduce to integer XORs.  Bit ``i`` of a packed word is coordinate ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator

import numpy as np

ENUMERATION_LIMIT = 24


def pack_bits(bits) -> int:
    """Pack a 0/1 vector into an int, coordinate ``i`` at bit ``i``."""
    mask = 0
    for i, b in enumerate(np.asarray(bits, dtype=np.uint8).tolist()):
        if b & 1:
            mask |= 1 << i
    return mask


def unpack_bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=np.uint8)


def gf2_rref(matrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) with leftmost-pivot selection.

    Returns the reduced matrix (zero rows dropped) and the pivot columns.
    """
    a = np.array(matrix, dtype=np.uint8) & 1
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(a[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        for o in others:
            if o != r:
                a[o] ^= a[r]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def gf2_rank(matrix) -> int:
    return len(gf2_rref(matrix)[1])


@dataclass(frozen=True, eq=False)
class LinearCode:
    """An (n, k) binary linear code.

    Build instances with :meth:`from_generator`; the constructor expects
    already consistent matrices.
    """

    n: int
    k: int
    G: np.ndarray
    H: np.ndarray
    info_positions: tuple[int, ...]
    is_even: bool
    name: str = "code"
    g_rows: tuple[int, ...] = field(repr=False, default=())
    h_cols: tuple[int, ...] = field(repr=False, default=())

    @classmethod
    def from_generator(cls, G, name: str = "code") -> "LinearCode":
        """Systematize ``G`` and derive the parity-check matrix.

        Raises ValueError if ``G`` is rank deficient.
        """
        G = np.atleast_2d(np.array(G, dtype=np.uint8) & 1)
        k, n = G.shape
        reduced, pivots = gf2_rref(G)
        if len(pivots) != k:
            raise ValueError(f"generator matrix has rank {len(pivots)} < k = {k}")
        parity = [c for c in range(n) if c not in set(pivots)]
        H = np.zeros((n - k, n), dtype=np.uint8)
        # H = [P^T | I] in (info, parity) coordinate order.
        H[:, pivots] = reduced[:, parity].T
        H[np.arange(n - k), parity] = 1
        is_even = bool(np.all(reduced.sum(axis=1) % 2 == 0))
        g_rows = tuple(pack_bits(row) for row in reduced)
        h_cols = tuple(pack_bits(H[:, j]) for j in range(n))
        reduced.setflags(write=False)
        H.setflags(write=False)
        return cls(n, k, reduced, H, tuple(pivots), is_even, name, g_rows, h_cols)

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def parity_positions(self) -> tuple[int, ...]:
        info = set(self.info_positions)
        return tuple(i for i in range(self.n) if i not in info)

    @cached_property
    def systematic_order(self) -> np.ndarray:
        """Coordinate permutation placing the information set first."""
        return np.array(self.info_positions + self.parity_positions, dtype=np.intp)

    def syndrome(self, mask: int) -> int:
        s = 0
        h = self.h_cols
        while mask:
            low = mask & -mask
            s ^= h[low.bit_length() - 1]
            mask ^= low
        return s

    def encode_mask(self, u_mask: int) -> int:
        x = 0
        rows = self.g_rows
        while u_mask:
            low = u_mask & -u_mask
            x ^= rows[low.bit_length() - 1]
            u_mask ^= low
        return x

    def info_mask(self, word_mask: int) -> int:
        """Extract the information bits of a packed word as a packed k-bit word."""
        u = 0
        for j, pos in enumerate(self.info_positions):
            u |= ((word_mask >> pos) & 1) << j
        return u

    @cached_property
    def codebook(self) -> np.ndarray:
        """All 2^k codewords as a read-only (2^k, n) uint8 array."""
        if self.k > ENUMERATION_LIMIT:
            raise ValueError(f"k = {self.k} exceeds enumeration limit {ENUMERATION_LIMIT}")
        m = np.arange(2**self.k, dtype=np.int64)[:, None]
        msgs = ((m >> np.arange(self.k)) & 1).astype(np.uint8)
        words = (msgs.astype(np.int64) @ self.G.astype(np.int64)) % 2
        words = words.astype(np.uint8)
        words.setflags(write=False)
        return words


def encode(code: LinearCode, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (code.k,):
        raise ValueError(f"message length {u.size} != k = {code.k}")
    return ((u.astype(np.int64) @ code.G.astype(np.int64)) % 2).astype(np.uint8)


def is_codeword(code: LinearCode, v) -> bool:
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (code.n,):
        raise ValueError(f"word length {v.size} != n = {code.n}")
    return code.syndrome(pack_bits(v)) == 0


def is_even_code(code: LinearCode) -> bool:
    return bool(np.all(code.G.sum(axis=1) % 2 == 0))


def enumerate_codewords(code: LinearCode, limit: int = ENUMERATION_LIMIT) -> Iterator[np.ndarray]:
    """Yield every codeword once, in message order."""
    if code.k > limit:
        raise ValueError(f"k = {code.k} exceeds enumeration limit {limit}")
    if code.k <= 16:
        yield from code.codebook
        return
    for m in range(2**code.k):
        yield unpack_bits(code.encode_mask(m), code.n)


def minimum_distance(code: LinearCode) -> int:
    weights = code.codebook.sum(axis=1)
    nonzero = weights[weights > 0]
    return int(nonzero.min()) if nonzero.size else 0


def cyclic_generator(n: int, gpoly) -> np.ndarray:
    """Generator rows x^i g(x), coefficients of ``gpoly`` in ascending degree."""
    gpoly = np.asarray(gpoly, dtype=np.uint8)
    k = n - (gpoly.size - 1)
    G = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        G[i, i:i + gpoly.size] = gpoly
    return G


def extend_with_parity(G) -> np.ndarray:
    G = np.asarray(G, dtype=np.uint8)
    return np.hstack([G, (G.sum(axis=1) % 2)[:, None].astype(np.uint8)])


def build_bch_15_11() -> LinearCode:
    # g(x) = 1 + x + x^4
    return LinearCode.from_generator(cyclic_generator(15, [1, 1, 0, 0, 1]), "bch15_11")


def build_ebch_16_11() -> LinearCode:
    G = extend_with_parity(cyclic_generator(15, [1, 1, 0, 0, 1]))
    return LinearCode.from_generator(G, "ebch16_11")


def repetition_code(n: int) -> LinearCode:
    return LinearCode.from_generator(np.ones((1, n), dtype=np.uint8), f"rep{n}")


def build_split_parity_8_2() -> LinearCode:
    """(8,2) code whose two halves are each even: {0, 11110000, 00001111, 1^8}."""
    G = np.array([[1, 1, 1, 1, 0, 0, 0, 0], [0, 0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)
    return LinearCode.from_generator(G, "split8_2")


def build_ext_hamming_8_4() -> LinearCode:
    G = extend_with_parity(cyclic_generator(7, [1, 1, 0, 1]))
    return LinearCode.from_generator(G, "ehamming8_4")


BUILTIN_CODES = {
    "ebch16_11": build_ebch_16_11,
    "bch15_11": build_bch_15_11,
    "ehamming8_4": build_ext_hamming_8_4,
    "split8_2": build_split_parity_8_2,
    "rep2": lambda: repetition_code(2),
}


def parse_code_file(path) -> LinearCode:
    """Read ``n k`` then k rows of n characters in {0,1}."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty code file")
    try:
        n, k = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be 'n k'") from exc
    rows = lines[1:]
    if len(rows) != k:
        raise ValueError(f"{path}: expected {k} generator rows, found {len(rows)}")
    G = np.zeros((k, n), dtype=np.uint8)
    for i, row in enumerate(rows):
        if len(row) != n or set(row) - {"0", "1"}:
            raise ValueError(f"{path}: row {i + 1} must be {n} characters in {{0,1}}")
        G[i] = [int(ch) for ch in row]
    return LinearCode.from_generator(G, Path(path).stem)


def load_code(spec: str) -> LinearCode:
    """Resolve a built-in code name or a code-definition file path."""
    if spec in BUILTIN_CODES:
        return BUILTIN_CODES[spec]()
    if Path(spec).is_file():
        return parse_code_file(spec)
    raise ValueError(f"unknown code {spec!r}; built-ins: {', '.join(sorted(BUILTIN_CODES))}")
