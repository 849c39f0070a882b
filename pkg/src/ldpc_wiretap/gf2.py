"""Dense GF(2) matrices with rows packed into Python ints (bit j = column j)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import NoSolution


@dataclass(frozen=True)
class BitMatrix:
    nrows: int
    ncols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if len(rows) != self.nrows:
            raise ValueError(f"expected {self.nrows} rows, got {len(rows)}")
        if any(r < 0 or r >> self.ncols for r in rows):
            raise ValueError("row has bits beyond ncols")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_array(cls, a) -> "BitMatrix":
        a = np.asarray(a, dtype=np.uint8) & 1
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        nrows, ncols = a.shape
        weights = [1 << j for j in range(ncols)]
        rows = tuple(sum(w for w, bit in zip(weights, row) if bit) for row in a.tolist())
        return cls(nrows, ncols, rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls(nrows, ncols, (0,) * nrows)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in _bits(r):
                out[i, j] = 1
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def transpose(self) -> "BitMatrix":
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            for j in _bits(r):
                cols[j] |= 1 << i
        return BitMatrix(self.ncols, self.nrows, tuple(cols))

    T = property(transpose)

    def matvec(self, x: int) -> int:
        """M x for x packed as an int over the columns; result packed over rows."""
        out = 0
        for i, r in enumerate(self.rows):
            if (r & x).bit_count() & 1:
                out |= 1 << i
        return out

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} x {other.shape}")
        rows = []
        for r in self.rows:
            acc = 0
            for j in _bits(r):
                acc ^= other.rows[j]
            rows.append(acc)
        return BitMatrix(self.nrows, other.ncols, tuple(rows))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return self.matmul(other)

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        return "\n".join(
            "".join("1" if (r >> j) & 1 else "0" for j in range(self.ncols)) for r in self.rows
        )

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            return cls(0, 0, ())
        ncols = len(lines[0])
        rows = []
        for ln in lines:
            if len(ln) != ncols or set(ln) - {"0", "1"}:
                raise ValueError(f"bad matrix row {ln!r}")
            rows.append(sum(1 << j for j, ch in enumerate(ln) if ch == "1"))
        return cls(len(rows), ncols, tuple(rows))

    def to_bytes(self) -> bytes:
        """16-byte little-endian header (rows, cols) then packed rows."""
        width = (self.ncols + 7) // 8
        body = b"".join(r.to_bytes(width, "little") for r in self.rows)
        return struct.pack("<QQ", self.nrows, self.ncols) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitMatrix":
        nrows, ncols = struct.unpack_from("<QQ", data, 0)
        width = (ncols + 7) // 8
        if len(data) != 16 + nrows * width:
            raise ValueError("truncated matrix payload")
        rows = tuple(
            int.from_bytes(data[16 + i * width: 16 + (i + 1) * width], "little") for i in range(nrows)
        )
        return cls(nrows, ncols, rows)


def _bits(x: int) -> Iterable[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def pack_bits(bits: Sequence[int]) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b)


def unpack_bits(x: int, length: int) -> list[int]:
    return [(x >> i) & 1 for i in range(length)]


def index_mask(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << int(i)
    return out


def rank_of_rows(rows: Iterable[int]) -> int:
    """GF(2) rank of row vectors packed as ints."""
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
            # keep the basis sorted descending so min() reduces by leading bit
            basis.sort(reverse=True)
    return len(basis)


def rank(M: BitMatrix) -> int:
    return rank_of_rows(M.rows)


def rref(M: BitMatrix) -> tuple[list[int], list[int]]:
    """Reduced row echelon form; pivots chosen as the first available row per column."""
    rows = list(M.rows)
    pivots: list[int] = []
    top = 0
    for col in range(M.ncols):
        bit = 1 << col
        pivot = next((i for i in range(top, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[top], rows[pivot] = rows[pivot], rows[top]
        p = rows[top]
        for i in range(len(rows)):
            if i != top and rows[i] & bit:
                rows[i] ^= p
        pivots.append(col)
        top += 1
        if top == len(rows):
            break
    return rows[:top], pivots


def column_submatrix(M: BitMatrix, cols: Sequence[int]) -> BitMatrix:
    cols = [int(c) for c in cols]
    if any(c < 0 or c >= M.ncols for c in cols):
        raise IndexError(f"column index out of range for {M.ncols} columns")
    if any(b <= a for a, b in zip(cols, cols[1:])):
        raise ValueError("column indices must be strictly increasing")
    rows = []
    for r in M.rows:
        out = 0
        for new, c in enumerate(cols):
            if (r >> c) & 1:
                out |= 1 << new
        rows.append(out)
    return BitMatrix(M.nrows, len(cols), tuple(rows))


def row_basis(M: BitMatrix) -> BitMatrix:
    rows, _ = rref(M)
    return BitMatrix(len(rows), M.ncols, tuple(rows))


def nullspace_basis(M: BitMatrix) -> BitMatrix:
    """Rows form a basis of {x : M x = 0}."""
    rows, pivots = rref(M)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.ncols):
        if free in pivot_set:
            continue
        x = 1 << free
        for r, p in zip(rows, pivots):
            if (r >> free) & 1:
                x |= 1 << p
        basis.append(x)
    return BitMatrix(len(basis), M.ncols, tuple(basis))


def solve_particular(M: BitMatrix, s: int | Sequence[int]) -> int:
    """Some x with M x = s (x packed over columns, s over rows).

    Raises NoSolution when s is outside the column space of M.
    """
    if not isinstance(s, int):
        if len(s) != M.nrows:
            raise ValueError(f"right-hand side has length {len(s)}, expected {M.nrows}")
        s = pack_bits(s)
    flag = 1 << M.ncols
    aug = BitMatrix(M.nrows, M.ncols + 1, tuple(r | (flag if (s >> i) & 1 else 0) for i, r in enumerate(M.rows)))
    rows, pivots = rref(aug)
    if pivots and pivots[-1] == M.ncols:
        raise NoSolution("right-hand side is not in the column space")
    x = 0
    for r, p in zip(rows, pivots):
        if r & flag:
            x |= 1 << p
    return x


def to_words(M: BitMatrix) -> np.ndarray:
    """Rows as a ``(nrows, ceil(ncols/64))`` uint64 array, little-endian words."""
    W = max((M.ncols + 63) // 64, 1)
    out = np.zeros((M.nrows, W), dtype=np.uint64)
    mask = (1 << 64) - 1
    for i, r in enumerate(M.rows):
        for w in range(W):
            out[i, w] = (r >> (64 * w)) & mask
    return out


@numba.njit(cache=True)
def _subset_ranks(words, masks, want):
    B, n = masks.shape
    W = words.shape[1]
    out = np.zeros(B, np.int64)
    work = np.empty((n, W), np.uint64)
    for b in range(B):
        r = 0
        for i in range(n):
            if masks[b, i] == want:
                work[r] = words[i]
                r += 1
        rank = 0
        for w in range(W):
            for bit in range(64):
                sel = np.uint64(1) << np.uint64(bit)
                piv = -1
                for i in range(rank, r):
                    if work[i, w] & sel:
                        piv = i
                        break
                if piv < 0:
                    continue
                for j in range(W):
                    t = work[piv, j]
                    work[piv, j] = work[rank, j]
                    work[rank, j] = t
                for i in range(rank + 1, r):
                    if work[i, w] & sel:
                        for j in range(w, W):
                            work[i, j] ^= work[rank, j]
                rank += 1
                if rank == r:
                    break
            if rank == r:
                break
        out[b] = rank
    return out


def subset_ranks(M: BitMatrix, masks: np.ndarray, want: bool = True) -> np.ndarray:
    """Rank of the rows of M selected by each row of ``masks`` (where mask == want)."""
    masks = np.asarray(masks, dtype=np.bool_)
    if masks.ndim != 2 or masks.shape[1] != M.nrows:
        raise ValueError(f"masks must have shape (B, {M.nrows})")
    return _subset_ranks(to_words(M), masks, bool(want))
