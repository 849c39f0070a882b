"""Coset coding over the dual of an LDPC code on the erasure wiretap channel.

The transmitted code C has generator G (a row basis of the LDPC parity-check
matrix H_L) and parity-check matrix Hsec (a basis of the LDPC code itself).
A k-bit message is the Hsec-syndrome of the transmitted word.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import gf2
from .gf2 import BitMatrix
from .errors import TooLarge


@dataclass(frozen=True)
class CosetCode:
    n: int
    k: int
    G: BitMatrix
    Hsec: BitMatrix

    def __post_init__(self):
        if self.G.ncols != self.n or self.Hsec.ncols != self.n:
            raise ValueError("generator and parity-check widths must equal n")
        if self.Hsec.nrows != self.k or self.G.nrows != self.n - self.k:
            raise ValueError("row counts must be n-k and k")


def build_coset_code(H_L: BitMatrix) -> CosetCode:
    """Dual-LDPC coset code; k = n - rank(H_L)."""
    G = gf2.row_basis(H_L)
    if G.nrows == 0:
        raise ValueError("parity-check matrix has rank 0")
    Hsec = gf2.nullspace_basis(H_L)
    return CosetCode(H_L.ncols, Hsec.nrows, G, Hsec)


def encode(code: CosetCode, message, seed) -> int:
    """Uniform word from the coset with Hsec-syndrome ``message`` (packed int over n bits)."""
    m = message if isinstance(message, int) else gf2.pack_bits(message)
    if m >> code.k:
        raise ValueError(f"message wider than k={code.k}")
    x = gf2.solve_particular(code.Hsec, m)
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=code.G.nrows)
    for row, c in zip(code.G.rows, coins.tolist()):
        if c:
            x ^= row
    return x


def decode_bob(code: CosetCode, x: int) -> int:
    return code.Hsec.matvec(x)


def _sorted_indices(idx: Iterable[int], n: int) -> list[int]:
    out = sorted(set(int(i) for i in idx))
    if out and (out[0] < 0 or out[-1] >= n):
        raise IndexError(f"index outside [0, {n})")
    return out


def gmu_full_rank(code: CosetCode, unerased: Iterable[int]) -> bool:
    """Columns of G seen by the eavesdropper are linearly independent.

    Exactly the patterns that leave the message perfectly hidden.
    """
    U = _sorted_indices(unerased, code.n)
    return gf2.rank(gf2.column_submatrix(code.G, U)) == len(U)


def equivocation_exact(code: CosetCode, erased: Iterable[int]) -> int:
    """H(M | z) in bits: rank of the erased columns of Hsec."""
    E = _sorted_indices(erased, code.n)
    return gf2.rank(gf2.column_submatrix(code.Hsec, E))


def leakage_brute_force(code: CosetCode, erased: Iterable[int], max_n: int = 24) -> float:
    """I(M; Z) in bits by enumerating every (message, coset word) pair."""
    if code.n > max_n:
        raise TooLarge(f"n={code.n} exceeds brute-force limit {max_n}")
    E = _sorted_indices(erased, code.n)
    keep = ((1 << code.n) - 1) ^ gf2.index_mask(E)
    # every x in F_2^n is a coset word of exactly one message, all equally likely
    joint: Counter = Counter()
    for x in range(1 << code.n):
        joint[(x & keep, code.Hsec.matvec(x))] += 1
    z_tot: Counter = Counter()
    for (z, _), c in joint.items():
        z_tot[z] += c
    total = 1 << code.n
    h = 0.0
    for (z, _), c in joint.items():
        h -= c / total * math.log2(c / z_tot[z])
    return code.k - h


@dataclass(frozen=True)
class LeakageEstimate:
    n: int
    k: int
    eps: float
    trials: int
    seed: int
    leakage_bits: float
    stderr: float
    p_nf: float
    p_nf_stderr: float

    def to_json(self) -> dict:
        return {
            "n": self.n, "seed": self.seed, "eps": self.eps, "trials": self.trials,
            "leakage_bits": self.leakage_bits, "stderr": self.stderr, "p_nf": self.p_nf, "k": self.k,
        }


def leakage_mc(code: CosetCode, eps: float, trials: int, seed: int) -> LeakageEstimate:
    """Leakage k - E[rank(Hsec on erased)] over i.i.d. erasure patterns.

    Also reports how often the unerased columns of G are dependent, the event
    the full-rank bound charges k bits to.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hT, gT = code.Hsec.T, code.G.T
    leak = np.empty(trials)
    nf = np.empty(trials)
    chunk = 4096
    for lo in range(0, trials, chunk):
        masks = rng.random((min(chunk, trials - lo), code.n)) < eps
        leak[lo:lo + len(masks)] = code.k - gf2.subset_ranks(hT, masks, True)
        nf[lo:lo + len(masks)] = gf2.subset_ranks(gT, masks, False) < (~masks).sum(axis=1)
    se = float(leak.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    pse = float(nf.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return LeakageEstimate(code.n, code.k, float(eps), trials, int(seed), float(leak.mean()), se,
                           float(nf.mean()), pse)
