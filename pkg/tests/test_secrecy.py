from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from ldpc_wiretap import gf2
from ldpc_wiretap.decoder import ErasurePattern, peel
from ldpc_wiretap.ensemble import DegreeDistribution, EnsembleSpec, sample_graph
from ldpc_wiretap.errors import TooLarge
from ldpc_wiretap.gf2 import BitMatrix
from ldpc_wiretap.secrecy import (
    CosetCode,
    build_coset_code,
    decode_bob,
    encode,
    equivocation_exact,
    gmu_full_rank,
    leakage_brute_force,
    leakage_mc,
)

REG36 = DegreeDistribution.regular(3, 6)
SMALL = build_coset_code(BitMatrix.from_array([[1, 1, 0], [0, 1, 1]]))


def random_code(seed: int, n: int) -> CosetCode:
    g = sample_graph(EnsembleSpec(n, REG36), seed)
    return build_coset_code(g.parity_check())


def test_three_bit_code():
    assert SMALL.k == 1
    assert SMALL.Hsec.to_array().tolist() == [[1, 1, 1]]
    assert gf2.rank(SMALL.G) == 2
    span = {0}
    for r in SMALL.G.rows:
        span |= {s ^ r for s in span}
    assert span == {0b000, 0b011, 0b110, 0b101}


def test_identity_gives_no_message_bits():
    code = build_coset_code(BitMatrix.identity(4))
    assert code.k == 0 and code.Hsec.nrows == 0


def test_rank_zero_rejected():
    with pytest.raises(ValueError):
        build_coset_code(BitMatrix.zeros(2, 5))


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8, 12, 20]))
@settings(max_examples=60, deadline=None)
def test_code_invariants(seed, n):
    H = sample_graph(EnsembleSpec(n, REG36), seed).parity_check()
    code = build_coset_code(H)
    assert code.k == n - gf2.rank(H)
    assert gf2.rank(code.G) == n - code.k and gf2.rank(code.Hsec) == code.k
    assert all(v == 0 for v in (code.G @ code.Hsec.T).rows)


@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8, 12, 20]), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_bob_recovers_message(seed, n, mseed):
    code = random_code(seed, n)
    m = int(np.random.default_rng(mseed).integers(0, 2**code.k))
    x = encode(code, m, mseed)
    assert decode_bob(code, x) == m
    assert decode_bob(code, 0) == 0
    for row in code.G.rows:
        assert decode_bob(code, row) == 0


def test_encoder_is_uniform_on_the_coset():
    seen = Counter(encode(SMALL, 1, s) for s in range(10_000))
    assert set(seen) == {0b001, 0b010, 0b100, 0b111}
    for c in seen.values():
        assert abs(c - 2500) < 4 * np.sqrt(10_000 * 0.25 * 0.75)


@pytest.mark.parametrize("seed", range(3))
def test_encoder_chi_square_at_n10(seed):
    code = build_coset_code(BitMatrix.from_array(np.random.default_rng(seed).integers(0, 2, (4, 10))))
    m = (1 << code.k) - 1
    seen = Counter(encode(code, m, (seed, s)) for s in range(20_000))
    assert len(seen) == 2 ** (code.n - code.k)
    assert chisquare(list(seen.values())).pvalue > 1e-3


def test_message_width_checked():
    with pytest.raises(ValueError):
        encode(SMALL, 0b10, 0)


def test_gmu_and_equivocation_examples():
    assert gmu_full_rank(SMALL, [0, 1])
    assert equivocation_exact(SMALL, [2]) == 1
    assert not gmu_full_rank(SMALL, [0, 1, 2])
    assert gmu_full_rank(SMALL, [])
    assert equivocation_exact(SMALL, []) == 0
    assert equivocation_exact(SMALL, [0, 1, 2]) == SMALL.k
    for e in range(3):
        assert leakage_brute_force(SMALL, [e]) == pytest.approx(0.0)


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12])
def test_full_rank_iff_full_equivocation_exhaustively(n):
    for seed in range(3):
        code = random_code(seed, n)
        for mask in range(1 << n):
            erased = [i for i in range(n) if mask >> i & 1]
            unerased = [i for i in range(n) if not mask >> i & 1]
            eq = equivocation_exact(code, erased)
            assert gmu_full_rank(code, unerased) == (eq == code.k)
            if mask % 37 == 0:
                assert leakage_brute_force(code, erased) == pytest.approx(code.k - eq, abs=1e-9)


def test_brute_force_edges_and_limits():
    code = random_code(0, 8)
    assert leakage_brute_force(code, range(8)) == pytest.approx(0.0)
    assert leakage_brute_force(code, []) == pytest.approx(code.k)
    with pytest.raises(TooLarge):
        leakage_brute_force(random_code(0, 26), [0])


def test_peeling_success_gives_full_equivocation():
    # the LDPC graph decodes erasure set E  =>  an eavesdropper who sees exactly E learns nothing
    rng = np.random.default_rng(0)
    decoded = 0
    for seed in range(1000):
        n = int(rng.choice([10, 20, 40]))
        g = sample_graph(EnsembleSpec(n, REG36), seed)
        code = build_coset_code(g.parity_check())
        mask = rng.random(n) < rng.uniform(0.1, 0.5)
        if peel(g, ErasurePattern.from_mask(mask)).success:
            decoded += 1
            assert gmu_full_rank(code, np.flatnonzero(mask).tolist())
            assert equivocation_exact(code, np.flatnonzero(~mask).tolist()) == code.k
    assert decoded > 300


def test_leakage_mc_extremes():
    code = random_code(1, 40)
    assert leakage_mc(code, 1.0, 50, 0).leakage_bits == 0.0
    est = leakage_mc(code, 0.0, 50, 0)
    assert est.leakage_bits == code.k and est.stderr == 0.0


def test_leakage_mc_matches_exact_average():
    code = random_code(2, 12)
    eps = 0.6
    exact = 0.0
    for mask in range(1 << 12):
        erased = [i for i in range(12) if mask >> i & 1]
        p = eps ** len(erased) * (1 - eps) ** (12 - len(erased))
        exact += p * (code.k - equivocation_exact(code, erased))
    est = leakage_mc(code, eps, 40_000, 3)
    assert abs(est.leakage_bits - exact) < 4 * est.stderr


def test_leakage_bounded_by_non_full_rank_rate():
    code = random_code(5, 200)
    est = leakage_mc(code, 0.7, 20_000, 9)
    assert est.leakage_bits <= code.k * est.p_nf + 3 * (est.stderr + code.k * est.p_nf_stderr)
    rec = est.to_json()
    assert set(rec) == {"n", "seed", "eps", "trials", "leakage_bits", "stderr", "p_nf", "k"}
