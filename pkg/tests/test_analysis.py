from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpc_wiretap import analysis as A
from ldpc_wiretap.decoder import enumerate_stopping_sets, peel_batch
from ldpc_wiretap.ensemble import DegreeDistribution, EnsembleSpec, sample_graph
from ldpc_wiretap.errors import BudgetExceeded

REG36 = DegreeDistribution.regular(3, 6)
REG34 = DegreeDistribution.regular(3, 4)
REG48 = DegreeDistribution.regular(4, 8)
IRR_A = DegreeDistribution.from_polynomials("1/2x + 1/2x^2", "x^5")
IRR_B = DegreeDistribution.from_polynomials("1/2x + 1/2x^2", "1/2x^4 + 1/2x^5")
IRR_C = DegreeDistribution.from_polynomials("1/4x + 1/4x^2 + 1/2x^5", "x^7")


# -- entropy and density evolution -------------------------------------------


def test_entropy_values():
    assert A.binary_entropy_nats(0.0) == 0.0
    assert A.binary_entropy_nats(1.0) == 0.0
    assert A.binary_entropy_nats(0.5) == pytest.approx(math.log(2))
    x = np.linspace(0, 1, 101)
    assert np.allclose(A.binary_entropy_nats(x), A.binary_entropy_nats(1 - x))
    with pytest.raises(ValueError):
        A.binary_entropy_nats(1.2)


def test_de_threshold_of_cycle_code_is_one():
    dist = DegreeDistribution.from_polynomials("x", "x")
    assert A.de_threshold(dist) == pytest.approx(1.0, abs=1e-5)


def test_de_threshold_regular_36():
    assert A.de_threshold(REG36) == pytest.approx(0.4294, abs=1e-3)


def test_de_threshold_brackets_simulated_waterfall():
    # (3,4) at n=2000: block error is small just below the threshold and large above it
    th = A.de_threshold(REG34)
    spec = EnsembleSpec(2000, REG34)
    rng = np.random.default_rng(0)

    def rate(eps):
        fails = 0
        for s in range(20):
            g = sample_graph(spec, s)
            fails += np.count_nonzero(peel_batch(g, rng.random((50, 2000)) < eps))
        return fails / 1000

    assert rate(th - 0.03) < 0.2
    assert rate(th + 0.03) > 0.8


def test_de_threshold_zero_with_degree_one_variables():
    dist = DegreeDistribution.from_polynomials("1/2 + 1/2x^2", "x^5")
    assert A.de_threshold(dist) < 1e-5


# -- check generating function ------------------------------------------------


@pytest.mark.parametrize("checks, w, expected", [
    ({6: 1}, 3, 20),
    ({3: 1}, 2, 3),
    ({6: 4}, 0, 1),
    ({4: 2, 5: 1}, 0, 1),
    ([3, 3], 7, 0),
])
def test_check_coefficient_examples(checks, w, expected):
    assert A.check_gen_poly_coef(checks, w) == expected


def _brute_coef(degrees, w):
    # pick w sockets so that every check gets zero or at least two
    total = 0
    for counts in np.ndindex(*[d + 1 for d in degrees]):
        if sum(counts) != w or any(c == 1 for c in counts):
            continue
        total += math.prod(math.comb(d, c) for d, c in zip(degrees, counts))
    return total


@given(st.lists(st.integers(2, 6), min_size=1, max_size=4), st.integers(0, 12))
@settings(max_examples=80, deadline=None)
def test_check_coefficient_counts_socket_choices(degrees, w):
    assert A.check_gen_poly_coef(degrees, w) == _brute_coef(degrees, w)


def test_coefficient_bound_examples():
    assert A.coef_upper_bound(1, 3, 6) >= 20
    assert A.coef_upper_bound(3, 0, 5) == pytest.approx(1.0)
    assert A.coef_upper_bound(1, 9, 4) == 0.0
    with pytest.raises(ValueError):
        A.coef_upper_bound(2, 2, 2)


def test_log_bound_survives_huge_arguments():
    lb = A.log_coef_upper_bound(10**6, 5000, 6)
    assert math.isfinite(lb) and lb > 709
    assert A.coef_upper_bound(10**6, 5000, 6) == math.inf


# -- exact stopping-set averages --------------------------------------------


def test_expected_counts_small_cases():
    spec = EnsembleSpec(2, REG36)
    assert A.expected_stopping_sets_exact(spec, 0) == 1
    assert A.expected_stopping_sets_exact(spec, 1) == 2
    assert A.expected_stopping_sets_exact(spec, 2) == 1


def test_expected_counts_match_exhaustive_average_n4():
    # average over all 12! permutations, grouped by count matrix
    from itertools import product

    spec = EnsembleSpec(4, REG36)
    l, r, n, m = 3, 6, 4, 2
    totals = [Fraction(0)] * (n + 1)
    cols = [c for c in product(range(l + 1), repeat=m) if sum(c) == l]
    for choice in product(cols, repeat=n):
        H = np.array(choice).T
        if not all(H[c].sum() == r for c in range(m)):
            continue
        ways = math.prod(math.factorial(l) // math.prod(math.factorial(x) for x in H[:, v]) for v in range(n))
        ways *= math.prod(math.factorial(r) // math.prod(math.factorial(x) for x in H[c]) for c in range(m))
        ways *= math.prod(math.factorial(int(x)) for x in H.ravel())
        from ldpc_wiretap.ensemble import TannerGraph

        counts = enumerate_stopping_sets(TannerGraph.from_count_matrix(H), n)
        for s in range(n + 1):
            totals[s] += Fraction(ways * counts[s], math.factorial(n * l))
    for s in range(n + 1):
        assert A.expected_stopping_sets_exact(spec, s) == totals[s]


def test_no_socket_choices_beyond_capacity():
    assert A.check_gen_poly_coef({6: 2}, 12) == 1
    assert A.check_gen_poly_coef({6: 2}, 13) == 0
    spec = EnsembleSpec(4, REG36)
    assert A.expected_stopping_sets_exact(spec, 4) == 1  # the whole graph


def test_expected_counts_irregular_compositions():
    spec = EnsembleSpec(10, IRR_A)
    assert spec.var_counts == {2: 6, 3: 4}
    vals = [A.expected_stopping_sets_exact(spec, s) for s in range(11)]
    assert all(isinstance(v, Fraction) and v >= 0 for v in vals)
    assert vals[0] == 1


def test_expected_counts_budget():
    with pytest.raises(BudgetExceeded):
        A.expected_stopping_sets_exact(EnsembleSpec(70, IRR_C), 30, max_terms=10)
    with pytest.raises(ValueError):
        A.expected_stopping_sets_exact(EnsembleSpec(10, REG36), 11)


def test_stopping_expectation_container():
    se = A.stopping_expectation(EnsembleSpec(12, REG36), 3)
    assert se.values[0] == 1 and set(se.values) == {0, 1, 2, 3}
    assert se.as_floats()[1] == pytest.approx(24 / 119)


# -- growth rate -------------------------------------------------------------


def test_gamma_regular_reference_values():
    assert A.gamma([0.02, 0.05, 0.1], REG36) == pytest.approx([0.001135, 0.027457, 0.091384], abs=2e-6)


def test_gamma_limits():
    assert A.gamma(0.005, REG36) < 0
    small = A.gamma(np.array([1e-4, 1e-5, 1e-6]), REG36)
    assert np.all(np.abs(small) < 1e-3)
    assert np.all(np.diff(np.abs(small)) < 0)


@pytest.mark.parametrize("dist", [REG36, REG34], ids=["3-6", "3-4"])
@pytest.mark.parametrize("alpha", [0.02, 0.05, 0.1])
def test_gamma_matches_extrapolated_exact_counts(dist, alpha):
    fit, rich = A.extrapolate_growth(dist, alpha)
    g = A.gamma(alpha, dist)
    assert abs(g - fit) < 1e-2
    assert abs(g - rich) < 1e-2


@pytest.mark.parametrize("dist, ns", [
    (IRR_A, (100, 200, 400, 800)),
    (IRR_B, (100, 200, 400, 800)),
    (IRR_C, (140, 280, 560, 1120)),
], ids=["two-var-degrees", "two-check-degrees", "three-var-degrees"])
@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
def test_irregular_gamma_matches_extrapolation(dist, ns, alpha):
    fit, _ = A.extrapolate_growth(dist, alpha, ns)
    assert abs(A.gamma(alpha, dist) - fit) < 1e-2


def test_allocation_search_beats_proportional_split():
    mdl = A._model(IRR_A)
    al = np.array([0.05, 0.2, 0.5])
    proportional = mdl.objective(al[:, None] * mdl.lt[None, :])
    assert np.all(A.gamma(al, IRR_A) >= proportional - 1e-12)


def test_alpha_star():
    a = A.alpha_star(REG36)
    assert a > 0
    assert A.gamma(a - 1e-5, REG36) < 0 <= A.gamma(a + 1e-5, REG36)
    deg_one = DegreeDistribution.from_polynomials("1", "x^5")
    assert A.alpha_star(deg_one) == 0.0


# -- effective threshold -------------------------------------------------------


def test_eps_ef_regular_36():
    e = A.eps_ef(REG36)
    assert e == pytest.approx(0.366, abs=2e-3)
    assert A.eps_ef_objective(REG36, e - 1e-3) <= 0
    assert A.eps_ef_objective(REG36, e + 1e-3) > 0


@pytest.mark.parametrize("dist", [REG36, REG34, REG48, IRR_A, IRR_B], ids=["3-6", "3-4", "4-8", "irr-a", "irr-b"])
def test_eps_ef_below_de_threshold(dist):
    assert A.eps_ef(dist) <= A.de_threshold(dist)


def test_exponent_bound():
    assert A.exponent_bound(3, 2) == 1
    assert A.exponent_bound(3, 3) == 2
    assert all(A.exponent_bound(2, k) == 0 for k in range(2, 9))
    with pytest.raises(ValueError):
        A.exponent_bound(3, 1)


def test_union_bound_prediction():
    spec = EnsembleSpec(100, REG36, 6)
    assert A.union_bound_prediction(spec, 0.0, 4) == 0.0
    vals = [A.union_bound_prediction(EnsembleSpec(n, REG36, 6), 0.25, 4) for n in (100, 200, 400, 800)]
    slope = np.polyfit(np.log([100, 200, 400, 800]), np.log(vals), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.1)


def test_threshold_report_json():
    rep = A.ThresholdReport(REG36, eps_th=0.43, eps_ef=0.37, alpha_star=0.02, design_rate=0.5)
    obj = rep.to_json()
    assert obj["weak_interval"] == [pytest.approx(0.57), pytest.approx(0.63)]
    assert obj["strong_from"] == pytest.approx(0.63)
    assert set(obj) == {"lambda", "rho", "eps_th", "eps_ef", "alpha_star", "design_rate", "weak_interval", "strong_from"}
    with pytest.raises(ValueError):
        A.ThresholdReport(REG36, eps_th=0.3, eps_ef=0.4, alpha_star=0.0, design_rate=0.5)
