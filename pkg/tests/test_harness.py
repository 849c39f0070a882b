from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpc_wiretap import analysis
from ldpc_wiretap.ensemble import DegreeDistribution, EnsembleSpec
from ldpc_wiretap.errors import ConfigError, InsufficientData
from ldpc_wiretap.harness import (
    BlockErrorEstimate,
    ExperimentConfig,
    block_error_mc,
    derive_seed,
    exponent_fit,
    fit_loglog,
    read_block_error_csv,
    secrecy_sim,
    small_stopping_scan,
    wilson_interval,
    with_overrides,
    write_block_error_csv,
)

REG36 = DegreeDistribution.regular(3, 6)
BASE = {"lambda": {"3": "1"}, "rho": {"6": "1"}}


def cfg(**kw) -> ExperimentConfig:
    return ExperimentConfig.from_dict({**BASE, **kw})


# -- configuration -------------------------------------------------------------


def test_config_roundtrip():
    c = cfg(n=[20, 40], eps=[0.1, 0.3], trials=500, master_seed=7, min_girth=4, budget={"max_tries": 99})
    assert c.n_list == (20, 40) and c.eps_list == (0.1, 0.3) and c.max_tries == 99
    again = ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict())))
    assert again == c


@pytest.mark.parametrize("obj, needle", [
    ({"rho": {"6": "1"}}, "lambda"),
    ({**BASE, "n": [21]}, "'n'"),
    ({**BASE, "n": [20, "x"]}, "n[1]"),
    ({**BASE, "eps": [1.5]}, "eps"),
    ({**BASE, "trials": 0}, "trials"),
    ({**BASE, "min_girth": 5}, "min_girth"),
    ({**BASE, "sampler": "magic"}, "sampler"),
    ({**BASE, "colour": 1}, "colour"),
    ({**BASE, "budget": 3}, "budget"),
    ({"lambda": {"3": "1/2"}, "rho": {"6": "1"}}, "lambda"),
    ([1, 2], "object"),
])
def test_config_errors_name_the_field(obj, needle):
    with pytest.raises(ConfigError, match=None) as info:
        ExperimentConfig.from_dict(obj)
    assert needle in str(info.value)


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        ExperimentConfig.from_json_text('{"lambda": {"3": "1"},\n "rho": }')
    with pytest.raises(ConfigError, match="cannot read"):
        ExperimentConfig.load("/nonexistent/config.json")


def test_sampler_resolution_and_overrides():
    assert cfg(min_girth=4).resolved_sampler() == "rejection"
    assert cfg(min_girth=6).resolved_sampler() == "switch"
    c = with_overrides(cfg(), trials=5, master_seed=None)
    assert c.trials == 5 and c.master_seed == 0


# -- seeding -------------------------------------------------------------------


@given(st.integers(0, 2**63), st.integers(1, 10_000), st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_derived_seeds_are_deterministic(master, n, eps):
    a = derive_seed(master, n, eps).generate_state(4)
    b = derive_seed(master, n, eps).generate_state(4)
    assert np.array_equal(a, b)


def test_derived_seeds_separate_keys():
    states = {tuple(derive_seed(0, n, e).generate_state(2)) for n in (10, 20) for e in (0.1, 0.2)}
    assert len(states) == 4
    assert tuple(derive_seed(0, 10, 0.1).generate_state(2)) == tuple(derive_seed(0, 10, 0.1 + 1e-15).generate_state(2))


# -- intervals -----------------------------------------------------------------


def test_wilson_interval_matches_closed_form():
    k, t = 17, 400
    z = 1.959963984540054
    p = k / t
    centre = (p + z * z / (2 * t)) / (1 + z * z / t)
    half = z / (1 + z * z / t) * math.sqrt(p * (1 - p) / t + z * z / (4 * t * t))
    lo, hi = wilson_interval(k, t)
    assert lo == pytest.approx(centre - half, rel=1e-9)
    assert hi == pytest.approx(centre + half, rel=1e-9)


def test_rule_of_three():
    assert wilson_interval(0, 1000) == (0.0, 0.003)
    assert wilson_interval(0, 2) == (0.0, 1.0)


def test_wilson_coverage():
    rng = np.random.default_rng(11)
    p, t = 0.03, 500
    hits = 0
    for k in rng.binomial(t, p, size=1000):
        lo, hi = wilson_interval(int(k), t)
        hits += lo <= p <= hi
    assert 0.92 <= hits / 1000 <= 0.98


# -- exponent fit ----------------------------------------------------------------


@pytest.mark.parametrize("power", [1, 2, 3])
def test_fit_recovers_power_law(power):
    n = np.array([50, 100, 200, 400])
    fit = fit_loglog(n, 5.0 / n**power, np.full(4, 0.05))
    assert fit.slope == pytest.approx(-power, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(5.0))
    assert fit.chi2 == pytest.approx(0.0, abs=1e-18)


def _estimates(n_list, p_of_n, trials=10**6):
    return [BlockErrorEstimate(n, 0.25, trials, int(round(p_of_n(n) * trials)), 0, trials, math.nan)
            for n in n_list]


def test_exponent_fit_on_synthetic_counts():
    fit = exponent_fit(_estimates([100, 200, 400, 800], lambda n: 40.0 / n**2))
    assert fit.ci95[0] <= -2 <= fit.ci95[1]
    fit = exponent_fit(_estimates([100, 200, 400, 800], lambda n: 2.0 / n))
    assert fit.slope == pytest.approx(-1, abs=0.01)


def test_exponent_fit_drops_sparse_cells():
    est = _estimates([100, 200, 400, 800], lambda n: 4e8 / n**5)  # 800 -> 1 failure
    assert est[-1].failures < 3
    assert exponent_fit(est).points == 3
    with pytest.raises(InsufficientData):
        exponent_fit(est[:2] + est[-1:])
    with pytest.raises(ValueError):
        exponent_fit([*est[:2], BlockErrorEstimate(400, 0.3, 10, 5, 0, 10, math.nan)])


# -- block error ---------------------------------------------------------------


def test_csv_roundtrip():
    c = cfg(n=[20, 40], eps=[0.3], trials=300, patterns_per_graph=10)
    est = block_error_mc(c)
    text = write_block_error_csv(est, c)
    assert text.splitlines()[0] == "# block-error/1"
    assert read_block_error_csv(text) == est
    with pytest.raises(ConfigError):
        read_block_error_csv("n,eps\n1,2\n")


def test_no_erasures_no_failures():
    est = block_error_mc(cfg(n=[30], eps=[0.0], trials=200))[0]
    assert est.failures == 0 and est.p_hat == 0.0 and est.ci_hi == pytest.approx(3 / 200)


def test_everything_erased_always_fails():
    est = block_error_mc(cfg(n=[30], eps=[1.0], trials=50))[0]
    assert est.failures == 50


def test_same_seed_same_numbers_across_chunking_and_jobs():
    c = cfg(n=[40], eps=[0.35], trials=2000, patterns_per_graph=5, chunk_trials=300, master_seed=3)
    a = block_error_mc(c, jobs=1)
    b = block_error_mc(c, jobs=2)
    assert a == b
    assert block_error_mc(with_overrides(c, master_seed=4))[0].failures != a[0].failures


def test_fixed_graph_uses_one_graph():
    c = cfg(n=[30], eps=[0.4], trials=400, fixed_graph=True, master_seed=1)
    per = block_error_mc(c)[0]
    assert per.graphs == 400
    assert 0 < per.failures < 400


def test_block_error_respects_union_bound():
    # unrestricted ensemble: failure needs a nonempty stopping set inside the erasures
    n, eps = 24, 0.12
    spec = EnsembleSpec(n, REG36)
    bound = analysis.union_bound_prediction(spec, eps, n, 1)
    est = block_error_mc(cfg(n=[n], eps=[eps], trials=20_000, patterns_per_graph=20))[0]
    assert est.p_hat <= bound + 3 * est.stderr


def test_girth_restriction_lowers_block_error():
    loose = block_error_mc(cfg(n=[60], eps=[0.2], trials=20_000, patterns_per_graph=20))[0]
    tight = block_error_mc(cfg(n=[60], eps=[0.2], trials=20_000, patterns_per_graph=20, min_girth=6))[0]
    assert tight.p_hat < loose.p_hat


# -- stopping-set scan -----------------------------------------------------------


def test_scan_matches_exact_unrestricted_means():
    rows = small_stopping_scan(cfg(n=[12]), s_max=4, graphs=3000)
    for r in rows:
        assert abs(r.mean - r.exact_unrestricted) < 4 * r.stderr + 1e-12
        assert r.restricted_bound == r.exact_unrestricted


def test_scan_under_girth_restriction_stays_below_bound():
    rows = small_stopping_scan(cfg(n=[40], min_girth=6), s_max=4, graphs=300)
    by_s = {r.s: r for r in rows}
    assert by_s[1].mean == by_s[2].mean == 0.0
    for r in rows:
        assert r.mean <= r.restricted_bound + 4 * r.stderr


# -- secrecy --------------------------------------------------------------------


def test_secrecy_sim_cells():
    out = secrecy_sim(cfg(n=[40, 60], eps=[0.8], trials=500, master_seed=2))
    assert [o.n for o in out] == [40, 60]
    assert all(o.leakage_bits >= 0 for o in out)
    again = secrecy_sim(cfg(n=[40, 60], eps=[0.8], trials=500, master_seed=2), jobs=2)
    assert [o.to_json() for o in again] == [o.to_json() for o in out]
