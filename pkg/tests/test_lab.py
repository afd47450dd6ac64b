import json

import numpy as np
import pytest

from cmlab.degrees import exponents_from_tau, powerlaw_quantile_sequence
from cmlab.lab import (
    ExperimentSpec,
    dumps_12g,
    extract_rank_statistic,
    mix_seed,
    percolation_assumption_report,
    run_experiment,
    tightness_diagnostic,
)


# -- seed mixing ----------------------------------------------------------------

def test_mix_seed_deterministic_and_distinct():
    assert mix_seed(1, 2, 3) == mix_seed(1, 2, 3)
    assert mix_seed(1, 2, 3) != mix_seed(1, 3, 2)
    seen = {mix_seed(99, n, t) for n in (100, 1000, 10_000) for t in range(2000)}
    assert len(seen) == 3 * 2000


def test_mix_seed_is_64_bit():
    for parts in [(0,), (2**63, 5), (123, 456, 789)]:
        s = mix_seed(*parts)
        assert 0 <= s < 2**64


# -- deterministic JSON ------------------------------------------------------------

def test_dumps_12g_format():
    out = dumps_12g({"a": 1 / 3, "b": [1, None, True], "c": "x"})
    assert out == '{"a":0.333333333333,"b":[1,null,true],"c":"x"}'
    assert json.loads(out) == {"a": 0.333333333333, "b": [1, None, True], "c": "x"}


def test_dumps_12g_rejects_nan():
    with pytest.raises(ValueError):
        dumps_12g(float("nan"))


# -- spec round trip ---------------------------------------------------------------

def test_spec_json_roundtrip(tmp_path):
    spec = ExperimentSpec(tau=3.5, lam=0.5, n_list=(100, 200), trials=3,
                          master_seed=7, mode="percolation", delta_grid=(0.25, 0.5),
                          hub_count=2, component_ranks=(1, 2), c_f=0.8)
    back = ExperimentSpec.from_json(spec.to_json())
    assert back == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(tau=3.5, lam=0, n_list=(), trials=1, master_seed=0)
    with pytest.raises(ValueError):
        ExperimentSpec(tau=3.5, lam=0, n_list=(200, 100), trials=1, master_seed=0)
    with pytest.raises(ValueError):
        ExperimentSpec(tau=3.5, lam=0, n_list=(100,), trials=0, master_seed=0)
    with pytest.raises(ValueError):
        ExperimentSpec(tau=3.5, lam=0, n_list=(100,), trials=1, master_seed=0,
                       mode="bogus")
    with pytest.raises(ValueError):
        ExperimentSpec(tau=3.5, lam=0, n_list=(100,), trials=1, master_seed=0,
                       delta_grid=(0.5, 0.2))


# -- experiments -------------------------------------------------------------------

def test_smoke_single_trial_all_fields():
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(10,), trials=1, master_seed=3,
                          mode="direct-critical", delta_grid=(0.5, 1.0))
    res = run_experiment(spec)
    assert len(res.records) == 1
    rec = res.records[0]
    assert rec.n == 10 and rec.trial == 0
    assert rec.nu == pytest.approx(1.0, abs=0.2)
    assert rec.component_stats  # at least the largest component tracked
    c1 = rec.component_stats[0]
    for key in ("vertices", "edges", "surplus", "diameter", "radius",
                "scaled_size", "scaled_diameter", "mass", "inv_mass"):
        assert key in c1
    assert rec.wall_clock > 0


def test_experiment_deterministic_jsonl(tmp_path):
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(60, 120), trials=3,
                          master_seed=11, mode="direct-critical")
    a = run_experiment(spec).trials_jsonl()
    b = run_experiment(spec).trials_jsonl()
    assert a == b  # byte-identical


def test_experiment_writes_outputs(tmp_path):
    out_t = tmp_path / "trials.jsonl"
    out_s = tmp_path / "summary.json"
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(80,), trials=2, master_seed=4,
                          out_trials=str(out_t), out_summary=str(out_s))
    res = run_experiment(spec)
    lines = out_t.read_text().strip().splitlines()
    assert len(lines) == 2
    parsed = [json.loads(x) for x in lines]
    assert [p["trial"] for p in parsed] == [0, 1]
    summary = json.loads(out_s.read_text())
    assert summary == json.loads(res.summary_json())


def test_percolation_mode_retained_mean():
    # R ~ Bin(ell/2, p): the empirical mean over trials should sit near p*ell/2
    n, trials = 1000, 60
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(n,), trials=trials,
                          master_seed=21, mode="percolation", c_f=1.0,
                          component_ranks=(1,))
    res = run_experiment(spec)
    d = powerlaw_quantile_sequence(n, 3.5, 1.0)
    p = res.records[0].p_c
    mean_r = np.mean([r.retained for r in res.records])
    expect = p * d.ell / 2
    sd = (d.ell / 2 * p * (1 - p)) ** 0.5
    assert abs(mean_r - expect) <= 4 * sd / trials**0.5
    for r in res.records:
        assert r.m1_ratio is not None and r.m2_ratio is not None


def test_summary_quantiles_recomputable():
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(60,), trials=8, master_seed=2)
    res = run_experiment(spec)
    vals = [c["scaled_size"] for r in res.records for c in r.component_stats
            if c["rank"] == 1]
    q = res.summary["per_n"]["60"]["scaled_size_rank1"]
    assert q["q10"] == pytest.approx(float(np.quantile(vals, 0.1)), rel=1e-12)
    assert q["q90"] == pytest.approx(float(np.quantile(vals, 0.9)), rel=1e-12)


def test_rescaled_fields_consistent():
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(150,), trials=4, master_seed=6,
                          delta_grid=(0.5,))
    res = run_experiment(spec)
    for r in res.records:
        for c in r.component_stats:
            assert c["scaled_size"] == pytest.approx(
                c["vertices"] * 150.0**-0.6, rel=1e-12)
            assert c["scaled_diameter"] == pytest.approx(
                c["diameter"] * 150.0**-0.2, rel=1e-12)
            v = c["mass"]["0.5"]
            if v > 0:
                assert c["inv_mass"]["0.5"] == pytest.approx(1.0 / v, rel=1e-12)


def test_hub_removed_diameter_recorded():
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(80,), trials=2, master_seed=8,
                          hub_count=3)
    res = run_experiment(spec)
    for r in res.records:
        assert r.hub_removed_diam is not None
        assert r.hub_removed_diam >= 0


def test_workers_do_not_change_output():
    spec1 = ExperimentSpec(tau=3.5, lam=0.0, n_list=(60,), trials=4, master_seed=13)
    spec2 = ExperimentSpec(tau=3.5, lam=0.0, n_list=(60,), trials=4, master_seed=13,
                           workers=2)
    assert run_experiment(spec1).trials_jsonl() == run_experiment(spec2).trials_jsonl()


# -- tightness diagnostic ------------------------------------------------------------

def test_tightness_constant_statistic():
    vals = {100: [2.0] * 60, 1000: [2.0] * 60}
    diag = tightness_diagnostic(vals, statistic="const")
    assert diag.dispersion_ratio == pytest.approx(1.0)
    assert diag.tight_consistent


def test_tightness_counterexample_flagged():
    # unrescaled sizes scale like n: the ratio across a decade is ~10
    rng = np.random.default_rng(0)
    vals = {1000: (1000 * (1 + 0.05 * rng.standard_normal(100))).tolist(),
            10_000: (10_000 * (1 + 0.05 * rng.standard_normal(100))).tolist()}
    diag = tightness_diagnostic(vals, statistic="raw_size")
    assert diag.dispersion_ratio == pytest.approx(10.0, rel=0.1)
    assert not diag.tight_consistent


def test_tightness_preconditions():
    with pytest.raises(ValueError):
        tightness_diagnostic({100: [1.0] * 60})
    with pytest.raises(ValueError):
        tightness_diagnostic({100: [1.0] * 60, 200: [1.0] * 10})


def test_extract_rank_statistic():
    spec = ExperimentSpec(tau=3.5, lam=0.0, n_list=(60, 90), trials=3, master_seed=5,
                          delta_grid=(0.5,))
    res = run_experiment(spec)
    by_n = extract_rank_statistic(res.records, "scaled_size", rank=1)
    assert set(by_n) == {60, 90}
    assert all(len(v) == 3 for v in by_n.values())
    inv = extract_rank_statistic(res.records, "inv_mass", rank=1, delta=0.5)
    assert set(inv) == {60, 90}


# -- percolation report ---------------------------------------------------------------

def test_percolation_report_p1_exact():
    d = powerlaw_quantile_sequence(400, 3.5, 1.0)
    exp = exponents_from_tau(3.5)
    rep = percolation_assumption_report(d, 1.0, trials=100, seed=0, exp=exp)
    assert not rep.skipped
    assert rep.sum_rule_violations == 0
    assert rep.m1_dev_quantiles["q90"] == pytest.approx(0.0, abs=1e-12)
    assert rep.m2_dev_quantiles["q90"] == pytest.approx(0.0, abs=1e-12)
    assert rep.hub_dev_quantiles["q90"] == pytest.approx(0.0, abs=1e-12)


def test_percolation_report_p0_skipped():
    d = powerlaw_quantile_sequence(400, 3.5, 1.0)
    exp = exponents_from_tau(3.5)
    rep = percolation_assumption_report(d, 0.0, trials=100, seed=0, exp=exp)
    assert rep.skipped
    assert rep.m1_dev_quantiles is None


def test_percolation_report_requires_trials():
    d = powerlaw_quantile_sequence(400, 3.5, 1.0)
    with pytest.raises(ValueError):
        percolation_assumption_report(d, 0.5, trials=10, seed=0,
                                      exp=exponents_from_tau(3.5))


def test_percolation_report_json(tmp_path):
    d = powerlaw_quantile_sequence(200, 3.5, 1.0)
    rep = percolation_assumption_report(d, 0.6, trials=120, seed=3,
                                        exp=exponents_from_tau(3.5))
    parsed = json.loads(rep.to_json())
    assert parsed["trials"] == 120
    assert parsed["sum_rule_violations"] == 0
    assert parsed["c1_tail"]["q50"] > 0
