"""Smoke tests for the Python bindings against the staged build-tree module."""

import math

import pytest

import crowdscore as cs

CONFIG = """
scenario.kind = equally_spaced
scenario.n = 8
scenario.ratio = 2
algo.variant = gka
policy.pi_th = 0.1, 0.02
trials = 30
seed = 11
"""


def test_analytics_values():
    assert cs.p_delta(0.0, 1.0) == pytest.approx(0.5)
    assert cs.p_delta(2.0, 1.0) == pytest.approx(0.5 * math.erfc(1.0), rel=1e-12)
    assert cs.p_comp(1, 0.7, 1.0) == pytest.approx(cs.p_delta(0.7, 1.0), rel=1e-12)
    assert cs.p_est(101, 0.2, 1.0) < cs.p_comp(101, 0.2, 1.0)
    assert cs.p_comp_gaussian(1001, 0.05, 1.0) == pytest.approx(
        cs.p_comp(1001, 0.05, 1.0), rel=0.1
    )
    assert cs.p_comp_small_gap(101, 0.02, 1.0) == pytest.approx(
        cs.p_comp(101, 0.02, 1.0), rel=0.05
    )
    with pytest.raises(ValueError):
        cs.p_comp(4, 0.5, 1.0)  # even juries are rejected


def test_uniform_quantizer_shape():
    q = cs.uniform_quantizer(-1.0, 1.0, 2)
    assert q.levels == 2
    assert q.representatives == pytest.approx([-0.5, 0.5])
    assert q.quantize(-0.1) == pytest.approx(-0.5)
    assert q.quantize(100.0) == pytest.approx(0.5)
    back = cs.QuantizerSpec.from_table(q.to_table())
    assert back.representatives == pytest.approx(q.representatives)


def test_lloyd_quantizer_beats_uniform_visibly():
    q = cs.lloyd_quantizer("gaussian:64:3", levels=8, dist="III", gamma=0.5)
    assert q.levels == 8
    reps = list(q.representatives)
    assert reps == sorted(reps)
    # The weighted blend concentrates cells where the best objects live.
    assert reps[0] > -2.0


def test_run_experiment_rows():
    rows = cs.run_experiment(CONFIG)
    assert len(rows) == 2
    assert rows[0]["pi_th"] == pytest.approx(0.1)
    assert 0.0 <= rows[0]["p_e"] <= 1.0
    assert rows[0]["m_bar_per_n"] >= 1.0
    # Lower threshold spends at least as much as the higher one.
    assert rows[1]["m_bar_per_n"] >= rows[0]["m_bar_per_n"] - 1e-9


def test_run_experiment_deterministic_csv():
    assert cs.run_experiment_csv(CONFIG) == cs.run_experiment_csv(CONFIG)
    header = cs.run_experiment_csv(CONFIG).splitlines()[0]
    assert header == (
        "pi_th,trials,p_e,p_e_ci95,m_bar_per_n,m_bar_ci95,rounds_mean,"
        "stop_budget,stop_singleton,stop_accuracy,stop_stall"
    )


def test_run_trial_and_errors():
    r = cs.run_trial(CONFIG, pi_th=0.1, trial=3)
    assert r["winner"] >= 0
    assert r["m_total"] >= 8
    assert r["stop_reason"] in {"accuracy", "singleton", "budget", "stall"}
    with pytest.raises(ValueError):
        cs.run_experiment("bogus_key = 1\n")
