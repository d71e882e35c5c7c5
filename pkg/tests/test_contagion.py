import math
from dataclasses import replace

import numpy as np
import pytest

from guaranet import contagion as C
from guaranet.graph import DynamicNetwork, Enterprise

import oracles
from conftest import make_snapshot, preset_snapshot, random_arcs

HOT = C.ContagionParams(k=50.0)


def test_fermi_examples():
    e = Enterprise("x", asset=100.0, liability=50.0)
    assert C.default_probability(e, 0.0) == 0.5
    assert math.isclose(C.default_probability(e, 50.0), 1 / (1 + math.exp(-0.5)), rel_tol=1e-15)
    assert math.isclose(C.default_probability(e, 50.0), 0.6224593312018546, rel_tol=1e-12)
    flat = C.ContagionParams(k=1e-12)
    assert abs(C.default_probability(Enterprise("y", 3.0, 900.0), 1e4, flat) - 0.5) < 1e-6


def test_fermi_domain_errors():
    with pytest.raises(C.ContagionError):
        C.default_probability(Enterprise("z", asset=0.0), 0.0)
    with pytest.raises(C.ContagionError):
        C.default_probability(Enterprise("z", asset=1.0), -1.0)


def test_params_validation():
    for bad in (dict(k=0), dict(p=0.0), dict(p=1.0), dict(runs=0), dict(scenario="x"),
                dict(mode="x"), dict(delta_mode="x")):
        with pytest.raises(C.ContagionError):
            replace(C.ContagionParams(), **bad).validate()


def chain():
    # c guarantees b, b guarantees a; indexes a=0, b=1, c=2.
    return make_snapshot([(2, 1), (1, 0)], ids=["a", "b", "c"],
                         liability=[60.0, 100.0, 100.0], asset=[100.0] * 3)


def test_chain_cascade():
    res = C.run_cascade(chain(), ["a"], HOT, rng_seed=1)
    assert res.step_counts == (1, 1, 1)
    assert res.failure_ratio == 1.0 and res.steps == 3


def test_isolated_seeds_stop_at_step_one():
    snap = make_snapshot([(0, 1)], n=5)
    res = C.run_cascade(snap, ["n003", "n004"], HOT)
    assert res.step_counts == (2,) and res.steps == 1
    assert res.defaulted.tolist() == [False, False, False, True, True]


def test_all_defaulted_input_is_unchanged():
    snap = make_snapshot([(0, 1), (1, 2)], defaulted=[True, True, True])
    res = C.run_cascade(snap, ["n000"], HOT)
    assert res.final_size == 3 and res.net_failure_ratio == 0.0
    assert res.step_counts == (3,)


def test_unknown_seed_and_empty_seed():
    with pytest.raises(KeyError):
        C.run_cascade(chain(), ["zz"])
    with pytest.raises(C.ContagionError):
        C.run_cascade(chain(), [])


def test_exposure_sums_over_all_defaulted_debtors():
    # g guarantees x and y for 20 each; L/A = 0.2. With x alone the
    # probability stays tiny at k=50, with both it is near one.
    snap = make_snapshot([(0, 1), (0, 2)], amount=20.0, ids=["g", "x", "y"],
                         liability=[20.0, 0.0, 0.0])
    lone = np.mean([C.run_cascade(snap, ["x"], HOT, s).final_size for s in range(200)])
    both = np.mean([C.run_cascade(snap, ["x", "y"], HOT, s).final_size for s in range(200)])
    assert lone < 1.05 and both > 2.95


def test_result_invariants_and_bytes():
    snap = preset_snapshot("phase3")
    seeds = C.select_seeds(snap, "random", 0.05, 4)
    a = C.run_cascade(snap, seeds, C.ContagionParams(), 7)
    b = C.run_cascade(snap, seeds, C.ContagionParams(), 7)
    assert a == b and a.to_bytes() == b.to_bytes()
    assert a.final_size >= len(seeds) and sum(a.step_counts) == int(a.defaulted.sum())
    assert 0 <= a.failure_ratio <= 1


def test_literal_mode_collapses_more():
    snap = preset_snapshot("phase1")
    seeds = C.select_seeds(snap, "random", 0.01, 1)
    trig = C.run_cascade(snap, seeds, C.ContagionParams(), 3)
    lit = C.run_cascade(snap, seeds, C.ContagionParams(mode="literal"), 3)
    assert lit.failure_ratio > 0.9 > trig.failure_ratio


def test_seed_selection_examples():
    arcs = [(i, 0) for i in range(1, 10)] + [(i, i + 1) for i in range(10, 99)]
    snap = make_snapshot(arcs, n=100)
    assert C.select_seeds(snap, "top_in_degree", 0.01) == ["n000"]
    assert C.select_seeds(snap, "random", 0.05, 3) == C.select_seeds(snap, "random", 0.05, 3)
    assert len(C.select_seeds(snap, "random", 0.05, 3)) == 5
    assert C.select_seeds(snap, "top_loan", 0.05) == [f"n{i:03d}" for i in range(5)]
    with pytest.raises(C.ContagionError):
        C.select_seeds(snap, "top_importance", 0.05)
    imp = {s: float(i) for i, s in enumerate(snap.ids)}
    assert C.select_seeds(snap, "top_importance", 0.02, importance=imp) == ["n098", "n099"]


def test_seed_count_rounds_up():
    assert C.seed_count(0.07, 100) == 7
    assert C.seed_count(0.01, 150) == 2
    assert C.seed_count(0.001, 10) == 1


def test_importance_examples():
    # Debtor 0 guaranteed by 10 highly leveraged guarantors.
    star = make_snapshot([(i, 0) for i in range(1, 11)], liability=[100.0] * 11)
    imp = C.importance_scores(star, HOT, runs_per_node=20, rng_seed=3)
    assert imp[0] == pytest.approx(10.0)
    assert np.all(imp[1:] == 0.0)
    # Two mirror-image debtors.
    sym = make_snapshot([(2, 0), (3, 1)], liability=[60.0] * 4)
    s = C.importance_scores(sym, C.ContagionParams(), runs_per_node=4000, rng_seed=1)
    se = math.sqrt(0.25 / 4000) * math.sqrt(2)
    assert abs(s[0] - s[1]) <= 3 * se


def test_monte_carlo_examples():
    snap = preset_snapshot("phase2")
    one = C.monte_carlo(snap, C.ContagionParams(runs=1, seed=5))
    rec = []
    again = C.monte_carlo(snap, C.ContagionParams(runs=1, seed=5), record=rec)
    assert one.sd is None and one.standard_error is None and one == again
    assert rec[0][1] == one.mean_final_ratio
    iso = make_snapshot([], n=200)
    s = C.monte_carlo(iso, C.ContagionParams(k=50, p=0.05, runs=20))
    assert s.mean_final_ratio == 0.05 and s.sd == 0.0 and s.mean_net_ratio == 0.0


def test_monte_carlo_mean_at_least_p():
    snap = preset_snapshot("phase1")
    for sc in ("random", "top_in_degree", "top_loan"):
        s = C.monte_carlo(snap, C.ContagionParams(runs=20, scenario=sc, p=0.01))
        assert s.mean_final_ratio >= C.seed_count(0.01, snap.N) / snap.N


def test_delta_modes():
    snap = make_snapshot([], n=2, liability=[20.0, 60.0])
    assert C.effective_delta(snap, C.ContagionParams()) == 0.5
    assert C.effective_delta(snap, C.ContagionParams(delta_mode="mean_leverage")) == pytest.approx(0.4)


def test_coupled_thresholds_nest():
    rng = np.random.default_rng(0)
    arcs = random_arcs(rng, 150, mean_degree=2.0)
    snap = make_snapshot(arcs, n=150)
    u = rng.random(150)
    small = C.run_cascade(snap, ["n001"], C.ContagionParams(), thresholds=u)
    big = C.run_cascade(snap, ["n001", "n050", "n099"], C.ContagionParams(), thresholds=u)
    assert np.all(big.defaulted[small.defaulted])


def test_reverse_reachability_small():
    rng = np.random.default_rng(9)
    arcs = random_arcs(rng, 60)
    snap = make_snapshot(arcs, n=60, liability=[100.0] * 60)
    res = C.run_cascade(snap, ["n000", "n007"], HOT, 2)
    assert set(np.flatnonzero(res.defaulted)) == oracles.reverse_reachable(60, arcs, [0, 7])


def test_scenario_sweep_shape():
    snaps = [make_snapshot(random_arcs(np.random.default_rng(i), 40), n=40, month=m)
             for i, m in enumerate(["2007-01", "2007-02"])]
    params = C.ContagionParams(runs=3, importance_runs_per_node=2)
    out = C.scenario_sweep(DynamicNetwork(snaps), C.SCENARIOS, C.DEFAULT_P, params)
    assert len(out.rows) == 2 * 12 and not out.errors
    single = C.scenario_sweep(DynamicNetwork(snaps[:1]), ["random"], [0.1], params)
    assert len(single.rows) == 1
    with pytest.raises(C.ContagionError):
        C.scenario_sweep(DynamicNetwork(), params=params)


def test_scenario_sweep_records_cell_errors():
    snap = make_snapshot([(0, 1)], n=2)
    out = C.scenario_sweep(DynamicNetwork([snap]), ["random"], [0.5, 0.7],
                           C.ContagionParams(runs=2))
    assert len(out.rows) == 2
    bad = C.scenario_sweep(DynamicNetwork([snap]), ["random"], [1.5], C.ContagionParams(runs=2))
    assert list(bad.errors) == [("2009-01", "random", 1.5)]
