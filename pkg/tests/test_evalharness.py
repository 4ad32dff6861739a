import pytest

from cvrlab import evalharness as ev
from cvrlab.agents import HeuristicBot, OracleBot, RandomBot
from cvrlab.bargaining import GameConfig
from cvrlab.coalition_value import (
    build_characteristic_table,
    global_optimal_coalition,
    is_degenerate,
    optimal_coalition_for,
)
from cvrlab.instance import GenerationConfig, generate_batch, generate_instance


def _instances(n, seed=1000):
    return list(generate_batch(seed, n))


def test_oracle_accuracy_and_gap():
    instances = _instances(120)
    policies = [OracleBot(i) for i in range(3)]
    report, rows = ev.evaluate_policies(policies, instances)
    assert report.accuracy == (1.0, 1.0, 1.0)
    assert report.mean_abs_gap == (0.0, 0.0, 0.0)
    assert report.mean_rel_gap == (0.0, 0.0, 0.0)
    for row in rows:
        if row["excluded_reason"] == "":
            assert row["phi"] == 0.0 and row["eta"] == 0.0


def test_heuristic_accuracy_matches_direct_count():
    instances = _instances(150)
    policies = [HeuristicBot(i, 3) for i in range(3)]
    report, _ = ev.evaluate_policies(policies, instances)
    for i in range(3):
        hits = total = 0
        for inst in instances:
            table = build_characteristic_table(inst)
            if is_degenerate(table):
                continue
            if not global_optimal_coalition(table) >> i & 1:
                continue
            total += 1
            hits += optimal_coalition_for(i, table) == 0b111
        assert report.included[i] == total
        assert report.accuracy[i] == hits / total


def test_random_accuracy_near_uniform_chance():
    instances = _instances(600, seed=5000)
    policies = [RandomBot(i, 3, seed=77 + i) for i in range(3)]
    report, _ = ev.evaluate_policies(policies, instances)
    # three equally likely proposals, the optimum always among them
    for i in range(3):
        assert abs(report.accuracy[i] - 1 / 3) <= 0.06


def test_gap_values_on_worked_table(worked_table):
    # agent 0 proposing the grand coalition instead of the {0,1} pair
    phi, eta = ev.gap_for(worked_table, 0, 0b111, "per-capita")
    assert phi == pytest.approx(0.38 - 0.88 / 3, abs=1e-12)
    assert eta == pytest.approx((0.38 - 0.88 / 3) / 0.38, abs=1e-12)
    phi_raw, eta_raw = ev.gap_for(worked_table, 0, 0b111, "raw")
    assert phi_raw == pytest.approx(0.76 - 0.88, abs=1e-12)
    assert phi_raw < 0  # the literal formula can go negative
    phi0, eta0 = ev.gap_for(worked_table, 0, 0b011, "per-capita")
    assert phi0 == 0.0 and eta0 == 0.0


def test_per_capita_eta_bounded():
    instances = _instances(100, seed=300)
    for policies in ([RandomBot(i, 3, seed=i) for i in range(3)],
                     [HeuristicBot(i, 3) for i in range(3)]):
        _, rows = ev.evaluate_policies(policies, instances)
        for row in rows:
            if row["excluded_reason"] == "":
                assert -1e-12 <= row["eta"] <= 1.0 + 1e-12


def test_exclusion_bookkeeping():
    instances = _instances(200, seed=900)
    report, rows = ev.evaluate_policies([HeuristicBot(i, 3) for i in range(3)], instances)
    assert report.n_instances == 200
    for i in range(3):
        agent_rows = [r for r in rows if r["agent"] == i]
        assert len(agent_rows) == 200
        degenerate = sum(r["excluded_reason"] == "degenerate" for r in agent_rows)
        noopt = sum(r["excluded_reason"] in ("not_in_optimal", "zero_optimal")
                    for r in agent_rows)
        included = sum(r["excluded_reason"] == "" for r in agent_rows)
        assert degenerate == report.degenerate_count
        assert noopt == report.excluded_not_in_optimal[i]
        assert included == report.included[i]
        assert included + degenerate + noopt == 200


def test_accuracy_implies_zero_gap():
    instances = _instances(80, seed=40)
    _, rows = ev.evaluate_policies([OracleBot(i) for i in range(3)], instances)
    for row in rows:
        if row["excluded_reason"] == "" and row["proposed_mask"] == row["optimal_mask"]:
            assert row["phi"] == 0.0 and row["eta"] == 0.0


def test_all_heuristic_matchup_agrees_at_round_one():
    policies = [HeuristicBot(i, 3) for i in range(3)]
    stats = ev.run_matchup(policies, 100, GameConfig(), seed=2024)
    assert stats.agreement_rate == 1.0
    assert stats.mean_agreement_round == 1.0
    assert stats.played + stats.skipped_degenerate == 100
    assert stats.wall_clock_total_s > 0.0
    assert stats.wall_clock_per_instance_s > 0.0


def test_all_oracle_matchup_agreement_bound():
    policies = [OracleBot(i) for i in range(3)]
    trace = []
    stats = ev.run_matchup(policies, 150, GameConfig(), seed=31, trace=trace)
    first_rounds = [row for row in trace if row["t"] == 1]
    in_opt = 0
    played = 0
    for k in range(150):
        inst = generate_instance(31 + k)
        table = build_characteristic_table(inst)
        if is_degenerate(table):
            continue
        row = first_rounds[played]
        assert row["seed"] == inst.seed
        played += 1
        if global_optimal_coalition(table) >> row["proposer"] & 1:
            in_opt += 1
    assert stats.played == played
    assert stats.agreement_rate >= in_opt / played - 1e-12


def test_matchup_reproducible():
    policies = [RandomBot(i, 3, seed=5 + i) for i in range(3)]
    a = ev.run_matchup(policies, 60, GameConfig(), seed=7)
    policies = [RandomBot(i, 3, seed=5 + i) for i in range(3)]
    b = ev.run_matchup(policies, 60, GameConfig(), seed=7)
    assert a.agreement_rate == b.agreement_rate
    assert a.mean_agreement_round == b.mean_agreement_round
    assert a.mean_discounted_return == b.mean_discounted_return


def test_matchup_returns_conserve_value():
    policies = [HeuristicBot(i, 3) for i in range(3)]
    trace = []
    ev.run_matchup(policies, 50, GameConfig(), seed=11, trace=trace)
    for row in trace:
        if row["terminal"] and row["coalition_mask"] is not None:
            total = sum(row["rewards"])
            inst = generate_instance(row["seed"])
            table = build_characteristic_table(inst)
            assert total == pytest.approx(table.values[row["coalition_mask"]], abs=1e-9)


def test_degenerate_rate_tiny_radius_is_one():
    cfg = GenerationConfig(radii=(0.001,))
    rate = ev.degenerate_rate(150, seed=0, gen_config=cfg, workers=1)
    assert rate == 1.0


def test_degenerate_rate_reproducible_and_worker_invariant():
    a = ev.degenerate_rate(300, seed=77, workers=1)
    b = ev.degenerate_rate(300, seed=77, workers=2, chunk=64)
    assert a == b


def test_gap_mode_validation(worked_table):
    with pytest.raises(ValueError):
        ev.gap_for(worked_table, 0, 0b111, "nonsense")
