import pytest

from cvrlab import coalition_value as cv
from cvrlab.exceptions import CvrlabError
from cvrlab.instance import Location, ProblemInstance, generate_instance


def test_zero_normalisation_is_exact():
    for seed in range(50):
        table = cv.build_characteristic_table(generate_instance(seed))
        assert table.values[0] == 0.0
        for a in range(3):
            assert table.values[1 << a] == 0.0


def test_table_shape_and_nontrivial_entries():
    table = cv.build_characteristic_table(generate_instance(3))
    assert len(table.values) == 8
    assert sum(1 for v in table.values if v == 0.0) >= 4


def test_gain_nonnegative_and_superadditive_sweep():
    for seed in range(150):
        table = cv.build_characteristic_table(generate_instance(seed))
        assert cv.check_table_invariants(table) == []


def test_gain_is_exactly_nonnegative():
    # not just >= -eps: the no-pooling assignment is seen by the scan, so
    # the subtraction can never go below zero even in floating point
    for seed in range(300):
        table = cv.build_characteristic_table(generate_instance(seed))
        assert all(v >= 0.0 for v in table.values)


def test_collaboration_gain_matches_table():
    inst = generate_instance(17)
    table = cv.build_characteristic_table(inst)
    for s in range(8):
        assert cv.collaboration_gain(s, inst) == table.values[s]


def test_gain_zero_when_customers_sit_on_depots():
    from cvrlab.instance import depot_coordinates

    depots = depot_coordinates(3)
    locations = [Location(x, y, a, True) for a, (x, y) in enumerate(depots)]
    for a, (x, y) in enumerate(depots):
        locations += [Location(x, y, a, False)] * 2
    locations = locations[:3] + [p for a in range(3) for p in locations[3:][2 * a : 2 * a + 2]]
    inst = ProblemInstance(seed=0, radius=0.3, n_agents=3, customers_per_agent=2,
                           locations=tuple(locations))
    table = cv.build_characteristic_table(inst)
    assert all(v == 0.0 for v in table.values)
    assert cv.is_degenerate(table)


def test_per_capita():
    assert cv.per_capita(0.88, 3) == pytest.approx(0.29333333333333333, abs=1e-15)
    assert round(cv.per_capita(0.88, 3), 2) == 0.29
    assert cv.per_capita(0.76, 2) == 0.38
    assert cv.per_capita(0.0, 2) == 0.0
    with pytest.raises(CvrlabError):
        cv.per_capita(1.0, 0)


def test_worked_table_accepted(worked_table):
    assert cv.check_table_invariants(worked_table) == []
    assert not cv.is_degenerate(worked_table)


def test_optimal_coalitions_on_worked_table(worked_table):
    # agents 0 and 1 pair up; agent 2's best option is the grand coalition
    assert cv.optimal_coalition_for(0, worked_table) == 0b011
    assert cv.optimal_coalition_for(1, worked_table) == 0b011
    assert cv.optimal_coalition_for(2, worked_table) == 0b111
    assert cv.global_optimal_coalition(worked_table) == 0b011


def test_grand_sole_nonzero_entry_wins_everywhere():
    table = cv.CharacteristicTable(
        n_agents=3,
        values=(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5),
        single_costs=(1.0, 1.0, 1.0),
    )
    assert cv.global_optimal_coalition(table) == 0b111
    for i in range(3):
        assert cv.optimal_coalition_for(i, table) == 0b111


def test_tie_break_on_zero_table(zero_table):
    assert cv.optimal_coalition_for(0, zero_table) == 0b011
    assert cv.optimal_coalition_for(1, zero_table) == 0b011
    assert cv.optimal_coalition_for(2, zero_table) == 0b101
    assert cv.global_optimal_coalition(zero_table) == 0b011


def test_optimal_matches_exhaustive_scan():
    for seed in range(60):
        table = cv.build_characteristic_table(generate_instance(seed))
        for i in range(3):
            candidates = [
                s for s in range(8) if s >> i & 1 and cv.coalition_size(s) >= 2
            ]
            best = max(
                candidates,
                key=lambda s: (
                    table.values[s] / cv.coalition_size(s),
                    -cv.coalition_size(s),
                    -s,
                ),
            )
            assert cv.optimal_coalition_for(i, table) == best


def test_grand_is_max():
    for seed in range(60):
        table = cv.build_characteristic_table(generate_instance(seed))
        assert table.values[7] >= max(table.values) - 1e-9


def test_degeneracy_matches_essentiality():
    for seed in range(100):
        table = cv.build_characteristic_table(generate_instance(seed))
        assert cv.is_degenerate(table) == (table.values[7] <= 1e-9)


def test_profit_report_cross_check():
    for seed in range(40):
        inst = generate_instance(seed)
        for coalition in (0b011, 0b110, 0b111):
            report = cv.profit_report(coalition, inst)
            gain = cv.collaboration_gain(coalition, inst)
            assert report.collaboration_gain == pytest.approx(gain, abs=1e-9)
            assert report.pre_social_welfare == pytest.approx(
                sum(r - c for r, c in zip(report.revenue, report.pre_cost)), abs=1e-12
            )


def test_profit_report_revenue_is_one_per_delivery():
    inst = generate_instance(8)
    report = cv.profit_report(0b111, inst)
    assert report.revenue == (3.0, 3.0, 3.0)


def test_coalition_helpers():
    assert cv.members(0b101) == (0, 2)
    assert cv.mask_of([0, 2]) == 0b101
    assert cv.coalition_size(0b111) == 3
    assert cv.grand_coalition(3) == 0b111
    assert cv.coalitions_containing(1, 3, min_size=2) == [0b011, 0b110, 0b111]
