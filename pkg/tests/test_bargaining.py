import numpy as np
import pytest

from cvrlab import bargaining as bg
from cvrlab.coalition_value import build_characteristic_table
from cvrlab.exceptions import ConfigurationError, IllegalActionError, ProtocolError
from cvrlab.instance import generate_instance

CFG = bg.GameConfig()


def test_config_validation():
    with pytest.raises(ConfigurationError):
        bg.GameConfig(horizon=0)
    with pytest.raises(ConfigurationError):
        bg.GameConfig(gamma=0.0)
    with pytest.raises(ConfigurationError):
        bg.GameConfig(gamma=1.5)


def test_reset_state():
    inst = generate_instance(0)
    rng = np.random.default_rng(0)
    state = bg.reset(inst, CFG, rng)
    assert state.t == 1 and state.phase == bg.PHASE_PROPOSE
    assert state.actions.shape == (10, 6)
    assert np.all(state.actions == -1.0)
    # seeded determinism
    again = bg.reset(inst, CFG, np.random.default_rng(0))
    assert again.proposer == state.proposer


def test_proposer_uniformity_chi_square():
    inst = generate_instance(0)
    rng = np.random.default_rng(42)
    counts = np.zeros(3)
    n = 30_000
    for _ in range(n):
        counts[bg.reset(inst, CFG, rng).proposer] += 1
    freqs = counts / n
    assert np.all(np.abs(freqs - 1 / 3) <= 0.01)
    chi2 = float((((counts - n / 3) ** 2) / (n / 3)).sum())
    assert chi2 < 13.816  # chi-square df=2 critical value at the 0.001 level


def test_legal_coalitions_worked_table(worked_table, zero_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    assert bg.legal_coalitions(state, worked_table) == {0b011, 0b101, 0b111}
    assert bg.legal_coalitions(state, zero_table) == set()
    state2 = bg.reset(inst, CFG, None, proposer=2)
    assert bg.legal_coalitions(state2, worked_table) == {0b101, 0b110, 0b111}


def test_legal_coalitions_predicates_hold():
    for seed in range(30):
        inst = generate_instance(seed)
        table = build_characteristic_table(inst)
        for proposer in range(3):
            state = bg.reset(inst, CFG, None, proposer=proposer)
            for s in bg.legal_coalitions(state, table):
                assert s >> proposer & 1
                assert table.values[s] > 1e-9


def test_egalitarian_payoff():
    assert bg.egalitarian_payoff(0b101, 3) == (0.5, 0.0, 0.5)
    third = 1.0 / 3.0
    assert bg.egalitarian_payoff(0b111, 3) == (third, third, third)
    with pytest.raises(IllegalActionError):
        bg.egalitarian_payoff(0, 3)


def test_masked_softmax_reproduces_egalitarian():
    from cvrlab.learner import masked_payoff_softmax

    for coalition in (0b011, 0b101, 0b110, 0b111):
        soft = masked_payoff_softmax(coalition, 3)
        hard = bg.egalitarian_payoff(coalition, 3)
        assert np.all(np.abs(soft - np.array(hard)) <= 1e-12)


def test_step_propose_writes_row(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    proposal = bg.Proposal(0b011, bg.egalitarian_payoff(0b011, 3))
    state = bg.step_propose(state, proposal, worked_table)
    assert state.phase == bg.PHASE_RESPOND
    assert list(state.actions[0, 0:3]) == [0.5, 0.5, 0.0]
    assert np.all(state.actions[1:] == -1.0)


@pytest.mark.parametrize(
    "proposal, message",
    [
        (bg.Proposal(0b110, (0.0, 0.5, 0.5)), "not a member"),
        (bg.Proposal(0b011, (0.5, 0.4, 0.0)), "sums to"),
        (bg.Proposal(0b011, (0.5, 0.0, 0.5)), "non-member"),
        (bg.Proposal(0b011, (1.5, -0.5, 0.0)), "outside"),
        (bg.Proposal(0b001, (1.0, 0.0, 0.0)), "no positive value"),
    ],
)
def test_step_propose_rejects_illegal(worked_table, proposal, message):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    with pytest.raises(IllegalActionError, match=message):
        bg.step_propose(state, proposal, worked_table)


def _propose(state, coalition, table):
    return bg.step_propose(state, bg.Proposal(coalition, bg.egalitarian_payoff(coalition, 3)), table)


def test_grand_agreement_first_round(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=1)
    state = _propose(state, 0b111, worked_table)
    state, result = bg.step_respond(state, {0: True, 2: True}, worked_table, None)
    assert state.terminal and result.agreed
    assert result.round == 1 and result.coalition == 0b111
    expected = 0.88 / 3
    for r in result.rewards:
        assert r == pytest.approx(expected, abs=1e-12)
    returns = bg.discounted_return(result, 0.99)
    assert returns == result.rewards  # gamma^0 == 1
    assert round(returns[0], 2) == 0.29
    assert list(state.actions[0, 3:6]) == [1.0, 1.0, 1.0]


def test_rejection_advances_round(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    state = _propose(state, 0b011, worked_table)
    state, result = bg.step_respond(state, {1: False, 2: True}, worked_table,
                                    np.random.default_rng(0))
    assert result is None and state.t == 2 and state.phase == bg.PHASE_PROPOSE
    assert list(state.actions[0, 3:6]) == [1.0, 0.0, 1.0]


def test_nonmember_rejection_is_inert(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    state = _propose(state, 0b011, worked_table)
    state, result = bg.step_respond(state, {1: True, 2: False}, worked_table, None)
    assert result is not None and result.agreed
    assert result.coalition == 0b011
    assert result.rewards[2] == 0.0
    assert result.rewards[0] == result.rewards[1] == pytest.approx(0.38, abs=1e-12)


def test_horizon_expiry_zero_rewards(worked_table):
    inst = generate_instance(0)
    cfg = bg.GameConfig(horizon=2)
    rng = np.random.default_rng(1)
    state = bg.reset(inst, cfg, rng)
    state = _propose(state, 0b111, worked_table)
    state, result = bg.step_respond(state, {a: False for a in range(3) if a != state.proposer},
                                    worked_table, rng)
    assert result is None and state.t == 2
    state = _propose(state, 0b111, worked_table)
    state, result = bg.step_respond(state, {a: False for a in range(3) if a != state.proposer},
                                    worked_table, rng)
    assert state.terminal and not result.agreed
    assert result.rewards == (0.0, 0.0, 0.0)
    assert bg.discounted_return(result, 0.99) == (0.0, 0.0, 0.0)


def test_response_count_mismatch(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    state = _propose(state, 0b011, worked_table)
    with pytest.raises(ProtocolError):
        bg.step_respond(state, {1: True}, worked_table, None)
    with pytest.raises(ProtocolError):
        bg.step_respond(state, {0: True, 1: True, 2: True}, worked_table, None)


def test_phase_errors(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    with pytest.raises(ProtocolError):
        bg.step_respond(state, {1: True, 2: True}, worked_table, None)
    state = _propose(state, 0b011, worked_table)
    with pytest.raises(ProtocolError):
        bg.step_pass(state, None)
    state, _ = bg.step_respond(state, {1: True, 2: True}, worked_table, None)
    assert state.terminal
    with pytest.raises(ProtocolError):
        bg.step_propose(state, bg.Proposal(0b011, (0.5, 0.5, 0.0)), worked_table)


def test_pass_keeps_row_unwritten(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    state, result = bg.step_pass(state, np.random.default_rng(0))
    assert result is None and state.t == 2
    assert np.all(state.actions == -1.0)


def test_observation_encoding(worked_table):
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, None, proposer=0)
    obs0 = bg.encode_observation(state, inst, 0)
    obs1 = bg.encode_observation(state, inst, 1)
    assert np.all(obs0.actions == -1.0)
    assert np.array_equal(obs0.locations, obs1.locations)
    assert np.array_equal(obs0.actions, obs1.actions)
    assert obs0.locations.shape == (12, 4)
    # rows are (x, y, owner, is_depot)
    assert list(obs0.locations[0]) == [inst.locations[0].x, inst.locations[0].y, 0.0, 1.0]
    assert obs0.t == 1

    state = _propose(state, 0b011, worked_table)
    state, _ = bg.step_respond(state, {1: False, 2: False}, worked_table,
                               np.random.default_rng(0))
    obs = bg.encode_observation(state, inst, 2)
    changed_rows = [r for r in range(10) if not np.all(obs.actions[r] == -1.0)]
    assert changed_rows == [0]
    # observation matrices are copies: mutating one does not leak
    obs.actions[3, 0] = 9.0
    assert state.actions[3, 0] == -1.0


def test_monotone_history_and_horizon(worked_table):
    rng = np.random.default_rng(7)
    inst = generate_instance(0)
    state = bg.reset(inst, CFG, rng)
    snapshots = [state.actions.copy()]
    respond_phases = 0
    while not state.terminal:
        state = _propose(state, 0b111, worked_table)
        votes = {a: bool(rng.random() < 0.2) for a in range(3) if a != state.proposer}
        state, result = bg.step_respond(state, votes, worked_table, rng)
        respond_phases += 1
        prev, cur = snapshots[-1], state.actions.copy()
        written = prev != -1.0
        assert np.array_equal(prev[written], cur[written])
        snapshots.append(cur)
    assert respond_phases <= CFG.horizon
    assert state.result is not None


def test_discount_monotone_in_round():
    values = [0.99 ** (t - 1) * 0.5 for t in range(1, 11)]
    assert all(a > b for a, b in zip(values, values[1:]))
    result = bg.EpisodeResult(rewards=(0.3, 0.0, 0.0), round=2, coalition=0b011,
                              payoff=(1.0, 0.0, 0.0))
    assert bg.discounted_return(result, 0.99)[0] == pytest.approx(0.297, abs=1e-12)


def test_conservation_sweep():
    rng = np.random.default_rng(5)
    for seed in range(30):
        inst = generate_instance(seed)
        table = build_characteristic_table(inst)
        state = bg.reset(inst, CFG, rng)
        legal = bg.legal_coalitions(state, table)
        if not legal:
            continue
        coalition = sorted(legal)[0]
        state = _propose(state, coalition, table)
        state, result = bg.step_respond(
            state, {a: True for a in range(3) if a != state.proposer}, table, rng
        )
        members_total = sum(result.rewards[i] for i in range(3) if coalition >> i & 1)
        assert members_total == pytest.approx(table.values[coalition], abs=1e-9)
        assert all(
            result.rewards[i] == 0.0 for i in range(3) if not coalition >> i & 1
        )
