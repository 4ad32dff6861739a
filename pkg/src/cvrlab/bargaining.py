"""Alternating-offers coalitional bargaining over routing gains.

Each round a uniformly random proposer names a coalition (containing
itself, with strictly positive value) and a payoff split; all other agents
respond. If every member of the proposed coalition accepts, the episode
ends and members receive their share of the coalition's value, undiscounted
and tagged with the agreement round; discounting is a separate pure
operation so the environment stays a plain transition function. If the
horizon expires without agreement, everyone receives 0.

The per-round history is a (horizon, 2n) matrix initialised to -1: columns
[0, n) hold the round's proposed payoff vector, columns [n, 2n) the
responses (the proposer's own cell is recorded as accept). A proposer with
no positive-value coalition available passes: its row stays -1 and the
round advances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coalition_value import CharacteristicTable, coalition_size, members
from .exceptions import ConfigurationError, IllegalActionError, ProtocolError
from .instance import ProblemInstance

PHASE_PROPOSE = "propose"
PHASE_RESPOND = "respond"
PHASE_TERMINAL = "terminal"


@dataclass(frozen=True)
class GameConfig:
    n_agents: int = 3
    gamma: float = 0.99
    horizon: int = 10
    value_threshold: float = 1e-9  # v(S) must exceed this to be proposable

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class Proposal:
    coalition: int
    payoff: tuple[float, ...]


@dataclass(frozen=True)
class EpisodeResult:
    """Raw (undiscounted) per-agent rewards plus the round they were earned."""

    rewards: tuple[float, ...]
    round: int
    coalition: int | None = None
    payoff: tuple[float, ...] | None = None

    @property
    def agreed(self) -> bool:
        return self.coalition is not None


@dataclass
class BargainingState:
    n_agents: int
    horizon: int
    t: int  # 1-based round counter
    proposer: int
    phase: str
    actions: np.ndarray  # (horizon, 2 * n_agents), float64, unwritten cells -1
    pending: Proposal | None = None
    result: EpisodeResult | None = None

    @property
    def terminal(self) -> bool:
        return self.phase == PHASE_TERMINAL


@dataclass(frozen=True)
class Observation:
    """What any agent sees: full location table, round, full history matrix."""

    locations: np.ndarray  # (n_locations, 4) rows of (x, y, owner, is_depot)
    t: int
    actions: np.ndarray  # copy of the state's history matrix
    agent: int


def reset(
    instance: ProblemInstance,
    config: GameConfig,
    rng: np.random.Generator,
    proposer: int | None = None,
) -> BargainingState:
    """Fresh round-1 state; the proposer is drawn uniformly unless forced."""
    if proposer is None:
        proposer = int(rng.integers(config.n_agents))
    actions = np.full((config.horizon, 2 * config.n_agents), -1.0, dtype=np.float64)
    return BargainingState(
        n_agents=config.n_agents,
        horizon=config.horizon,
        t=1,
        proposer=proposer,
        phase=PHASE_PROPOSE,
        actions=actions,
    )


def legal_coalitions(state: BargainingState, table: CharacteristicTable,
                     threshold: float = 1e-9) -> set[int]:
    """Coalitions the current proposer may name: itself a member, value > 0."""
    if state.phase != PHASE_PROPOSE:
        raise ProtocolError(f"legal_coalitions queried in phase {state.phase!r}")
    return {
        s
        for s in range(1 << state.n_agents)
        if s >> state.proposer & 1 and table.values[s] > threshold
    }


def egalitarian_payoff(coalition: int, n_agents: int) -> tuple[float, ...]:
    """Equal shares 1/|S| for members, 0 otherwise; fsum-exact total of 1."""
    k = coalition_size(coalition)
    if k == 0:
        raise IllegalActionError("egalitarian payoff undefined for the empty coalition")
    share = 1.0 / k
    payoff = tuple(share if coalition >> i & 1 else 0.0 for i in range(n_agents))
    assert math.fsum(payoff) == 1.0
    return payoff


def validate_proposal(
    proposal: Proposal,
    proposer: int,
    table: CharacteristicTable,
    threshold: float = 1e-9,
) -> None:
    """Raise IllegalActionError naming the violated predicate, if any."""
    s = proposal.coalition
    n = table.n_agents
    if not 0 < s < (1 << n):
        raise IllegalActionError(f"coalition mask {s} out of range for {n} agents")
    if not s >> proposer & 1:
        raise IllegalActionError(f"proposer {proposer} not a member of coalition {s:#b}")
    if table.values[s] <= threshold:
        raise IllegalActionError(f"coalition {s:#b} has no positive value ({table.values[s]})")
    x = proposal.payoff
    if len(x) != n:
        raise IllegalActionError(f"payoff vector has length {len(x)}, expected {n}")
    if any(not 0.0 <= xi <= 1.0 for xi in x):
        raise IllegalActionError(f"payoff entries outside [0, 1]: {x}")
    if any(xi != 0.0 for i, xi in enumerate(x) if not s >> i & 1):
        raise IllegalActionError(f"nonzero payoff for a non-member: {x}")
    if abs(math.fsum(x) - 1.0) > 1e-9:
        raise IllegalActionError(f"payoff sums to {math.fsum(x)!r}, expected 1")


def step_propose(
    state: BargainingState,
    proposal: Proposal,
    table: CharacteristicTable,
    threshold: float = 1e-9,
) -> BargainingState:
    if state.phase != PHASE_PROPOSE:
        raise ProtocolError(f"step_propose in phase {state.phase!r}")
    validate_proposal(proposal, state.proposer, table, threshold)
    n = state.n_agents
    state.actions[state.t - 1, 0:n] = proposal.payoff
    state.pending = proposal
    state.phase = PHASE_RESPOND
    return state


def step_respond(
    state: BargainingState,
    responses: dict[int, bool],
    table: CharacteristicTable,
    rng: np.random.Generator,
) -> tuple[BargainingState, EpisodeResult | None]:
    """Record all non-proposer responses; terminate or advance the round.

    Acceptance requires every member of the pending coalition to accept
    (the proposer implicitly accepts). Non-member responses are recorded
    but carry no weight.
    """
    if state.phase != PHASE_RESPOND:
        raise ProtocolError(f"step_respond in phase {state.phase!r}")
    n = state.n_agents
    expected = set(range(n)) - {state.proposer}
    if set(responses) != expected:
        raise ProtocolError(
            f"responses must cover exactly the non-proposers {sorted(expected)}, "
            f"got {sorted(responses)}"
        )
    row = state.t - 1
    state.actions[row, n + state.proposer] = 1.0
    for agent, accept in responses.items():
        state.actions[row, n + agent] = 1.0 if accept else 0.0

    proposal = state.pending
    coalition = proposal.coalition
    accepted = all(
        responses[a] for a in members(coalition) if a != state.proposer
    )
    if accepted:
        value = table.values[coalition]
        rewards = tuple(
            value * proposal.payoff[i] if coalition >> i & 1 else 0.0 for i in range(n)
        )
        result = EpisodeResult(
            rewards=rewards, round=state.t, coalition=coalition, payoff=proposal.payoff
        )
        state.phase = PHASE_TERMINAL
        state.pending = None
        state.result = result
        return state, result
    state.pending = None
    return _advance_round(state, rng)


def step_pass(
    state: BargainingState, rng: np.random.Generator
) -> tuple[BargainingState, EpisodeResult | None]:
    """Proposer turn with nothing proposable: row stays -1, round advances."""
    if state.phase != PHASE_PROPOSE:
        raise ProtocolError(f"step_pass in phase {state.phase!r}")
    return _advance_round(state, rng)


def _advance_round(state, rng) -> tuple[BargainingState, EpisodeResult | None]:
    if state.t >= state.horizon:
        result = EpisodeResult(rewards=tuple(0.0 for _ in range(state.n_agents)), round=state.t)
        state.phase = PHASE_TERMINAL
        state.result = result
        return state, result
    state.t += 1
    state.proposer = int(rng.integers(state.n_agents))
    state.phase = PHASE_PROPOSE
    return state, None


def encode_observation(
    state: BargainingState, instance: ProblemInstance, agent: int
) -> Observation:
    locations = np.array([p.as_tuple() for p in instance.locations], dtype=np.float64)
    return Observation(
        locations=locations, t=state.t, actions=state.actions.copy(), agent=agent
    )


def discounted_return(result: EpisodeResult, gamma: float) -> tuple[float, ...]:
    """gamma^(round-1) * raw reward per agent."""
    factor = gamma ** (result.round - 1)
    return tuple(factor * r for r in result.rewards)
