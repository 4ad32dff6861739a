"""Pluggable bargaining policies: heuristic, random, and table-oracle bots.

A policy proposes a coalition (or passes by returning None) and responds
accept/reject to pending proposals. Policies receive the characteristic
table as an optional argument; bots that are not supposed to know coalition
values simply ignore it.
"""

from __future__ import annotations

import abc

import numpy as np

from .bargaining import Observation, Proposal, egalitarian_payoff
from .coalition_value import (
    CharacteristicTable,
    coalition_size,
    coalitions_containing,
    grand_coalition,
    optimal_coalition_for,
    per_capita,
)
from .exceptions import ConfigurationError


class AgentPolicy(abc.ABC):
    """Decision-maker for one bargaining seat."""

    def __init__(self, agent: int):
        self.agent = agent

    @abc.abstractmethod
    def propose(
        self, obs: Observation, table: CharacteristicTable | None = None
    ) -> Proposal | None:
        """A proposal containing self, or None to pass."""

    @abc.abstractmethod
    def respond(
        self,
        obs: Observation,
        proposal: Proposal,
        table: CharacteristicTable | None = None,
    ) -> bool:
        """True to accept the pending proposal."""


class HeuristicBot(AgentPolicy):
    """Always proposes the grand coalition, always accepts.

    A common-payoff baseline: it maximizes total gain (the game is
    superadditive) but ignores whether the grand coalition is actually the
    best deal for anyone.
    """

    def __init__(self, agent: int, n_agents: int = 3):
        super().__init__(agent)
        self.n_agents = n_agents

    def propose(self, obs, table=None):
        full = grand_coalition(self.n_agents)
        return Proposal(coalition=full, payoff=egalitarian_payoff(full, self.n_agents))

    def respond(self, obs, proposal, table=None):
        return True


class RandomBot(AgentPolicy):
    """Proposes uniformly over coalitions containing self with >= 2 members
    (no peeking at values, so the pick may be worthless); always accepts."""

    def __init__(self, agent: int, n_agents: int = 3, seed: int = 0):
        super().__init__(agent)
        self.n_agents = n_agents
        self.rng = np.random.default_rng(seed)
        self._choices = coalitions_containing(agent, n_agents, min_size=2)

    def propose(self, obs, table=None):
        coalition = self._choices[int(self.rng.integers(len(self._choices)))]
        return Proposal(coalition=coalition, payoff=egalitarian_payoff(coalition, self.n_agents))

    def respond(self, obs, proposal, table=None):
        return True


class OracleBot(AgentPolicy):
    """Plays directly from the characteristic table.

    Proposes the coalition maximizing its own per-capita value; passes when
    nothing proposable has positive value. Accepts an offer iff the offered
    value is at least `threshold` times its own optimal per-capita value, a
    one-step patience rule standing in for the continuation value.
    """

    def __init__(self, agent: int, threshold: float = 0.99, value_eps: float = 1e-9):
        super().__init__(agent)
        self.threshold = threshold
        self.value_eps = value_eps

    def propose(self, obs, table=None):
        if table is None:
            raise ConfigurationError("OracleBot.propose requires a characteristic table")
        best = optimal_coalition_for(self.agent, table)
        if table.values[best] <= self.value_eps:
            return None
        return Proposal(coalition=best, payoff=egalitarian_payoff(best, table.n_agents))

    def respond(self, obs, proposal, table=None):
        if table is None:
            raise ConfigurationError("OracleBot.respond requires a characteristic table")
        offered = table.values[proposal.coalition] * proposal.payoff[self.agent]
        best = optimal_coalition_for(self.agent, table)
        target = per_capita(table.values[best], coalition_size(best))
        return offered >= self.threshold * target
