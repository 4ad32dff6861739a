"""Characteristic function of the routing game.

The value of a coalition is its collaboration gain: the sum of the members'
stand-alone tour costs minus the optimal multi-depot cost after pooling
deliveries. Values are 0-normalised (singletons and the empty coalition are
exactly 0, by construction rather than by subtraction), nonnegative, and
superadditive.

Coalitions are plain int bitmasks over agent indices; the helpers here keep
that representation ergonomic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import CvrlabError
from .instance import ProblemInstance
from .routing import mdvrp_cost, solve_single_agent

# v(N) at or below this is treated as exactly zero (degenerate instance).
DEGENERACY_EPS = 1e-9

Coalition = int


def grand_coalition(n_agents: int) -> Coalition:
    return (1 << n_agents) - 1


def members(coalition: Coalition) -> tuple[int, ...]:
    return tuple(a for a in range(coalition.bit_length()) if coalition >> a & 1)


def mask_of(agents) -> Coalition:
    mask = 0
    for a in agents:
        mask |= 1 << a
    return mask


def coalition_size(coalition: Coalition) -> int:
    return coalition.bit_count()


def coalitions_containing(agent: int, n_agents: int, min_size: int = 1) -> list[Coalition]:
    """All coalitions containing `agent`, ascending bitmask order."""
    return [
        s
        for s in range(1 << n_agents)
        if s >> agent & 1 and coalition_size(s) >= min_size
    ]


@dataclass(frozen=True)
class CharacteristicTable:
    """v(S) for every one of the 2^n coalitions, plus stand-alone costs."""

    n_agents: int
    values: tuple[float, ...]  # indexed by coalition bitmask
    single_costs: tuple[float, ...]  # pre-collaboration tour cost per agent
    seed: int | None = None

    def value(self, coalition: Coalition) -> float:
        return self.values[coalition]

    def per_capita_value(self, coalition: Coalition) -> float:
        return per_capita(self.values[coalition], coalition_size(coalition))


def collaboration_gain(coalition: Coalition, instance: ProblemInstance) -> float:
    """Stand-alone costs of the members minus their merged multi-depot cost.

    Exactly 0.0 for coalitions of size <= 1 (0-normalisation is a branch,
    not a subtraction). Never negative: the no-pooling assignment is always
    feasible for the merged problem and its cost reproduces the stand-alone
    sum bit for bit.
    """
    if coalition_size(coalition) <= 1:
        return 0.0
    pre = 0.0
    for a in members(coalition):
        pre += solve_single_agent(a, instance).cost
    return pre - mdvrp_cost(coalition, instance)


def build_characteristic_table(instance: ProblemInstance) -> CharacteristicTable:
    single_costs = tuple(
        solve_single_agent(a, instance).cost for a in range(instance.n_agents)
    )
    values = []
    for s in range(1 << instance.n_agents):
        if coalition_size(s) <= 1:
            values.append(0.0)
        else:
            pre = 0.0
            for a in members(s):
                pre += single_costs[a]
            values.append(pre - mdvrp_cost(s, instance))
    return CharacteristicTable(
        n_agents=instance.n_agents,
        values=tuple(values),
        single_costs=single_costs,
        seed=instance.seed,
    )


def per_capita(value: float, size: int) -> float:
    if size < 1:
        raise CvrlabError(f"per-capita value undefined for coalition size {size}")
    return value / size


def optimal_coalition_for(agent: int, table: CharacteristicTable) -> Coalition:
    """The proposable coalition (size >= 2) containing `agent` with maximal
    per-capita value. Ties break to smaller size, then smaller bitmask.

    Size-1 candidates are excluded: singletons are worth exactly 0 and are
    never proposable, so they cannot be an optimal proposal.
    """
    best, best_key = None, None
    for s in coalitions_containing(agent, table.n_agents, min_size=2):
        pc = per_capita(table.values[s], coalition_size(s))
        key = (-pc, coalition_size(s), s)
        if best_key is None or key < best_key:
            best, best_key = s, key
    return best


def global_optimal_coalition(table: CharacteristicTable) -> Coalition:
    """The size >= 2 coalition with maximal per-capita value, same tie-break."""
    best, best_key = None, None
    for s in range(1 << table.n_agents):
        if coalition_size(s) < 2:
            continue
        pc = per_capita(table.values[s], coalition_size(s))
        key = (-pc, coalition_size(s), s)
        if best_key is None or key < best_key:
            best, best_key = s, key
    return best


def is_degenerate(table: CharacteristicTable) -> bool:
    """True when even the grand coalition gains nothing from collaborating."""
    return table.values[grand_coalition(table.n_agents)] <= DEGENERACY_EPS


def check_table_invariants(table: CharacteristicTable, tol: float = 1e-9) -> list[str]:
    """Violated characteristic-function laws, empty when the table is sound.

    Checks 0-normalisation (exact), nonnegativity, superadditivity over all
    disjoint pairs, and v(N) being the maximum.
    """
    problems = []
    n = table.n_agents
    full = grand_coalition(n)
    if table.values[0] != 0.0:
        problems.append(f"v(empty) = {table.values[0]!r}, expected exactly 0.0")
    for a in range(n):
        if table.values[1 << a] != 0.0:
            problems.append(f"v({{{a}}}) = {table.values[1 << a]!r}, expected exactly 0.0")
    for s in range(1 << n):
        if table.values[s] < 0.0:
            problems.append(f"v({s:#b}) = {table.values[s]} < 0")
    for s in range(1 << n):
        for t in range(1 << n):
            if s & t:
                continue
            if table.values[s | t] < table.values[s] + table.values[t] - tol:
                problems.append(
                    f"superadditivity violated: v({s:#b} | {t:#b}) = {table.values[s | t]}"
                    f" < {table.values[s]} + {table.values[t]}"
                )
    vmax = max(table.values)
    if table.values[full] < vmax - tol:
        problems.append(f"v(N) = {table.values[full]} below max_S v(S) = {vmax}")
    return problems


@dataclass(frozen=True)
class ProfitReport:
    """Human-readable audit in revenue/cost/profit terms.

    Each delivery earns revenue 1 whether or not agents collaborate, so the
    collaboration gain equals the social-welfare difference; this report
    makes that cancellation visible instead of assuming it.
    """

    coalition: Coalition
    revenue: tuple[float, ...]
    pre_cost: tuple[float, ...]
    post_cost: tuple[float, ...]

    @property
    def pre_profit(self) -> tuple[float, ...]:
        return tuple(r - c for r, c in zip(self.revenue, self.pre_cost))

    @property
    def post_profit(self) -> tuple[float, ...]:
        return tuple(r - c for r, c in zip(self.revenue, self.post_cost))

    @property
    def pre_social_welfare(self) -> float:
        sw = 0.0
        for p in self.pre_profit:
            sw += p
        return sw

    @property
    def post_social_welfare(self) -> float:
        sw = 0.0
        for p in self.post_profit:
            sw += p
        return sw

    @property
    def collaboration_gain(self) -> float:
        return self.post_social_welfare - self.pre_social_welfare


def profit_report(coalition: Coalition, instance: ProblemInstance) -> ProfitReport:
    """Pre/post profits when `coalition` pools deliveries and everyone else
    keeps operating alone."""
    from .routing import solve_mdvrp  # local import to keep module load light

    n = instance.n_agents
    revenue = tuple(float(instance.customers_per_agent) for _ in range(n))
    pre_cost = tuple(solve_single_agent(a, instance).cost for a in range(n))
    post = list(pre_cost)
    if coalition_size(coalition) >= 2:
        for a in members(coalition):
            post[a] = 0.0  # members with an idle vehicle incur no cost
        solution = solve_mdvrp(coalition, instance)
        for route in solution.routes:
            post[route.vehicle] = route.cost
    return ProfitReport(
        coalition=coalition, revenue=revenue, pre_cost=pre_cost, post_cost=tuple(post)
    )
