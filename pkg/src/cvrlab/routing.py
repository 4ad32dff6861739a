"""Exact routing solvers.

Two problems are solved exactly:

* single-agent: the optimal closed tour from one agent's depot through all
  of its customers (Held-Karp dynamic programming);
* multi-depot: all customers of a coalition assigned to the members'
  vehicles, each touring from its own depot, minimizing total distance
  (per-vehicle subset DP + assignment scan). A vehicle may stay home at
  zero cost: the underlying flow formulation admits the zero-cost
  depot-to-depot arc, so its "at least one delivery per vehicle" clause is
  vacuous, and measured degeneracy rates confirm solutions with idle
  vehicles were counted as optimal. require_nonempty=True enforces the
  literal clause instead.

brute_force_oracle is an independent verifier: pure permutation and
partition enumeration, no dynamic programming, same leg-summation
convention, so agreement must be exact (bit for bit), not approximate.

Cost convention (shared with the kernels): a route cost accumulates leg
distances left to right; a solution total accumulates route costs left to
right in ascending vehicle order. Ties resolve to the lexicographically
smallest (assignment digits, then visit orders).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import InfeasibleError, SizeLimitError
from .instance import ProblemInstance, distance_matrix

# Held-Karp tables are O(2^m * m); beyond ~20 customers per vehicle they no
# longer fit in desk-scale memory.
MAX_TSP_CUSTOMERS = 20
# Assignment scans enumerate |coalition|^m digit vectors.
MAX_ASSIGNMENTS = 1_000_000
ORACLE_MAX_CUSTOMERS = 8


@dataclass(frozen=True)
class Route:
    vehicle: int
    order: tuple[int, ...]  # customer location indices, visit order
    cost: float


@dataclass(frozen=True)
class RoutingSolution:
    routes: tuple[Route, ...]
    total_cost: float
    solver_id: str

    def route_for(self, vehicle: int) -> Route:
        for r in self.routes:
            if r.vehicle == vehicle:
                return r
        raise KeyError(f"no route for vehicle {vehicle}")

    def to_json_dict(self, coalition: int) -> dict:
        return {
            "coalition": coalition,
            "total_cost": self.total_cost,
            "routes": [
                {"vehicle": r.vehicle, "order": list(r.order), "cost": r.cost} for r in self.routes
            ],
        }


@dataclass(frozen=True)
class CapacityConfig:
    """Vehicle capacity bookkeeping; deliberately non-binding.

    Capacity stays in the data model but is set above total demand so it
    never constrains a route (demand 1 per customer, Q = total + 1).
    """

    vehicle_capacity: float
    customer_demand: float = 1.0

    @classmethod
    def for_instance(cls, instance: ProblemInstance) -> "CapacityConfig":
        total = instance.n_agents * instance.customers_per_agent
        return cls(vehicle_capacity=float(total + 1))

    def binds(self, n_customers_on_route: int) -> bool:
        return n_customers_on_route * self.customer_demand > self.vehicle_capacity


def _members(coalition: int, n_agents: int) -> list[int]:
    return [a for a in range(n_agents) if coalition >> a & 1]


def solve_single_agent(agent: int, instance: ProblemInstance) -> Route:
    """Optimal closed tour of one agent's own customers from its depot."""
    customers = instance.customer_indices(agent)
    if len(customers) == 0:
        raise InfeasibleError(f"agent {agent} has no customers")
    if len(customers) > MAX_TSP_CUSTOMERS:
        raise SizeLimitError(
            f"{len(customers)} customers exceeds the DP bound of {MAX_TSP_CUSTOMERS}"
        )
    dist = distance_matrix(instance)
    cost, order = _kernels.tsp_order(dist, instance.depot_index(agent), customers)
    return Route(vehicle=agent, order=tuple(order), cost=float(cost))


def mdvrp_cost(
    coalition: int, instance: ProblemInstance, require_nonempty: bool = False
) -> float:
    """Optimal multi-depot total cost for a coalition (no route recovery).

    This is the hot path of characteristic-function construction; it shares
    every floating-point operation with solve_mdvrp's total.
    """
    total, _, _, _ = _mdvrp_scan(coalition, instance, require_nonempty)
    return total


def solve_mdvrp(
    coalition: int, instance: ProblemInstance, require_nonempty: bool = False
) -> RoutingSolution:
    """Optimal multi-depot solution; idle vehicles carry no route."""
    total, digits, members, customers = _mdvrp_scan(coalition, instance, require_nonempty)
    dist = distance_matrix(instance)
    routes = []
    for v, agent in enumerate(members):
        subset = [c for j, c in enumerate(customers) if digits[j] == v]
        if not subset:
            continue
        cost, order = _kernels.tsp_order(dist, instance.depot_index(agent), subset)
        routes.append(Route(vehicle=agent, order=tuple(order), cost=float(cost)))
    return RoutingSolution(
        routes=tuple(routes),
        total_cost=float(total),
        solver_id=f"mdvrp-exact({_kernels.backend_name()})",
    )


def _mdvrp_scan(coalition: int, instance: ProblemInstance, require_nonempty: bool = False):
    members = _members(coalition, instance.n_agents)
    if not members:
        raise InfeasibleError("empty coalition")
    customers = [c for a in members for c in instance.customer_indices(a)]
    for a in members:
        if len(instance.customer_indices(a)) == 0:
            raise InfeasibleError(f"coalition member {a} has no customers")
    m = len(customers)
    if m > MAX_TSP_CUSTOMERS:
        raise SizeLimitError(f"{m} coalition customers exceeds the DP bound of {MAX_TSP_CUSTOMERS}")
    if len(members) ** m > MAX_ASSIGNMENTS:
        raise SizeLimitError(
            f"assignment space {len(members)}^{m} exceeds the budget of {MAX_ASSIGNMENTS}"
        )
    dist = distance_matrix(instance)
    tables = np.stack(
        [_kernels.tsp_subset_costs(dist, instance.depot_index(a), customers) for a in members]
    )
    total, digits = _kernels.best_assignment(tables, m, require_nonempty)
    return float(total), digits, members, customers


def _tour_cost(dist: np.ndarray, depot: int, order) -> float:
    """Left-to-right leg sum depot -> order[0] -> ... -> order[-1] -> depot."""
    cost = 0.0
    prev = depot
    for c in order:
        cost += dist[prev, c]
        prev = c
    cost += dist[prev, depot]
    return cost


def brute_force_oracle(
    coalition: int, instance: ProblemInstance, require_nonempty: bool = False
) -> RoutingSolution:
    """Exhaustive verifier: every partition of the customers over the
    member vehicles, every visit permutation. Refuses beyond
    ORACLE_MAX_CUSTOMERS total customers.

    Independent of the DP solvers: per-vehicle subset optima come from raw
    permutation enumeration (memoized per subset within one call).
    """
    members = _members(coalition, instance.n_agents)
    if not members:
        raise InfeasibleError("empty coalition")
    for a in members:
        if len(instance.customer_indices(a)) == 0:
            raise InfeasibleError(f"coalition member {a} has no customers")
    customers = [c for a in members for c in instance.customer_indices(a)]
    m = len(customers)
    if m > ORACLE_MAX_CUSTOMERS:
        raise SizeLimitError(f"oracle refuses {m} > {ORACLE_MAX_CUSTOMERS} customers")
    dist = distance_matrix(instance)
    n_vehicles = len(members)

    # best closed tour of a customer subset by permutation scan; first-found
    # (lexicographic) permutation wins ties
    memo: dict[tuple[int, tuple[int, ...]], tuple[float, tuple[int, ...]]] = {}

    def subset_best(vehicle_pos: int, subset: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
        key = (vehicle_pos, subset)
        if key not in memo:
            depot = instance.depot_index(members[vehicle_pos])
            best_cost, best_order = None, None
            for perm in itertools.permutations(subset):
                c = _tour_cost(dist, depot, perm)
                if best_cost is None or c < best_cost:
                    best_cost, best_order = c, perm
            memo[key] = (best_cost, best_order)
        return memo[key]

    best_total = None
    best_routes = None
    for digits in itertools.product(range(n_vehicles), repeat=m):
        subsets = [tuple(c for j, c in enumerate(customers) if digits[j] == v) for v in range(n_vehicles)]
        if require_nonempty and any(len(s) == 0 for s in subsets):
            continue
        total = 0.0
        routes = []
        for v, subset in enumerate(subsets):
            if not subset:
                total += 0.0
                continue
            cost, order = subset_best(v, subset)
            total += cost
            routes.append(Route(vehicle=members[v], order=order, cost=float(cost)))
        if best_total is None or total < best_total:
            best_total = total
            best_routes = routes
    if best_total is None:
        raise InfeasibleError("no nonempty-vehicle partition exists")
    return RoutingSolution(
        routes=tuple(best_routes), total_cost=float(best_total), solver_id="oracle-permutation"
    )
