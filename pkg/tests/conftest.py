import numpy as np
import pytest

from cvrlab.coalition_value import CharacteristicTable
from cvrlab.instance import GenerationConfig, Location, ProblemInstance


@pytest.fixture
def worked_table() -> CharacteristicTable:
    """The three-agent table with the worked values v({0,1})=0.76,
    v({0,2})=0.24, v({1,2})=0.01, v(N)=0.88 (agents 0-indexed)."""
    return CharacteristicTable(
        n_agents=3,
        values=(0.0, 0.0, 0.0, 0.76, 0.0, 0.24, 0.01, 0.88),
        single_costs=(1.42, 1.0, 0.93),
    )


@pytest.fixture
def zero_table() -> CharacteristicTable:
    return CharacteristicTable(
        n_agents=3, values=tuple(0.0 for _ in range(8)), single_costs=(1.0, 1.0, 1.0)
    )


@pytest.fixture
def small_gen_config() -> GenerationConfig:
    """3 agents x 2 customers: small enough for the permutation oracle."""
    return GenerationConfig(n_agents=3, customers_per_agent=2)


def line_instance(coords, customers_per_agent=None) -> ProblemInstance:
    """Single-agent instance with depot at coords[0], customers after it."""
    locations = [Location(x=coords[0][0], y=coords[0][1], owner=0, is_depot=True)]
    for (x, y) in coords[1:]:
        locations.append(Location(x=x, y=y, owner=0, is_depot=False))
    return ProblemInstance(
        seed=0,
        radius=1.0,
        n_agents=1,
        customers_per_agent=len(coords) - 1,
        locations=tuple(locations),
    )


def random_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
