"""Random routing instances and Euclidean geometry services.

An instance is a set of agents, each with one depot and a fixed number of
customers. Customer locations are drawn uniformly over a disk centered at
the owner's depot; the disk radius is shared by all agents of one instance
and drawn uniformly from a configured radius set. Generation is a pure
function of (seed, config).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .exceptions import ConfigurationError

# Depot coordinates for the three-agent setting (held fixed).
DEPOTS_3 = ((-0.2, 0.173), (0.2, 0.173), (0.0, -0.173))

DEFAULT_RADII = (0.3, 0.4, 0.6)


@dataclass(frozen=True)
class Location:
    """A depot or customer; observed as the 4-tuple (x, y, owner, is_depot)."""

    x: float
    y: float
    owner: int
    is_depot: bool

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, float(self.owner), 1.0 if self.is_depot else 0.0)


@dataclass(frozen=True)
class GenerationConfig:
    n_agents: int = 3
    customers_per_agent: int = 3
    radii: tuple[float, ...] = DEFAULT_RADII

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigurationError(f"n_agents must be >= 2, got {self.n_agents}")
        if self.customers_per_agent < 1:
            raise ConfigurationError(
                f"customers_per_agent must be >= 1, got {self.customers_per_agent}"
            )
        if len(self.radii) == 0:
            raise ConfigurationError("radius set must not be empty")
        if any(r <= 0 for r in self.radii):
            raise ConfigurationError(f"radii must all be positive, got {self.radii}")


@dataclass(frozen=True)
class ProblemInstance:
    """Locations are ordered depots first, then customers grouped by owner."""

    seed: int
    radius: float
    n_agents: int
    customers_per_agent: int
    locations: tuple[Location, ...]

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    def depot_index(self, agent: int) -> int:
        return agent

    def customer_indices(self, agent: int) -> tuple[int, ...]:
        """Global location indices of one agent's customers, ascending."""
        start = self.n_agents + agent * self.customers_per_agent
        return tuple(range(start, start + self.customers_per_agent))

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "radius": self.radius,
            "n_agents": self.n_agents,
            "locations": [
                {"x": p.x, "y": p.y, "owner": p.owner, "is_depot": p.is_depot}
                for p in self.locations
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProblemInstance":
        locations = tuple(
            Location(
                x=float(p["x"]),
                y=float(p["y"]),
                owner=int(p["owner"]),
                is_depot=bool(p["is_depot"]),
            )
            for p in d["locations"]
        )
        n_agents = int(d["n_agents"])
        n_customers = len(locations) - n_agents
        if n_customers <= 0 or n_customers % n_agents != 0:
            raise ValueError(f"malformed instance: {len(locations)} locations for {n_agents} agents")
        return cls(
            seed=int(d["seed"]),
            radius=float(d["radius"]),
            n_agents=n_agents,
            customers_per_agent=n_customers // n_agents,
            locations=locations,
        )


def depot_coordinates(n_agents: int) -> tuple[tuple[float, float], ...]:
    """Fixed depot layout: the canonical triangle for 3 agents, a regular
    polygon of circumradius 0.2 otherwise."""
    if n_agents == 3:
        return DEPOTS_3
    return tuple(
        (0.2 * math.cos(2.0 * math.pi * k / n_agents), 0.2 * math.sin(2.0 * math.pi * k / n_agents))
        for k in range(n_agents)
    )


def generate_instance(seed: int, config: GenerationConfig = GenerationConfig()) -> ProblemInstance:
    """Deterministically generate one instance from a seed.

    The disk radius is drawn uniformly from config.radii and shared by all
    agents. Each customer is drawn area-uniformly over the disk of that
    radius centered at the owner's depot (r = R * sqrt(u)).
    """
    rng = np.random.default_rng(seed)
    radius = config.radii[int(rng.integers(len(config.radii)))]
    depots = depot_coordinates(config.n_agents)
    locations = [Location(x=dx, y=dy, owner=a, is_depot=True) for a, (dx, dy) in enumerate(depots)]
    for a, (dx, dy) in enumerate(depots):
        for _ in range(config.customers_per_agent):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            r = radius * math.sqrt(rng.uniform())
            locations.append(
                Location(x=dx + r * math.cos(theta), y=dy + r * math.sin(theta), owner=a, is_depot=False)
            )
    return ProblemInstance(
        seed=seed,
        radius=radius,
        n_agents=config.n_agents,
        customers_per_agent=config.customers_per_agent,
        locations=tuple(locations),
    )


def generate_batch(
    seed: int, count: int, config: GenerationConfig = GenerationConfig()
) -> Iterator[ProblemInstance]:
    """Instances with seeds seed .. seed+count-1, so any one can be rebuilt."""
    for k in range(count):
        yield generate_instance(seed + k, config)


def distance(a: Location, b: Location) -> float:
    """Euclidean distance; the single definition used everywhere."""
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


@lru_cache(maxsize=512)
def distance_matrix(instance: ProblemInstance) -> np.ndarray:
    """Pairwise distance matrix over instance.locations, cached per instance.

    Computed with the same op sequence as distance() so entries match it
    bit for bit. The returned array is read-only (it is shared by callers).
    """
    xy = np.array([(p.x, p.y) for p in instance.locations], dtype=np.float64)
    dx = xy[:, 0][:, None] - xy[:, 0][None, :]
    dy = xy[:, 1][:, None] - xy[:, 1][None, :]
    mat = np.sqrt(dx * dx + dy * dy)
    mat.flags.writeable = False
    return mat


def write_instances(path, instances: Iterable[ProblemInstance]) -> int:
    """Append-free JSONL dump; returns the number of rows written."""
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_json_dict()) + "\n")
            n += 1
    return n


def read_instances(path) -> list[ProblemInstance]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(ProblemInstance.from_json_dict(json.loads(line)))
            except (ValueError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: unparseable instance row: {e}") from e
    return out
