"""Flat feature encoding of bargaining observations.

Replaces an attention encoder with a fixed-length vector: raw location
4-tuples, permutation-invariant per-agent customer aggregates (centroid and
RMS spread), a one-hot round index, and the flattened action history. At a
dozen locations this is enough signal for the policy heads while keeping
the network small enough to verify by finite differences.
"""

from __future__ import annotations

import numpy as np

from ..bargaining import Observation


def feature_length(n_agents: int, customers_per_agent: int, horizon: int) -> int:
    n_locations = n_agents * (1 + customers_per_agent)
    return n_locations * 4 + n_agents * 3 + horizon + horizon * 2 * n_agents


def encode_features(obs: Observation) -> np.ndarray:
    """Deterministic fixed-length vector for one observation."""
    horizon, two_n = obs.actions.shape
    n_agents = two_n // 2
    loc = obs.locations

    blocks = [loc.reshape(-1)]

    owners = loc[:, 2].astype(np.int64)
    is_customer = loc[:, 3] == 0.0
    agg = np.zeros(n_agents * 3, dtype=np.float64)
    for a in range(n_agents):
        pts = loc[is_customer & (owners == a), 0:2]
        cx = pts[:, 0].mean()
        cy = pts[:, 1].mean()
        spread = np.sqrt(((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2).mean())
        agg[3 * a : 3 * a + 3] = (cx, cy, spread)
    blocks.append(agg)

    round_onehot = np.zeros(horizon, dtype=np.float64)
    round_onehot[min(obs.t, horizon) - 1] = 1.0
    blocks.append(round_onehot)

    blocks.append(obs.actions.reshape(-1))
    return np.concatenate(blocks)
