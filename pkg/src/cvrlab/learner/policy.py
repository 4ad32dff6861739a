"""Policy heads as distributions, plus the egalitarian payoff masking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import Params, bernoulli_logp, policy_trunk, sigmoid

# Logit assigned to non-members before the payoff softmax; large enough to
# underflow to an exact zero share.
MASK_NEG = -1e9


@dataclass(frozen=True)
class PolicyOutput:
    """Distributions over the three action heads for one observation."""

    coalition_probs: np.ndarray  # (n,), own entry forced to exactly 1
    respond_prob: float
    proposal_mean: np.ndarray  # (n,), inert while the egalitarian mask is on
    proposal_log_std: np.ndarray  # (n,)


def forward_policy(params: Params, features: np.ndarray, own: int) -> PolicyOutput:
    """Head distributions; the proposer's own coalition bit is forced to 1."""
    h, coal_z, resp_z = policy_trunk(params, features[None, :])
    prop = (h @ params["prop_W"] + params["prop_b"])[0]
    if not (
        np.all(np.isfinite(coal_z)) and np.all(np.isfinite(resp_z)) and np.all(np.isfinite(prop))
    ):
        raise FloatingPointError("non-finite policy activations")
    n = coal_z.shape[1]
    probs = sigmoid(coal_z[0])
    probs[own] = 1.0
    return PolicyOutput(
        coalition_probs=probs,
        respond_prob=float(sigmoid(resp_z[0])),
        proposal_mean=prop[:n].copy(),
        proposal_log_std=prop[n:].copy(),
    )


def masked_payoff_softmax(coalition: int, n_agents: int) -> np.ndarray:
    """Softmax over payoff logits masked to the coalition: logit 1 for
    members, a large negative number otherwise. Reproduces the egalitarian
    split exactly (non-member terms underflow to zero)."""
    logits = np.full(n_agents, MASK_NEG, dtype=np.float64)
    for i in range(n_agents):
        if coalition >> i & 1:
            logits[i] = 1.0
    e = np.exp(logits - logits.max())
    return e / e.sum()


def sample_coalition(
    out: PolicyOutput, own: int, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Sample membership bits (own bit always set); returns (mask, bits)."""
    n = out.coalition_probs.shape[0]
    bits = np.zeros(n, dtype=np.float64)
    mask = 0
    for j in range(n):
        take = True if j == own else bool(rng.random() < out.coalition_probs[j])
        if take:
            bits[j] = 1.0
            mask |= 1 << j
    return mask, bits


def greedy_coalition(out: PolicyOutput, own: int) -> tuple[int, np.ndarray]:
    n = out.coalition_probs.shape[0]
    bits = np.zeros(n, dtype=np.float64)
    mask = 0
    for j in range(n):
        take = True if j == own else bool(out.coalition_probs[j] >= 0.5)
        if take:
            bits[j] = 1.0
            mask |= 1 << j
    return mask, bits


def coalition_logp(coal_z_row: np.ndarray, bits: np.ndarray, own: int) -> float:
    """Joint log-probability of the sampled bits, own bit excluded (it is
    deterministic)."""
    lp = bernoulli_logp(coal_z_row, bits)
    return float(lp.sum() - lp[own])


def respond_logp(resp_z: float, action: float) -> float:
    return float(bernoulli_logp(np.float64(resp_z), np.float64(action)))
