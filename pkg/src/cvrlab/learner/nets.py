"""Minimal hand-rolled networks and optimizer for the bargaining policies.

Parameters are plain dicts of float64 arrays so every block can be checked
against finite differences. tanh activations keep the loss surface smooth
enough for those checks to hold at 1e-4 relative error.
"""

from __future__ import annotations

import numpy as np

Params = dict


def init_policy_params(
    feat_dim: int, n_agents: int, hidden: int, rng: np.random.Generator
) -> Params:
    """Encoder plus three heads: coalition bits, accept/reject, payoff
    (mean, log-std) - the payoff head is inert while the egalitarian mask
    is in force but its parameters exist for future unmasking."""
    return {
        "enc_W": rng.normal(0.0, 1.0 / np.sqrt(feat_dim), size=(feat_dim, hidden)),
        "enc_b": np.zeros(hidden),
        "coal_W": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, n_agents)),
        "coal_b": np.zeros(n_agents),
        "resp_W": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 1)),
        "resp_b": np.zeros(1),
        "prop_W": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 2 * n_agents)),
        "prop_b": np.zeros(2 * n_agents),
    }


def init_baseline_params(feat_dim: int, hidden: int, rng: np.random.Generator) -> Params:
    """Separate network estimating the initial-state value; no parameter
    sharing with the policy."""
    return {
        "W1": rng.normal(0.0, 1.0 / np.sqrt(feat_dim), size=(feat_dim, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 1)),
        "b2": np.zeros(1),
    }


def policy_trunk(params: Params, X: np.ndarray):
    """Hidden representation and raw head outputs for a (B, F) batch."""
    h = np.tanh(X @ params["enc_W"] + params["enc_b"])
    coal_z = h @ params["coal_W"] + params["coal_b"]
    resp_z = (h @ params["resp_W"] + params["resp_b"])[:, 0]
    return h, coal_z, resp_z


def baseline_forward(params: Params, X: np.ndarray):
    h = np.tanh(X @ params["W1"] + params["b1"])
    v = (h @ params["W2"] + params["b2"])[:, 0]
    return h, v


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def softplus(z):
    return np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)


def bernoulli_logp(z, a):
    """log P(a | logit z) for a in {0, 1}, numerically stable."""
    return -(a * softplus(-z) + (1.0 - a) * softplus(z))


def bernoulli_entropy(z):
    p = sigmoid(z)
    return p * softplus(-z) + (1.0 - p) * softplus(z)


class Adam:
    """Standard adaptive-moment optimizer (one state slot per block)."""

    def __init__(self, params: Params, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] = params[k] - self.lr * (self.m[k] / b1c) / (
                np.sqrt(self.v[k] / b2c) + self.eps
            )
