"""Clipped-surrogate policy loss, baseline loss, and their exact gradients.

All gradients are hand-derived and covered by central finite-difference
checks in the tests, so any edit here must keep loss and gradient code in
lockstep.
"""

from __future__ import annotations

import numpy as np

from .nets import Params, bernoulli_entropy, bernoulli_logp, sigmoid


def entropy_coefficient(
    epoch: int,
    beta0: float = 0.75,
    anneal_epochs: int = 10_000,
    floor: float = 0.2,
    floor_during_anneal: bool = True,
) -> float:
    """Linear anneal from beta0 toward 0 across anneal_epochs with a floor.

    By default the floor applies throughout the anneal; with
    floor_during_anneal=False the linear schedule runs to 0 unclamped and
    the floor takes over only after the anneal window.
    """
    linear = beta0 * (1.0 - epoch / anneal_epochs)
    if floor_during_anneal:
        return max(linear, floor)
    if epoch >= anneal_epochs:
        return floor
    return max(linear, 0.0)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance per batch; a constant batch maps to zeros."""
    if adv.size == 0:
        return adv
    centered = adv - adv.mean()
    std = adv.std()
    if std < 1e-12:
        return np.zeros_like(adv)
    return centered / std


def _decision_logp_entropy(batch: dict, coal_z: np.ndarray, resp_z: np.ndarray, own: int):
    """(B,) log-probs and entropies, routed per decision kind."""
    is_prop = batch["is_propose"]
    coal_a = batch["coal_actions"]
    resp_a = batch["resp_actions"]

    lp_items = bernoulli_logp(coal_z, coal_a)
    lp_coal = lp_items.sum(axis=1) - lp_items[:, own]
    h_items = bernoulli_entropy(coal_z)
    h_coal = h_items.sum(axis=1) - h_items[:, own]

    lp_resp = bernoulli_logp(resp_z, resp_a)
    h_resp = bernoulli_entropy(resp_z)

    logp = np.where(is_prop, lp_coal, lp_resp)
    entropy = np.where(is_prop, h_coal, h_resp)
    return logp, entropy


def ppo_loss(
    params: Params, batch: dict, own: int, beta: float, clip_eps: float
) -> tuple[float, Params, dict]:
    """Negative clipped surrogate minus the entropy bonus, batch-averaged.

    batch holds: features (B, F), is_propose (B,) bool, coal_actions (B, n),
    resp_actions (B,), old_logp (B,), advantages (B,) already normalized.
    Returns (loss, gradients, stats).
    """
    X = batch["features"]
    adv = batch["advantages"]
    old_logp = batch["old_logp"]
    B = X.shape[0]

    h = np.tanh(X @ params["enc_W"] + params["enc_b"])
    coal_z = h @ params["coal_W"] + params["coal_b"]
    resp_z = (h @ params["resp_W"] + params["resp_b"])[:, 0]

    logp, entropy = _decision_logp_entropy(batch, coal_z, resp_z, own)
    ratio = np.exp(logp - old_logp)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    objective = np.minimum(unclipped, clipped) + beta * entropy
    loss = -objective.mean()
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite policy loss")

    # d objective / d logp: the surrogate contributes ratio*adv wherever the
    # unclipped branch is active (ties included); outside the clip band the
    # clipped branch is constant in theta.
    dobj_dlogp = np.where(unclipped <= clipped, ratio * adv, 0.0)

    is_prop = batch["is_propose"]
    coal_p = sigmoid(coal_z)
    resp_p = sigmoid(resp_z)

    dz_coal = np.zeros_like(coal_z)
    rows = is_prop
    dlogp_dz = batch["coal_actions"] - coal_p  # (B, n)
    dent_dz = -coal_z * coal_p * (1.0 - coal_p)
    dz_coal[rows] = dobj_dlogp[rows, None] * dlogp_dz[rows] + beta * dent_dz[rows]
    dz_coal[:, own] = 0.0
    dz_coal *= -1.0 / B

    dz_resp = np.zeros_like(resp_z)
    rows = ~is_prop
    dz_resp[rows] = dobj_dlogp[rows] * (batch["resp_actions"][rows] - resp_p[rows]) + beta * (
        -resp_z[rows] * resp_p[rows] * (1.0 - resp_p[rows])
    )
    dz_resp *= -1.0 / B

    dh = dz_coal @ params["coal_W"].T + dz_resp[:, None] @ params["resp_W"].T
    dpre = dh * (1.0 - h * h)
    grads = {
        "enc_W": X.T @ dpre,
        "enc_b": dpre.sum(axis=0),
        "coal_W": h.T @ dz_coal,
        "coal_b": dz_coal.sum(axis=0),
        "resp_W": h.T @ dz_resp[:, None],
        "resp_b": dz_resp.sum(axis=0, keepdims=True)[0:1],
        "prop_W": np.zeros_like(params["prop_W"]),
        "prop_b": np.zeros_like(params["prop_b"]),
    }
    stats = {
        "loss": float(loss),
        "mean_ratio": float(ratio.mean()),
        "mean_entropy": float(entropy.mean()),
        "clip_fraction": float((unclipped > clipped).mean()),
    }
    return float(loss), grads, stats


def ppo_loss_value(params: Params, batch: dict, own: int, beta: float, clip_eps: float) -> float:
    """Loss only, for finite-difference checking."""
    X = batch["features"]
    h = np.tanh(X @ params["enc_W"] + params["enc_b"])
    coal_z = h @ params["coal_W"] + params["coal_b"]
    resp_z = (h @ params["resp_W"] + params["resp_b"])[:, 0]
    logp, entropy = _decision_logp_entropy(batch, coal_z, resp_z, own)
    ratio = np.exp(logp - batch["old_logp"])
    unclipped = ratio * batch["advantages"]
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * batch["advantages"]
    return float(-(np.minimum(unclipped, clipped) + beta * entropy).mean())


def baseline_loss(
    params: Params, X: np.ndarray, returns: np.ndarray, old_pred: np.ndarray, clip_eps: float
) -> tuple[float, Params]:
    """Clipped mean squared error against realized discounted returns.

    The prediction is clipped to stay within clip_eps of its rollout-time
    value and the worse of the clipped/unclipped squared errors is taken,
    mirroring the surrogate clipping on the policy side.
    """
    h = np.tanh(X @ params["W1"] + params["b1"])
    v = (h @ params["W2"] + params["b2"])[:, 0]
    v_clip = old_pred + np.clip(v - old_pred, -clip_eps, clip_eps)
    err = (v - returns) ** 2
    err_clip = (v_clip - returns) ** 2
    loss = np.maximum(err, err_clip).mean()
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite baseline loss")

    B = X.shape[0]
    use_raw = err >= err_clip
    dv = np.where(
        use_raw,
        2.0 * (v - returns),
        2.0 * (v_clip - returns) * (np.abs(v - old_pred) < clip_eps),
    ) / B
    dh = dv[:, None] @ params["W2"].T
    dpre = dh * (1.0 - h * h)
    grads = {
        "W1": X.T @ dpre,
        "b1": dpre.sum(axis=0),
        "W2": h.T @ dv[:, None],
        "b2": np.array([dv.sum()]),
    }
    return float(loss), grads


def baseline_loss_value(
    params: Params, X: np.ndarray, returns: np.ndarray, old_pred: np.ndarray, clip_eps: float
) -> float:
    h = np.tanh(X @ params["W1"] + params["b1"])
    v = (h @ params["W2"] + params["b2"])[:, 0]
    v_clip = old_pred + np.clip(v - old_pred, -clip_eps, clip_eps)
    return float(np.maximum((v - returns) ** 2, (v_clip - returns) ** 2).mean())


def finite_difference_grads(loss_fn, params: Params, eps: float = 1e-6) -> Params:
    """Central-difference gradients of loss_fn(params) per parameter block."""
    grads = {}
    for key, value in params.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn(params)
            flat[i] = orig - eps
            lo = loss_fn(params)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * eps)
        grads[key] = g
    return grads
