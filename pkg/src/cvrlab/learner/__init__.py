"""Desk-scale independent PPO learner for the bargaining game."""

from .features import encode_features, feature_length
from .nets import Adam, init_baseline_params, init_policy_params
from .policy import forward_policy, masked_payoff_softmax
from .ppo import (
    baseline_loss,
    baseline_loss_value,
    entropy_coefficient,
    finite_difference_grads,
    normalize_advantages,
    ppo_loss,
    ppo_loss_value,
)
from .trainer import (
    LearnedAgent,
    TrainerConfig,
    TrainResult,
    agents_from_checkpoint,
    load_checkpoint,
    save_checkpoint,
    train,
    write_curves,
)

__all__ = [
    "encode_features",
    "feature_length",
    "Adam",
    "init_baseline_params",
    "init_policy_params",
    "forward_policy",
    "masked_payoff_softmax",
    "baseline_loss",
    "baseline_loss_value",
    "entropy_coefficient",
    "finite_difference_grads",
    "normalize_advantages",
    "ppo_loss",
    "ppo_loss_value",
    "LearnedAgent",
    "TrainerConfig",
    "TrainResult",
    "agents_from_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "write_curves",
]
