"""Independent PPO training loop for the bargaining game.

Each agent owns its policy and baseline parameters; no gradient ever
touches another agent's blocks. Every batch is played on freshly generated
instances (no instance is ever reused, in training or evaluation) and the
policy is updated once per epoch from its own decisions, with advantages
normalized per batch against the initial-state baseline.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import bargaining
from ..bargaining import GameConfig, Proposal
from ..coalition_value import build_characteristic_table
from ..exceptions import CvrlabError
from ..instance import DEFAULT_RADII, GenerationConfig, generate_instance
from .features import encode_features, feature_length
from .nets import Adam, Params, init_baseline_params, init_policy_params
from .policy import (
    coalition_logp,
    forward_policy,
    greedy_coalition,
    respond_logp,
    sample_coalition,
)
from .ppo import baseline_loss, entropy_coefficient, normalize_advantages, ppo_loss

CHECKPOINT_SCHEMA = 1

# Offset separating evaluation instance seeds from training ones.
EVAL_SEED_OFFSET = 1_000_000_000


@dataclass(frozen=True)
class TrainerConfig:
    epochs: int = 10_000
    batch_size: int = 256
    eval_batch: int = 512
    eval_period: int = 100
    seed: int = 0
    learning_rate: float = 3e-4
    clip_eps: float = 0.2
    value_clip: float = 0.2
    beta0: float = 0.75
    anneal_epochs: int = 10_000
    beta_floor: float = 0.2
    floor_during_anneal: bool = True
    gamma: float = 0.99
    horizon: int = 10
    n_agents: int = 3
    customers_per_agent: int = 3
    radii: tuple[float, ...] = DEFAULT_RADII
    hidden: int = 64

    def __post_init__(self):
        if not 0.0 < self.clip_eps < 1.0:
            raise CvrlabError(f"clip_eps must be in (0, 1), got {self.clip_eps}")
        if self.beta_floor < 0.0 or self.beta_floor > self.beta0:
            raise CvrlabError(
                f"beta_floor must be in [0, beta0={self.beta0}], got {self.beta_floor}"
            )
        if self.epochs < 1 or self.batch_size < 1 or self.anneal_epochs < 1:
            raise CvrlabError("epochs, batch_size and anneal_epochs must be >= 1")

    def game_config(self) -> GameConfig:
        return GameConfig(n_agents=self.n_agents, gamma=self.gamma, horizon=self.horizon)

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            n_agents=self.n_agents,
            customers_per_agent=self.customers_per_agent,
            radii=tuple(self.radii),
        )


@dataclass
class _Decision:
    is_propose: bool
    features: np.ndarray
    coal_action: np.ndarray
    resp_action: float
    old_logp: float
    round: int
    episode: int
    reward_to_go: float = 0.0


@dataclass
class TrainResult:
    checkpoint: dict
    curves: list[dict] = field(default_factory=list)


class LearnedAgent:
    """Bargaining policy backed by trained parameters.

    Greedy mode (default) decodes the most likely action and is
    deterministic; sample mode draws from the heads with a seeded rng.
    """

    def __init__(self, agent: int, params: Params, mode: str = "greedy", seed: int = 0):
        self.agent = agent
        self.params = params
        self.mode = mode
        self.rng = np.random.default_rng(seed)

    def propose(self, obs, table=None):
        x = encode_features(obs)
        out = forward_policy(self.params, x, self.agent)
        if self.mode == "sample":
            mask, _ = sample_coalition(out, self.agent, self.rng)
        else:
            mask, _ = greedy_coalition(out, self.agent)
        n = out.coalition_probs.shape[0]
        return Proposal(coalition=mask, payoff=bargaining.egalitarian_payoff(mask, n))

    def respond(self, obs, proposal, table=None):
        x = encode_features(obs)
        out = forward_policy(self.params, x, self.agent)
        if self.mode == "sample":
            return bool(self.rng.random() < out.respond_prob)
        return out.respond_prob >= 0.5


def _rollout_episode(instance, table, policy_params, game_cfg, value_eps, rng):
    """Play one self-play episode with sampled actions; returns
    (decisions per agent, result, initial features)."""
    n = game_cfg.n_agents
    state = bargaining.reset(instance, game_cfg, rng)
    obs0 = bargaining.encode_observation(state, instance, 0)
    x0 = encode_features(obs0)
    decisions = [[] for _ in range(n)]
    episode_over = False
    result = None
    while not episode_over:
        p = state.proposer
        obs = bargaining.encode_observation(state, instance, p)
        x = encode_features(obs)
        out = forward_policy(policy_params[p], x, p)
        mask, bits = sample_coalition(out, p, rng)
        # log-prob from the same logits the loss recomputes
        h, coal_z, resp_z = _trunk(policy_params[p], x)
        decisions[p].append(
            _Decision(
                is_propose=True,
                features=x,
                coal_action=bits,
                resp_action=0.0,
                old_logp=coalition_logp(coal_z, bits, p),
                round=state.t,
                episode=0,
            )
        )
        if mask.bit_count() >= 2 and table.values[mask] > value_eps:
            proposal = Proposal(
                coalition=mask, payoff=bargaining.egalitarian_payoff(mask, n)
            )
            state = bargaining.step_propose(state, proposal, table, value_eps)
            responses = {}
            for j in range(n):
                if j == p:
                    continue
                obs_j = bargaining.encode_observation(state, instance, j)
                x_j = encode_features(obs_j)
                out_j = forward_policy(policy_params[j], x_j, j)
                accept = bool(rng.random() < out_j.respond_prob)
                _, _, resp_zj = _trunk(policy_params[j], x_j)
                decisions[j].append(
                    _Decision(
                        is_propose=False,
                        features=x_j,
                        coal_action=np.zeros(n),
                        resp_action=1.0 if accept else 0.0,
                        old_logp=respond_logp(resp_zj, 1.0 if accept else 0.0),
                        round=state.t,
                        episode=0,
                    )
                )
                responses[j] = accept
            state, result = bargaining.step_respond(state, responses, table, rng)
        else:
            state, result = bargaining.step_pass(state, rng)
        episode_over = state.terminal
    return decisions, result, x0


def _trunk(params, x):
    from .nets import policy_trunk

    h, coal_z, resp_z = policy_trunk(params, x[None, :])
    return h, coal_z[0], float(resp_z[0])


def _batch_from_decisions(decisions: list[_Decision]) -> dict:
    B = len(decisions)
    feat = np.stack([d.features for d in decisions])
    return {
        "features": feat,
        "is_propose": np.array([d.is_propose for d in decisions], dtype=bool),
        "coal_actions": np.stack([d.coal_action for d in decisions]),
        "resp_actions": np.array([d.resp_action for d in decisions]),
        "old_logp": np.array([d.old_logp for d in decisions]),
        "advantages": np.zeros(B),
    }


def train(config: TrainerConfig, out_dir: str | Path | None = None) -> TrainResult:
    """Run independent PPO; returns the checkpoint and learning-curve rows.

    With out_dir set, writes checkpoint.json and curves.csv there.
    """
    from .. import evalharness  # deferred: evalharness does not need learner

    game_cfg = config.game_config()
    gen_cfg = config.generation_config()
    n = config.n_agents
    feat_dim = feature_length(n, config.customers_per_agent, config.horizon)

    init_rng = np.random.default_rng(config.seed)
    policy_params = [init_policy_params(feat_dim, n, config.hidden, init_rng) for _ in range(n)]
    baseline_params = [init_baseline_params(feat_dim, config.hidden, init_rng) for _ in range(n)]
    policy_opt = [Adam(p, config.learning_rate) for p in policy_params]
    baseline_opt = [Adam(p, config.learning_rate) for p in baseline_params]

    curves: list[dict] = []
    eval_counter = 0
    mean_return = [0.0] * n

    for epoch in range(config.epochs):
        beta = entropy_coefficient(
            epoch,
            beta0=config.beta0,
            anneal_epochs=config.anneal_epochs,
            floor=config.beta_floor,
            floor_during_anneal=config.floor_during_anneal,
        )
        all_decisions: list[list[_Decision]] = [[] for _ in range(n)]
        x0_rows = []
        returns0 = np.zeros((config.batch_size, n))
        for k in range(config.batch_size):
            inst_seed = config.seed + 1 + epoch * config.batch_size + k
            instance = generate_instance(inst_seed, gen_cfg)
            table = build_characteristic_table(instance)
            ep_rng = np.random.default_rng([config.seed, epoch, k])
            decisions, result, x0 = _rollout_episode(
                instance, table, policy_params, game_cfg, game_cfg.value_threshold, ep_rng
            )
            x0_rows.append(x0)
            discounted = bargaining.discounted_return(result, config.gamma)
            returns0[k] = discounted
            for i in range(n):
                for d in decisions[i]:
                    d.episode = k
                    d.reward_to_go = config.gamma ** (result.round - d.round) * result.rewards[i]
                all_decisions[i].extend(decisions[i])

        X0 = np.stack(x0_rows)
        mean_return = [float(returns0[:, i].mean()) for i in range(n)]

        for i in range(n):
            if not all_decisions[i]:
                continue
            from .nets import baseline_forward

            _, v0 = baseline_forward(baseline_params[i], X0)
            batch = _batch_from_decisions(all_decisions[i])
            rtg = np.array([d.reward_to_go for d in all_decisions[i]])
            v0_per_decision = v0[[d.episode for d in all_decisions[i]]]
            batch["advantages"] = normalize_advantages(rtg - v0_per_decision)
            loss, grads, _ = ppo_loss(policy_params[i], batch, i, beta, config.clip_eps)
            if not np.isfinite(loss):
                raise CvrlabError(f"non-finite policy loss at epoch {epoch}, seed {config.seed}")
            policy_opt[i].step(policy_params[i], grads)

            b_loss, b_grads = baseline_loss(
                baseline_params[i], X0, returns0[:, i], v0, config.value_clip
            )
            if not np.isfinite(b_loss):
                raise CvrlabError(f"non-finite baseline loss at epoch {epoch}, seed {config.seed}")
            baseline_opt[i].step(baseline_params[i], b_grads)

        last_epoch = epoch == config.epochs - 1
        if epoch % config.eval_period == 0 or last_epoch:
            eval_seed = config.seed + EVAL_SEED_OFFSET + eval_counter * config.eval_batch
            eval_counter += 1
            agents = [LearnedAgent(i, policy_params[i]) for i in range(n)]
            instances = [
                generate_instance(eval_seed + k, gen_cfg) for k in range(config.eval_batch)
            ]
            report, _ = evalharness.evaluate_policies(agents, instances)
            for i in range(n):
                curves.append(
                    {
                        "epoch": epoch,
                        "agent": i,
                        "accuracy": report.accuracy[i],
                        "rel_gap": report.mean_rel_gap[i],
                        "abs_gap": report.mean_abs_gap[i],
                        "mean_return": mean_return[i],
                        "beta": beta,
                    }
                )

    checkpoint = {
        "schema_version": CHECKPOINT_SCHEMA,
        "config": _config_to_json(config),
        "agents": [
            {
                "policy": _params_to_json(policy_params[i]),
                "baseline": _params_to_json(baseline_params[i]),
            }
            for i in range(n)
        ],
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "checkpoint.json", checkpoint)
        write_curves(out / "curves.csv", curves)
    return TrainResult(checkpoint=checkpoint, curves=curves)


def _config_to_json(config: TrainerConfig) -> dict:
    d = asdict(config)
    d["radii"] = list(d["radii"])
    return d


def _params_to_json(params: Params) -> dict:
    return {
        k: {"shape": list(v.shape), "data": [float(x) for x in v.reshape(-1)]}
        for k, v in params.items()
    }


def _params_from_json(d: dict) -> Params:
    return {
        k: np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
        for k, spec in d.items()
    }


def save_checkpoint(path, checkpoint: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(checkpoint, f)


def load_checkpoint(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        checkpoint = json.load(f)
    if checkpoint.get("schema_version") != CHECKPOINT_SCHEMA:
        raise CvrlabError(
            f"unsupported checkpoint schema {checkpoint.get('schema_version')!r}"
        )
    return checkpoint


def agents_from_checkpoint(checkpoint: dict, mode: str = "greedy", seed: int = 0):
    """One LearnedAgent per seat, parameters restored from a checkpoint."""
    return [
        LearnedAgent(i, _params_from_json(entry["policy"]), mode=mode, seed=seed + i)
        for i, entry in enumerate(checkpoint["agents"])
    ]


def write_curves(path, curves: list[dict]) -> None:
    columns = ["epoch", "agent", "accuracy", "rel_gap", "abs_gap", "mean_return", "beta"]
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in curves:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
