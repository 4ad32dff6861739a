"""Coalition-selection metrics, matchup simulation, and degeneracy sweeps.

Accuracy and optimality gaps are measured on first proposals with each
agent rotated into the proposer seat on every instance, which removes
proposer-draw variance. Exclusion rules: degenerate instances (grand
coalition worth nothing) are skipped entirely, and an (instance, agent)
pair is skipped when the globally optimal coalition does not contain the
agent, since no proposal of that agent should ever be accepted there.

The absolute gap of a proposal is measured in per-capita value by default
(matching how the optimal coalition is defined); the literal raw-value
formula is available as gap_mode="raw" and can go negative, which is why it
is not the default.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bargaining import (
    GameConfig,
    encode_observation,
    reset,
    step_pass,
    step_propose,
    step_respond,
)
from .coalition_value import (
    CharacteristicTable,
    build_characteristic_table,
    coalition_size,
    global_optimal_coalition,
    is_degenerate,
    optimal_coalition_for,
    per_capita,
)
from .exceptions import IllegalActionError
from .instance import GenerationConfig, ProblemInstance, generate_instance

GAP_MODES = ("per-capita", "raw")


@dataclass(frozen=True)
class EvalReport:
    gap_mode: str
    n_instances: int
    degenerate_count: int
    accuracy: tuple[float, ...]
    mean_abs_gap: tuple[float, ...]
    mean_rel_gap: tuple[float, ...]
    included: tuple[int, ...]
    excluded_not_in_optimal: tuple[int, ...]
    wall_clock_total_s: float
    wall_clock_per_instance_s: float

    def to_json_dict(self) -> dict:
        return {
            "gap_mode": self.gap_mode,
            "n_instances": self.n_instances,
            "degenerate_count": self.degenerate_count,
            "accuracy": list(self.accuracy),
            "mean_abs_gap": list(self.mean_abs_gap),
            "mean_rel_gap": list(self.mean_rel_gap),
            "included": list(self.included),
            "excluded_not_in_optimal": list(self.excluded_not_in_optimal),
            "wall_clock_total_s": self.wall_clock_total_s,
            "wall_clock_per_instance_s": self.wall_clock_per_instance_s,
        }


def gap_for(
    table: CharacteristicTable, agent: int, proposed: int | None, gap_mode: str = "per-capita"
) -> tuple[float, float]:
    """(absolute, relative) optimality gap of one proposal.

    A pass (proposed None) is treated as proposing nothing of value. In
    per-capita mode both gaps compare the per-member reward; in raw mode
    the coalition values are compared directly (the relative gap then still
    divides by the optimal coalition's raw value).
    """
    best = optimal_coalition_for(agent, table)
    if gap_mode == "per-capita":
        target = per_capita(table.values[best], coalition_size(best))
        got = 0.0 if proposed is None else per_capita(
            table.values[proposed], coalition_size(proposed)
        )
    elif gap_mode == "raw":
        target = table.values[best]
        got = 0.0 if proposed is None else table.values[proposed]
    else:
        raise ValueError(f"unknown gap mode {gap_mode!r}")
    phi = target - got
    eta = phi / target
    return phi, eta


def evaluate_policies(
    policies,
    instances,
    gap_mode: str = "per-capita",
    game_config: GameConfig | None = None,
    tables=None,
) -> tuple[EvalReport, list[dict]]:
    """Score each policy's first proposal on every instance.

    Returns (report, rows): one row per (instance, agent) with keys seed,
    agent, proposed_mask, optimal_mask, phi, eta, excluded_reason.
    """
    t_start = time.perf_counter()
    n = len(policies)
    if game_config is None:
        game_config = GameConfig(n_agents=n)
    correct = [0] * n
    included = [0] * n
    excluded_noopt = [0] * n
    phi_sum = [0.0] * n
    eta_sum = [0.0] * n
    degenerate = 0
    rows: list[dict] = []
    for idx, instance in enumerate(instances):
        table = tables[idx] if tables is not None else build_characteristic_table(instance)
        if is_degenerate(table):
            degenerate += 1
            for i in range(n):
                rows.append(_row(instance.seed, i, None, None, None, None, "degenerate"))
            continue
        global_opt = global_optimal_coalition(table)
        for i in range(n):
            optimal = optimal_coalition_for(i, table)
            if not global_opt >> i & 1:
                excluded_noopt[i] += 1
                rows.append(_row(instance.seed, i, None, optimal, None, None, "not_in_optimal"))
                continue
            pc_best = per_capita(table.values[optimal], coalition_size(optimal))
            if pc_best <= 0.0:
                excluded_noopt[i] += 1
                rows.append(_row(instance.seed, i, None, optimal, None, None, "zero_optimal"))
                continue
            state = reset(instance, game_config, rng=None, proposer=i)
            obs = encode_observation(state, instance, i)
            proposal = policies[i].propose(obs, table)
            proposed = proposal.coalition if proposal is not None else None
            phi, eta = gap_for(table, i, proposed, gap_mode)
            included[i] += 1
            if proposed == optimal:
                correct[i] += 1
            phi_sum[i] += phi
            eta_sum[i] += eta
            rows.append(_row(instance.seed, i, proposed, optimal, phi, eta, ""))
    elapsed = time.perf_counter() - t_start
    n_instances = len(rows) // n if n else 0
    report = EvalReport(
        gap_mode=gap_mode,
        n_instances=n_instances,
        degenerate_count=degenerate,
        accuracy=tuple(correct[i] / included[i] if included[i] else 0.0 for i in range(n)),
        mean_abs_gap=tuple(phi_sum[i] / included[i] if included[i] else 0.0 for i in range(n)),
        mean_rel_gap=tuple(eta_sum[i] / included[i] if included[i] else 0.0 for i in range(n)),
        included=tuple(included),
        excluded_not_in_optimal=tuple(excluded_noopt),
        wall_clock_total_s=elapsed,
        wall_clock_per_instance_s=elapsed / n_instances if n_instances else 0.0,
    )
    return report, rows


def _row(seed, agent, proposed, optimal, phi, eta, reason) -> dict:
    return {
        "seed": seed,
        "agent": agent,
        "proposed_mask": proposed,
        "optimal_mask": optimal,
        "phi": phi,
        "eta": eta,
        "excluded_reason": reason,
    }


def proposal_accuracy(policies, instances, tables=None) -> tuple[float, ...]:
    report, _ = evaluate_policies(policies, instances, tables=tables)
    return report.accuracy


def optimality_gaps(
    policies, instances, gap_mode: str = "per-capita", tables=None
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """(mean absolute gaps, mean relative gaps) per agent."""
    report, _ = evaluate_policies(policies, instances, gap_mode=gap_mode, tables=tables)
    return report.mean_abs_gap, report.mean_rel_gap


def play_episode(
    instance: ProblemInstance,
    table: CharacteristicTable,
    policies,
    config: GameConfig,
    rng: np.random.Generator,
    trace=None,
):
    """Drive one episode to termination; returns the EpisodeResult.

    An illegal or absent proposal becomes a pass (the round is forfeited).
    With trace given, appends one dict per round.
    """
    state = reset(instance, config, rng)
    result = None
    while not state.terminal:
        t, proposer = state.t, state.proposer
        obs = encode_observation(state, instance, proposer)
        proposal = policies[proposer].propose(obs, table)
        acted = None
        if proposal is not None:
            try:
                state = step_propose(state, proposal, table, config.value_threshold)
                acted = proposal
            except IllegalActionError:
                acted = None
        if acted is None:
            state, result = step_pass(state, rng)
            if trace is not None:
                trace.append(
                    {
                        "seed": instance.seed,
                        "t": t,
                        "proposer": proposer,
                        "coalition_mask": None,
                        "payoff": None,
                        "responses": None,
                        "terminal": state.terminal,
                        "rewards": list(result.rewards) if result else None,
                    }
                )
            continue
        responses = {}
        for j in range(config.n_agents):
            if j == proposer:
                continue
            obs_j = encode_observation(state, instance, j)
            responses[j] = bool(policies[j].respond(obs_j, acted, table))
        state, result = step_respond(state, responses, table, rng)
        if trace is not None:
            votes = [1 if (j == proposer or responses[j]) else 0 for j in range(config.n_agents)]
            trace.append(
                {
                    "seed": instance.seed,
                    "t": t,
                    "proposer": proposer,
                    "coalition_mask": acted.coalition,
                    "payoff": list(acted.payoff),
                    "responses": votes,
                    "terminal": state.terminal,
                    "rewards": list(result.rewards) if result else None,
                }
            )
    return state.result


@dataclass(frozen=True)
class MatchupStats:
    played: int
    skipped_degenerate: int
    agreement_rate: float
    mean_agreement_round: float
    mean_discounted_return: tuple[float, ...]
    wall_clock_total_s: float
    wall_clock_per_instance_s: float

    def to_json_dict(self) -> dict:
        return {
            "played": self.played,
            "skipped_degenerate": self.skipped_degenerate,
            "agreement_rate": self.agreement_rate,
            "mean_agreement_round": self.mean_agreement_round,
            "mean_discounted_return": list(self.mean_discounted_return),
            "wall_clock_total_s": self.wall_clock_total_s,
            "wall_clock_per_instance_s": self.wall_clock_per_instance_s,
        }


def run_matchup(
    policies,
    n_instances: int,
    config: GameConfig,
    seed: int,
    gen_config: GenerationConfig | None = None,
    trace=None,
) -> MatchupStats:
    """Simulate episodes on freshly generated instances (seeds seed..).

    Degenerate instances are skipped: no coalition can legally form on
    them, mirroring their exclusion from the selection metrics.
    """
    from .bargaining import discounted_return

    if gen_config is None:
        gen_config = GenerationConfig(n_agents=config.n_agents)
    t_start = time.perf_counter()
    played = 0
    skipped = 0
    agreements = 0
    round_sum = 0
    return_sum = np.zeros(config.n_agents)
    for k in range(n_instances):
        instance = generate_instance(seed + k, gen_config)
        table = build_characteristic_table(instance)
        if is_degenerate(table):
            skipped += 1
            continue
        rng = np.random.default_rng([seed, k])
        result = play_episode(instance, table, policies, config, rng, trace=trace)
        played += 1
        if result.agreed:
            agreements += 1
            round_sum += result.round
        return_sum += np.array(discounted_return(result, config.gamma))
    elapsed = time.perf_counter() - t_start
    return MatchupStats(
        played=played,
        skipped_degenerate=skipped,
        agreement_rate=agreements / played if played else 0.0,
        mean_agreement_round=round_sum / agreements if agreements else 0.0,
        mean_discounted_return=tuple(
            float(v / played) if played else 0.0 for v in return_sum
        ),
        wall_clock_total_s=elapsed,
        wall_clock_per_instance_s=elapsed / n_instances if n_instances else 0.0,
    )


def _degenerate_chunk(args) -> int:
    seed0, count, gen_config = args
    hits = 0
    for k in range(count):
        table = build_characteristic_table(generate_instance(seed0 + k, gen_config))
        if is_degenerate(table):
            hits += 1
    return hits


def degenerate_rate(
    n_instances: int,
    seed: int,
    gen_config: GenerationConfig | None = None,
    workers: int = 1,
    chunk: int = 2048,
) -> float:
    """Fraction of generated instances whose grand coalition is worthless.

    Embarrassingly parallel; the count reduction is order-independent so
    the result does not depend on the worker count.
    """
    if gen_config is None:
        gen_config = GenerationConfig()
    jobs = []
    start = seed
    remaining = n_instances
    while remaining > 0:
        size = min(chunk, remaining)
        jobs.append((start, size, gen_config))
        start += size
        remaining -= size
    if workers <= 1:
        hits = sum(_degenerate_chunk(j) for j in jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(_degenerate_chunk, jobs))
    return hits / n_instances
