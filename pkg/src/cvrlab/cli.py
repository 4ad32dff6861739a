"""Command-line entry points.

Subcommands: gen | charfn | play | eval | train | oracle-check. Every run
echoes its effective configuration to <out>/config.json; `cvrlab
--from-config <path>` replays a run from that file and reproduces all
non-timing outputs byte for byte. Instance identity is global: the k-th
instance of a run has seed (base seed + k) and can be regenerated alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evalharness, routing
from .agents import HeuristicBot, OracleBot, RandomBot
from .bargaining import GameConfig
from .coalition_value import (
    build_characteristic_table,
    coalition_size,
    global_optimal_coalition,
    is_degenerate,
    optimal_coalition_for,
)
from .exceptions import ConfigurationError, CvrlabError
from .instance import (
    DEFAULT_RADII,
    GenerationConfig,
    ProblemInstance,
    generate_instance,
    read_instances,
    write_instances,
)

DEFAULT_OUT_ROOT_ENV = "CVRLAB_OUT"


def _out_dir(args_out: str | None, command: str, seed: int) -> Path:
    if args_out:
        return Path(args_out)
    root = os.environ.get(DEFAULT_OUT_ROOT_ENV, "runs")
    return Path(root) / f"{command}-{seed}"


def _parse_radii(text: str) -> tuple[float, ...]:
    try:
        radii = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise ConfigurationError(f"bad radii list {text!r}: {e}") from e
    return radii


def _echo_config(out: Path, config: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


def _write_jsonl(path: Path, rows) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
            n += 1
    return n


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------- policies


def make_policies(spec: str, n_agents: int, seed: int, oracle_threshold: float = 0.99):
    """Build one policy per seat from a comma list of bot names.

    Names: heuristic | random | oracle | learned:<checkpoint-path>. A single
    name is replicated across all seats.
    """
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if len(names) == 1:
        names = names * n_agents
    if len(names) != n_agents:
        raise ConfigurationError(f"need 1 or {n_agents} bot names, got {len(names)}: {spec!r}")
    policies = []
    for i, name in enumerate(names):
        if name == "heuristic":
            policies.append(HeuristicBot(i, n_agents))
        elif name == "random":
            policies.append(RandomBot(i, n_agents, seed=seed + i))
        elif name == "oracle":
            policies.append(OracleBot(i, threshold=oracle_threshold))
        elif name.startswith("learned:"):
            from .learner import agents_from_checkpoint, load_checkpoint

            checkpoint = load_checkpoint(name.split(":", 1)[1])
            policies.append(agents_from_checkpoint(checkpoint)[i])
        else:
            raise ConfigurationError(f"unknown bot name {name!r}")
    return policies


# ------------------------------------------------------------- subcommands


def cmd_gen(cfg: dict) -> int:
    out = Path(cfg["out"])
    _echo_config(out, cfg)
    gen_cfg = GenerationConfig(
        n_agents=cfg["n_agents"],
        customers_per_agent=cfg["customers_per_agent"],
        radii=tuple(cfg["radii"]),
    )
    instances = (generate_instance(cfg["seed"] + k, gen_cfg) for k in range(cfg["n"]))
    n = write_instances(out / "instances.jsonl", instances)
    print(f"wrote {n} instances to {out / 'instances.jsonl'}")
    return 0


def _table_payload(instance: ProblemInstance, dump_routes: bool) -> tuple[dict, list[dict]]:
    table = build_characteristic_table(instance)
    n = table.n_agents
    payload = {
        "seed": instance.seed,
        "values": {str(s): table.values[s] for s in range(1 << n)},
        "per_capita": {
            str(s): table.values[s] / coalition_size(s)
            for s in range(1 << n)
            if coalition_size(s) >= 1
        },
        "optimal_per_agent": [optimal_coalition_for(i, table) for i in range(n)],
        "global_optimal": global_optimal_coalition(table),
        "degenerate": is_degenerate(table),
    }
    routes = []
    if dump_routes:
        for s in range(1 << n):
            if coalition_size(s) >= 2:
                sol = routing.solve_mdvrp(s, instance)
                row = sol.to_json_dict(s)
                row["seed"] = instance.seed
                routes.append(row)
    return payload, routes


def _charfn_worker(args) -> tuple[dict, list[dict]]:
    instance_dict, dump_routes = args
    return _table_payload(ProblemInstance.from_json_dict(instance_dict), dump_routes)


def cmd_charfn(cfg: dict) -> int:
    out = Path(cfg["out"])
    _echo_config(out, cfg)
    instances = read_instances(cfg["instances"])
    jobs = [(inst.to_json_dict(), cfg["dump_routes"]) for inst in instances]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_charfn_worker, jobs, chunksize=16))
    else:
        results = [_charfn_worker(j) for j in jobs]
    _write_jsonl(out / "tables.jsonl", (payload for payload, _ in results))
    if cfg["dump_routes"]:
        _write_jsonl(out / "routes.jsonl", (row for _, rows in results for row in rows))
    print(f"wrote {len(results)} characteristic tables to {out / 'tables.jsonl'}")
    return 0


def cmd_play(cfg: dict) -> int:
    out = Path(cfg["out"])
    _echo_config(out, cfg)
    game_cfg = GameConfig(n_agents=cfg["n_agents"], gamma=cfg["gamma"], horizon=cfg["horizon"])
    policies = make_policies(
        cfg["bots"], cfg["n_agents"], cfg["seed"], oracle_threshold=cfg["oracle_threshold"]
    )
    gen_cfg = GenerationConfig(
        n_agents=cfg["n_agents"],
        customers_per_agent=cfg["customers_per_agent"],
        radii=tuple(cfg["radii"]),
    )
    trace: list[dict] | None = [] if cfg["trace"] else None
    stats = evalharness.run_matchup(
        policies, cfg["n"], game_cfg, cfg["seed"], gen_config=gen_cfg, trace=trace
    )
    if trace is not None:
        _write_jsonl(out / "trace.jsonl", trace)
    _write_json(out / "stats.json", stats.to_json_dict())
    print(
        f"played {stats.played} episodes (skipped {stats.skipped_degenerate} degenerate), "
        f"agreement rate {stats.agreement_rate:.3f}"
    )
    return 0


def _eval_table_worker(instance_dict) -> tuple:
    instance = ProblemInstance.from_json_dict(instance_dict)
    table = build_characteristic_table(instance)
    return table.values, table.single_costs


def cmd_eval(cfg: dict) -> int:
    from .coalition_value import CharacteristicTable

    out = Path(cfg["out"])
    _echo_config(out, cfg)
    gen_cfg = GenerationConfig(
        n_agents=cfg["n_agents"],
        customers_per_agent=cfg["customers_per_agent"],
        radii=tuple(cfg["radii"]),
    )
    if cfg.get("instances"):
        instances = read_instances(cfg["instances"])
    else:
        instances = [generate_instance(cfg["seed"] + k, gen_cfg) for k in range(cfg["n"])]
    policies = make_policies(
        cfg["bots"], cfg["n_agents"], cfg["seed"], oracle_threshold=cfg["oracle_threshold"]
    )
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            raw = list(
                pool.map(_eval_table_worker, [i.to_json_dict() for i in instances], chunksize=16)
            )
        tables = [
            CharacteristicTable(
                n_agents=cfg["n_agents"], values=v, single_costs=s, seed=inst.seed
            )
            for (v, s), inst in zip(raw, instances)
        ]
    else:
        tables = [build_characteristic_table(inst) for inst in instances]
    report, rows = evalharness.evaluate_policies(
        policies, instances, gap_mode=cfg["gap_mode"], tables=tables
    )
    _write_json(out / "report.json", report.to_json_dict())
    with open(out / "per_instance.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["seed", "agent", "proposed_mask", "optimal_mask", "phi", "eta", "excluded_reason"]
        )
        for row in rows:
            w.writerow(
                [
                    row["seed"],
                    row["agent"],
                    "" if row["proposed_mask"] is None else row["proposed_mask"],
                    "" if row["optimal_mask"] is None else row["optimal_mask"],
                    "" if row["phi"] is None else repr(row["phi"]),
                    "" if row["eta"] is None else repr(row["eta"]),
                    row["excluded_reason"],
                ]
            )
    print(f"accuracy per agent: {[round(a, 4) for a in report.accuracy]}")
    return 0


def cmd_train(cfg: dict) -> int:
    from .learner import TrainerConfig, train

    out = Path(cfg["out"])
    _echo_config(out, cfg)
    trainer_cfg = TrainerConfig(
        epochs=cfg["epochs"],
        batch_size=cfg["batch"],
        eval_batch=cfg["eval_batch"],
        eval_period=cfg["eval_period"],
        seed=cfg["seed"],
        learning_rate=cfg["lr"],
        clip_eps=cfg["clip_eps"],
        beta0=cfg["beta0"],
        anneal_epochs=cfg["anneal_epochs"],
        beta_floor=cfg["beta_floor"],
        gamma=cfg["gamma"],
        horizon=cfg["horizon"],
        n_agents=cfg["n_agents"],
        customers_per_agent=cfg["customers_per_agent"],
        radii=tuple(cfg["radii"]),
        hidden=cfg["hidden"],
    )
    result = train(trainer_cfg, out_dir=out)
    last = [r for r in result.curves if r["epoch"] == max(c["epoch"] for c in result.curves)]
    print(f"trained {cfg['epochs']} epochs; final eval accuracy "
          f"{[round(r['accuracy'], 4) for r in sorted(last, key=lambda r: r['agent'])]}")
    return 0


def cmd_oracle_check(cfg: dict) -> int:
    rng = np.random.default_rng(cfg["seed"])
    mismatches = 0
    for case in range(cfg["cases"]):
        n_agents = int(rng.integers(2, 4))
        cpa = int(rng.integers(1, 3 if n_agents == 3 else 5))
        gen_cfg = GenerationConfig(
            n_agents=n_agents, customers_per_agent=cpa, radii=tuple(cfg["radii"])
        )
        instance = generate_instance(cfg["seed"] + case, gen_cfg)
        coalition = (1 << n_agents) - 1
        fast = routing.solve_mdvrp(coalition, instance)
        slow = routing.brute_force_oracle(coalition, instance)
        if fast.total_cost != slow.total_cost:
            mismatches += 1
            print(
                f"MISMATCH case {case}: solver {fast.total_cost!r} oracle {slow.total_cost!r}"
            )
    print(f"oracle-check: {cfg['cases'] - mismatches}/{cfg['cases']} cases agree exactly")
    return 0 if mismatches == 0 else 1


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvrlab")
    parser.add_argument(
        "--from-config", metavar="PATH", help="replay a run from an echoed config.json"
    )
    sub = parser.add_subparsers(dest="command")

    def common(p, n_default=100):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n", type=int, default=n_default, help="number of instances")
        p.add_argument("--radii", type=str, default=",".join(str(r) for r in DEFAULT_RADII))
        p.add_argument("--n-agents", type=int, default=3)
        p.add_argument("--customers-per-agent", type=int, default=3)
        p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("gen", help="generate instances to JSONL")
    common(p)

    p = sub.add_parser("charfn", help="brute-force characteristic tables for an instance file")
    p.add_argument("--instances", required=True)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-routes", action="store_true")

    p = sub.add_parser("play", help="simulate bargaining episodes")
    common(p)
    p.add_argument("--bots", type=str, default="heuristic")
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--oracle-threshold", type=float, default=0.99)
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("eval", help="score proposal accuracy and optimality gaps")
    common(p, n_default=512)
    p.add_argument("--instances", type=str, default=None)
    p.add_argument("--bots", type=str, default="oracle")
    p.add_argument("--gap-mode", choices=evalharness.GAP_MODES, default="per-capita")
    p.add_argument("--oracle-threshold", type=float, default=0.99)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("train", help="train the PPO agents")
    common(p, n_default=0)
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--eval-batch", type=int, default=512)
    p.add_argument("--eval-period", type=int, default=100)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--clip-eps", type=float, default=0.2)
    p.add_argument("--beta0", type=float, default=0.75)
    p.add_argument("--anneal-epochs", type=int, default=10_000)
    p.add_argument("--beta-floor", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--hidden", type=int, default=64)

    p = sub.add_parser("oracle-check", help="verify solvers against the permutation oracle")
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radii", type=str, default=",".join(str(r) for r in DEFAULT_RADII))
    p.add_argument("--out", type=str, default=None)

    return parser


_RUNNERS = {
    "gen": cmd_gen,
    "charfn": cmd_charfn,
    "play": cmd_play,
    "eval": cmd_eval,
    "train": cmd_train,
    "oracle-check": cmd_oracle_check,
}


def _config_from_args(args: argparse.Namespace) -> dict:
    cfg = {"command": args.command}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "from_config"):
            continue
        if key == "radii" and isinstance(value, str):
            value = list(_parse_radii(value))
        cfg[key] = value
    if "out" in cfg:
        cfg["out"] = str(_out_dir(cfg["out"], args.command, cfg.get("seed", 0)))
    return cfg


def run_config(cfg: dict) -> int:
    command = cfg.get("command")
    if command not in _RUNNERS:
        raise ConfigurationError(f"unknown command {command!r}")
    return _RUNNERS[command](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_config:
            with open(args.from_config, "r", encoding="utf-8") as f:
                cfg = json.load(f)
            return run_config(cfg)
        if not args.command:
            parser.print_help()
            return 2
        return run_config(_config_from_args(args))
    except (CvrlabError, OSError, ValueError) as e:
        json.dump({"error": type(e).__name__, "message": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
