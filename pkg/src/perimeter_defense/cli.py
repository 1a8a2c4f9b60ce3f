"""
Command-line entry point: `perimeter-defense <command> ...`.

Every command writes UTF-8, LF-terminated output. Library errors become a
one-line message on stderr and exit status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from perimeter_defense import __version__, config
from perimeter_defense.errors import PerimeterDefenseError
from perimeter_defense.game.breach import BreachInstance, residuals, solve_breach
from perimeter_defense.game.geometry import wrap_angle
from perimeter_defense.game.matching import PayoffMatrix, expert_matching
from perimeter_defense.harness import (
    AggregationConfig,
    ExperimentSpec,
    SweepConfig,
    aggregate_and_train,
    comparative_table,
    run_experiment,
    sample_efficiency_sweep,
    write_metrics_csv,
    write_sweep_csv,
)
from perimeter_defense.learning import (
    HyperParams,
    TrainConfig,
    evaluate,
    generate_dataset,
    init_params,
    load_dataset,
    save_checkpoint,
    save_dataset,
    split,
)
from perimeter_defense.policies import PolicyName, make_policy
from perimeter_defense.sim import GameConfig, run_episode

log = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _policy_list(text: str) -> List[PolicyName]:
    try:
        return [PolicyName(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        choices = ",".join(p.value for p in PolicyName)
        raise argparse.ArgumentTypeError(f"policies must be among {choices}, got {text!r}")


def _print_json(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


# ============================================================================
# Commands
# ============================================================================

def cmd_breach(args: argparse.Namespace) -> int:
    rel = wrap_angle(args.psi)
    inst = BreachInstance(
        psi=abs(rel), phi=args.phi, r=args.r, nu=args.nu, sign=-1 if rel < 0 else 1
    )
    sol = solve_breach(inst, tol=args.tol)
    out: Dict[str, Any] = sol.to_dict()
    if args.check:
        out["residuals"] = list(residuals(inst, sol))
    _print_json(out)
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    try:
        rows = json.loads(Path(args.payoffs).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise PerimeterDefenseError(f"cannot read payoffs from {args.payoffs}: {e}")
    if isinstance(rows, dict):
        rows = rows.get("payoffs", rows)
    _print_json(expert_matching(PayoffMatrix.from_rows(rows)).to_dict())
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = GameConfig.for_team(args.n, seed=args.seed, reassign_period=args.reassign_period)
    policy = make_policy(args.policy, model_path=args.model)
    if args.trace:
        trace_path = Path(args.trace)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with trace_path.open("w", encoding="utf-8", newline="\n") as trace:
            episode = run_episode(cfg, policy, args.seed, trace=trace)
    else:
        episode = run_episode(cfg, policy, args.seed)
    _print_json(episode.model_dump(mode="json", exclude={"snapshots"}))
    return 0


def _default_policies(args: argparse.Namespace) -> List[PolicyName]:
    out = [PolicyName.EXPERT, PolicyName.GREEDY, PolicyName.RANDOM]
    if args.model is not None:
        out.insert(1, PolicyName.GNN)
    if args.mlp_model is not None:
        out.append(PolicyName.MLP)
    return out


def _experiment_spec(args: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        team_sizes=args.sizes,
        policies=args.policies or _default_policies(args),
        trials=args.trials,
        base_seed=args.seed,
        model_path=args.model,
        mlp_model_path=args.mlp_model,
        allow_expensive=args.allow_expensive,
        reassign_period=args.reassign_period,
        workers=args.workers,
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    result = run_experiment(_experiment_spec(args))
    write_metrics_csv(result, args.out)
    log.info("Wrote %d trial records to %s", len(result.records), args.out)

    print(f"{'size':>5} {'policy':<8} {'caught':>8} {'std':>7} {'T_f':>8}")
    for row in result.rows:
        print(
            f"{row.size:>5} {row.policy:<8} {row.mean_fraction:>8.3f} "
            f"{row.std_fraction:>7.3f} {row.mean_terminal_time:>8.2f}"
        )
    for entry in comparative_table(result.rows):
        ratio = "n/a" if entry["ratio"] is None else f"{entry['ratio']:.3f}"
        print(f"gnn/{entry['policy']} at N={entry['size']}: {ratio}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _experiment_spec(args).model_copy(update={"policies": [PolicyName.GNN]})
    sweep = SweepConfig(
        train_size=args.train_size,
        data_seed=args.data_seed,
        train=TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed),
    )
    rows = sample_efficiency_sweep(args.demos, spec, sweep)
    write_sweep_csv(rows, args.out)
    log.info("Wrote %d sweep rows to %s", len(rows), args.out)
    return 0


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = GameConfig.for_team(args.n)
    samples = generate_dataset(args.snapshots, cfg, args.seed, workers=args.workers)
    path = save_dataset(samples, args.out)
    log.info("Saved %d snapshots to %s", len(samples), path)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    samples = load_dataset(args.data)
    data = split(samples, seed=args.seed)
    hyper = HyperParams.mlp_only(seed=args.seed) if args.mlp else HyperParams(seed=args.seed)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed)
    if args.aggregate_rounds and args.mlp:
        raise PerimeterDefenseError("dataset aggregation plays the gnn policy; drop --mlp")
    agg = AggregationConfig(
        rounds=args.aggregate_rounds,
        episodes=args.aggregate_episodes,
        stride=args.aggregate_stride,
        team_size=args.n,
        seed=args.seed,
    )
    result = aggregate_and_train(init_params(args.seed, hyper), data, cfg, agg)
    model = result.model
    first, last = result.histories[0], result.histories[-1]

    out = args.out_model or config.get_model_path("mlp" if args.mlp else "gnn")
    save_checkpoint(model, out)
    test = evaluate(model, data.test)
    _print_json(
        {
            "checkpoint": str(out),
            "initial_val_loss": first.initial_val_loss,
            "final_val_loss": last.final.val_loss if last.final else None,
            "test_loss": test.loss,
            "test_agreement": test.agreement,
            "aggregated_states": result.added,
        }
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("perimeter_defense.api:app", host=args.host, port=args.port)
    return 0


# ============================================================================
# Parser
# ============================================================================

def _add_experiment_args(p: argparse.ArgumentParser, default_sizes: str) -> None:
    p.add_argument("--sizes", type=_int_list, default=_int_list(default_sizes),
                   help="Comma-separated team sizes")
    p.add_argument("--policies", type=_policy_list,
                   help="Comma-separated policies (default: every policy with a model)")
    p.add_argument("--trials", type=int, default=10, help="Paired trials per cell")
    p.add_argument("--seed", type=int, default=0, help="Base seed")
    p.add_argument("--model", type=Path, help="GNN checkpoint")
    p.add_argument("--mlp-model", type=Path, help="MLP checkpoint")
    p.add_argument("--allow-expensive", action="store_true",
                   help="Run the expert above N=10")
    p.add_argument("--reassign-period", type=int, default=1,
                   help="Steps between policy decisions")
    p.add_argument("--workers", type=int, default=1, help="Worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perimeter-defense",
        description="Perimeter defense on a hemispherical dome",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (default PD_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("breach", help="Solve a one-on-one breach game")
    p.add_argument("--psi", type=float, required=True, help="Relative azimuth (rad)")
    p.add_argument("--phi", type=float, required=True, help="Defender elevation (rad)")
    p.add_argument("--r", type=float, required=True, help="Intruder radius in units of R")
    p.add_argument("--nu", type=float, default=config.default_nu(), help="Speed ratio")
    p.add_argument("--tol", type=float, default=config.default_solver_tol())
    p.add_argument("--check", action="store_true", help="Also print governing-equation residuals")
    p.set_defaults(func=cmd_breach)

    p = sub.add_parser("match", help="Expert matching of a payoff matrix")
    p.add_argument("--payoffs", required=True, help="JSON file with a matrix, null = absent")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("simulate", help="Run one episode")
    p.add_argument("--n", type=int, default=config.default_n_def(), help="Team size")
    p.add_argument("--policy", choices=[x.value for x in PolicyName], default="expert")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", type=Path, help="Checkpoint for gnn or mlp")
    p.add_argument("--trace", help="Write a per-step JSONL trace here")
    p.add_argument("--reassign-period", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="Paired trials over team sizes and policies")
    _add_experiment_args(p, "2,4,6,8,10")
    p.add_argument("--out", type=Path, default=config.RESULTS_DIR / "metrics.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="Sample efficiency: train per demo count, evaluate gnn")
    _add_experiment_args(p, "10")
    p.add_argument("--demos", type=_int_list, default=_int_list("1000,10000,100000"))
    p.add_argument("--train-size", type=int, default=config.default_n_def())
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=1500)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--out", type=Path, default=config.RESULTS_DIR / "sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-data", help="Generate expert-labelled snapshots")
    p.add_argument("--snapshots", type=int, required=True)
    p.add_argument("--n", type=int, default=config.default_n_def())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="Output JSONL")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="Train the assignment network by imitation")
    p.add_argument("--data", type=Path, required=True, help="Dataset JSONL")
    p.add_argument("--epochs", type=int, default=1500)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", type=Path, help="Checkpoint path")
    p.add_argument("--mlp", action="store_true", help="Train the graph-free variant")
    p.add_argument("--aggregate-rounds", type=int, default=0,
                   help="Rounds of expert-labelled states visited by the trained gnn")
    p.add_argument("--aggregate-episodes", type=int, default=20, help="Episodes per round")
    p.add_argument("--aggregate-stride", type=int, default=25,
                   help="Keep every k-th decision state of an episode")
    p.add_argument("--n", type=int, default=config.default_n_def(),
                   help="Team size of aggregation episodes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="Serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        logging.basicConfig(
            level=config.log_level(args.log_level),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        func: Callable[[argparse.Namespace], int] = args.func
        return func(args)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(x) for x in first["loc"])
        print(f"error: {e.title}: {where}: {first['msg']}", file=sys.stderr)
        return 1
    except PerimeterDefenseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
