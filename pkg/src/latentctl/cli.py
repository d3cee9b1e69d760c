"""Command-line front end.

Verbs: gen-data, train, retrain-f, control, grid, ablate, export-map,
theory-check.  Grid and ablation runs are described by a YAML file whose
keys are the ExperimentConfig fields; everything else takes flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .envs import load_triplets, make_env, sample_triplets, save_triplets
from .harness import (
    ExperimentConfig,
    export_latent_map,
    load_task_list,
    nn_consistency,
    run_ablation,
    run_grid,
    task_list,
)
from .harness.grid import DEFAULT_SAMPLES
from .llc import ControlOptions, execute
from .model import (
    TrainConfig,
    final_metrics,
    load_checkpoint,
    retrain_dynamics,
    save_checkpoint,
    train,
)
from .theory import (
    constant_code_instance,
    counterexample_train,
    injective_instance,
    mi_gap_check,
    random_instance,
)


def _add_train_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--epochs", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--batch-size", type=int, default=256)
    sp.add_argument("--lr", type=float, default=5e-4)
    sp.add_argument("--lam-cpc", type=float, default=1.0)
    sp.add_argument("--lam-cons", type=float, default=1.0)
    sp.add_argument("--lam-curv", type=float, default=7.0)
    sp.add_argument("--sigma", type=float, default=0.1)
    sp.add_argument("--delta", type=float, default=0.01)
    sp.add_argument("--curvature-noise", choices=("variance", "std"),
                    default="variance")
    sp.add_argument("--centering", type=float, default=0.01)
    sp.add_argument("--weight-decay", type=float, default=1e-3)


def _train_config(env: str, args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        env=env, epochs=args.epochs, seed=args.seed, scale=args.scale,
        batch_size=args.batch_size, lr=args.lr, lam_cpc=args.lam_cpc,
        lam_cons=args.lam_cons, lam_curv=args.lam_curv, sigma=args.sigma,
        delta=args.delta, curvature_noise=args.curvature_noise,
        centering=args.centering, weight_decay=args.weight_decay)


def _cmd_gen_data(args) -> int:
    env = make_env(args.env)
    n = args.n if args.n is not None else DEFAULT_SAMPLES[args.env]
    ds = sample_triplets(env, n, args.seed)
    save_triplets(args.out, ds)
    print(f"wrote {n} {args.env} triplets to {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = load_triplets(args.data)
    cfg = _train_config(ds.env, args)
    model, log = train(ds, cfg)
    metrics = final_metrics(model, ds, cfg)
    save_checkpoint(args.out, model, cfg, log, extra={"metrics": metrics})
    print(f"trained {ds.env} for {cfg.epochs} epochs -> {args.out}")
    print("  " + "  ".join(f"{k}={v:.4g}" for k, v in metrics.items()))
    return 0


def _cmd_retrain(args) -> int:
    base, base_cfg, _, _ = load_checkpoint(args.ckpt)
    ds = load_triplets(args.data)
    d = base_cfg.to_dict()
    d.update(epochs=args.epochs, seed=args.seed)
    cfg = TrainConfig.from_dict(d)
    model, log = retrain_dynamics(base, ds, cfg, args.objective)
    metrics = final_metrics(model, ds, cfg)
    save_checkpoint(args.out, model, cfg, log,
                    extra={"metrics": metrics, "retrain": args.objective,
                           "base": str(args.ckpt)})
    print(f"retrained dynamics ({args.objective}) -> {args.out}")
    print("  " + "  ".join(f"{k}={v:.4g}" for k, v in metrics.items()))
    return 0


def _cmd_control(args) -> int:
    model, cfg, _, _ = load_checkpoint(args.ckpt)
    if cfg.env != args.env:
        raise SystemExit(f"checkpoint is for {cfg.env!r}, not {args.env!r}")
    env = make_env(args.env)
    if args.task_file:
        tasks = load_task_list(args.task_file, args.env)
    else:
        tasks = task_list(args.env, args.task_set, args.n_tasks)
    opts = ControlOptions(alpha=args.alpha, beta=args.beta,
                          replan_every=args.replan)
    lines = ["task,percent_in_goal,planned_cost,converged"]
    for j, t in enumerate(tasks):
        rng = np.random.default_rng([args.seed, j])
        res = execute(env, t, model, opts, rng)
        lines.append(f"{t.name},{res.percent_in_goal!r},"
                     f"{res.planned_cost!r},{int(res.converged)}")
        print(f"{t.name}: {res.percent_in_goal:.1f}% in goal"
              + ("" if res.converged else "  [solver hit iteration limit]"))
    Path(args.out).write_text("\n".join(lines) + "\n")
    mean = float(np.mean([float(l.split(',')[1]) for l in lines[1:]]))
    print(f"mean {mean:.2f}% -> {args.out}")
    return 0


def _load_experiment(args) -> ExperimentConfig:
    d = yaml.safe_load(Path(args.config).read_text())
    if not isinstance(d, dict):
        raise SystemExit(f"{args.config}: expected a mapping of config keys")
    if args.out_dir is not None:
        d["out_dir"] = args.out_dir
    if args.workers is not None:
        d["workers"] = args.workers
    if args.master_seed is not None:
        d["master_seed"] = args.master_seed
    return ExperimentConfig.from_dict(d)


def _cmd_grid(args) -> int:
    table = run_grid(_load_experiment(args))
    print(table.to_text(), end="")
    return 0


def _cmd_ablate(args) -> int:
    table = run_ablation(_load_experiment(args))
    print(table.to_text(), end="")
    return 0


def _cmd_export_map(args) -> int:
    ex = export_latent_map(args.ckpt, args.env, args.resolution, args.out)
    print(f"{len(ex.states)} probe points -> {args.out}")
    print(f"nearest-neighbor consistency: {nn_consistency(ex):.3f}")
    return 0


def _cmd_theory(args) -> int:
    report: dict = {"suite": args.suite, "seed": args.seed}
    if args.suite == "migap":
        margins, witness_errs = [], []
        for t in range(args.trials):
            r = mi_gap_check(random_instance(args.seed + t))
            margins.append(r.gap - r.l_star)
            witness_errs.append(abs(r.witness_loss - r.gap))
        inj = mi_gap_check(injective_instance(args.seed))
        const = mi_gap_check(constant_code_instance(args.seed))
        report.update(
            trials=args.trials,
            min_margin=min(margins),
            max_witness_error=max(witness_errs),
            injective_gap=inj.gap,
            constant_gap_minus_mi=const.gap - const.mi_xy,
        )
        passed = (min(margins) >= -1e-9 and max(witness_errs) <= 1e-9
                  and abs(inj.gap) <= 1e-12 and inj.l_star <= 1e-9
                  and abs(const.gap - const.mi_xy) <= 1e-12)
    else:
        div = counterexample_train("cpc_only", args.trials, args.seed)
        fix = counterexample_train("cpc_plus_cons", args.trials, args.seed)
        report.update(steps=args.trials,
                      cpc_only={"eta": div.eta, "sigma": div.sigma},
                      cpc_plus_cons={"eta": fix.eta, "sigma": fix.sigma})
        passed = div.eta > 10.0 and 0.9 <= fix.eta <= 1.1
    report["passed"] = passed
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    print(json.dumps(report, indent=1))
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="latentctl",
        description="Controllable latent embeddings: train, plan, verify.")
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("gen-data", help="sample a transition dataset")
    sp.add_argument("--env", required=True, choices=sorted(DEFAULT_SAMPLES))
    sp.add_argument("--n", type=int, default=None,
                    help="sample count (default: full-scale preset)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_gen_data)

    sp = sub.add_parser("train", help="train encoder + latent dynamics")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    _add_train_flags(sp)
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("retrain-f",
                        help="refit dynamics under a frozen encoder")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--objective", required=True,
                    choices=("cpc_only", "cons_only"))
    sp.add_argument("--epochs", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_retrain)

    sp = sub.add_parser("control", help="plan and execute tasks")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--env", required=True, choices=sorted(DEFAULT_SAMPLES))
    sp.add_argument("--task-file", default=None,
                    help="semicolon CSV: name;horizon;init,...;goal,...")
    sp.add_argument("--task-set", default=None,
                    help="built-in list name (e.g. balance, swingup, nav)")
    sp.add_argument("--n-tasks", type=int, default=10)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--replan", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_control)

    sp = sub.add_parser("grid", help="multi-seed train + evaluate grid")
    sp.add_argument("--config", required=True, help="YAML experiment file")
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--master-seed", type=int, default=None)
    sp.set_defaults(func=_cmd_grid)

    sp = sub.add_parser("ablate", help="objective knockouts + retrain pair")
    sp.add_argument("--config", required=True, help="YAML experiment file")
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--master-seed", type=int, default=None)
    sp.set_defaults(func=_cmd_ablate)

    sp = sub.add_parser("export-map", help="encode a probe grid of states")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--env", required=True, choices=sorted(DEFAULT_SAMPLES))
    sp.add_argument("--resolution", type=int, default=24)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_export_map)

    sp = sub.add_parser("theory-check", help="exact objective-level checks")
    sp.add_argument("--suite", required=True,
                    choices=("migap", "counterexample"))
    sp.add_argument("--trials", type=int, default=100,
                    help="instances (migap) or optimizer steps (counterexample)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_theory)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "control" and bool(args.task_file) == bool(args.task_set):
        raise SystemExit("control: pass exactly one of --task-file/--task-set")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
