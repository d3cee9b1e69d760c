"""Experiment grid: datasets, multi-seed training, control scoring.

Layout under ``out_dir``:

    data/model_00.bin     sampled triplets (shareable via ``data_dir``)
    models/model_00.pt    trained checkpoint, eval metrics in ``extra``
    cells/model_00.json   per-model scores; the resume point
    results.{json,csv,txt}
    manifest.json

A cell file carrying an ``error`` entry is retried on the next run;
complete cells are never recomputed.  Every stream is derived from
``master_seed`` with fixed counters, so cell i sees the same data and
initialization no matter how many models run or in what order, and
ablation conditions sharing a master seed share datasets, init seeds,
and evaluation noise.
"""

from __future__ import annotations

import json
import hashlib
import os
import platform
import traceback
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .. import __version__
from ..envs import load_triplets, make_env, sample_triplets, save_triplets
from ..llc import ControlOptions, execute
from ..model import (
    TrainConfig,
    final_metrics,
    load_checkpoint,
    retrain_dynamics,
    save_checkpoint,
    train,
)
from ..seeding import derive_seed
from .tasks import DEFAULT_SETS, load_task_list, task_list

# training-set sizes for the full-scale preset
DEFAULT_SAMPLES = {"planar": 5000, "pendulum": 20000, "cartpole": 15000}

RETRAIN_NAMES = ("cpc_only", "cons_only")


@dataclass
class ExperimentConfig:
    env: str
    out_dir: str
    name: str = "full"                 # row label in the results table
    tasks: tuple[str, ...] = ()        # task set names; () = env defaults
    n_models: int = 3
    n_tasks: int = 5
    n_samples: int | None = None       # None: full-scale default for env
    epochs: int = 300
    scale: float = 1.0
    batch_size: int = 256
    lr: float = 5e-4
    lam_cpc: float = 1.0
    lam_cons: float = 1.0
    lam_curv: float = 7.0
    sigma: float = 0.1
    delta: float = 0.01
    curvature_noise: str = "variance"
    centering: float = 0.01
    weight_decay: float = 1e-3
    drop_cons: bool = False
    drop_noise: bool = False
    drop_curv: bool = False
    alpha: float = 1.0
    beta: float = 1.0
    replan_every: int = 0
    master_seed: int = 0
    workers: int = 1
    data_dir: str | None = None        # share datasets between conditions
    retrain: str | None = None         # 'cpc_only' | 'cons_only'
    base_dir: str | None = None        # checkpoints to retrain from

    def __post_init__(self):
        if self.env not in DEFAULT_SAMPLES:
            raise ValueError(f"unknown env {self.env!r}")
        if self.n_models < 1 or self.n_tasks < 1:
            raise ValueError("n_models and n_tasks must be positive")
        if self.retrain is not None:
            if self.retrain not in RETRAIN_NAMES:
                raise ValueError(f"retrain must be one of {RETRAIN_NAMES}")
            if self.base_dir is None:
                raise ValueError("retrain requires base_dir")
        self.tasks = tuple(self.tasks) or DEFAULT_SETS[self.env]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tasks"] = list(self.tasks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["tasks"] = tuple(d.get("tasks", ()))
        return cls(**d)

    # --- derived paths and seeds -------------------------------------

    @property
    def samples(self) -> int:
        return self.n_samples if self.n_samples is not None else DEFAULT_SAMPLES[self.env]

    def data_path(self, i: int) -> Path:
        root = Path(self.data_dir) if self.data_dir else Path(self.out_dir) / "data"
        return root / f"model_{i:02d}.bin"

    def model_path(self, i: int) -> Path:
        return Path(self.out_dir) / "models" / f"model_{i:02d}.pt"

    def cell_path(self, i: int) -> Path:
        return Path(self.out_dir) / "cells" / f"model_{i:02d}.json"

    def data_seed(self, i: int) -> int:
        return derive_seed(self.master_seed, 10, i)

    def train_seed(self, i: int) -> int:
        return derive_seed(self.master_seed, 20, i)

    def train_config(self, i: int) -> TrainConfig:
        return TrainConfig(
            env=self.env,
            epochs=self.epochs,
            seed=self.train_seed(i),
            scale=self.scale,
            batch_size=self.batch_size,
            lr=self.lr,
            lam_cpc=self.lam_cpc,
            lam_cons=0.0 if self.drop_cons else self.lam_cons,
            lam_curv=0.0 if self.drop_curv else self.lam_curv,
            sigma=0.0 if self.drop_noise else self.sigma,
            delta=self.delta,
            curvature_noise=self.curvature_noise,
            centering=self.centering,
            weight_decay=self.weight_decay,
        )


def _atomic_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=1) + "\n")
    os.replace(tmp, path)


def _resolve_tasks(cfg: ExperimentConfig, name: str):
    """A task set is either a registered name or ``file:<path>``."""
    if name.startswith("file:"):
        path = Path(name[5:])
        return path.stem, load_task_list(path, cfg.env)[: cfg.n_tasks]
    return name, task_list(cfg.env, name, cfg.n_tasks)


def _cell_dataset(cfg: ExperimentConfig, i: int):
    path = cfg.data_path(i)
    if path.exists():
        ds = load_triplets(path)
        if ds.env != cfg.env or len(ds) != cfg.samples:
            raise ValueError(
                f"{path}: holds {len(ds)} {ds.env!r} records, config wants "
                f"{cfg.samples} {cfg.env!r}; delete it or change data_dir")
        return ds
    env = make_env(cfg.env)
    ds = sample_triplets(env, cfg.samples, cfg.data_seed(i))
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".bin.tmp")
    save_triplets(tmp, ds)
    os.replace(tmp, path)
    return ds


def _cell_model(cfg: ExperimentConfig, i: int, ds):
    path = cfg.model_path(i)
    tc = cfg.train_config(i)
    if path.exists():
        model, saved_cfg, _, extra = load_checkpoint(path)
        if saved_cfg.to_dict() != tc.to_dict():
            raise ValueError(f"{path}: checkpoint config differs from grid config")
        return model, extra["metrics"]
    if cfg.retrain is None:
        model, log = train(ds, tc)
    else:
        base_path = Path(cfg.base_dir) / "models" / f"model_{i:02d}.pt"
        base, _, _, _ = load_checkpoint(base_path)
        model, log = retrain_dynamics(base, ds, tc, cfg.retrain)
    metrics = final_metrics(model, ds, tc)
    save_checkpoint(path, model, tc, log,
                    extra={"metrics": metrics, "model_index": i,
                           "retrain": cfg.retrain})
    return model, metrics


def run_cell(cfg: ExperimentConfig, i: int) -> dict:
    """Train (or load) model i and score it on every task set.

    Returns the cell record and persists it; any exception is captured
    in the record's ``error`` field instead of propagating.
    """
    cell = {
        "model_index": i,
        "data_seed": cfg.data_seed(i),
        "train_seed": cfg.train_seed(i),
        "metrics": None,
        "scores": {},
        "converged": {},
        "error": None,
    }
    try:
        torch.set_num_threads(1)
        ds = _cell_dataset(cfg, i)
        model, metrics = _cell_model(cfg, i, ds)
        cell["metrics"] = {k: float(v) for k, v in metrics.items()}
        opts = ControlOptions(alpha=cfg.alpha, beta=cfg.beta,
                              replan_every=cfg.replan_every)
        env = make_env(cfg.env)
        for set_name in cfg.tasks:
            key, tasks = _resolve_tasks(cfg, set_name)
            scores, conv = [], []
            for j, task in enumerate(tasks):
                rng = np.random.default_rng(
                    [cfg.master_seed, i, zlib.crc32(key.encode()), j])
                res = execute(env, task, model, opts, rng)
                scores.append(float(res.percent_in_goal))
                conv.append(bool(res.converged))
            cell["scores"][key] = scores
            cell["converged"][key] = conv
    except Exception:
        cell["error"] = traceback.format_exc()
    _atomic_json(cfg.cell_path(i), cell)
    return cell


def _cell_worker(args):
    cfg_dict, i = args
    return run_cell(ExperimentConfig.from_dict(cfg_dict), i)


def load_cells(cfg: ExperimentConfig) -> list[dict]:
    """Read persisted cell records, in model order, skipping absent ones."""
    out = []
    for i in range(cfg.n_models):
        path = cfg.cell_path(i)
        if path.exists():
            out.append(json.loads(path.read_text()))
    return out


def _sem(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def aggregate(name: str, cells: list[dict]) -> dict:
    """One results row from per-model cell records.

    Mean and SEM are over per-model task averages; ``top1`` is the model
    with the best task average, its SEM taken across that model's tasks.
    """
    ok = [c for c in cells if c.get("error") is None]
    row = {"name": name, "n_models": len(ok),
           "n_failed": len(cells) - len(ok)}
    if not ok:
        raise RuntimeError(f"{name}: no successful cells to aggregate")
    for key in ("map_size", "cpc", "cons", "curv"):
        vals = np.array([c["metrics"][key] for c in ok])
        row[key] = float(vals.mean())
        row[key + "_sem"] = _sem(vals)
    conv = [flag for c in ok for flags in c["converged"].values() for flag in flags]
    for set_name in ok[0]["scores"]:
        per_model = np.array([np.mean(c["scores"][set_name]) for c in ok])
        best = int(np.argmax(per_model))
        row[f"{set_name}_mean"] = float(per_model.mean())
        row[f"{set_name}_sem"] = _sem(per_model)
        row[f"{set_name}_top1"] = float(per_model[best])
        row[f"{set_name}_top1_sem"] = _sem(np.array(ok[best]["scores"][set_name]))
    row["converged_frac"] = float(np.mean(conv)) if conv else 1.0
    return row


@dataclass
class ResultsTable:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    @classmethod
    def from_rows(cls, rows: list[dict]) -> "ResultsTable":
        cols: list[str] = []
        for r in rows:
            cols += [k for k in r if k not in cols]
        return cls(columns=cols, rows=rows)

    def to_json(self) -> str:
        return json.dumps({"columns": self.columns, "rows": self.rows},
                          indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultsTable":
        d = json.loads(text)
        return cls(columns=d["columns"], rows=d["rows"])

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for r in self.rows:
            lines.append(",".join(_csv_field(r.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        cells = [[_fmt(r.get(c)) for c in self.columns] for r in self.rows]
        widths = []
        for k, name in enumerate(self.columns):
            widths.append(max(len(name), *(len(row[k]) for row in cells))
                          if cells else len(name))
        lines = ["  ".join(c.ljust(w) for c, w in zip(self.columns, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str | Path, stem: str = "results") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(self.to_json())
        (out / f"{stem}.csv").write_text(self.to_csv())
        (out / f"{stem}.txt").write_text(self.to_text())


def _csv_field(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def write_manifest(cfg: ExperimentConfig) -> None:
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    manifest = {
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(cfg_json.encode()).hexdigest(),
        "data_seeds": [cfg.data_seed(i) for i in range(cfg.n_models)],
        "train_seeds": [cfg.train_seed(i) for i in range(cfg.n_models)],
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "torch": torch.__version__,
            "latentctl": __version__,
        },
    }
    _atomic_json(Path(cfg.out_dir) / "manifest.json", manifest)


def run_cells(cfg: ExperimentConfig) -> list[dict]:
    """Ensure every cell of ``cfg`` is complete; return the records.

    Cells whose persisted record is error-free are reused; errored or
    missing cells run (in parallel when ``workers`` > 1).
    """
    write_manifest(cfg)
    done: dict[int, dict] = {}
    for i in range(cfg.n_models):
        path = cfg.cell_path(i)
        if path.exists():
            rec = json.loads(path.read_text())
            if rec.get("error") is None:
                done[i] = rec
    todo = [i for i in range(cfg.n_models) if i not in done]
    if todo:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for rec in pool.map(_cell_worker,
                                    [(cfg.to_dict(), i) for i in todo]):
                    done[rec["model_index"]] = rec
        else:
            for i in todo:
                done[i] = run_cell(cfg, i)
    return [done[i] for i in range(cfg.n_models)]


def run_grid(cfg: ExperimentConfig) -> ResultsTable:
    """Train ``n_models`` models and score each on the shared task lists.

    Resumable: rerunning with the same config and out_dir reuses all
    finished work and reproduces the identical table.
    """
    cells = run_cells(cfg)
    table = ResultsTable.from_rows([aggregate(cfg.name, cells)])
    table.save(cfg.out_dir)
    return table
