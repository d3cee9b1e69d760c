"""Ablation sweep: objective-term knockouts plus frozen-encoder retrains.

All conditions share the base config's master seed, so they see the
same datasets, the same initialization streams, and the same evaluation
noise; rows differ only through the objective.
"""

from __future__ import annotations

from pathlib import Path

from .grid import (
    RETRAIN_NAMES,
    ExperimentConfig,
    ResultsTable,
    aggregate,
    run_cells,
    write_manifest,
)

# knockout name -> ExperimentConfig flag overrides
CONDITIONS = (
    ("full", {}),
    ("wo_cons_noise", {"drop_cons": True, "drop_noise": True}),
    ("wo_cons", {"drop_cons": True}),
    ("wo_noise", {"drop_noise": True}),
    ("wo_curv", {"drop_curv": True}),
)


def _condition_config(cfg: ExperimentConfig, name: str, data_dir: str,
                      **overrides) -> ExperimentConfig:
    d = cfg.to_dict()
    d.update(name=name, out_dir=str(Path(cfg.out_dir) / name),
             data_dir=data_dir, drop_cons=False, drop_noise=False,
             drop_curv=False, retrain=None, base_dir=None)
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


def run_ablation(cfg: ExperimentConfig) -> ResultsTable:
    """Run the five knockout conditions and the two dynamics retrains.

    ``cfg`` describes the full model; its drop flags are ignored.  Each
    condition lives in its own subdirectory of ``cfg.out_dir`` and is
    resumable independently.  Retrains reuse the full condition's
    checkpoints, so those rows run last.
    """
    root = Path(cfg.out_dir)
    data_dir = cfg.data_dir or str(root / "data")
    write_manifest(cfg)

    rows = []
    for name, flags in CONDITIONS:
        sub = _condition_config(cfg, name, data_dir, **flags)
        rows.append(aggregate(name, run_cells(sub)))
    for objective in RETRAIN_NAMES:
        name = f"retrain_{objective}"
        sub = _condition_config(cfg, name, data_dir, retrain=objective,
                                base_dir=str(root / "full"))
        rows.append(aggregate(name, run_cells(sub)))

    table = ResultsTable.from_rows(rows)
    table.save(root)
    return table
