"""Experiment orchestration: grids, ablations, latent-map export."""

from .ablation import CONDITIONS, run_ablation
from .grid import (
    ExperimentConfig,
    ResultsTable,
    aggregate,
    load_cells,
    run_cell,
    run_cells,
    run_grid,
)
from .maps import LatentMapExport, export_latent_map, nn_consistency, probe_grid
from .tasks import DEFAULT_SETS, load_task_list, save_task_list, task_list

__all__ = [
    "CONDITIONS",
    "DEFAULT_SETS",
    "ExperimentConfig",
    "LatentMapExport",
    "ResultsTable",
    "aggregate",
    "export_latent_map",
    "load_cells",
    "load_task_list",
    "nn_consistency",
    "probe_grid",
    "run_ablation",
    "run_cell",
    "run_cells",
    "run_grid",
    "save_task_list",
    "task_list",
]
