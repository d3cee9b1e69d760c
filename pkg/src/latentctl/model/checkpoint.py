"""Checkpoint IO: model weights + config + training log in one file."""

from __future__ import annotations

from pathlib import Path

import torch

from .networks import LatentDynamicsModel, build_model
from .training import TrainConfig, TrainLog

FORMAT = 1


def save_checkpoint(path: str | Path, model: LatentDynamicsModel,
                    cfg: TrainConfig, log: TrainLog,
                    extra: dict | None = None) -> None:
    payload = {
        "format": FORMAT,
        "config": cfg.to_dict(),
        "state_dict": model.state_dict(),
        "log": log.to_dict(),
        "extra": dict(extra or {}),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | Path):
    """Returns (model, cfg, log, extra)."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("format") != FORMAT:
        raise ValueError(f"{path}: unsupported checkpoint format")
    cfg = TrainConfig.from_dict(payload["config"])
    model = build_model(cfg.env, cfg.scale)
    model.load_state_dict(payload["state_dict"])
    return model, cfg, TrainLog.from_dict(payload["log"]), payload["extra"]
