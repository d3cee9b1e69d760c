"""Latent map export: encode a probe grid of states, dump table + plot.

Probe grids:
  planar    every collision-free integer position in the state box
  pendulum  angle x velocity grid; the angle axis wraps
  cartpole  cart position x pole angle grid, velocities zero
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..envs import make_env
from ..envs.planar import POS_MAX, POS_MIN, in_obstacle
from ..model import encode_dataset, load_checkpoint


@dataclass(frozen=True)
class LatentMapExport:
    env: str
    states: np.ndarray          # (n, n_s) probe states
    latents: np.ndarray         # (n, n_z)
    grid_index: np.ndarray      # (n, 2) integer grid coordinates
    grid_shape: tuple[int, int]
    wrap_axis0: bool            # grid axis 0 is an angle (wraps around)


def probe_grid(env_name: str, resolution: int = 24):
    """Returns (states, grid_index, grid_shape, wrap_axis0)."""
    if env_name == "planar":
        side = int(POS_MAX - POS_MIN) + 1
        states, idx = [], []
        for i in range(side):
            for j in range(side):
                p = np.array([POS_MIN + i, POS_MIN + j])
                if not in_obstacle(p):
                    states.append(p)
                    idx.append((i, j))
        return np.array(states), np.array(idx), (side, side), False
    if env_name == "pendulum":
        th = np.linspace(-np.pi, np.pi, resolution, endpoint=False)
        om = np.linspace(-8.0, 8.0, resolution)
        states = np.array([[a, w] for a in th for w in om])
    elif env_name == "cartpole":
        xs = np.linspace(-2.4, 2.4, resolution)
        th = np.linspace(-0.35, 0.35, resolution)
        states = np.array([[x, 0.0, a, 0.0] for x in xs for a in th])
    else:
        raise ValueError(f"unknown env {env_name!r}")
    idx = np.array([(i, j) for i in range(resolution) for j in range(resolution)])
    return states, idx, (resolution, resolution), env_name == "pendulum"


def export_latent_map(ckpt_path: str | Path, env_name: str,
                      resolution: int = 24,
                      out_dir: str | Path | None = None) -> LatentMapExport:
    """Encode the probe grid through a checkpoint's encoder.

    With ``out_dir``, also writes ``latent_map.csv`` (state columns then
    latent columns) and ``latent_map.png`` scatter panels.
    """
    model, cfg, _, _ = load_checkpoint(ckpt_path)
    if cfg.env != env_name:
        raise ValueError(f"checkpoint is for {cfg.env!r}, not {env_name!r}")
    env = make_env(env_name)
    states, idx, shape, wrap = probe_grid(env_name, resolution)
    obs = np.stack([env.observe_isolated(s) for s in states])
    latents = encode_dataset(model, obs)
    export = LatentMapExport(env=env_name, states=states, latents=latents,
                             grid_index=idx, grid_shape=shape, wrap_axis0=wrap)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "latent_map.csv", export)
        _write_plot(out / "latent_map.png", export)
    return export


def _write_csv(path: Path, ex: LatentMapExport) -> None:
    n_s = ex.states.shape[1]
    n_z = ex.latents.shape[1]
    header = ",".join([f"s{k}" for k in range(n_s)] +
                      [f"z{k}" for k in range(n_z)])
    table = np.hstack([ex.states, ex.latents.astype(np.float64)])
    np.savetxt(path, table, fmt="%.8g", delimiter=",", header=header,
               comments="")


def _write_plot(path: Path, ex: LatentMapExport) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n_s = ex.states.shape[1]
    z = ex.latents
    fig, axes = plt.subplots(1, n_s, figsize=(4.5 * n_s, 4), squeeze=False)
    for k, ax in enumerate(axes[0]):
        sc = ax.scatter(z[:, 0], z[:, 1], c=ex.states[:, k], s=8,
                        cmap="viridis")
        ax.set_xlabel("z0")
        ax.set_ylabel("z1")
        ax.set_title(f"colored by s{k}")
        fig.colorbar(sc, ax=ax)
    fig.suptitle(f"{ex.env} latent map")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def nn_consistency(ex: LatentMapExport) -> float:
    """Fraction of probe points whose nearest latent neighbor is also a
    grid neighbor (both indices within 1; axis 0 wraps for angles).

    High values mean the encoder is an embedding of the state manifold
    rather than a scrambled map.
    """
    z = ex.latents.astype(np.float64)
    d2 = ((z[:, None, :] - z[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    nearest = np.argmin(d2, axis=1)
    di = np.abs(ex.grid_index[:, 0] - ex.grid_index[nearest, 0])
    if ex.wrap_axis0:
        di = np.minimum(di, ex.grid_shape[0] - di)
    dj = np.abs(ex.grid_index[:, 1] - ex.grid_index[nearest, 1])
    return float(np.mean((di <= 1) & (dj <= 1)))
