"""Training loops for the latent model.

Runs single-threaded with derived per-purpose RNG streams, so a given
(dataset, config) pair reproduces bit-identically: same parameters,
same per-epoch log.  Per-step noise draw order is fixed: target noise
eps first, then the curvature perturbation eta.

Two invariants are enforced during training: cpc <= ln(batch size) on
every step (an algebraic identity of the contrastive form, so any
violation is an implementation fault), and, while target noise is
active, recorded epoch-mean cons <= -(n_z/2) ln(2 pi e sigma^2) + 1e-6
(an expectation bound; single batches may straddle it, recorded means
must not).
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from ..envs.dataset import TripletDataset
from ..seeding import derive_seed
from .losses import (
    LatentBatch,
    consistency_bound,
    curvature_loss,
    info_nce,
    total_objective,
)
from .networks import (
    LatentDynamicsModel,
    build_model,
    calibrate_dynamics_scales,
    calibrate_scales,
    init_weights,
)

RETRAIN_OBJECTIVES = ("cpc_only", "cons_only")
INIT_PROBE_ROWS = 1024


@dataclass
class TrainConfig:
    env: str
    epochs: int
    seed: int = 0
    scale: float = 1.0            # hidden-width multiplier for desk runs
    batch_size: int = 256
    lr: float = 5e-4
    lam_cpc: float = 1.0
    lam_cons: float = 1.0
    lam_curv: float = 7.0
    sigma: float = 0.1            # target noise std; 0 disables the noise
    delta: float = 0.01           # curvature perturbation size
    curvature_noise: str = "variance"  # eta ~ N(0, delta I) | "std": N(0, delta^2 I)
    centering: float = 0.01
    weight_decay: float = 1e-3

    def __post_init__(self):
        if self.curvature_noise not in ("variance", "std"):
            raise ValueError("curvature_noise must be 'variance' or 'std'")

    @property
    def eta_std(self) -> float:
        return math.sqrt(self.delta) if self.curvature_noise == "variance" else self.delta

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class TrainLog:
    """Per-epoch means of the objective parts (floats, exact-comparable)."""

    cpc: list = field(default_factory=list)
    cons: list = field(default_factory=list)
    curv: list = field(default_factory=list)
    center: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    map_size: list = field(default_factory=list)

    def append(self, **kw):
        for key, val in kw.items():
            getattr(self, key).append(float(val))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainLog":
        return cls(**{k: list(v) for k, v in d.items()})

    def __len__(self):
        return len(self.objective)


class InvariantViolation(RuntimeError):
    pass


def _objective_weights(cfg: TrainConfig) -> dict:
    return dict(lam_cpc=cfg.lam_cpc, lam_cons=cfg.lam_cons, lam_curv=cfg.lam_curv,
                centering=cfg.centering, weight_decay=cfg.weight_decay)


def _run_loop(model: LatentDynamicsModel, cfg: TrainConfig, n: int,
              batch_latents, gen: torch.Generator,
              shuffle_rng: np.random.Generator) -> TrainLog:
    """Shared epoch/step loop.  ``batch_latents(idx)`` returns the
    (z, u, z_next) tensors for the given record indices."""
    params = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.Adam(params, lr=cfg.lr, betas=(0.9, 0.999), eps=1e-8)
    weights = _objective_weights(cfg)
    n_z, n_u = model.n_z, model.n_u
    cons_limit = consistency_bound(n_z, cfg.sigma)
    batch = min(cfg.batch_size, n)
    steps = n // batch
    if steps == 0:
        raise ValueError("dataset is empty")
    log = TrainLog()

    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        sums = {"cpc": 0.0, "cons": 0.0, "curv": 0.0, "center": 0.0,
                "objective": 0.0, "map_size": 0.0}
        for k in range(steps):
            idx = perm[k * batch:(k + 1) * batch]
            z, u, z_next = batch_latents(idx)
            eps = torch.randn(batch, n_z, generator=gen) * cfg.sigma
            eta = torch.randn(batch, n_z + n_u, generator=gen) * cfg.eta_std
            lb = LatentBatch(z=z, u=u, z_next=z_next, eps=eps, eta=eta)
            objective, parts = total_objective(model, lb, **weights)

            cpc = parts["cpc"].item()
            if cpc > math.log(batch) + 1e-6:
                raise InvariantViolation(
                    f"epoch {epoch} step {k}: cpc={cpc:.8f} > ln K={math.log(batch):.8f}")
            cons = parts["cons"].item()

            opt.zero_grad(set_to_none=True)
            (-objective).backward()
            opt.step()

            sums["cpc"] += cpc
            sums["cons"] += cons
            sums["curv"] += parts["curv"].item()
            sums["center"] += parts["center"].item()
            sums["objective"] += objective.item()
            sums["map_size"] += float(z.detach().pow(2).sum(-1).mean())
        means = {key: val / steps for key, val in sums.items()}
        if cfg.sigma > 0.0 and means["cons"] > cons_limit + 1e-6:
            raise InvariantViolation(
                f"epoch {epoch}: mean cons={means['cons']:.8f} "
                f"> bound={cons_limit:.8f}")
        log.append(**means)
    return log


def build_initialized(dataset: TripletDataset, cfg: TrainConfig) -> LatentDynamicsModel:
    """The model exactly as ``train`` starts from: built under the derived
    init seed, orthogonally initialized, activation scales calibrated on
    the leading dataset rows."""
    torch.manual_seed(derive_seed(cfg.seed, 0))
    model = build_model(cfg.env, cfg.scale)
    init_weights(model)
    rows = min(INIT_PROBE_ROWS, len(dataset))
    x_probe = torch.from_numpy(np.ascontiguousarray(dataset.x[:rows],
                                                    dtype=np.float32))
    u_probe = torch.from_numpy(np.ascontiguousarray(dataset.u[:rows],
                                                    dtype=np.float32))
    calibrate_scales(model, x_probe, u_probe)
    return model


def train(dataset: TripletDataset, cfg: TrainConfig):
    """Train encoder + dynamics from scratch. Returns (model, log)."""
    if dataset.env != cfg.env:
        raise ValueError(f"dataset is for {dataset.env!r}, config for {cfg.env!r}")
    torch.set_num_threads(1)
    model = build_initialized(dataset, cfg)
    gen = torch.Generator().manual_seed(derive_seed(cfg.seed, 1))
    shuffle_rng = np.random.default_rng([cfg.seed, 2])

    x = torch.from_numpy(np.ascontiguousarray(dataset.x, dtype=np.float32))
    u = torch.from_numpy(np.ascontiguousarray(dataset.u, dtype=np.float32))
    x_next = torch.from_numpy(np.ascontiguousarray(dataset.x_next, dtype=np.float32))

    def batch_latents(idx):
        sel = torch.from_numpy(np.ascontiguousarray(idx))
        both = torch.cat([x[sel], x_next[sel]])
        enc = model.encode(both)
        return enc[:len(idx)], u[sel], enc[len(idx):]

    log = _run_loop(model, cfg, len(dataset), batch_latents, gen, shuffle_rng)
    return model, log


def retrain_dynamics(base: LatentDynamicsModel, dataset: TripletDataset,
                     cfg: TrainConfig, objective: str):
    """Freeze the encoder of ``base``, reinitialize the latent dynamics
    (mean network and log-variance), and train them alone.

    ``objective`` selects the prediction term: 'cpc_only' keeps the
    contrastive term and drops consistency; 'cons_only' the reverse.
    Curvature, target noise, and weight decay (over the trainable
    parameters) stay active.  Returns (new model, log); ``base`` is not
    modified and the returned encoder is bit-identical to it.
    """
    if objective not in RETRAIN_OBJECTIVES:
        raise ValueError(f"objective must be one of {RETRAIN_OBJECTIVES}")
    torch.set_num_threads(1)
    model = copy.deepcopy(base)
    for p in model.encoder.parameters():
        p.requires_grad_(False)

    torch.manual_seed(derive_seed(cfg.seed, 3))
    fresh = build_model(cfg.env, cfg.scale)
    init_weights(fresh)
    model.dynamics = fresh.dynamics
    model.log_var = fresh.log_var

    sel_cfg = copy.copy(cfg)
    if objective == "cpc_only":
        sel_cfg.lam_cons = 0.0
    else:
        sel_cfg.lam_cpc = 0.0

    z_all = torch.from_numpy(encode_dataset(model, dataset.x))
    z_next_all = torch.from_numpy(encode_dataset(model, dataset.x_next))
    u_all = torch.from_numpy(np.ascontiguousarray(dataset.u, dtype=np.float32))
    rows = min(INIT_PROBE_ROWS, len(dataset))
    calibrate_dynamics_scales(model, z_all[:rows], u_all[:rows])

    def batch_latents(idx):
        sel = torch.from_numpy(np.ascontiguousarray(idx))
        return z_all[sel], u_all[sel], z_next_all[sel]

    gen = torch.Generator().manual_seed(derive_seed(cfg.seed, 4))
    shuffle_rng = np.random.default_rng([cfg.seed, 5])
    log = _run_loop(model, sel_cfg, len(dataset), batch_latents, gen, shuffle_rng)
    return model, log


def encode_dataset(model: LatentDynamicsModel, x: np.ndarray,
                   chunk: int = 512) -> np.ndarray:
    """Encode (n, frames, h, w) observations to (n, n_z) float32."""
    out = np.empty((len(x), model.n_z), dtype=np.float32)
    with torch.no_grad():
        for i in range(0, len(x), chunk):
            xb = torch.from_numpy(np.ascontiguousarray(x[i:i + chunk],
                                                       dtype=np.float32))
            out[i:i + chunk] = model.encode(xb).numpy()
    return out


def latent_map_size(model: LatentDynamicsModel, dataset: TripletDataset) -> float:
    """Mean squared latent norm over the dataset's current observations."""
    z = encode_dataset(model, dataset.x)
    return float(np.mean(np.sum(z.astype(np.float64) ** 2, axis=1)))


def final_metrics(model: LatentDynamicsModel, dataset: TripletDataset,
                  cfg: TrainConfig) -> dict:
    """Evaluation pass over the dataset with a fresh noise stream.

    Reports batch-averaged cpc (K = batch size), cons, curv, and the
    latent map size.  Deterministic for a given (model, dataset, cfg).
    """
    torch.set_num_threads(1)
    gen = torch.Generator().manual_seed(derive_seed(cfg.seed, 6))
    n = len(dataset)
    batch = min(cfg.batch_size, n)
    steps = n // batch
    n_z, n_u = model.n_z, model.n_u

    z_all = torch.from_numpy(encode_dataset(model, dataset.x))
    z_next_all = torch.from_numpy(encode_dataset(model, dataset.x_next))
    u_all = torch.from_numpy(np.ascontiguousarray(dataset.u, dtype=np.float32))

    sums = {"cpc": 0.0, "cons": 0.0, "curv": 0.0}
    for k in range(steps):
        sl = slice(k * batch, (k + 1) * batch)
        z, u, z_next = z_all[sl], u_all[sl], z_next_all[sl]
        eps = torch.randn(batch, n_z, generator=gen) * cfg.sigma
        eta = torch.randn(batch, n_z + n_u, generator=gen) * cfg.eta_std
        with torch.no_grad():
            cpc, cons = info_nce(model, LatentBatch(z, u, z_next, eps, eta))
        with torch.enable_grad():
            curv = curvature_loss(model, z, u, eta)
        sums["cpc"] += float(cpc)
        sums["cons"] += float(cons)
        sums["curv"] += curv.item()

    out = {key: val / steps for key, val in sums.items()}
    out["map_size"] = float(np.mean(np.sum(
        z_all.numpy().astype(np.float64) ** 2, axis=1)))
    out["n_eval_batches"] = steps
    return out
