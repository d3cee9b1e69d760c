"""Networks: deterministic encoder E and latent dynamics mean f.

The latent transition model is a conditional Gaussian
    F(z' | z, u) = N(z' ; f(z, u), diag(exp(log_var)))
with a single learnable per-dimension log-variance vector, clamped to
[LOG_VAR_MIN, LOG_VAR_MAX] wherever a density is evaluated.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

LOG_VAR_MIN = -6.0
LOG_VAR_MAX = 2.0

_LN_2PI = math.log(2.0 * math.pi)


def _scaled(width: int, scale: float, floor: int = 4) -> int:
    return max(floor, int(round(width * scale)))


def mlp(sizes: list[int]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(sizes) - 1):
        layers.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class MlpEncoder(nn.Module):
    def __init__(self, obs_shape, hidden: list[int], n_z: int):
        super().__init__()
        self.obs_shape = tuple(obs_shape)
        n_in = int(np.prod(obs_shape))
        self.net = mlp([n_in, *hidden, n_z])

    def forward(self, x):
        return self.net(x.flatten(1))


class ConvEncoder(nn.Module):
    """Conv backbone + 2-layer FC head (cartpole observations)."""

    def __init__(self, obs_shape, channels: list[int], fc: int, n_z: int):
        super().__init__()
        self.obs_shape = tuple(obs_shape)
        frames, h, w = obs_shape
        convs: list[nn.Module] = []
        c_prev = frames
        strides = [1, 2, 2, 2]
        for c, s in zip(channels, strides):
            convs.append(nn.Conv2d(c_prev, c, kernel_size=5, stride=s, padding=2))
            convs.append(nn.ReLU())
            c_prev = c
        self.conv = nn.Sequential(*convs)
        down = 2 ** (len(strides) - 1)
        n_flat = c_prev * (h // down) * (w // down)
        self.head = mlp([n_flat, fc, n_z])

    def forward(self, x):
        return self.head(self.conv(x).flatten(1))


class LatentDynamicsModel(nn.Module):
    """Encoder E(x) -> z plus Gaussian latent dynamics F(z' | z, u)."""

    def __init__(self, encoder: nn.Module, dynamics: nn.Module,
                 obs_shape, n_z: int, n_u: int):
        super().__init__()
        self.encoder = encoder
        self.dynamics = dynamics
        self.obs_shape = tuple(obs_shape)
        self.n_z = n_z
        self.n_u = n_u
        self.log_var = nn.Parameter(torch.zeros(n_z))

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == len(self.obs_shape):
            return self.encoder(x[None])[0]
        return self.encoder(x)

    def predict_mean(self, z: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
        return self.dynamics(torch.cat([z, u], dim=-1))

    def clamped_log_var(self) -> torch.Tensor:
        return self.log_var.clamp(LOG_VAR_MIN, LOG_VAR_MAX)

    def log_prob(self, target: torch.Tensor, z: torch.Tensor,
                 u: torch.Tensor) -> torch.Tensor:
        """log F(target | z, u), shape (B,)."""
        lv = self.clamped_log_var()
        diff = target - self.predict_mean(z, u)
        return -0.5 * (diff.pow(2) / lv.exp() + lv + _LN_2PI).sum(-1)

    def pairwise_log_prob(self, targets: torch.Tensor, z: torch.Tensor,
                          u: torch.Tensor) -> torch.Tensor:
        """Score matrix M with M[i, j] = log F(targets[i] | z[j], u[j])."""
        lv = self.clamped_log_var()
        mean = self.predict_mean(z, u)                      # (K, n_z)
        diff = targets[:, None, :] - mean[None, :, :]       # (K, K, n_z)
        return -0.5 * (diff.pow(2) / lv.exp() + lv + _LN_2PI).sum(-1)


def init_weights(model: LatentDynamicsModel) -> None:
    """Orthogonal weights (ReLU gain), zero biases, on every linear and
    convolution.  Consumes the global torch RNG."""
    for mod in model.modules():
        if isinstance(mod, (nn.Linear, nn.Conv2d)):
            nn.init.orthogonal_(mod.weight, gain=math.sqrt(2.0))
            nn.init.zeros_(mod.bias)


def _forward_order(net: nn.Module, probe: torch.Tensor):
    """Linear/Conv2d modules of ``net`` in the order ``probe`` hits them."""
    seen = []
    hooks = []
    for mod in net.modules():
        if isinstance(mod, (nn.Linear, nn.Conv2d)):
            hooks.append(mod.register_forward_hook(
                lambda m, inp, out: seen.append(m)))
    try:
        with torch.no_grad():
            net(probe)
    finally:
        for h in hooks:
            h.remove()
    return seen


def _rescale_layers(net: nn.Module, probe: torch.Tensor, last_per_dim: bool,
                    eps: float = 1e-8) -> None:
    captured = {}

    def tap(mod, inp, out):
        captured["out"] = out

    layers = _forward_order(net, probe)
    for i, mod in enumerate(layers):
        hook = mod.register_forward_hook(tap)
        try:
            with torch.no_grad():
                net(probe)
                out = captured["out"]
                if last_per_dim and i == len(layers) - 1:
                    scale = 1.0 / out.reshape(-1, out.shape[-1]).std(0).clamp(min=eps)
                    mod.weight.mul_(scale[:, None])
                    mod.bias.mul_(scale)
                else:
                    scale = 1.0 / max(float(out.std()), eps)
                    mod.weight.mul_(scale)
                    mod.bias.mul_(scale)
        finally:
            hook.remove()


def calibrate_scales(model: LatentDynamicsModel, x_probe: torch.Tensor,
                     u_probe: torch.Tensor) -> None:
    """Rescale layers so activations come out at unit standard deviation
    over the probe batch (final layers per output dimension).  Fixes the
    vanishing activation scale that sparse pixel inputs give randomly
    initialized networks, which otherwise lets the early optimizer steps
    silence the hidden units before the contrastive signal forms."""
    _rescale_layers(model.encoder, x_probe, last_per_dim=True)
    with torch.no_grad():
        z_probe = model.encode(x_probe)
    calibrate_dynamics_scales(model, z_probe, u_probe)


def calibrate_dynamics_scales(model: LatentDynamicsModel,
                              z_probe: torch.Tensor,
                              u_probe: torch.Tensor) -> None:
    zu = torch.cat([z_probe, u_probe], dim=-1)
    _rescale_layers(model.dynamics, zu, last_per_dim=True)


def build_model(env_name: str, scale: float = 1.0) -> LatentDynamicsModel:
    """Architectures per environment; ``scale`` shrinks hidden widths
    (and conv channels) for desk-scale runs."""
    if env_name == "planar":
        obs_shape, n_z, n_u = (1, 40, 40), 2, 2
        enc = MlpEncoder(obs_shape, [_scaled(300, scale)] * 2, n_z)
        dyn_hidden = [_scaled(20, scale)] * 2
    elif env_name == "pendulum":
        obs_shape, n_z, n_u = (2, 48, 48), 3, 1
        enc = MlpEncoder(obs_shape, [_scaled(500, scale)] * 2, n_z)
        dyn_hidden = [_scaled(30, scale)] * 2
    elif env_name == "cartpole":
        obs_shape, n_z, n_u = (2, 80, 80), 8, 1
        channels = [_scaled(32, scale), _scaled(32, scale),
                    _scaled(32, scale), _scaled(10, scale, floor=2)]
        enc = ConvEncoder(obs_shape, channels, _scaled(200, scale), n_z)
        dyn_hidden = [_scaled(40, scale)] * 2
    else:
        raise ValueError(f"no architecture for environment {env_name!r}")
    dyn = mlp([n_z + n_u, *dyn_hidden, n_z])
    return LatentDynamicsModel(enc, dyn, obs_shape, n_z, n_u)
