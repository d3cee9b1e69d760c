"""Training objective pieces.

All three terms share one noisy target draw per batch row: with
eps_i ~ N(0, sigma^2 I), the scored target for row i is
z'_i + eps_i, used both on the positive diagonal (consistency) and
against every candidate pair (z_j, u_j) in the contrastive sum.

- cpc:  mean_i [ M_ii - logsumexp_j M_ij + ln K ]   (InfoNCE with the
  model's own log-density as a tied critic; bounded above by ln K)
- cons: mean_i M_ii  (expected log-density of the noisy next latent;
  bounded above by -(n_z/2) ln(2 pi e sigma^2) when sigma > 0)
- curv: mean_i || f(z+eta_z, u+eta_u) - (J_z eta_z + J_u eta_u) - f(z, u) ||^2
  with the Jacobian-vector product evaluated at the perturbed point;
  identically zero for affine f.

The maximized objective is
    lam_cpc * cpc + lam_cons * cons - lam_curv * curv
    - centering * ||batch mean z||^2 - weight_decay * sum ||theta||^2 .
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from .networks import LatentDynamicsModel


@dataclass
class LatentBatch:
    """One training step's latent quantities and noise draws."""

    z: torch.Tensor       # (K, n_z)
    u: torch.Tensor       # (K, n_u)
    z_next: torch.Tensor  # (K, n_z)
    eps: torch.Tensor     # (K, n_z) target noise (zeros when disabled)
    eta: torch.Tensor     # (K, n_z + n_u) curvature perturbation


def consistency_bound(n_z: int, sigma: float) -> float:
    """Maximum attainable consistency value under target noise sigma."""
    if sigma <= 0.0:
        return math.inf
    return -0.5 * n_z * math.log(2.0 * math.pi * math.e * sigma**2)


def info_nce(model: LatentDynamicsModel, batch: LatentBatch):
    """Returns (cpc, cons); one score matrix serves both."""
    targets = batch.z_next + batch.eps
    m = model.pairwise_log_prob(targets, batch.z, batch.u)
    diag = m.diagonal()
    cons = diag.mean()
    cpc = (diag - m.logsumexp(dim=1)).mean() + math.log(m.shape[0])
    return cpc, cons


def curvature_loss(model: LatentDynamicsModel, z: torch.Tensor,
                   u: torch.Tensor, eta: torch.Tensor) -> torch.Tensor:
    n_z = z.shape[-1]
    eta_z, eta_u = eta[..., :n_z], eta[..., n_z:]
    z_pert, u_pert = z + eta_z, u + eta_u
    out, jvp = torch.autograd.functional.jvp(
        model.predict_mean, (z_pert, u_pert), (eta_z, eta_u), create_graph=True)
    resid = out - jvp - model.predict_mean(z, u)
    return resid.pow(2).sum(-1).mean()


def centering_loss(z: torch.Tensor) -> torch.Tensor:
    return z.mean(dim=0).pow(2).sum()


def l2_penalty(model: torch.nn.Module) -> torch.Tensor:
    total = None
    for p in model.parameters():
        if not p.requires_grad:
            continue
        term = p.pow(2).sum()
        total = term if total is None else total + term
    if total is None:
        raise ValueError("model has no trainable parameters")
    return total


def total_objective(model: LatentDynamicsModel, batch: LatentBatch, *,
                    lam_cpc: float = 1.0, lam_cons: float = 1.0,
                    lam_curv: float = 7.0, centering: float = 0.01,
                    weight_decay: float = 1e-3):
    """Maximized objective and its parts (parts as graph tensors)."""
    cpc, cons = info_nce(model, batch)
    curv = curvature_loss(model, batch.z, batch.u, batch.eta)
    center = centering_loss(batch.z)
    l2 = l2_penalty(model)
    objective = (lam_cpc * cpc + lam_cons * cons - lam_curv * curv
                 - centering * center - weight_decay * l2)
    parts = {"cpc": cpc, "cons": cons, "curv": curv, "center": center, "l2": l2}
    return objective, parts
