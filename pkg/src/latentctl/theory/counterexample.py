"""Two-point dataset where the contrastive term alone is degenerate.

Dataset: K = 2 triples (1, 1, 1) and (-1, -1, -1); the latent
transition family is N(z' ; sign(z) * eta, sigma^2) with scalar eta.
Both objectives have closed forms:

    cpc(eta, sigma)  = ln 2 - softplus(-2 eta / sigma^2)
    cons(eta, sigma) = -(eta - 1)^2 / (2 sigma^2) - (1/2) ln(2 pi sigma^2)

cpc is maximized by pushing 2 eta / sigma^2 to infinity regardless of
whether the predicted mean matches the true next latent (+-1); adding
cons pins eta to 1.  ``counterexample_train`` reproduces both regimes
by gradient ascent: with the contrastive term alone, sigma is held at
its initial value (the degeneracy construction scales eta alone; in
floating point, co-training sigma just underflows the shared gradient
factor and stalls), while the combined objective trains both eta and
log sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import torch
import torch.nn.functional as tf

LOSS_SELECTORS = ("cpc_only", "cpc_plus_cons")


@dataclass(frozen=True)
class CounterexampleState:
    eta: float
    sigma: float

    def __post_init__(self):
        if self.eta <= 0 or self.sigma <= 0:
            raise ValueError("eta and sigma must be positive")


def counterexample_objectives(state: CounterexampleState) -> tuple[float, float]:
    """Closed-form (cpc, cons) at the given parameters."""
    eta, sigma = state.eta, state.sigma
    var = sigma * sigma
    cpc = math.log(2.0) - _softplus(-2.0 * eta / var)
    cons = -((eta - 1.0) ** 2) / (2.0 * var) - 0.5 * math.log(2.0 * math.pi * var)
    return cpc, cons


def _softplus(x: float) -> float:
    if x > 30.0:
        return x
    if x < -30.0:
        return math.exp(x) if x > -700.0 else 0.0
    return math.log1p(math.exp(x))


def counterexample_train(loss_selector: str, steps: int, seed: int = 0,
                         lr: float = 0.01) -> CounterexampleState:
    """Adam ascent from eta = 0.5, sigma = 1. Deterministic; ``seed``
    is accepted for interface uniformity (the closed-form objective has
    no sampling).

    Optimizer note: betas = (0.9, 0.9) and eps = 0.  The contrastive
    gradient decays like exp(-2 eta), so a long second-moment memory
    (or a nonzero eps once the gradient falls below it) freezes eta
    early; short memory keeps the normalized step near lr and lets the
    divergence actually diverge.
    """
    if loss_selector not in LOSS_SELECTORS:
        raise ValueError(f"loss_selector must be one of {LOSS_SELECTORS}")
    if steps < 0:
        raise ValueError("steps must be >= 0")

    eta = torch.tensor(0.5, dtype=torch.float64, requires_grad=True)
    log_sigma = torch.tensor(0.0, dtype=torch.float64,
                             requires_grad=loss_selector == "cpc_plus_cons")
    params = [eta] if loss_selector == "cpc_only" else [eta, log_sigma]
    opt = torch.optim.Adam(params, lr=lr, betas=(0.9, 0.9), eps=0.0)

    for _ in range(steps):
        var = torch.exp(2.0 * log_sigma)
        cpc = math.log(2.0) - tf.softplus(-2.0 * eta / var)
        objective = cpc
        if loss_selector == "cpc_plus_cons":
            cons = (-(eta - 1.0) ** 2 / (2.0 * var)
                    - 0.5 * torch.log(2.0 * math.pi * var))
            objective = cpc + cons
        opt.zero_grad()
        (-objective).backward()
        opt.step()

    return CounterexampleState(eta=float(eta.detach()),
                               sigma=float(torch.exp(log_sigma.detach())))
