"""Iterative LQR on the latent mean dynamics.

All solver math runs in float64; the latent dynamics network is copied
to float64 once per solve.  Each iteration linearizes along the
nominal trajectory (exact autograd Jacobians), runs a backward Riccati
pass with Levenberg regularization mu added to the action Hessian
(mu grows x10 when the Cholesky factorization fails, shrinks /10 after
an accepted step, and starts at 0 so the affine case reduces to plain
LQR), then line-searches the forward rollout over step scales
1, 1/2, ..., 2^-10, accepting only a real cost decrease.

Cost convention: sum_{t<T} [alpha ||z_t - g||^2 + beta ||u_t||^2]
plus the terminal term alpha ||z_T - g||^2.

After the last accepted trajectory a final backward pass recomputes
(k, K) about it, so the returned gains are consistent with the
returned nominal; at convergence the residual feedforward k is
numerically zero.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch

from ..model.networks import LatentDynamicsModel

MU_FLOOR = 1e-6
MU_MAX = 1e10
# relative margin a candidate must beat the current cost by; rejects
# roundoff-level "improvements" so convergence accounting is stable
ACCEPT_MARGIN = 1e-12


@dataclass(frozen=True)
class QuadraticLatentCost:
    z_goal: np.ndarray
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        object.__setattr__(self, "z_goal",
                           np.asarray(self.z_goal, dtype=np.float64))


@dataclass
class IlqrOptions:
    max_iters: int = 50
    tol: float = 1e-4          # relative improvement convergence threshold
    mu_init: float = 0.0
    n_alphas: int = 11         # line-search scales 2^0 .. 2^-(n-1)


@dataclass
class IlqrSolution:
    z_nom: np.ndarray          # (T+1, n_z)
    u_nom: np.ndarray          # (T, n_u)
    k: np.ndarray              # (T, n_u) feedforward
    K: np.ndarray              # (T, n_u, n_z) feedback gains
    cost: float
    cost_trace: list           # initial cost + each accepted cost
    accepted_iters: int
    converged: bool
    mu_final: float


class _Float64Dynamics:
    """float64 numpy view of a model's latent mean dynamics."""

    def __init__(self, model: LatentDynamicsModel):
        self.net = copy.deepcopy(model.dynamics).double()
        for p in self.net.parameters():
            p.requires_grad_(False)
        self.n_z, self.n_u = model.n_z, model.n_u
        self._f = lambda z, u: self.net(torch.cat([z, u], dim=-1))

    def step(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            out = self._f(torch.from_numpy(z[None]), torch.from_numpy(u[None]))
        return out[0].numpy()

    def jacobians(self, Z: np.ndarray, U: np.ndarray):
        """Per-step Jacobians along a trajectory: (T,n_z,n_z), (T,n_z,n_u)."""
        zt = torch.from_numpy(np.ascontiguousarray(Z))
        ut = torch.from_numpy(np.ascontiguousarray(U))
        jac = torch.vmap(torch.func.jacrev(self._f, argnums=(0, 1)))(zt, ut)
        return jac[0].numpy(), jac[1].numpy()


def linearize(model: LatentDynamicsModel, z: np.ndarray, u: np.ndarray):
    """Exact Jacobians (A, B) and offset f(z, u) at one point, float64."""
    dyn = _Float64Dynamics(model)
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    A, B = dyn.jacobians(z[None], u[None])
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise FloatingPointError("non-finite Jacobian entries")
    return A[0], B[0], dyn.step(z, u)


def _rollout(dyn: _Float64Dynamics, z0: np.ndarray, U: np.ndarray) -> np.ndarray:
    Z = np.empty((len(U) + 1, dyn.n_z))
    Z[0] = z0
    for t in range(len(U)):
        Z[t + 1] = dyn.step(Z[t], U[t])
    return Z


def _traj_cost(cost: QuadraticLatentCost, Z: np.ndarray, U: np.ndarray) -> float:
    state = cost.alpha * np.sum((Z - cost.z_goal) ** 2)
    action = cost.beta * np.sum(U**2)
    return float(state + action)


def _backward(A, B, Z, U, cost: QuadraticLatentCost, mu: float):
    """Riccati pass; returns (k, K, mu) with mu escalated past any
    Cholesky failures of the regularized action Hessian."""
    T, n_z = len(U), Z.shape[1]
    n_u = U.shape[1]
    g = cost.z_goal
    while True:
        k = np.empty((T, n_u))
        K = np.empty((T, n_u, n_z))
        Vx = 2.0 * cost.alpha * (Z[T] - g)
        Vxx = 2.0 * cost.alpha * np.eye(n_z)
        failed = False
        for t in range(T - 1, -1, -1):
            At, Bt = A[t], B[t]
            Qx = 2.0 * cost.alpha * (Z[t] - g) + At.T @ Vx
            Qu = 2.0 * cost.beta * U[t] + Bt.T @ Vx
            Qxx = 2.0 * cost.alpha * np.eye(n_z) + At.T @ Vxx @ At
            Quu = 2.0 * cost.beta * np.eye(n_u) + Bt.T @ Vxx @ Bt
            Qux = Bt.T @ Vxx @ At
            try:
                chol = np.linalg.cholesky(Quu + mu * np.eye(n_u))
            except np.linalg.LinAlgError:
                failed = True
                break
            rhs = np.column_stack([Qu, Qux])
            sol = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            k[t] = -sol[:, 0]
            K[t] = -sol[:, 1:]
            Vx = Qx + K[t].T @ Quu @ k[t] + K[t].T @ Qu + Qux.T @ k[t]
            Vxx = Qxx + K[t].T @ Quu @ K[t] + K[t].T @ Qux + Qux.T @ K[t]
            Vxx = 0.5 * (Vxx + Vxx.T)
        if not failed:
            return k, K, mu
        mu = max(mu * 10.0, MU_FLOOR)
        if mu > MU_MAX:
            raise FloatingPointError("action Hessian not stabilizable")


def _forward(dyn, Z, U, k, K, scale: float):
    T = len(U)
    Zn = np.empty_like(Z)
    Un = np.empty_like(U)
    Zn[0] = Z[0]
    for t in range(T):
        Un[t] = U[t] + scale * k[t] + K[t] @ (Zn[t] - Z[t])
        Zn[t + 1] = dyn.step(Zn[t], Un[t])
    return Zn, Un


def ilqr_solve(model: LatentDynamicsModel, cost: QuadraticLatentCost,
               z0: np.ndarray, T: int, u_init: np.ndarray | None = None,
               opts: IlqrOptions | None = None) -> IlqrSolution:
    if T < 1:
        raise ValueError("horizon must be >= 1")
    opts = opts or IlqrOptions()
    dyn = _Float64Dynamics(model)
    z0 = np.asarray(z0, dtype=np.float64)

    U = np.zeros((T, dyn.n_u)) if u_init is None else \
        np.asarray(u_init, dtype=np.float64).reshape(T, dyn.n_u).copy()
    Z = _rollout(dyn, z0, U)
    c = _traj_cost(cost, Z, U)
    if not np.isfinite(c):
        raise FloatingPointError("initial rollout cost is non-finite")

    trace = [c]
    mu = opts.mu_init
    accepted = 0
    converged = False
    scales = 2.0 ** -np.arange(opts.n_alphas)

    for _ in range(opts.max_iters):
        A, B = dyn.jacobians(Z[:-1], U)
        k, K, mu = _backward(A, B, Z, U, cost, mu)

        improved = False
        for a in scales:
            Zc, Uc = _forward(dyn, Z, U, k, K, a)
            cc = _traj_cost(cost, Zc, Uc)
            if np.isfinite(cc) and cc < c * (1.0 - ACCEPT_MARGIN) - ACCEPT_MARGIN:
                improved = True
                break
        if not improved:
            # no decrease at any scale: at a local solution for this tol
            converged = True
            break

        gain = c - cc
        Z, U, c = Zc, Uc, cc
        trace.append(c)
        accepted += 1
        mu = 0.0 if mu / 10.0 < MU_FLOOR else mu / 10.0
        if gain <= opts.tol * max(1.0, abs(trace[-2])):
            converged = True
            break

    # gains consistent with the returned nominal
    A, B = dyn.jacobians(Z[:-1], U)
    k, K, mu = _backward(A, B, Z, U, cost, mu)

    return IlqrSolution(z_nom=Z, u_nom=U, k=k, K=K, cost=c, cost_trace=trace,
                        accepted_iters=accepted, converged=converged,
                        mu_final=mu)
