"""Closed-loop execution of a latent plan in the true environment.

The goal latent is the encoding of the rendered goal observation.
Each environment step re-encodes the current observation and applies
    u_t = clip( u_nom_i + k_i + K_i (z_t - z_nom_i) )
with gains from the most recent solve.  With ``replan_every = R > 0``
the remaining horizon is re-solved every R steps from the current
encoded latent, warm-started with the unused tail of the running plan.

Scoring: the goal predicate is evaluated on the T states reached after
each action; percent_in_goal = 100 * (flag count) / T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..envs.base import Env, TaskSpec
from ..model.networks import LatentDynamicsModel
from .ilqr import IlqrOptions, IlqrSolution, QuadraticLatentCost, ilqr_solve


@dataclass
class ControlOptions:
    alpha: float = 1.0
    beta: float = 1.0
    replan_every: int = 0      # 0: solve once; R>0: receding horizon
    ilqr: IlqrOptions = field(default_factory=IlqrOptions)


@dataclass
class ControlScore:
    percent_in_goal: float
    goal_flags: np.ndarray     # (T,) bool, for states s_1..s_T
    states: np.ndarray         # (T+1, n_s)
    actions: np.ndarray        # (T, n_u)
    planned_cost: float        # cost of the first solve
    converged: bool            # all solves converged


def _encode(model: LatentDynamicsModel, obs: np.ndarray) -> np.ndarray:
    with torch.no_grad():
        z = model.encode(torch.from_numpy(obs[None]))
    return z[0].numpy().astype(np.float64)


def execute(env: Env, task: TaskSpec, model: LatentDynamicsModel,
            opts: ControlOptions | None = None,
            rng: np.random.Generator | None = None) -> ControlScore:
    opts = opts or ControlOptions()
    rng = rng if rng is not None else np.random.default_rng(0)
    T = task.horizon if task.horizon is not None else env.spec.horizon
    goal = np.asarray(task.goal, dtype=np.float64)

    z_goal = _encode(model, env.observe_isolated(goal))
    cost = QuadraticLatentCost(z_goal=z_goal, alpha=opts.alpha, beta=opts.beta)

    s = np.asarray(task.initial, dtype=np.float64)
    x0 = env.observe_isolated(s)
    plan: IlqrSolution = ilqr_solve(model, cost, _encode(model, x0), T,
                                    opts=opts.ilqr)
    planned_cost = plan.cost
    all_converged = plan.converged
    plan_start = 0

    two_frame = env.spec.obs_shape[0] == 2
    s_prev: np.ndarray | None = None
    states = np.empty((T + 1, env.spec.n_s))
    actions = np.empty((T, env.spec.n_u))
    flags = np.zeros(T, dtype=bool)
    states[0] = s

    for t in range(T):
        if t == 0:
            obs = x0
        else:
            obs = env.render(s, s_prev) if two_frame else env.render(s)
        z = _encode(model, obs)

        if opts.replan_every > 0 and t > 0 and t % opts.replan_every == 0:
            warm = plan.u_nom[t - plan_start:]
            plan = ilqr_solve(model, cost, z, T - t, u_init=warm,
                              opts=opts.ilqr)
            all_converged = all_converged and plan.converged
            plan_start = t

        i = t - plan_start
        u = plan.u_nom[i] + plan.k[i] + plan.K[i] @ (z - plan.z_nom[i])
        u = np.clip(u, env.spec.action_low, env.spec.action_high)

        s_prev = s
        s = env.step(s, u, rng)
        states[t + 1] = s
        actions[t] = u
        flags[t] = env.in_goal(s, goal)

    return ControlScore(
        percent_in_goal=100.0 * float(flags.sum()) / T,
        goal_flags=flags,
        states=states,
        actions=actions,
        planned_cost=planned_cost,
        converged=all_converged,
    )
