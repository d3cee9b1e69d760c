"""Fixed, versioned control task lists.

The benchmark scores depend on the initial/goal pairs, so these lists
are part of the package contract: task k of a named set never changes
between runs.  Each environment has a default set; ``n`` selects a
prefix (desk runs use 5, full runs 10).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..envs.base import TaskSpec

_UPRIGHT = np.zeros(2)


def _pendulum_balance() -> list[TaskSpec]:
    # ten starts spanning [-0.3, 0.3], ordered mildest first: gravity
    # torque beats the actuator bound for |theta| > ~0.206, so the desk
    # prefix (first 5) stays inside the recoverable basin while the full
    # list still probes the boundary
    thetas = [1.0 / 30, -1.0 / 30, 0.1, -0.1, 1.0 / 6,
              -1.0 / 6, 7.0 / 30, -7.0 / 30, 0.3, -0.3]
    return [TaskSpec(env="pendulum", initial=np.array([t, 0.0]),
                     goal=_UPRIGHT.copy(), name=f"balance{i}")
            for i, t in enumerate(thetas)]


def _pendulum_swingup() -> list[TaskSpec]:
    # hanging straight down, small angle jitter; goal is upright at rest.
    # horizon 300, not the env default 100: with |u| <= 2 against gravity
    # 9.8 the energy pump first reaches the goal region near step 124, so
    # a 100-step episode scores ~0 even under near-optimal control
    offsets = np.linspace(-0.15, 0.15, 10)
    tasks = []
    for i, d in enumerate(offsets):
        theta = np.pi + d
        if theta > np.pi:
            theta -= 2.0 * np.pi
        tasks.append(TaskSpec(env="pendulum", initial=np.array([theta, 0.0]),
                              goal=_UPRIGHT.copy(), horizon=300,
                              name=f"swingup{i}"))
    return tasks


def _planar_nav() -> list[TaskSpec]:
    pairs = [
        ((4.0, 4.0), (36.0, 36.0)),
        ((36.0, 36.0), (4.0, 4.0)),
        ((4.0, 36.0), (36.0, 4.0)),
        ((36.0, 4.0), (4.0, 36.0)),
        ((4.0, 4.0), (4.0, 36.0)),
        ((36.0, 4.0), (36.0, 36.0)),
        ((4.0, 20.0), (36.0, 20.0)),
        ((36.0, 20.0), (4.0, 20.0)),
        ((20.0, 4.0), (20.0, 36.0)),
        ((20.0, 36.0), (20.0, 4.0)),
    ]
    return [TaskSpec(env="planar", initial=np.array(a), goal=np.array(b),
                     name=f"nav{i}")
            for i, (a, b) in enumerate(pairs)]


def _cartpole_balance() -> list[TaskSpec]:
    thetas = np.linspace(-0.15, 0.15, 10)
    return [TaskSpec(env="cartpole", initial=np.array([0.0, 0.0, t, 0.0]),
                     goal=np.zeros(4), name=f"cartbalance{i}")
            for i, t in enumerate(thetas)]


_SETS = {
    ("pendulum", "balance"): _pendulum_balance,
    ("pendulum", "swingup"): _pendulum_swingup,
    ("planar", "nav"): _planar_nav,
    ("cartpole", "balance"): _cartpole_balance,
}

DEFAULT_SETS = {"pendulum": ("balance", "swingup"), "planar": ("nav",),
                "cartpole": ("balance",)}


def task_list(env_name: str, set_name: str, n: int = 10) -> list[TaskSpec]:
    key = (env_name, set_name)
    if key not in _SETS:
        raise ValueError(f"no task set {set_name!r} for env {env_name!r}")
    tasks = _SETS[key]()
    if not 1 <= n <= len(tasks):
        raise ValueError(f"n must be in [1, {len(tasks)}]")
    return tasks[:n]


def save_task_list(path: str | Path, tasks: list[TaskSpec]) -> None:
    """CSV: name, horizon (blank = env default), init..., goal..."""
    with open(path, "w") as fh:
        for t in tasks:
            init = ",".join(repr(float(v)) for v in t.initial)
            goal = ",".join(repr(float(v)) for v in t.goal)
            hor = "" if t.horizon is None else str(t.horizon)
            fh.write(f"{t.name};{hor};{init};{goal}\n")


def load_task_list(path: str | Path, env_name: str) -> list[TaskSpec]:
    tasks = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, hor, init, goal = line.split(";")
        tasks.append(TaskSpec(
            env=env_name,
            initial=np.array([float(v) for v in init.split(",")]),
            goal=np.array([float(v) for v in goal.split(",")]),
            horizon=None if hor == "" else int(hor),
            name=name,
        ))
    if not tasks:
        raise ValueError(f"{path}: no tasks")
    return tasks
