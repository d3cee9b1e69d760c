"""Planar navigation among four circular obstacles.

The state is the agent position (row, col) in a 40x40 world; the
action is a bounded displacement added to the position.  A move whose
straight-line path comes within an obstacle radius of any obstacle
center is rejected and leaves the state unchanged (collision checks
treat the agent as a point; the radius-2 disc in the rendering is
visual).  Transitions are deterministic.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, draw_disc

WORLD = 40
AGENT_RADIUS = 2.0
OBSTACLE_RADIUS = 2.5
OBSTACLES = np.array([[8.0, 8.0], [8.0, 32.0], [32.0, 8.0], [32.0, 32.0]])
GOAL_RADIUS = 2.5
MAX_STEP = 3.0
# keep the rendered agent disc inside the frame
POS_MIN, POS_MAX = 2.0, 38.0

SPEC = EnvSpec(
    name="planar",
    n_s=2,
    n_u=2,
    obs_shape=(1, WORLD, WORLD),
    action_low=np.full(2, -MAX_STEP),
    action_high=np.full(2, MAX_STEP),
    state_low=np.full(2, POS_MIN),
    state_high=np.full(2, POS_MAX),
    horizon=40,
)


def _segment_hits_obstacle(a: np.ndarray, b: np.ndarray) -> bool:
    ab = b - a
    denom = float(ab @ ab)
    for o in OBSTACLES:
        if denom < 1e-12:
            d = float(np.linalg.norm(a - o))
        else:
            t = np.clip(float((o - a) @ ab) / denom, 0.0, 1.0)
            d = float(np.linalg.norm(a + t * ab - o))
        if d < OBSTACLE_RADIUS:
            return True
    return False


def in_obstacle(p: np.ndarray) -> bool:
    return bool(np.any(np.linalg.norm(OBSTACLES - p, axis=1) <= OBSTACLE_RADIUS))


class PlanarEnv(Env):
    spec = SPEC

    def step_mean(self, s, u):
        target = np.clip(s + u, POS_MIN, POS_MAX)
        if _segment_hits_obstacle(s, target):
            return s.copy()
        return target

    def render_frame(self, s):
        img = np.zeros((WORLD, WORLD), dtype=np.float64)
        draw_disc(img, s, AGENT_RADIUS)
        return img.astype(np.float32)

    def sample_state(self, rng):
        for _ in range(1000):
            p = rng.uniform(POS_MIN, POS_MAX, size=2)
            if not in_obstacle(p):
                return p
        raise RuntimeError("could not sample a collision-free position")

    def in_goal(self, s, goal):
        return bool(np.linalg.norm(np.asarray(s, float)[:2] - np.asarray(goal, float)[:2])
                    <= GOAL_RADIUS)
