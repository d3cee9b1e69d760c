"""Torque-limited inverted pendulum rendered as two stacked frames.

State (theta, theta_dot) with theta = 0 upright, wrapped to (-pi, pi].
Dynamics: theta_ddot = (g/l) sin(theta) - b*theta_dot + u with unit
mass and length, g = 9.8, damping b = 0.1, |u| <= 2, integrated with a
fixed-step RK4 at dt = 0.05.  The torque limit is well below the
gravity torque, so swing-up needs energy pumping.

An observation stacks the previous frame and the current frame
(2 x 48 x 48) so angular velocity is recoverable from pixels.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, angle_diff, draw_segment, rk4_step

GRAVITY = 9.8
DAMPING = 0.1
DT = 0.05
IMG = 48
ROD_LEN = 17.0
ROD_HALFWIDTH = 1.5
CENTER = np.array([(IMG - 1) / 2.0, (IMG - 1) / 2.0])

GOAL_ANGLE_TOL = 0.2
GOAL_VEL_TOL = 1.0

SPEC = EnvSpec(
    name="pendulum",
    n_s=2,
    n_u=1,
    obs_shape=(2, IMG, IMG),
    action_low=np.array([-2.0]),
    action_high=np.array([2.0]),
    state_low=np.array([-np.pi, -8.0]),
    state_high=np.array([np.pi, 8.0]),
    horizon=100,
    noise_std=0.01,
    dt=DT,
    angle_dims=(0,),
)


def _deriv(s, u):
    theta, omega = s[0], s[1]
    return np.array([omega, GRAVITY * np.sin(theta) - DAMPING * omega + u[0]])


class PendulumEnv(Env):
    spec = SPEC

    def step_mean(self, s, u):
        return rk4_step(_deriv, s, u, DT)

    def prev_state(self, s, u):
        # integrate backwards in time; exact enough for rendering
        return rk4_step(_deriv, s, u, -DT)

    def render_frame(self, s):
        img = np.zeros((IMG, IMG), dtype=np.float64)
        theta = s[0]
        tip = CENTER + ROD_LEN * np.array([-np.cos(theta), np.sin(theta)])
        draw_segment(img, CENTER, tip, ROD_HALFWIDTH)
        return img.astype(np.float32)

    def in_goal(self, s, goal):
        return (abs(angle_diff(s[0], goal[0])) <= GOAL_ANGLE_TOL
                and abs(s[1] - goal[1]) <= GOAL_VEL_TOL)
