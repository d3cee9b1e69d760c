"""Cart-pole balance with two stacked 80x80 frames.

State (x, x_dot, theta, theta_dot), theta = 0 upright.  Standard
cart-pole equations (cart mass 1, pole mass 0.1, pole half-length
0.5, g = 9.8), force |u| <= 10, RK4 at dt = 0.05.  The state box keeps
the pole near upright, matching the balance task this environment is
used for.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, draw_segment, rk4_step

M_CART = 1.0
M_POLE = 0.1
POLE_HALF = 0.5
GRAVITY = 9.8
DT = 0.05
IMG = 80

PX_PER_UNIT = IMG / 7.2  # world x in [-3.6, 3.6]
CART_ROW = 55.0
CART_HALFW = 5.0
CART_HALFH = 2.5
POLE_PX = 22.0
POLE_HALFWIDTH = 1.2

GOAL_ANGLE_TOL = 0.2
GOAL_POS_TOL = 1.0

SPEC = EnvSpec(
    name="cartpole",
    n_s=4,
    n_u=1,
    obs_shape=(2, IMG, IMG),
    action_low=np.array([-10.0]),
    action_high=np.array([10.0]),
    state_low=np.array([-2.4, -3.0, -0.35, -2.0]),
    state_high=np.array([2.4, 3.0, 0.35, 2.0]),
    horizon=50,
    noise_std=0.01,
    dt=DT,
)


def _deriv(s, u):
    x, x_dot, theta, theta_dot = s
    force = u[0]
    total = M_CART + M_POLE
    sin, cos = np.sin(theta), np.cos(theta)
    temp = (force + M_POLE * POLE_HALF * theta_dot**2 * sin) / total
    theta_acc = (GRAVITY * sin - cos * temp) / (
        POLE_HALF * (4.0 / 3.0 - M_POLE * cos**2 / total))
    x_acc = temp - M_POLE * POLE_HALF * theta_acc * cos / total
    return np.array([x_dot, x_acc, theta_dot, theta_acc])


class CartpoleEnv(Env):
    spec = SPEC

    def step_mean(self, s, u):
        return rk4_step(_deriv, s, u, DT)

    def prev_state(self, s, u):
        return rk4_step(_deriv, s, u, -DT)

    def render_frame(self, s):
        img = np.zeros((IMG, IMG), dtype=np.float64)
        col = (s[0] + 3.6) * PX_PER_UNIT
        base = np.array([CART_ROW, col])
        draw_segment(img, base + [0.0, -CART_HALFW], base + [0.0, CART_HALFW],
                     CART_HALFH)
        tip = base + POLE_PX * np.array([-np.cos(s[2]), np.sin(s[2])])
        draw_segment(img, base, tip, POLE_HALFWIDTH)
        return img.astype(np.float32)

    def in_goal(self, s, goal):
        return (abs(s[2] - goal[2]) <= GOAL_ANGLE_TOL
                and abs(s[0] - goal[0]) <= GOAL_POS_TOL)
