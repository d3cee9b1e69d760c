"""Environment interface and shared rendering/integration helpers.

Conventions used by every environment:

- States and actions are 1-D float64 numpy arrays.
- ``step`` clips the action to the action box, applies the mean
  transition, adds Gaussian state noise (if the env has any), then
  clamps to the state box and canonicalizes angles.
- Observations are float32 arrays of shape ``(frames, h, w)`` with
  values in [0, 1].  Two-frame environments stack the previous frame
  before the current one so velocity is observable.
- ``prev_state(s, u)`` returns a state that reaches ``s`` under the
  mean dynamics when ``u`` is applied; it is used to synthesize the
  "previous" frame for an isolated state (dataset sampling, goal
  images, rollout starts).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    """Static description of an environment."""

    name: str
    n_s: int
    n_u: int
    obs_shape: tuple[int, int, int]  # (frames, h, w)
    action_low: np.ndarray
    action_high: np.ndarray
    state_low: np.ndarray
    state_high: np.ndarray
    horizon: int
    noise_std: float = 0.0
    dt: float = 0.0
    angle_dims: tuple[int, ...] = ()  # state dims wrapped to (-pi, pi]


@dataclass(frozen=True)
class TaskSpec:
    """One control episode: start at ``initial``, drive to ``goal``."""

    env: str
    initial: np.ndarray
    goal: np.ndarray
    horizon: int | None = None  # None: use the env default
    name: str = ""


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


def angle_diff(a, b):
    """Signed smallest difference a - b on the circle."""
    return wrap_angle(a - b)


def rk4_step(deriv, s, u, dt):
    """Classic fixed-step Runge-Kutta 4 for ds/dt = deriv(s, u)."""
    k1 = deriv(s, u)
    k2 = deriv(s + 0.5 * dt * k1, u)
    k3 = deriv(s + 0.5 * dt * k2, u)
    k4 = deriv(s + dt * k3, u)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Env:
    """Base environment. Subclasses fill in ``spec`` and the hooks below."""

    spec: EnvSpec

    # -- dynamics ------------------------------------------------------

    def step_mean(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Deterministic transition with the action already clipped."""
        raise NotImplementedError

    def prev_state(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        """State that maps to ``s`` under ``step_mean`` with action ``u``."""
        raise NotImplementedError

    def step(self, s, u, rng: np.random.Generator | None = None) -> np.ndarray:
        """Full transition: clip action, mean step, noise, state clamp."""
        s = np.asarray(s, dtype=np.float64)
        u = np.clip(np.asarray(u, dtype=np.float64),
                    self.spec.action_low, self.spec.action_high)
        nxt = self.step_mean(s, u)
        if self.spec.noise_std > 0.0 and rng is not None:
            nxt = nxt + rng.normal(0.0, self.spec.noise_std, size=nxt.shape)
        return self._canonical(nxt)

    def _canonical(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64).copy()
        for d in self.spec.angle_dims:
            s[d] = wrap_angle(s[d])
        return np.clip(s, self.spec.state_low, self.spec.state_high)

    # -- observation ---------------------------------------------------

    def render_frame(self, s: np.ndarray) -> np.ndarray:
        """Single (h, w) float32 frame for state ``s``."""
        raise NotImplementedError

    def render(self, s, s_prev=None) -> np.ndarray:
        """Observation for ``s``; two-frame envs require ``s_prev``."""
        frames = self.spec.obs_shape[0]
        if frames == 1:
            return self.render_frame(s)[None]
        if s_prev is None:
            raise ValueError(f"{self.spec.name} observations need s_prev")
        return np.stack([self.render_frame(s_prev), self.render_frame(s)])

    def observe_isolated(self, s, u_prev=None) -> np.ndarray:
        """Observation for a state with no known history.

        The previous frame is synthesized by stepping backwards with
        ``u_prev`` (zero action if omitted).
        """
        if self.spec.obs_shape[0] == 1:
            return self.render(s)
        if u_prev is None:
            u_prev = np.zeros(self.spec.n_u)
        return self.render(s, self.prev_state(np.asarray(s, float), u_prev))

    # -- sampling ------------------------------------------------------

    def sample_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.spec.state_low, self.spec.state_high)

    def sample_action(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.spec.action_low, self.spec.action_high)

    # -- evaluation ----------------------------------------------------

    def in_goal(self, s: np.ndarray, goal: np.ndarray) -> bool:
        """Whether ``s`` counts as 'at the goal' for scoring."""
        raise NotImplementedError


# ---------------------------------------------------------------------
# rasterization: every renderer is built from soft-edged discs and
# segments.  Intensity = clip(r + 0.5 - dist, 0, 1), so the level set
# {intensity >= 0.5} is exactly {dist <= r}.
# ---------------------------------------------------------------------

def _pixel_grid(h: int, w: int) -> np.ndarray:
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    return np.stack([rr, cc], axis=-1)


_GRID_CACHE: dict[tuple[int, int], np.ndarray] = {}


def pixel_grid(h: int, w: int) -> np.ndarray:
    key = (h, w)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = _pixel_grid(h, w)
    return _GRID_CACHE[key]


def draw_disc(img: np.ndarray, center_rc, radius: float) -> None:
    grid = pixel_grid(*img.shape)
    d = np.linalg.norm(grid - np.asarray(center_rc, dtype=np.float64), axis=-1)
    np.maximum(img, np.clip(radius + 0.5 - d, 0.0, 1.0), out=img)


def draw_segment(img: np.ndarray, a_rc, b_rc, halfwidth: float) -> None:
    grid = pixel_grid(*img.shape)
    a = np.asarray(a_rc, dtype=np.float64)
    b = np.asarray(b_rc, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    rel = grid - a
    if denom < 1e-12:
        d = np.linalg.norm(rel, axis=-1)
    else:
        t = np.clip((rel @ ab) / denom, 0.0, 1.0)
        d = np.linalg.norm(rel - t[..., None] * ab, axis=-1)
    np.maximum(img, np.clip(halfwidth + 0.5 - d, 0.0, 1.0), out=img)


def make_env(name: str) -> Env:
    """Factory: 'planar', 'pendulum' or 'cartpole'."""
    from . import cartpole, pendulum, planar

    table = {
        "planar": planar.PlanarEnv,
        "pendulum": pendulum.PendulumEnv,
        "cartpole": cartpole.CartpoleEnv,
    }
    if name not in table:
        raise ValueError(f"unknown environment {name!r}")
    return table[name]()
