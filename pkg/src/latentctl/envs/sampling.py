"""Triplet sampling: i.i.d. (x_t, u_t, x_{t+1}) records.

Each record gets its own RNG stream derived from (master seed, record
index), so a dataset is reproducible record-by-record and independent
of batching or parallelism.  Per-record draw order is fixed: state,
previous action (two-frame envs only), action, then transition noise.
"""

from __future__ import annotations

import numpy as np

from .base import Env
from .dataset import TripletDataset


def sample_triplets(env: Env, n: int, seed: int) -> TripletDataset:
    """Sample ``n`` observation triplets from ``env``.

    States are drawn uniformly from the valid state region, actions
    uniformly from the action box.  ``n = 0`` yields an empty dataset.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    frames, h, w = env.spec.obs_shape
    x = np.empty((n, frames, h, w), dtype=np.float32)
    u = np.empty((n, env.spec.n_u), dtype=np.float32)
    x_next = np.empty((n, frames, h, w), dtype=np.float32)

    two_frame = frames == 2
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        s = env.sample_state(rng)
        if two_frame:
            u_prev = env.sample_action(rng)
            x[i] = env.render(s, env.prev_state(s, u_prev))
        else:
            x[i] = env.render(s)
        a = env.sample_action(rng)
        s_next = env.step(s, a, rng)
        u[i] = a
        x_next[i] = env.render(s_next, s) if two_frame else env.render(s_next)

    return TripletDataset(env=env.spec.name, seed=seed, x=x, u=u, x_next=x_next)
