"""Latent-control laboratory.

Pixels-to-control pipeline built from four pieces:

- ``envs``: simulated benchmarks (planar navigation, pendulum, cartpole)
  that emit image observations, plus triplet sampling and a binary
  dataset container.
- ``model``: a deterministic encoder and a conditional-Gaussian latent
  dynamics model trained with a contrastive predictive objective, a
  consistency term, and a curvature penalty.
- ``llc``: iterative LQR in latent space and closed-loop execution on
  the true environments.
- ``theory``: small exact computations backing the training objective
  (a mutual-information gap bound and a two-point counterexample).

``harness`` ties these into reproducible multi-seed experiment grids.
"""

__version__ = "0.1.0"
