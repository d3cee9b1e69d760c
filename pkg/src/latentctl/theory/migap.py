"""Mutual-information gap bound on finite alphabets.

For a joint p(x, y) and deterministic codes a = e(x), b = f(y), the
best predictor of y from x restricted to the factorized family

    q(y | x) = psi1(y) psi2(e(x), f(y)) / Z(x)

has expected KL loss

    l(q) = E_{p(x)} KL( p(y|x) || q(y|x) )

whose minimum l_star is upper-bounded by the information gap
I(X;Y) - I(A;B).  The bound is certified constructively: alternating
minimization over tabular psi1, psi2 starts at the witness
q(y|x) proportional to p(y) r(e(x)|f(y)) (whose loss equals the gap
exactly) and every accepted update decreases the loss, so
l_star <= gap holds by construction and is re-checked numerically.

Everything here enumerates exhaustively; alphabets are capped at 64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ALPHABET = 64
_TINY = 1e-300


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint table over X x Y plus deterministic codes e, f."""

    p: np.ndarray  # (nx, ny), nonnegative, sums to 1
    e: np.ndarray  # (nx,) integer codes
    f: np.ndarray  # (ny,) integer codes

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        e = np.asarray(self.e, dtype=np.int64)
        f = np.asarray(self.f, dtype=np.int64)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "f", f)
        nx, ny = p.shape
        if nx > MAX_ALPHABET or ny > MAX_ALPHABET:
            raise ValueError(f"alphabet too large to enumerate: {p.shape}")
        if e.shape != (nx,) or f.shape != (ny,):
            raise ValueError("code lengths do not match the table")
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError("table must be nonnegative and sum to 1")

    @classmethod
    def from_triple(cls, p3: np.ndarray, e: np.ndarray, f: np.ndarray):
        """Flatten a (x_t, u_t, x_{t+1}) table: X := (x_t, u_t), Y := x_{t+1}."""
        p3 = np.asarray(p3, dtype=np.float64)
        nx, nu, ny = p3.shape
        return cls(p3.reshape(nx * nu, ny), e, f)

    @property
    def n_a(self) -> int:
        return int(self.e.max()) + 1

    @property
    def n_b(self) -> int:
        return int(self.f.max()) + 1


@dataclass(frozen=True)
class MiGapResult:
    l_star: float
    gap: float
    witness_loss: float
    mi_xy: float
    mi_ab: float
    iters: int
    converged: bool


def mutual_information(p: np.ndarray) -> float:
    """I(X;Y) in nats for a joint table."""
    p = np.asarray(p, dtype=np.float64)
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    ratio = p[mask] / (px @ py)[mask]
    return float(np.sum(p[mask] * np.log(ratio)))


def coded_joint(joint: DiscreteJoint) -> np.ndarray:
    """Pushforward table p(a, b) under the codes."""
    pab = np.zeros((joint.n_a, joint.n_b))
    np.add.at(pab, (joint.e[:, None], joint.f[None, :]), joint.p)
    return pab


def _aggregate_ay(joint: DiscreteJoint) -> np.ndarray:
    """p(a, y): the predictor family sees x only through a = e(x)."""
    pay = np.zeros((joint.n_a, joint.p.shape[1]))
    np.add.at(pay, joint.e, joint.p)
    return pay


def _neg_h_y_given_x(joint: DiscreteJoint) -> float:
    p = joint.p
    px = p.sum(axis=1, keepdims=True)
    mask = p > 0
    return float(np.sum(p[mask] * np.log((p / np.where(px > 0, px, 1.0))[mask])))


def _loss(pay: np.ndarray, f: np.ndarray, psi1: np.ndarray,
          psi2: np.ndarray, neg_h: float) -> float:
    w = psi1[None, :] * psi2[:, f]              # (na, ny), q numerator
    z = w.sum(axis=1, keepdims=True)
    mask = pay > 0
    logq = np.log(np.maximum(w, _TINY)) - np.log(np.maximum(z, _TINY))
    return neg_h - float(np.sum(pay[mask] * logq[mask]))


def witness(joint: DiscreteJoint) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form feasible point psi1 = p(y), psi2(a, b) = r(a | b).

    Its loss equals the mutual-information gap exactly, which both
    certifies l_star <= gap and seeds the minimization.
    """
    py = joint.p.sum(axis=0)
    pab = coded_joint(joint)
    pb = pab.sum(axis=0, keepdims=True)
    r = pab / np.where(pb > 0, pb, 1.0)
    return py.copy(), r


def mi_gap_check(joint: DiscreteJoint, tol: float = 1e-10,
                 max_iters: int = 10000) -> MiGapResult:
    """Minimize the restricted prediction loss; verify l_star <= gap.

    Raises if the certified bound is violated (it cannot be, by
    construction, unless arithmetic is broken).
    """
    mi_xy = mutual_information(joint.p)
    mi_ab = mutual_information(coded_joint(joint))
    gap = mi_xy - mi_ab

    pay = _aggregate_ay(joint)
    pa = pay.sum(axis=1)
    py = joint.p.sum(axis=0)
    pab = coded_joint(joint)
    f = joint.f
    neg_h = _neg_h_y_given_x(joint)

    psi1, psi2 = witness(joint)
    cur = _loss(pay, f, psi1, psi2, neg_h)
    witness_loss = cur

    def z_of(p1, p2):
        return np.maximum((p1[None, :] * p2[:, f]).sum(axis=1), _TINY)

    iters = 0
    converged = False
    for iters in range(1, max_iters + 1):
        prev = cur

        # psi1 update (fixed-point of the stationarity condition)
        z = z_of(psi1, psi2)
        denom = (pa / z) @ psi2[:, f]            # (ny,)
        cand = np.where(denom > 0, py / np.maximum(denom, _TINY), 0.0)
        psi1, cur = _accept(pay, f, psi1, cand, psi2, None, cur, neg_h)

        # psi2 update
        z = z_of(psi1, psi2)
        s1 = np.zeros(psi2.shape[1])
        np.add.at(s1, f, psi1)
        denom2 = (pa / z)[:, None] * s1[None, :]
        cand2 = np.where(denom2 > 0, pab / np.maximum(denom2, _TINY), 0.0)
        psi2, cur = _accept(pay, f, psi1, None, psi2, cand2, cur, neg_h)

        if prev - cur < tol:
            converged = True
            break

    l_star = cur
    if l_star > gap + 1e-9:
        raise AssertionError(
            f"bound violated: l_star={l_star!r} > gap={gap!r}")
    return MiGapResult(l_star=l_star, gap=gap, witness_loss=witness_loss,
                       mi_xy=mi_xy, mi_ab=mi_ab, iters=iters,
                       converged=converged)


def _accept(pay, f, psi1, cand1, psi2, cand2, cur, neg_h):
    """Safeguarded update of one factor: geometric backtracking toward
    the current iterate until the loss does not increase."""
    old = psi1 if cand2 is None else psi2
    cand = cand1 if cand2 is None else cand2
    for _ in range(50):
        if cand2 is None:
            val = _loss(pay, f, cand, psi2, neg_h)
        else:
            val = _loss(pay, f, psi1, cand, neg_h)
        if val <= cur:
            return cand, val
        cand = np.sqrt(np.maximum(cand, 0.0) * np.maximum(old, 0.0))
    return old, cur


def _random_table(rng, nx: int, nu: int, ny: int) -> np.ndarray:
    p3 = rng.gamma(1.0, size=(nx, nu, ny))
    return p3 / p3.sum()


def random_instance(seed: int, nx: int = 4, nu: int = 4, ny: int = 4,
                    n_a: int = 2, n_b: int = 2) -> DiscreteJoint:
    """Random transition table with random small codebooks."""
    rng = np.random.default_rng([seed, 97])
    p3 = _random_table(rng, nx, nu, ny)
    e = rng.integers(0, n_a, size=nx * nu)
    f = rng.integers(0, n_b, size=ny)
    return DiscreteJoint.from_triple(p3, e, f)


def injective_instance(seed: int, nx: int = 4, nu: int = 4,
                       ny: int = 4) -> DiscreteJoint:
    """Lossless codes on both sides: the gap must vanish."""
    rng = np.random.default_rng([seed, 98])
    p3 = _random_table(rng, nx, nu, ny)
    return DiscreteJoint.from_triple(p3, np.arange(nx * nu), np.arange(ny))


def constant_code_instance(seed: int, nx: int = 4, nu: int = 4,
                           ny: int = 4) -> DiscreteJoint:
    """One-symbol input code: the gap equals the full dependence I(X;Y)."""
    rng = np.random.default_rng([seed, 99])
    p3 = _random_table(rng, nx, nu, ny)
    return DiscreteJoint.from_triple(p3, np.zeros(nx * nu, dtype=np.int64),
                                     np.arange(ny))
