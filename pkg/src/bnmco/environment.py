"""Planar obstacle world: analytic signed distances, buffered collision
cost, and Beta-sampled continuous-time segment safety.

Distances are exact for circles and axis-aligned boxes (negative inside).
A waypoint's collision field sums the buffered cost over all collision-check
balls at a single instant; the continuous-time part lives in
``segment_safe``, which draws intermediate interpolation times from a
symmetric Beta distribution.
"""

from dataclasses import dataclass

import numpy as np

from . import kinematics

CIRCLE = "circle"
BOX = "box"

# fixed interior time grid used by the shared trajectory checker on top of
# the Beta draws; uniform so no segment region goes unprobed
SAFETY_GRID = np.linspace(0.0, 1.0, 18)[1:-1]


@dataclass(frozen=True)
class Obstacle:
    shape: str
    center: np.ndarray = None     # circle
    radius: float = 0.0           # circle
    lo: np.ndarray = None         # box min corner
    hi: np.ndarray = None         # box max corner

    def __post_init__(self):
        if self.shape == CIRCLE:
            object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
            if self.radius <= 0:
                raise ValueError("circle radius must be > 0")
        elif self.shape == BOX:
            lo = np.asarray(self.lo, dtype=float)
            hi = np.asarray(self.hi, dtype=float)
            if not np.all(lo < hi):
                raise ValueError("box min corner must be < max corner elementwise")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        else:
            raise ValueError(f"unknown obstacle shape {self.shape!r}")


def circle(center, radius):
    return Obstacle(shape=CIRCLE, center=center, radius=radius)


def box(lo, hi):
    return Obstacle(shape=BOX, lo=lo, hi=hi)


@dataclass(frozen=True)
class CollisionParams:
    """Buffer width, collision magnifier, and the Beta(beta, beta) time law."""

    epsilon: float = 0.05
    lambda_c: float = 10.0
    beta: float = 0.2
    n_intermediate: int = 8

    def __post_init__(self):
        if self.epsilon <= 0 or self.lambda_c <= 0 or self.beta <= 0:
            raise ValueError("epsilon, lambda_c and beta must be > 0")
        if self.n_intermediate < 0:
            raise ValueError("n_intermediate must be >= 0")


def signed_distance_batch(obstacles, P):
    """Minimum signed distance from points ``P`` (n, 2) to any obstacle boundary.

    Empty obstacle list gives +inf everywhere.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    d = np.full(P.shape[0], np.inf)
    for ob in obstacles:
        if ob.shape == CIRCLE:
            di = np.linalg.norm(P - ob.center, axis=1) - ob.radius
        else:
            c = 0.5 * (ob.lo + ob.hi)
            half = 0.5 * (ob.hi - ob.lo)
            q = np.abs(P - c) - half
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(np.max(q, axis=1), 0.0)
            di = outside + inside
        d = np.minimum(d, di)
    return d


def signed_distance(obstacles, p):
    return float(signed_distance_batch(obstacles, np.asarray(p, dtype=float)[None, :])[0])


def collision_cost_batch(d, epsilon):
    """Eq-style buffered cost: 0 past the buffer, quadratic inside it,
    infinite sentinel for penetration."""
    d = np.asarray(d, dtype=float)
    cost = np.zeros_like(d)
    in_buffer = (d >= 0) & (d <= epsilon)
    cost[in_buffer] = (d[in_buffer] - epsilon) ** 2 / (2.0 * epsilon)
    cost[d < 0] = np.inf
    return cost


def collision_cost(d, epsilon):
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    return float(collision_cost_batch(np.asarray([d], dtype=float), epsilon)[0])


def collision_field_batch(model, obstacles, params, Q):
    """Per-configuration collision field: buffered cost summed over CCBs."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    centers = kinematics.ccb_centers_batch(model, Q)      # (n, n_ccb, 2)
    n, n_ccb, _ = centers.shape
    d = signed_distance_batch(obstacles, centers.reshape(n * n_ccb, 2))
    d = d.reshape(n, n_ccb) - model.ccb_radii[None, :]
    return collision_cost_batch(d, params.epsilon).sum(axis=1)


def waypoint_collision_field(model, obstacles, params, q):
    return float(collision_field_batch(model, obstacles, params,
                                       np.asarray(q, dtype=float)[None, :])[0])


def interpolate_segment(q_a, q_b, taus):
    """Linear interpolation q(tau) = (1-tau) q_a + tau q_b, tau of shape (m,)."""
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    taus = np.asarray(taus, dtype=float)[:, None]
    return (1.0 - taus) * q_a + taus * q_b


def segment_safe(model, obstacles, params, q_a, q_b, rng, extra_taus=None):
    """Continuous-time safety of the straight segment between two waypoints.

    True iff both endpoints are collision-free and inside the joint limits,
    and every intermediate configuration at Beta(beta, beta)-drawn times
    (plus any caller-supplied ``extra_taus``) has a zero collision field.
    """
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    if q_a.shape != q_b.shape:
        raise ValueError("segment endpoints must share a dimension")
    ends = np.stack([q_a, q_b])
    if np.any(kinematics.joint_limit_cost_batch(model, ends) > 0):
        return False
    taus = rng.beta(params.beta, params.beta, size=params.n_intermediate)
    if extra_taus is not None:
        taus = np.concatenate([taus, np.asarray(extra_taus, dtype=float)])
    configs = np.vstack([ends, interpolate_segment(q_a, q_b, taus)])
    return bool(np.all(collision_field_batch(model, obstacles, params, configs) == 0.0))
