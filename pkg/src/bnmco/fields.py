"""Composite potential fields over configurations.

A forward field attracts toward a task-space goal box, a backward field
toward the start configuration; both add the magnified collision field and
the joint-limit barrier.  The annealed Boltzmann density over a field is
only ever used unnormalized; every consumer is ratio-based, so the
partition function cancels.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import environment, kinematics
from .util import wrap_angle

FORWARD = "forward"
BACKWARD = "backward"

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GoalConstraint:
    """Task-space box with per-coordinate quadratic penalty factors.

    Coordinates flagged angular are compared on the circle (shortest
    wrapped violation); a coordinate with ``x_min == x_max`` is an equality
    constraint.
    """

    x_min: np.ndarray
    x_max: np.ndarray
    lam: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        for name in ("x_min", "x_max", "lam"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=bool))
        if not (self.x_min.shape == self.x_max.shape == self.lam.shape == self.angular.shape):
            raise ValueError("goal constraint vectors must share a shape")
        if not np.all(self.x_min <= self.x_max):
            raise ValueError("x_min must be <= x_max elementwise")
        if np.any(self.lam <= 0):
            raise ValueError("penalty factors must be > 0")


@dataclass(frozen=True)
class StartConstraint:
    """Quadratic form (q - theta0)^T M (q - theta0) with M symmetric PSD."""

    theta0: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        theta0 = np.asarray(self.theta0, dtype=float)
        M = np.asarray(self.M, dtype=float)
        if M.shape != (theta0.size, theta0.size):
            raise ValueError("M must be D x D")
        if not np.allclose(M, M.T, atol=1e-9):
            raise ValueError("M must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (M + M.T))) < -1e-9:
            raise ValueError("M must be positive semidefinite")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "M", M)


@dataclass
class Annealer:
    """Sharpness schedule rho(i) = rho0 * (i + 1)^eta_rho, i = MCO iteration."""

    rho0: float = 5.0
    eta_rho: float = 0.5
    i: int = 0

    def __post_init__(self):
        if self.rho0 <= 0 or self.eta_rho < 0 or self.i < 0:
            raise ValueError("need rho0 > 0, eta_rho >= 0, i >= 0")

    @property
    def rho(self):
        return self.rho0 * (self.i + 1) ** self.eta_rho

    def advanced(self, steps=1):
        return Annealer(self.rho0, self.eta_rho, self.i + steps)


def goal_penalty_batch(gc, X):
    """Vectorized box penalty for task states X of shape (n, K)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    below = np.zeros_like(X)
    above = np.zeros_like(X)
    lin = ~gc.angular
    below[:, lin] = np.maximum(gc.x_min[lin] - X[:, lin], 0.0)
    above[:, lin] = np.maximum(X[:, lin] - gc.x_max[lin], 0.0)
    if np.any(gc.angular):
        ang = gc.angular
        width = gc.x_max[ang] - gc.x_min[ang]
        u = np.mod(X[:, ang] - gc.x_min[ang], TWO_PI)
        outside = (u > width) & (width < TWO_PI)
        over = u - width           # overshoot past x_max going forward
        under = TWO_PI - u         # shortfall reaching back to x_min
        above[:, ang] = np.where(outside & (over <= under), over, 0.0)
        below[:, ang] = np.where(outside & (under < over), under, 0.0)
    return np.sum(gc.lam * (below**2 + above**2), axis=1)


def goal_penalty(gc, x):
    """L2 penalty of the task-space box; zero on the box, quadratic outside."""
    x = np.asarray(x, dtype=float)
    if x.size != gc.x_min.size:
        raise ValueError("task state dimension mismatch")
    return float(goal_penalty_batch(gc, x[None, :])[0])


def start_penalty_batch(sc, Q):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    diff = Q - sc.theta0
    return np.einsum("nd,de,ne->n", diff, sc.M, diff)


def start_penalty(sc, q):
    q = np.asarray(q, dtype=float)
    if q.size != sc.theta0.size:
        raise ValueError("configuration dimension mismatch")
    return float(start_penalty_batch(sc, q[None, :])[0])


@dataclass(frozen=True)
class PotentialField:
    """One direction of the bidirectional field pair.

    Forward fields carry a goal constraint, backward fields a start
    constraint; both share the robot, obstacles, and collision parameters.
    """

    direction: str
    model: kinematics.RobotModel
    obstacles: tuple
    collision: environment.CollisionParams
    goal: GoalConstraint = None
    start: StartConstraint = None
    tol_constraint: float = 1e-3

    def __post_init__(self):
        if self.direction == FORWARD:
            if self.goal is None or self.start is not None:
                raise ValueError("forward field needs exactly a goal constraint")
        elif self.direction == BACKWARD:
            if self.start is None or self.goal is not None:
                raise ValueError("backward field needs exactly a start constraint")
        else:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.tol_constraint < 0:
            raise ValueError("tol_constraint must be >= 0")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    def constraint_penalty_batch(self, Q):
        if self.direction == FORWARD:
            X = kinematics.forward_kinematics_batch(self.model, Q)
            return goal_penalty_batch(self.goal, X)
        return start_penalty_batch(self.start, Q)

    def value_batch(self, Q):
        """Field values for configurations Q (n, D); inf absorbs the sum."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        penalty = self.constraint_penalty_batch(Q)
        coll = environment.collision_field_batch(self.model, self.obstacles,
                                                 self.collision, Q)
        limits = kinematics.joint_limit_cost_batch(self.model, Q)
        return penalty + self.collision.lambda_c * coll + limits

    def value(self, q):
        return float(self.value_batch(np.asarray(q, dtype=float)[None, :])[0])

    def density_batch(self, annealer, Q):
        """Unnormalized annealed density exp(-rho * field); 0 where infinite."""
        v = self.value_batch(Q)
        out = np.zeros_like(v)
        finite = np.isfinite(v)
        out[finite] = np.exp(-annealer.rho * v[finite])
        return out

    def density(self, annealer, q):
        return float(self.density_batch(annealer, np.asarray(q, dtype=float)[None, :])[0])

    def satisfied_mask(self, Q):
        """Constraint satisfaction: penalty within tol, collision-free, in limits."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        penalty = self.constraint_penalty_batch(Q)
        coll = environment.collision_field_batch(self.model, self.obstacles,
                                                 self.collision, Q)
        limits_ok = kinematics.within_limits_batch(self.model, Q)
        return (penalty <= self.tol_constraint) & (coll == 0.0) & limits_ok

    def is_satisfied(self, q):
        return bool(self.satisfied_mask(np.asarray(q, dtype=float)[None, :])[0])


def field_value(pf, q):
    return pf.value(q)


def unnormalized_density(pf, annealer, q):
    return pf.density(annealer, q)


def is_satisfied(pf, q):
    return pf.is_satisfied(q)
