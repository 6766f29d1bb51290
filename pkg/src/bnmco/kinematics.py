"""Planar robot models: point robot and N-link serial arm.

A configuration is a plain float vector ``q`` of dimension ``D`` (radians
for arm joints, meters for the point robot).  Task states are ``(x, y)``
for the point robot and ``(x, y, phi)`` for the arm, with the end-effector
heading wrapped to (-pi, pi].

All operations are pure; batch variants take ``Q`` of shape ``(n, D)`` and
are the ones the sampling loops call.
"""

from dataclasses import dataclass, field

import numpy as np

from .util import wrap_angle

POINT = "point"
PLANAR_ARM = "planar-arm"

DEFAULT_CCB_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
DEFAULT_CCB_RADIUS = 0.05

INFINITE_COST = np.inf


def default_ccb_layout(n_links, radius=DEFAULT_CCB_RADIUS):
    """Collision-check balls at fractions 1/4..1 of every link."""
    return [(link, f, radius) for link in range(n_links)
            for f in DEFAULT_CCB_FRACTIONS]


@dataclass(frozen=True)
class RobotModel:
    """Planar robot description.

    ``ccb_layout`` entries are ``(link index, offset fraction in [0,1],
    radius)``; the point robot carries exactly one ball at its position.
    """

    kind: str
    joint_min: np.ndarray
    joint_max: np.ndarray
    link_lengths: np.ndarray = None
    base: np.ndarray = None
    ccb_layout: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "joint_min", np.asarray(self.joint_min, dtype=float))
        object.__setattr__(self, "joint_max", np.asarray(self.joint_max, dtype=float))
        if not np.all(self.joint_min < self.joint_max):
            raise ValueError("joint_min must be < joint_max elementwise")
        if self.kind == POINT:
            if self.dof != 2:
                raise ValueError("point robot is 2-dimensional")
            layout = self.ccb_layout or ((0, 0.0, DEFAULT_CCB_RADIUS),)
            if len(layout) != 1:
                raise ValueError("point robot carries exactly one CCB")
            object.__setattr__(self, "base", np.zeros(2))
            object.__setattr__(self, "link_lengths", np.zeros(0))
        elif self.kind == PLANAR_ARM:
            lengths = np.asarray(self.link_lengths, dtype=float)
            if lengths.ndim != 1 or lengths.size == 0 or np.any(lengths <= 0):
                raise ValueError("link_lengths must be positive")
            if lengths.size != self.dof:
                raise ValueError("one joint per link expected")
            object.__setattr__(self, "link_lengths", lengths)
            base = np.zeros(2) if self.base is None else np.asarray(self.base, dtype=float)
            object.__setattr__(self, "base", base)
            layout = self.ccb_layout or tuple(default_ccb_layout(lengths.size))
        else:
            raise ValueError(f"unknown robot kind {self.kind!r}")
        layout = tuple((int(l), float(f), float(r)) for l, f, r in layout)
        for link, frac, radius in layout:
            if radius <= 0:
                raise ValueError("CCB radius must be > 0")
            if not 0.0 <= frac <= 1.0:
                raise ValueError("CCB offset fraction must lie in [0, 1]")
            if self.kind == PLANAR_ARM and not 0 <= link < self.link_lengths.size:
                raise ValueError("CCB link index out of range")
        object.__setattr__(self, "ccb_layout", layout)

    @property
    def dof(self):
        return self.joint_min.size

    @property
    def task_dim(self):
        return 2 if self.kind == POINT else 3

    @property
    def ccb_radii(self):
        return np.array([r for _, _, r in self.ccb_layout])


def _check_dim(model, q):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != model.dof:
        raise ValueError(
            f"configuration has dimension {q.shape[-1]}, model expects {model.dof}"
        )
    return q


def _arm_joint_points(model, Q):
    """Joint positions (n, N+1, 2) of the arm chain for configs Q (n, D)."""
    angles = np.cumsum(Q, axis=1)                      # (n, N)
    steps = model.link_lengths[None, :, None] * np.stack(
        [np.cos(angles), np.sin(angles)], axis=-1
    )                                                  # (n, N, 2)
    pts = np.empty((Q.shape[0], model.link_lengths.size + 1, 2))
    pts[:, 0] = model.base
    pts[:, 1:] = model.base + np.cumsum(steps, axis=1)
    return pts


def forward_kinematics_batch(model, Q):
    """Task states for configurations ``Q`` of shape (n, D)."""
    Q = _check_dim(model, np.atleast_2d(Q))
    if model.kind == POINT:
        return Q.copy()
    pts = _arm_joint_points(model, Q)
    phi = wrap_angle(np.sum(Q, axis=1))
    return np.column_stack([pts[:, -1, 0], pts[:, -1, 1], phi])


def forward_kinematics(model, q):
    """Task state of one configuration: the end of the cumulative-angle chain."""
    return forward_kinematics_batch(model, np.asarray(q, dtype=float)[None, :])[0]


def ccb_centers_batch(model, Q):
    """Collision-check-ball centers, shape (n, n_ccb, 2), in layout order."""
    Q = _check_dim(model, np.atleast_2d(Q))
    if model.kind == POINT:
        return Q[:, None, :].copy()
    pts = _arm_joint_points(model, Q)
    centers = np.empty((Q.shape[0], len(model.ccb_layout), 2))
    for j, (link, frac, _) in enumerate(model.ccb_layout):
        centers[:, j] = pts[:, link] + frac * (pts[:, link + 1] - pts[:, link])
    return centers


def ccb_positions(model, q):
    """(center, radius) pairs for one configuration, in layout order."""
    centers = ccb_centers_batch(model, np.asarray(q, dtype=float)[None, :])[0]
    return [(centers[j], r) for j, (_, _, r) in enumerate(model.ccb_layout)]


def within_limits_batch(model, Q):
    Q = _check_dim(model, np.atleast_2d(Q))
    return np.all((Q >= model.joint_min) & (Q <= model.joint_max), axis=1)


def joint_limit_cost(model, q):
    """0 inside the (inclusive) joint box, the infinite sentinel outside."""
    q = _check_dim(model, np.asarray(q, dtype=float))
    ok = np.all((q >= model.joint_min) & (q <= model.joint_max))
    return 0.0 if ok else INFINITE_COST


def joint_limit_cost_batch(model, Q):
    ok = within_limits_batch(model, Q)
    return np.where(ok, 0.0, INFINITE_COST)
