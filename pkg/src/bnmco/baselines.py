"""Comparison planners sharing the scenario types and safety predicate:
bidirectional RRT-Connect, PRM with Dijkstra queries, and numerical
potential-field descent.

All three consume the same Scenario and the same segment_safe local
planner, and every success re-verifies with the shared trajectory checker
before it is reported.
"""

from dataclasses import dataclass

import numpy as np

from . import environment, kinematics
from .errors import GoalSamplingError
from .pathfinder import Trajectory, dijkstra, verify_trajectory

TRAPPED, ADVANCED, REACHED = 0, 1, 2


@dataclass(frozen=True)
class BaselineConfig:
    planner: str = "rrt-connect"
    step_size: float = 0.2          # extension step; also the descent step
    max_iterations: int = 3000
    prm_samples: int = 400
    prm_k: int = 10
    kinetic_a: np.ndarray = None    # None -> 0.5 * I at the scenario's D
    descent_steps: int = 150
    fd_epsilon: float = 1e-4
    t_waypoints: int = 20           # waypoint count of the descent chain
    goal_attempts: int = 10000      # rejection-sampling cap for goal configs

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.kinetic_a is not None:
            A = np.asarray(self.kinetic_a, dtype=float)
            if not np.allclose(A, A.T, atol=1e-9) or \
                    np.min(np.linalg.eigvalsh(A)) <= 0:
                raise ValueError("kinetic_a must be symmetric positive-definite")
            object.__setattr__(self, "kinetic_a", A)


def _kinetic_matrix(config, dof):
    if config.kinetic_a is not None:
        return config.kinetic_a
    return 0.5 * np.eye(dof)


def _sample_goal_config(scenario, pf_fwd, rng, attempts):
    """Uniform joint draws until one satisfies the goal constraint."""
    model = scenario.robot
    batch = 256
    seen = 0
    while seen < attempts:
        n = min(batch, attempts - seen)
        Q = rng.uniform(model.joint_min, model.joint_max, size=(n, model.dof))
        ok = pf_fwd.satisfied_mask(Q)
        hits = np.flatnonzero(ok)
        if hits.size:
            return Q[hits[0]]
        seen += n
    raise GoalSamplingError(
        f"no goal-satisfying configuration in {attempts} draws")


def _collision_free_mask(scenario, params, Q):
    coll = environment.collision_field_batch(scenario.robot,
                                             scenario.obstacles,
                                             params.collision(), Q)
    limits = kinematics.within_limits_batch(scenario.robot, Q)
    return (coll == 0.0) & limits


class _Tree:
    def __init__(self, root):
        self.configs = [np.asarray(root, dtype=float)]
        self.parents = [-1]

    def nearest(self, q):
        pts = np.asarray(self.configs)
        return int(np.argmin(np.linalg.norm(pts - q, axis=1)))

    def add(self, q, parent):
        self.configs.append(q)
        self.parents.append(parent)
        return len(self.configs) - 1

    def path_to_root(self, index):
        chain = []
        while index >= 0:
            chain.append(self.configs[index])
            index = self.parents[index]
        return chain


def _extend(tree, q_target, scenario, params, config, rng):
    """One RRT extension step; returns (status, new index or -1)."""
    near_idx = tree.nearest(q_target)
    q_near = tree.configs[near_idx]
    gap = q_target - q_near
    dist = np.linalg.norm(gap)
    if dist < 1e-12:
        return REACHED, near_idx
    if dist <= config.step_size:
        q_new = q_target
        status = REACHED
    else:
        q_new = q_near + (config.step_size / dist) * gap
        status = ADVANCED
    if not environment.segment_safe(scenario.robot, scenario.obstacles,
                                    params.collision(), q_near, q_new, rng):
        return TRAPPED, -1
    return status, tree.add(q_new, near_idx)


def _connect(tree, q_target, scenario, params, config, rng, deadline):
    status = ADVANCED
    idx = -1
    while status == ADVANCED:
        if deadline is not None:
            deadline.check()
        status, idx = _extend(tree, q_target, scenario, params, config, rng)
    return status, idx


def rrt_connect(scenario, config, params, rng, deadline=None):
    """Bidirectional extend/connect with segment_safe as the local planner.

    The goal tree is rooted at a rejection-sampled goal-satisfying
    configuration.  Returns (Trajectory, diagnostics) on success, with
    trajectory=None at the iteration budget.
    """
    pf_fwd = scenario.forward_field(params)
    pf_bwd = scenario.backward_field(params)
    start = scenario.start.theta0
    diag = {"planner": "rrt-connect"}
    try:
        goal = _sample_goal_config(scenario, pf_fwd, rng,
                                   config.goal_attempts)
    except GoalSamplingError as err:
        diag["failure"] = str(err)
        return None, diag
    tree_a, tree_b = _Tree(start), _Tree(goal)
    a_is_start = True
    model = scenario.robot
    for it in range(config.max_iterations):
        if deadline is not None:
            deadline.check()
        q_rand = rng.uniform(model.joint_min, model.joint_max)
        status, new_idx = _extend(tree_a, q_rand, scenario, params, config,
                                  rng)
        if status != TRAPPED:
            q_new = tree_a.configs[new_idx]
            status_b, idx_b = _connect(tree_b, q_new, scenario, params,
                                       config, rng, deadline)
            if status_b == REACHED:
                part_a = tree_a.path_to_root(new_idx)[::-1]
                part_b = tree_b.path_to_root(idx_b)
                waypoints = part_a + part_b if a_is_start \
                    else part_b[::-1] + part_a[::-1]
                traj = Trajectory(np.asarray(waypoints))
                diag["iterations"] = it + 1
                diag["tree_sizes"] = [len(tree_a.configs),
                                      len(tree_b.configs)]
                if verify_trajectory(model, scenario.obstacles,
                                     params.collision(), pf_fwd, pf_bwd,
                                     traj):
                    return traj, diag
                diag["failure"] = "connect result failed re-verification"
                return None, diag
        tree_a, tree_b = tree_b, tree_a
        a_is_start = not a_is_start
    diag["failure"] = "iteration budget exhausted"
    diag["tree_sizes"] = [len(tree_a.configs), len(tree_b.configs)]
    return None, diag


def prm(scenario, config, params, rng, deadline=None):
    """Probabilistic roadmap: collision-free vertices plus the start and a
    goal-satisfying vertex, k-nearest segment-safe edges weighted by
    Euclidean length, then a Dijkstra query."""
    pf_fwd = scenario.forward_field(params)
    pf_bwd = scenario.backward_field(params)
    model = scenario.robot
    diag = {"planner": "prm"}
    try:
        goal = _sample_goal_config(scenario, pf_fwd, rng,
                                   config.goal_attempts)
    except GoalSamplingError as err:
        diag["failure"] = str(err)
        return None, diag
    vertices = [scenario.start.theta0, goal]
    attempts = 0
    cap = 50 * max(config.prm_samples, 1)
    while len(vertices) - 2 < config.prm_samples and attempts < cap:
        if deadline is not None:
            deadline.check()
        n = min(512, cap - attempts)
        Q = rng.uniform(model.joint_min, model.joint_max, size=(n, model.dof))
        ok = _collision_free_mask(scenario, params, Q)
        for q in Q[ok][:config.prm_samples - (len(vertices) - 2)]:
            vertices.append(q)
        attempts += n
    V = np.asarray(vertices)
    n = len(V)
    diag["vertices"] = n
    W = np.full((n, n), np.inf)
    np.fill_diagonal(W, 0.0)
    k = min(config.prm_k, n - 1)
    dists = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2)
    np.fill_diagonal(dists, np.inf)
    order = np.argsort(dists, axis=1, kind="stable")[:, :k]
    checked = set()
    for i in range(n):
        for j in order[i]:
            j = int(j)
            key = (min(i, j), max(i, j))
            if key in checked:
                continue
            checked.add(key)
            if deadline is not None:
                deadline.check()
            if environment.segment_safe(model, scenario.obstacles,
                                        params.collision(), V[i], V[j], rng):
                W[i, j] = W[j, i] = dists[i, j]
    lengths, paths = dijkstra(W, 0)
    diag["edges_checked"] = len(checked)
    if not np.isfinite(lengths[1]):
        diag["failure"] = "goal vertex unreachable in the roadmap"
        return None, diag
    traj = Trajectory(V[paths[1]])
    if verify_trajectory(model, scenario.obstacles, params.collision(),
                         pf_fwd, pf_bwd, traj):
        diag["roadmap_length"] = float(lengths[1])
        return traj, diag
    diag["failure"] = "roadmap path failed re-verification"
    return None, diag


_FIELD_CAP = 1e6  # finite stand-in for the infinite sentinel in FD gradients


def _capped_value(pf, q):
    v = pf.value(q)
    return min(v, _FIELD_CAP)


def _fd_gradient(pf, A, q, anchor, h):
    """Central finite differences of field + kinetic energy, inf-capped."""
    g = np.zeros_like(q)
    for d in range(q.size):
        lo = q.copy()
        hi = q.copy()
        lo[d] -= h
        hi[d] += h
        f_hi = _capped_value(pf, hi) + (hi - anchor) @ A @ (hi - anchor)
        f_lo = _capped_value(pf, lo) + (lo - anchor) @ A @ (lo - anchor)
        g[d] = (f_hi - f_lo) / (2.0 * h)
    return g


def _prox_descent(pf, A, anchor, config):
    """Gradient descent on field + ||q - anchor||^2_A with a nominal step
    length and halving backtracks; steps are accepted only while they
    improve, so the objective is nonincreasing along the iterates."""
    q = np.asarray(anchor, dtype=float).copy()
    obj = _capped_value(pf, q)
    for _ in range(config.descent_steps):
        g = _fd_gradient(pf, A, q, anchor, config.fd_epsilon)
        norm = np.linalg.norm(g)
        if norm < 1e-12:
            break
        step = config.step_size
        direction = g / norm
        improved = False
        for _ in range(8):
            cand = q - step * direction
            cand_obj = _capped_value(pf, cand) \
                + (cand - anchor) @ A @ (cand - anchor)
            if cand_obj < obj - 1e-9:
                q, obj, improved = cand, cand_obj, True
                break
            step *= 0.5
        if not improved:
            break  # stalled: no scale of this direction improves
    return q


def pf_descent(scenario, config, params, deadline=None):
    """Numerical potential-field baseline: a proximal waypoint chain grown
    from the start, forward toward the goal and backward toward the start
    in alternation.  Deterministic; fails by stalling in local minima."""
    pf_fwd = scenario.forward_field(params)
    pf_bwd = scenario.backward_field(params)
    A = _kinetic_matrix(config, scenario.robot.dof)
    T = config.t_waypoints
    mid = T // 2
    wp = {mid: scenario.start.theta0.copy()}
    diag = {"planner": "pf-descent"}
    t_f, t_b = mid + 1, mid - 1
    while t_f <= T or t_b >= 0:
        if deadline is not None:
            deadline.check()
        if t_f <= T:
            wp[t_f] = _prox_descent(pf_fwd, A, wp[t_f - 1], config)
            t_f += 1
        if t_b >= 0:
            wp[t_b] = _prox_descent(pf_bwd, A, wp[t_b + 1], config)
            t_b -= 1
    chain = [wp[t] for t in range(T + 1)]
    # collapse consecutive stalls so the trajectory stays tidy
    dedup = [chain[0]]
    for q in chain[1:]:
        if not np.array_equal(q, dedup[-1]):
            dedup.append(q)
    traj = Trajectory(np.asarray(dedup))
    diag["endpoint_satisfied"] = pf_fwd.is_satisfied(traj.waypoints[-1])
    if diag["endpoint_satisfied"] and verify_trajectory(
            scenario.robot, scenario.obstacles, params.collision(),
            pf_fwd, pf_bwd, traj):
        return traj, diag
    diag["failure"] = "descent stalled before satisfying the goal"
    return None, diag
