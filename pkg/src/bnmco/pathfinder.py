"""Bidirectional planning on top of the expanded Bayes nets.

Both nets grow from one uniformly drawn seed set, so their seed-layer
nodes can be paired by the seed identities they absorbed.  Planning then
reduces to graph search: build a roadmap around each net's satisfying
node, run Dijkstra from both origins, join the roadmaps across seed-sharing
node pairs, and walk the cheapest joined paths while extracting a
waypoint-level trajectory whose segments all pass the continuous-time
safety check.
"""

import hashlib
import heapq
import time
from dataclasses import dataclass

import numpy as np

from . import environment
from .bayesnet import SeedSet, exp_bayes_net
from .errors import (AssemblyFailedError, NoSatisfyingNodeError,
                     PairingFailedError, PlanningFailedError,
                     SeedingFailedError)
from .fields import Annealer
from .gmm import GAMMA_FLOOR
from .util import RNG_ALGORITHM

UNREACHABLE = np.inf

# deterministic derivation key for trajectory re-verification draws
_VERIFY_KEY = 0x5AFE


@dataclass
class Roadmap:
    """Weight-matrix view of the net component around its satisfying node.

    ``node_ids[0]`` is the origin (the constraint-satisfying node); weights
    are symmetric, inf marks absent edges, diagonal zero.
    """

    net: object
    node_ids: list
    weights: np.ndarray

    @property
    def origin(self):
        return 0

    def node(self, index):
        return self.net.node(self.node_ids[index])


@dataclass(frozen=True)
class Bridge:
    s_index: int       # roadmap index on the start side
    g_index: int       # roadmap index on the goal side
    length: float
    shared_ids: np.ndarray


@dataclass
class PathCandidate:
    nodes: list                 # NetNode refs, start-side origin ... goal-side origin
    length: float
    bridge: Bridge
    start_length: float
    goal_length: float


@dataclass
class Trajectory:
    waypoints: np.ndarray

    def __post_init__(self):
        self.waypoints = np.atleast_2d(np.asarray(self.waypoints, dtype=float))

    def arc_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0),
                                           axis=1)))


def uniform_seed(pf_fwd, pf_bwd, model, n, rng, annealer=None):
    """Draw n uniform configurations and keep those with non-negligible
    likelihood under at least one field.

    Survivors keep their draw index as a permanent identity; likelihoods
    are evaluated at the initial annealer state.
    """
    if n < 2:
        raise ValueError("need at least two seed draws")
    configs = rng.uniform(model.joint_min, model.joint_max,
                          size=(n, model.dof))
    annealer = annealer or Annealer()
    keep = np.zeros(n, dtype=bool)
    for pf in (pf_fwd, pf_bwd):
        dens = pf.density_batch(annealer, configs)
        dmax = dens.max() if dens.size else 0.0
        if dmax > 0:
            keep |= dens >= GAMMA_FLOOR * dmax
    if not np.any(keep):
        raise SeedingFailedError("every uniform seed was deleted by both fields")
    return SeedSet(configs=configs[keep], ids=np.flatnonzero(keep))


def roadmap_construct(net, pf=None):
    """Breadth-first component of the satisfying node, direction ignored.

    Net edges are directed layer-to-layer but path queries traverse them
    both ways, so the weight matrix is filled symmetrically.
    """
    if not net.terminated or net.satisfying_id is None:
        raise NoSatisfyingNodeError(
            f"{net.direction} net has no constraint-satisfying node")
    adj = {}
    for e in net.edges:
        adj.setdefault(e.from_id, []).append((e.to_id, e.length))
        adj.setdefault(e.to_id, []).append((e.from_id, e.length))
    order = [net.satisfying_id]
    seen = {net.satisfying_id}
    head = 0
    while head < len(order):
        cur = order[head]
        head += 1
        for nxt, _ in sorted(adj.get(cur, [])):
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
    index = {nid: i for i, nid in enumerate(order)}
    n = len(order)
    W = np.full((n, n), UNREACHABLE)
    np.fill_diagonal(W, 0.0)
    for e in net.edges:
        if e.from_id in index and e.to_id in index:
            i, j = index[e.from_id], index[e.to_id]
            w = min(e.length, W[i, j])
            W[i, j] = W[j, i] = w
    return Roadmap(net=net, node_ids=order, weights=W)


def dijkstra(weights, source):
    """Single-source shortest paths on a nonnegative weight matrix.

    Returns (lengths, paths): paths run source -> node; unreachable nodes
    get inf length and None path.
    """
    W = np.asarray(weights, dtype=float)
    n = W.shape[0]
    dist = np.full(n, UNREACHABLE)
    prev = np.full(n, -1, dtype=int)
    done = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        row = W[u]
        for v in range(n):
            w = row[v]
            if v == u or not np.isfinite(w):
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    paths = []
    for v in range(n):
        if not np.isfinite(dist[v]):
            paths.append(None)
            continue
        chain = [v]
        while chain[-1] != source:
            chain.append(int(prev[chain[-1]]))
        paths.append(chain[::-1])
    return dist, paths


def pair_connections(map_s, map_g, seeds=None):
    """Bridge every start-side/goal-side node pair sharing a seed identity.

    Bridge length is the negative log of the shared seeds' likelihood mass
    under the goal-side node, falling back to the geometric mean of the two
    node importances when weights are missing.
    """
    bridges = []
    for i in range(len(map_s.node_ids)):
        ns = map_s.node(i)
        if ns.seed_ids is None or ns.seed_ids.size == 0:
            continue
        for j in range(len(map_g.node_ids)):
            ng = map_g.node(j)
            if ng.seed_ids is None or ng.seed_ids.size == 0:
                continue
            shared = np.intersect1d(ns.seed_ids, ng.seed_ids,
                                    assume_unique=True)
            if shared.size == 0:
                continue
            if ng.seed_weights is not None:
                mass = float(ng.seed_weights[np.isin(ng.seed_ids, shared)].sum())
            else:
                mass = 0.0
            if mass > 0:
                length = -np.log(mass)
            else:
                length = -0.5 * np.log(ns.importance * ng.importance)
            bridges.append(Bridge(s_index=i, g_index=j, length=float(length),
                                  shared_ids=shared))
    if not bridges:
        raise PairingFailedError("the two nets share no seed waypoint")
    return bridges


def assemble_paths(bridges, dij_s, dij_g, map_s, map_g):
    """One candidate per bridge with both endpoints reachable, sorted by
    total length (start side + bridge + goal side), ties by bridge index."""
    len_s, paths_s = dij_s
    len_g, paths_g = dij_g
    candidates = []
    for bridge in bridges:
        ls = len_s[bridge.s_index]
        lg = len_g[bridge.g_index]
        if not (np.isfinite(ls) and np.isfinite(lg)):
            continue
        side_s = [map_s.node(i) for i in paths_s[bridge.s_index]]
        side_g = [map_g.node(i) for i in paths_g[bridge.g_index]]
        nodes = side_s + side_g[::-1]
        candidates.append(PathCandidate(nodes=nodes,
                                        length=float(ls + bridge.length + lg),
                                        bridge=bridge,
                                        start_length=float(ls),
                                        goal_length=float(lg)))
    if not candidates:
        raise AssemblyFailedError("no bridge had both endpoints reachable")
    candidates.sort(key=lambda c: c.length)  # stable: ties keep bridge order
    return candidates


def iter_trajectories(candidate, model, obstacles, cparams, rng,
                      deadline=None, max_expansion=50):
    """Depth-first waypoint extraction along a candidate's node sequence,
    yielding every trajectory the bounded search reaches.

    From a satisfying waypoint of the first node, each step tries the next
    node's cached waypoints nearest-first, keeping only segment-safe links;
    a leaf requires landing on a satisfying waypoint of the last node.  The
    generator resumes the search after each yield, so a caller whose
    stricter re-verification rejects one extraction can ask for the next.
    """
    nodes = candidate.nodes
    last = len(nodes) - 1

    def expand(i, wp, prefix):
        if deadline is not None:
            deadline.check()
        nxt = nodes[i + 1]
        if i + 1 == last:
            pool_idx = nxt.satisfying
        else:
            pool_idx = np.arange(len(nxt.waypoints))
        if pool_idx.size == 0:
            return
        pool = nxt.waypoints[pool_idx]
        order = np.argsort(np.linalg.norm(pool - wp, axis=1), kind="stable")
        for j in order[:max_expansion]:
            q_next = pool[j]
            if not environment.segment_safe(model, obstacles, cparams,
                                            wp, q_next, rng):
                continue
            if i + 1 == last:
                yield prefix + [q_next]
            else:
                yield from expand(i + 1, q_next, prefix + [q_next])

    roots = nodes[0].waypoints[nodes[0].satisfying]
    for root in roots[:max_expansion]:
        if last == 0:
            yield Trajectory(np.asarray([root]))
            continue
        for chain in expand(0, root, [root]):
            yield Trajectory(np.vstack(chain))


def find_trajectory(candidate, model, obstacles, cparams, rng,
                    deadline=None, max_expansion=50):
    """First trajectory of the bounded depth-first search, or None."""
    return next(iter_trajectories(candidate, model, obstacles, cparams, rng,
                                  deadline=deadline,
                                  max_expansion=max_expansion), None)


def _verification_rng(traj):
    """Generator derived from the waypoint bytes, so a given trajectory
    always re-verifies against the same intermediate draws."""
    digest = hashlib.sha256(np.ascontiguousarray(traj.waypoints).tobytes())
    key = int.from_bytes(digest.digest()[:8], "little")
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([_VERIFY_KEY, key])))


def verify_trajectory(model, obstacles, cparams, pf_fwd, pf_bwd, traj):
    """Shared trajectory checker used by every planner before reporting
    success: endpoint constraint satisfaction plus per-segment safety with
    both Beta draws and a fixed uniform time grid."""
    wp = traj.waypoints
    if len(wp) < 1:
        return False
    if not pf_bwd.is_satisfied(wp[0]) or not pf_fwd.is_satisfied(wp[-1]):
        return False
    rng = _verification_rng(traj)
    for a, b in zip(wp[:-1], wp[1:]):
        if not environment.segment_safe(model, obstacles, cparams, a, b,
                                        rng,
                                        extra_taus=environment.SAFETY_GRID):
            return False
    return True


def _phase(timings, name, t0):
    timings[name] = round((time.perf_counter() - t0) * 1000.0, 3)
    return time.perf_counter()


def plan(scenario, params, seed, deadline=None):
    """Full bidirectional pipeline; returns (Trajectory, diagnostics).

    Raises PlanningFailedError with phase attribution when any stage gives
    up; seeding/pairing/assembly failures earn one retry with fresh streams
    and a doubled seed batch.
    """
    pf_fwd = scenario.forward_field(params)
    pf_bwd = scenario.backward_field(params)
    model = scenario.robot
    obstacles = scenario.obstacles
    cparams = params.collision()
    config = params.expansion()
    diagnostics = {"rng": RNG_ALGORITHM, "seed": int(seed), "retries": 0}
    n_seed = config.n_samples
    last_error = None

    for attempt in range(2):
        timings = {}
        diagnostics["retries"] = attempt
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(attempt,))
        rng_seed, rng_fwd, rng_bwd, rng_traj = (
            np.random.Generator(np.random.PCG64(child))
            for child in ss.spawn(4))
        t = time.perf_counter()
        try:
            seeds = uniform_seed(pf_fwd, pf_bwd, model, n_seed, rng_seed,
                                 annealer=Annealer(config.rho0,
                                                   config.eta_rho, 0))
            diagnostics["seed_count"] = len(seeds)
            t = _phase(timings, "seed_ms", t)

            net_fwd = exp_bayes_net(pf_fwd, seeds, config, rng_fwd, deadline)
            t = _phase(timings, "forward_ms", t)
            net_bwd = exp_bayes_net(pf_bwd, seeds, config, rng_bwd, deadline)
            t = _phase(timings, "backward_ms", t)
            diagnostics["forward_net"] = _net_stats(net_fwd)
            diagnostics["backward_net"] = _net_stats(net_bwd)
            diagnostics["phases_ms"] = timings
            if not (net_fwd.terminated and net_bwd.terminated):
                raise PlanningFailedError(
                    "expansion exhausted its iterations without satisfying "
                    "the constraints", phase="expansion",
                    diagnostics=diagnostics)

            map_g = roadmap_construct(net_fwd)
            map_s = roadmap_construct(net_bwd)
            t = _phase(timings, "roadmap_ms", t)
            dij_s = dijkstra(map_s.weights, map_s.origin)
            dij_g = dijkstra(map_g.weights, map_g.origin)
            t = _phase(timings, "dijkstra_ms", t)

            bridges = pair_connections(map_s, map_g, seeds)
            diagnostics["bridge_count"] = len(bridges)
            t = _phase(timings, "pairing_ms", t)
            candidates = assemble_paths(bridges, dij_s, dij_g, map_s, map_g)
            diagnostics["candidate_count"] = len(candidates)
            diagnostics["candidate_lengths"] = [round(c.length, 9)
                                                for c in candidates]
            t = _phase(timings, "assembly_ms", t)

            tried = 0
            for cand in candidates:
                if deadline is not None:
                    deadline.check()
                tried += 1
                extractions = 0
                for traj in iter_trajectories(cand, model, obstacles,
                                              cparams, rng_traj, deadline):
                    extractions += 1
                    if verify_trajectory(model, obstacles, cparams,
                                         pf_fwd, pf_bwd, traj):
                        diagnostics["candidates_tried"] = tried
                        _phase(timings, "trajectory_ms", t)
                        diagnostics["success"] = True
                        return traj, diagnostics
                    if extractions >= 20:
                        break  # stricter checks keep rejecting; next bridge
            diagnostics["candidates_tried"] = tried
            _phase(timings, "trajectory_ms", t)
            raise PlanningFailedError("every path candidate was exhausted",
                                      phase="trajectory",
                                      diagnostics=diagnostics)
        except (SeedingFailedError, PairingFailedError,
                AssemblyFailedError) as err:
            last_error = err
            n_seed *= 2
            continue
    phase = {SeedingFailedError: "seeding", PairingFailedError: "pairing",
             AssemblyFailedError: "assembly"}[type(last_error)]
    diagnostics["success"] = False
    raise PlanningFailedError(str(last_error), phase=phase,
                              diagnostics=diagnostics)


def _net_stats(net):
    return {"nodes": len(net.nodes), "edges": len(net.edges),
            "layers": net.n_layers(), "iterations": net.iterations,
            "terminated": net.terminated}
