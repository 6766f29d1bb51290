"""Layered Bayes-net expansion driven by Monte Carlo optimization.

Each iteration samples the current mixture, scores the batch against the
annealed field density, reweights and prunes, clusters the survivors, and
stretches edges from every prior component with captured responsibility
mass into one candidate child per (cluster, prior) pair.  Children whose
sampling budget clears the admission tolerance become net nodes; expansion
stops as soon as an admitted node caches a constraint-satisfying waypoint.

Seed-layer nodes (layer 1) are fit from the shared uniform seed set and
remember the seed identities they absorbed; that memory is what later pairs
the forward and backward nets.
"""

from dataclasses import dataclass, field

import numpy as np

from . import gmm
from .errors import DegenerateBatchError, ExpansionFailedError
from .fields import Annealer
from .gmm import GaussianComponent, LearningFactors, Mixture
from .util import apportion_counts


@dataclass(frozen=True)
class ExpansionConfig:
    n_samples: int = 1600        # batch size N per iteration
    n_mco: int = 30              # max MCO iterations
    knn: int = 5                 # mutual-kNN neighbour count
    etol: int = 5                # admission tolerance on the child budget
    factors: LearningFactors = field(default_factory=LearningFactors)
    rho0: float = 5.0
    eta_rho: float = 0.5

    def __post_init__(self):
        if self.n_samples < 2 or self.etol < 1 or self.n_mco < 1:
            raise ValueError("need n_samples >= 2, etol >= 1, n_mco >= 1")


@dataclass(frozen=True)
class SeedSet:
    """Uniform seed waypoints with permanent integer identities."""

    configs: np.ndarray
    ids: np.ndarray

    def __len__(self):
        return len(self.configs)


@dataclass
class NetNode:
    id: int
    component: GaussianComponent
    importance: float
    layer: int
    waypoints: np.ndarray            # retained samples of the generating cluster
    satisfying: np.ndarray           # indices into waypoints passing the constraint
    seed_ids: np.ndarray = None      # seed identities (layer-1 nodes only)
    seed_weights: np.ndarray = None  # per-seed likelihood mass (layer-1 nodes only)

    def __post_init__(self):
        if self.satisfying is None:
            self.satisfying = np.zeros(0, dtype=int)


@dataclass(frozen=True)
class NetEdge:
    from_id: int
    to_id: int
    length: float


@dataclass
class BayesNet:
    direction: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    terminated: bool = False
    satisfying_id: int = None
    iterations: int = 0

    def node(self, node_id):
        return self.nodes[node_id]

    def n_layers(self):
        return max((n.layer for n in self.nodes), default=0)

    def validate(self):
        """Structural invariants; used by tests, not on the hot path."""
        for e in self.edges:
            a, b = self.nodes[e.from_id], self.nodes[e.to_id]
            assert b.layer == a.layer + 1, "edges must join consecutive layers"
            assert e.length >= 0
        for n in self.nodes:
            assert 0.0 <= n.importance <= 1.0 + 1e-12
            assert len(n.waypoints) > 0


def stretch_edge(resp, cluster_idx, m, n_batch):
    """Edge length, child importance, and child budget for one
    (cluster, prior) pair.

    Length is the negative log of the responsibility mass the prior
    captured inside the cluster; the caller skips pairs with zero mass.
    """
    cluster_idx = np.asarray(cluster_idx, dtype=int)
    mass = resp.gamma[cluster_idx, m].sum()
    if not mass > 0:
        raise DegenerateBatchError("zero captured mass: no edge")
    length = -np.log(mass)
    pi_child = np.exp(-length)
    n_child = int(np.rint(n_batch * pi_child))
    return float(length), float(pi_child), n_child


@dataclass
class ChildSpec:
    cluster: int
    prior: int
    component: GaussianComponent
    importance: float
    budget: int
    length: float
    satisfying_local: np.ndarray = None


@dataclass
class StretchRecord:
    cluster: int
    prior: int
    length: float
    importance: float
    budget: int
    admitted: bool


@dataclass
class IterationResult:
    resp: gmm.Responsibilities
    retained: np.ndarray
    clusters: list
    stretches: list
    children: list
    importances: np.ndarray
    stopped_on_cluster: int = None


def expansion_iteration(mixture, samples, densities, config,
                        satisfied_mask=None, source=None):
    """One MCO iteration over a pre-drawn batch.

    Reweights, renews/prunes, clusters, and stretches every positive-mass
    (cluster, prior) pair; children above the admission tolerance get their
    moments re-estimated.  When ``satisfied_mask`` is provided (one flag per
    batch sample), processing stops after the first cluster that admits a
    satisfying child, once that cluster's prior loop has finished.

    Raises DegenerateBatchError when the whole batch carries no mass or
    fewer than two samples survive the pruning step.
    """
    resp = gmm.responsibilities(mixture, samples, densities, source=source)
    pi_est = gmm.importance_estimate(resp)
    pi = gmm.importance_update(mixture.weights, pi_est, config.factors.eta_pi)
    resp2, retained = gmm.renew_and_filter(resp, pi, samples)
    if len(retained) < 2:
        raise DegenerateBatchError("fewer than two samples survived pruning")
    clusters = gmm.cluster(retained, config.knn)
    kept_sat = satisfied_mask[resp2.kept] if satisfied_mask is not None else None

    stretches = []
    children = []
    stopped_on = None
    for l, idx in enumerate(clusters):
        cluster_found_satisfying = False
        for m in range(mixture.n_components):
            mass = resp2.gamma[idx, m].sum()
            if not mass > 0:
                continue
            length, pi_child, n_child = stretch_edge(resp2, idx, m,
                                                     config.n_samples)
            admitted = n_child > config.etol
            stretches.append(StretchRecord(l, m, length, pi_child, n_child,
                                           admitted))
            if not admitted:
                continue
            prior = mixture.components[m]
            mu_est, sigma_est = gmm.estimate_moments(resp2, retained, idx, m,
                                                     prior.mu)
            child = gmm.update_moments(prior.mu, prior.sigma, mu_est,
                                       sigma_est, config.factors)
            sat_local = None
            if kept_sat is not None:
                sat_local = np.flatnonzero(kept_sat[idx])
                if sat_local.size:
                    cluster_found_satisfying = True
            children.append(ChildSpec(l, m, child, pi_child, n_child, length,
                                      sat_local))
        if cluster_found_satisfying:
            stopped_on = l
            break
    return IterationResult(resp=resp2, retained=retained, clusters=clusters,
                           stretches=stretches, children=children,
                           importances=pi, stopped_on_cluster=stopped_on)


def _doubled(mixture):
    comps = tuple(GaussianComponent(c.mu, 2.0 * c.sigma)
                  for c in mixture.components)
    return Mixture(comps, mixture.weights)


def _fit_seed_layer(configs, weights, config):
    """Cluster the surviving seeds and fit one floored component per cluster,
    weighted by the seed likelihoods; mixture weights follow cluster mass."""
    if len(configs) >= 2:
        clusters = gmm.cluster(configs, config.knn)
    else:
        clusters = [np.array([0])]
    comps, masses, caches = [], [], []
    for idx in clusters:
        g = weights[idx]
        mass = g.sum()
        if not mass > 0:
            continue
        th = configs[idx]
        mu = (g[:, None] * th).sum(axis=0) / mass
        diff = th - mu
        sigma = gmm.floor_covariance((diff * g[:, None]).T @ diff / mass)
        comps.append(GaussianComponent(mu, sigma))
        masses.append(mass)
        caches.append(idx)
    masses = np.asarray(masses)
    return comps, masses / masses.sum(), caches, clusters


def exp_bayes_net(pf, seeds, config, rng, deadline=None):
    """Expand a Bayes net for one potential field from the shared seed set.

    ``seeds`` carries configurations, permanent integer identities, and is
    assumed pre-filtered against the bidirectional likelihoods; this net
    additionally drops seeds with no mass under its own field.  Returns a
    net whose ``terminated`` flag says whether a satisfying node exists.

    A batch with no feasible sample triggers one resample with doubled
    covariances; a second degenerate batch in a row aborts with the partial
    net attached.
    """
    net = BayesNet(direction=pf.direction)
    annealer = Annealer(config.rho0, config.eta_rho, 0)

    dens = pf.density_batch(annealer, seeds.configs)
    dmax = dens.max() if dens.size else 0.0
    if not dmax > 0:
        raise ExpansionFailedError(
            "no seed waypoint has positive density under this field", net=net)
    keep = dens >= gmm.GAMMA_FLOOR * dmax
    configs = seeds.configs[keep]
    ids = seeds.ids[keep]
    seed_gamma = dens[keep] / dens[keep].sum()

    comps, weights, caches, _ = _fit_seed_layer(configs, seed_gamma, config)
    comp_node_ids = []
    for comp, w, idx in zip(comps, weights, caches):
        sat = np.flatnonzero(pf.satisfied_mask(configs[idx]))
        node = NetNode(id=len(net.nodes), component=comp, importance=float(w),
                       layer=1, waypoints=configs[idx], satisfying=sat,
                       seed_ids=ids[idx], seed_weights=seed_gamma[idx])
        net.nodes.append(node)
        comp_node_ids.append(node.id)
        if sat.size and net.satisfying_id is None:
            net.satisfying_id = node.id
    if net.satisfying_id is not None:
        net.terminated = True
        return net

    mixture = Mixture(tuple(comps), weights)
    for i_mco in range(1, config.n_mco + 1):
        if deadline is not None:
            deadline.check()
        annealer = Annealer(config.rho0, config.eta_rho, i_mco - 1)
        result = None
        for attempt in range(2):
            counts = apportion_counts(config.n_samples, mixture.weights)
            samples, source = gmm.sample_mixture(mixture, counts, rng)
            dens = pf.density_batch(annealer, samples)
            try:
                sat_mask = pf.satisfied_mask(samples)
                result = expansion_iteration(mixture, samples, dens, config,
                                             satisfied_mask=sat_mask,
                                             source=source)
                break
            except DegenerateBatchError:
                if attempt == 0:
                    mixture = _doubled(mixture)
                else:
                    net.iterations = i_mco
                    raise ExpansionFailedError(
                        f"two degenerate batches at iteration {i_mco}",
                        net=net)
        net.iterations = i_mco
        if result.children:
            new_ids = []
            for spec in result.children:
                wp = result.retained[result.clusters[spec.cluster]]
                node = NetNode(id=len(net.nodes), component=spec.component,
                               importance=spec.importance, layer=i_mco + 1,
                               waypoints=wp, satisfying=spec.satisfying_local)
                net.nodes.append(node)
                net.edges.append(NetEdge(comp_node_ids[spec.prior], node.id,
                                         spec.length))
                new_ids.append(node.id)
                if spec.satisfying_local.size and net.satisfying_id is None:
                    net.satisfying_id = node.id
            if net.satisfying_id is not None:
                net.terminated = True
                return net
            child_pi = np.array([net.nodes[i].importance for i in new_ids])
            mixture = Mixture(tuple(net.nodes[i].component for i in new_ids),
                              child_pi / child_pi.sum())
            comp_node_ids = new_ids
        # no admitted children: keep sampling the current mixture
    return net


def dump_net(net):
    """Text serialization for debugging and the renderer: one record per
    node (id, layer, importance, waypoint count, moments) and per edge."""
    lines = ["# bnmco net dump v1",
             f"direction {net.direction}",
             f"terminated {int(net.terminated)}",
             f"satisfying {-1 if net.satisfying_id is None else net.satisfying_id}"]
    for n in net.nodes:
        mu = " ".join(repr(float(v)) for v in n.component.mu)
        sig = " ".join(repr(float(v)) for v in n.component.sigma.ravel())
        lines.append(f"node {n.id} {n.layer} {n.importance!r} "
                     f"{len(n.waypoints)} mu {mu} sigma {sig}")
    for e in net.edges:
        lines.append(f"edge {e.from_id} {e.to_id} {e.length!r}")
    return "\n".join(lines) + "\n"


def parse_net_dump(text):
    """Inverse of dump_net, restoring moments and topology (not waypoints)."""
    direction, terminated, satisfying = None, False, None
    nodes, edges = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "direction":
            direction = parts[1]
        elif parts[0] == "terminated":
            terminated = bool(int(parts[1]))
        elif parts[0] == "satisfying":
            satisfying = None if parts[1] == "-1" else int(parts[1])
        elif parts[0] == "node":
            nid, layer = int(parts[1]), int(parts[2])
            pi, n_wp = float(parts[3]), int(parts[4])
            mu_at = parts.index("mu") + 1
            sig_at = parts.index("sigma") + 1
            d = sig_at - mu_at - 1
            mu = np.array([float(v) for v in parts[mu_at:mu_at + d]])
            sig = np.array([float(v) for v in parts[sig_at:sig_at + d * d]])
            comp = GaussianComponent(mu, sig.reshape(d, d))
            nodes.append(NetNode(id=nid, component=comp, importance=pi,
                                 layer=layer,
                                 waypoints=np.zeros((n_wp, d)),
                                 satisfying=np.zeros(0, dtype=int)))
        elif parts[0] == "edge":
            edges.append(NetEdge(int(parts[1]), int(parts[2]),
                                 float(parts[3])))
    net = BayesNet(direction=direction, nodes=nodes, edges=edges,
                   terminated=terminated, satisfying_id=satisfying)
    return net
