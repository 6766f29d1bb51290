"""Gaussian mixture machinery for sequential importance sampling.

The loop this module serves: draw waypoints from the mixture, score them
against the unnormalized field density, convert scores to per-component
responsibilities, blend the importance weights, rescale and prune the
responsibility matrix, cluster the survivors with a mutual-kNN graph, and
re-estimate component moments per cluster.

Responsibilities deliberately omit the component weight in the numerator
(the density ratio already carries it through the mixture denominator), so
per-column constants cancel in every moment ratio.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateBatchError

SIGMA_FLOOR = 1e-6     # eigenvalue clamp keeping covariances sampleable
GAMMA_FLOOR = 1e-12    # relative threshold below which a row counts as zero

LOG_2PI = np.log(2.0 * np.pi)


def floor_covariance(sigma, floor=SIGMA_FLOOR):
    """Symmetrize and clamp eigenvalues from below."""
    sigma = 0.5 * (sigma + sigma.T)
    w, V = np.linalg.eigh(sigma)
    if w.min() >= floor:
        return sigma
    w = np.maximum(w, floor)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class GaussianComponent:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (mu.size, mu.size):
            raise ValueError("sigma must be D x D")
        if not np.allclose(sigma, sigma.T, atol=1e-9):
            raise ValueError("sigma must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self):
        return self.mu.size


@dataclass(frozen=True)
class Mixture:
    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        w = np.asarray(self.weights, dtype=float)
        if w.size != len(comps):
            raise ValueError("one weight per component expected")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def n_components(self):
        return len(self.components)

    @property
    def dim(self):
        return self.components[0].dim


@dataclass(frozen=True)
class LearningFactors:
    """Blending factors; pi blends toward the estimate, mu/sigma toward the
    prior (the two updates use opposite conventions on purpose)."""

    eta_pi: float = 0.4
    eta_mu: float = 0.2
    eta_sigma: float = 0.1

    def __post_init__(self):
        for v in (self.eta_pi, self.eta_mu, self.eta_sigma):
            if not 0.0 < v <= 1.0:
                raise ValueError("learning factors must lie in (0, 1]")


@dataclass
class Responsibilities:
    """Per-sample, per-component weights plus which component drew each sample.

    ``kept`` records the surviving row indices of the pre-filter batch after
    ``renew_and_filter``.
    """

    gamma: np.ndarray
    source: np.ndarray
    kept: np.ndarray = None


def sample_mixture(mix, counts, rng):
    """Draw ``counts[m]`` samples from component m via mu + L z.

    Returns (samples (N, D), source (N,)); deterministic for a fixed rng
    state, with components visited in index order.
    """
    counts = np.asarray(counts, dtype=int)
    if counts.size != mix.n_components:
        raise ValueError("one count per component expected")
    blocks = []
    sources = []
    for m, comp in enumerate(mix.components):
        c = int(counts[m])
        if c <= 0:
            continue
        L = np.linalg.cholesky(comp.sigma)
        z = rng.standard_normal((c, comp.dim))
        blocks.append(comp.mu + z @ L.T)
        sources.append(np.full(c, m, dtype=int))
    if not blocks:
        return np.empty((0, mix.dim)), np.empty(0, dtype=int)
    return np.vstack(blocks), np.concatenate(sources)


def component_logpdfs(mix, samples):
    """Log N(theta | mu_m, sigma_m) for every sample/component pair, (N, M)."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n, d = X.shape
    out = np.empty((n, mix.n_components))
    for m, comp in enumerate(mix.components):
        L = np.linalg.cholesky(comp.sigma)
        diff = X - comp.mu
        y = solve_triangular(L, diff.T, lower=True)
        maha = np.sum(y * y, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out[:, m] = -0.5 * (d * LOG_2PI + logdet + maha)
    return out


def responsibilities(mix, samples, densities, source=None):
    """Density-weighted component responsibilities.

    gamma[n, m] = p(theta_n) * N_m(theta_n) / sum_m pi_m N_m(theta_n);
    rows whose mixture density underflows (or whose field density is zero)
    come back all-zero.  ``source`` records which component drew each
    sample (-1 when unknown).
    """
    densities = np.asarray(densities, dtype=float)
    logN = component_logpdfs(mix, samples)
    with np.errstate(divide="ignore"):
        logw = logN + np.log(mix.weights)[None, :]
    hi = np.max(logw, axis=1)
    alive = np.isfinite(hi)
    gamma = np.zeros_like(logN)
    if np.any(alive):
        logmix = hi[alive] + np.log(
            np.sum(np.exp(logw[alive] - hi[alive, None]), axis=1)
        )
        gamma[alive] = densities[alive, None] * np.exp(
            logN[alive] - logmix[:, None]
        )
    if source is None:
        source = np.full(gamma.shape[0], -1, dtype=int)
    return Responsibilities(gamma=gamma, source=np.asarray(source, dtype=int))


def importance_estimate(resp_or_gamma):
    """Normalized responsibility column sums (the importance estimate)."""
    gamma = resp_or_gamma.gamma if isinstance(resp_or_gamma, Responsibilities) else resp_or_gamma
    col = gamma.sum(axis=0)
    total = col.sum()
    if not total > 0:
        raise DegenerateBatchError("every sample in the batch was infeasible")
    return col / total


def importance_update(pi_prev, pi_est, eta_pi):
    """Convex blend toward the estimate with weight eta_pi."""
    pi_prev = np.asarray(pi_prev, dtype=float)
    pi_est = np.asarray(pi_est, dtype=float)
    for v in (pi_prev, pi_est):
        if abs(v.sum() - 1.0) > 1e-6:
            raise ValueError("importance vectors must sum to 1")
    return eta_pi * pi_est + (1.0 - eta_pi) * pi_prev


def renew_and_filter(resp, pi, samples):
    """Rescale each responsibility column to its updated importance and drop
    effectively-zero rows.

    A row is zero when every entry falls below GAMMA_FLOOR relative to the
    matrix maximum.  Returns the compacted responsibilities (with ``kept``
    indices) and the retained samples.
    """
    pi = np.asarray(pi, dtype=float)
    gamma = resp.gamma.copy()
    colsum = gamma.sum(axis=0)
    with np.errstate(over="ignore", divide="ignore"):
        scale = np.where(colsum > 0, pi / colsum, 0.0)
    # a column too small to rescale without overflow counts as zero mass
    scale[~np.isfinite(scale)] = 0.0
    gamma *= scale
    gmax = gamma.max() if gamma.size else 0.0
    if gmax > 0:
        keep = gamma.max(axis=1) >= GAMMA_FLOOR * gmax
    else:
        keep = np.zeros(gamma.shape[0], dtype=bool)
    kept = np.flatnonzero(keep)
    out = Responsibilities(gamma=gamma[keep], source=resp.source[keep], kept=kept)
    return out, np.asarray(samples)[keep]


def _knn_membership(D2, k_eff):
    """Boolean kNN matrix with exact (distance, index) tie-breaking."""
    kth = np.partition(D2, k_eff - 1, axis=1)[:, k_eff - 1]
    less = D2 < kth[:, None]
    eq = D2 == kth[:, None]
    need = k_eff - less.sum(axis=1)
    out = less
    simple = need == 1
    if np.any(simple):
        # common case: a single boundary entry, the first equal one wins
        rows = np.flatnonzero(simple)
        out[rows, np.argmax(eq[rows], axis=1)] = True
    hard = np.flatnonzero(~simple)
    for i in hard:  # duplicate-heavy rows: rank the ties explicitly
        rank = np.cumsum(eq[i])
        out[i] |= eq[i] & (rank <= need[i])
    return out


def cluster(samples, k):
    """Partition samples into connected components of the mutual-kNN graph.

    Each sample marks its k nearest neighbours (ties broken by lower
    index); i and j are related when each marks the other; clusters are the
    connected components of that relation, singletons allowed.  Returns a
    list of index arrays ordered by their smallest member.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise ValueError("clustering needs at least two samples")
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, n - 1)
    if n <= 512:
        diff = X[:, None, :] - X[None, :, :]
        D2 = np.einsum("ijk,ijk->ij", diff, diff)
    else:
        sq = np.einsum("ij,ij->i", X, X)
        D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    np.fill_diagonal(D2, np.inf)
    N = _knn_membership(D2, k_eff)
    mutual = N & N.T
    _, labels = connected_components(csr_matrix(mutual), directed=False)
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    clusters = [np.asarray(idx, dtype=int) for idx in groups.values()]
    clusters.sort(key=lambda idx: idx[0])
    return clusters


def estimate_moments(resp, samples, cluster_idx, m, mu_prev):
    """Responsibility-weighted mean over a cluster and scatter about the
    prior mean (the scatter is anchored on the prior, not the new mean)."""
    cluster_idx = np.asarray(cluster_idx, dtype=int)
    g = resp.gamma[cluster_idx, m]
    mass = g.sum()
    if not mass > 0:
        raise DegenerateBatchError(
            f"component {m} has no responsibility mass in this cluster"
        )
    th = np.asarray(samples)[cluster_idx]
    mu_est = (g[:, None] * th).sum(axis=0) / mass
    diff = th - np.asarray(mu_prev, dtype=float)
    sigma_est = (diff * g[:, None]).T @ diff / mass
    return mu_est, 0.5 * (sigma_est + sigma_est.T)


def update_moments(mu_prev, sigma_prev, mu_est, sigma_est, factors):
    """Blend toward the prior with eta_mu / eta_sigma and floor the result."""
    mu = factors.eta_mu * np.asarray(mu_prev, dtype=float) \
        + (1.0 - factors.eta_mu) * np.asarray(mu_est, dtype=float)
    sigma = factors.eta_sigma * np.asarray(sigma_prev, dtype=float) \
        + (1.0 - factors.eta_sigma) * np.asarray(sigma_est, dtype=float)
    return GaussianComponent(mu=mu, sigma=floor_covariance(sigma))
