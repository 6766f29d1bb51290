"""RNG plumbing, angle wrapping, deadlines, integer apportionment."""

import time

import numpy as np

from .errors import BudgetExceededError

# Generator algorithm recorded in diagnostics so cross-platform runs can be
# compared; numpy's PCG64 stream is stable for a fixed SeedSequence.
RNG_ALGORITHM = "numpy-pcg64"


def make_rng(seed):
    """Build the planner's generator from an integer seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n):
    """Derive ``n`` independent child generators from one seed.

    Children are stable under the parent seed, so concurrent phases
    (forward/backward nets) reproduce regardless of scheduling.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(ss)) for ss in children]


def wrap_angle(a):
    """Wrap angles to (-pi, pi]; accepts scalars or arrays."""
    return np.pi - np.mod(np.pi - np.asarray(a), 2.0 * np.pi)


def apportion_counts(n_total, weights):
    """Split ``n_total`` draws across components by largest-remainder rounding.

    Counts sum to exactly ``n_total``; remainder ties go to the lower index.
    """
    weights = np.asarray(weights, dtype=float)
    quota = n_total * weights
    counts = np.floor(quota).astype(int)
    short = n_total - int(counts.sum())
    if short > 0:
        # stable sort on negated remainder keeps index order within ties
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


class Deadline:
    """Cooperative wall-clock budget checked at phase/iteration boundaries."""

    def __init__(self, budget_s=None):
        self.budget_s = budget_s
        self.t0 = time.perf_counter()

    def elapsed(self):
        return time.perf_counter() - self.t0

    def expired(self):
        return self.budget_s is not None and self.elapsed() >= self.budget_s

    def check(self):
        if self.expired():
            raise BudgetExceededError(
                f"budget of {self.budget_s:.3f} s exhausted"
            )
