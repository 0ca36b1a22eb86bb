"""Wasserstein-2 distances: closed form between Gaussians, exact optimal
transport between equal-size empirical measures."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import InvalidArgument, ResourceLimit
from .potentials import GaussianLaw, psd_sqrt

MAX_EMPIRICAL_POINTS = 4096


def _is_diagonal(a):
    return not np.any(a - np.diag(np.diagonal(a)))


def w2_gaussian(a: GaussianLaw, b: GaussianLaw) -> float:
    """Bures-Wasserstein distance between two Gaussian laws."""
    if a.dim != b.dim:
        raise InvalidArgument(f"dimension mismatch: {a.dim} vs {b.dim}")
    dm = a.mean - b.mean
    mean_term = float(dm @ dm)
    if _is_diagonal(a.cov) and _is_diagonal(b.cov):
        # commuting covariances: per-coordinate standard deviations
        s1 = np.sqrt(np.clip(np.diagonal(a.cov), 0.0, None))
        s2 = np.sqrt(np.clip(np.diagonal(b.cov), 0.0, None))
        return math.sqrt(mean_term + float(np.sum((s1 - s2) ** 2)))
    r1 = psd_sqrt(a.cov)
    cross = psd_sqrt(r1 @ b.cov @ r1)
    cov_term = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return math.sqrt(max(mean_term + cov_term, 0.0))


def w2_isotropic(mean_a, var_a, mean_b, var_b):
    """W2 between N(mean_a, var_a I) and N(mean_b, var_b I), vectorized over a
    leading axis of the means and variances."""
    mean_a, mean_b = np.asarray(mean_a, dtype=float), np.asarray(mean_b, dtype=float)
    p = mean_a.shape[-1]
    dm = mean_a - mean_b
    ds = np.sqrt(np.clip(var_a, 0.0, None)) - np.sqrt(np.clip(var_b, 0.0, None))
    return np.sqrt(np.sum(dm * dm, axis=-1) + p * ds * ds)


def as_sample_set(points) -> np.ndarray:
    """Coerce to an (N, p) float array; 1-D input is N points in R^1."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidArgument("sample set must be a non-empty (N, p) array")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("sample set contains non-finite points")
    return x


def optimal_matching(a, b):
    """Minimum squared-Euclidean cost perfect matching; returns (cols, costs)."""
    a, b = as_sample_set(a), as_sample_set(b)
    if a.shape != b.shape:
        raise InvalidArgument(f"sample sets must have equal size and dimension, got {a.shape} and {b.shape}")
    if a.shape[0] > MAX_EMPIRICAL_POINTS:
        raise ResourceLimit(f"{a.shape[0]} points exceeds the exact-transport cap of {MAX_EMPIRICAL_POINTS}")
    if a.shape[1] == 1:
        # on the line the monotone (sorted) matching is optimal
        ia, ib = np.argsort(a[:, 0], kind="stable"), np.argsort(b[:, 0], kind="stable")
        cols = np.empty_like(ib)
        cols[ia] = ib
        return cols, (a[:, 0] - b[cols, 0]) ** 2
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return cols, cost[rows, cols]


def w2_empirical(a, b) -> float:
    """Exact W2 between the uniform empirical measures on two equal-size point sets."""
    _, costs = optimal_matching(a, b)
    return math.sqrt(math.fsum(costs) / costs.size)


def w2_empirical_vs_gaussian(a, law: GaussianLaw, reps: int = 1, seed: int = 0):
    """Mean and standard deviation of ``w2_empirical(a, draws)`` over ``reps``
    independent reference sets drawn from ``law``."""
    if reps < 1:
        raise InvalidArgument("reps must be >= 1")
    a = as_sample_set(a)
    rng = np.random.default_rng(seed)
    vals = np.array([w2_empirical(a, law.sample(a.shape[0], rng)) for _ in range(reps)])
    return float(vals.mean()), float(vals.std())
