"""Independent ground truth: exact laws of affine-Gaussian chains and the
variance of the subset-sum estimator, by formula and by enumeration."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ResourceLimit
from .potentials import GaussianLaw

ENUMERATION_GUARD = 10**6


@dataclass(frozen=True, eq=False)
class AffineChainSpec:
    """theta_{k+1} = mu* + C (theta_k - mu*) + sqrt(v) xi, xi ~ N(0, I).

    ``contraction`` is either a scalar c (C = c I) or a p x p matrix.
    """

    contraction: float | np.ndarray
    drift_target: np.ndarray
    noise_var: float

    @property
    def is_scalar(self) -> bool:
        return np.ndim(self.contraction) == 0

    def spectral_radius(self) -> float:
        if self.is_scalar:
            return abs(float(self.contraction))
        return float(np.max(np.abs(np.linalg.eigvals(self.contraction))))

    def stationary_law(self) -> GaussianLaw:
        if self.spectral_radius() >= 1:
            raise InvalidArgument("chain has no stationary law: spectral radius >= 1")
        mu = np.atleast_1d(np.asarray(self.drift_target, dtype=float))
        p = mu.size
        if self.is_scalar:
            return GaussianLaw(mu, self.noise_var / (1 - float(self.contraction) ** 2) * np.eye(p))
        # Stein equation S = C S C^T + v I solved by vectorization
        C = np.asarray(self.contraction, dtype=float)
        lhs = np.eye(p * p) - np.kron(C, C)
        S = np.linalg.solve(lhs, self.noise_var * np.eye(p).ravel()).reshape(p, p)
        return GaussianLaw(mu, S)


def gaussian_chain_law(spec: AffineChainSpec, theta0, k: int) -> GaussianLaw:
    """Exact law of the k-th iterate started from the point mass at theta0."""
    if k < 0:
        raise InvalidArgument("k must be >= 0")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    mu = np.broadcast_to(np.asarray(spec.drift_target, dtype=float), theta0.shape)
    p = theta0.size
    if spec.is_scalar:
        means, variances = scalar_chain_moments(spec, theta0, np.array([k]))
        return GaussianLaw(means[0], variances[0] * np.eye(p))
    C = np.asarray(spec.contraction, dtype=float)
    mean = theta0 - mu
    cov = np.zeros((p, p))
    for _ in range(k):
        mean = C @ mean
        cov = C @ cov @ C.T + spec.noise_var * np.eye(p)
    return GaussianLaw(mu + mean, cov)


def scalar_chain_moments(spec: AffineChainSpec, theta0, ks):
    """Means (len(ks), p) and per-coordinate variances (len(ks),) of the iterates
    at steps ``ks`` for a chain with scalar contraction, in closed form."""
    if not spec.is_scalar:
        raise InvalidArgument("closed-form moments need a scalar contraction")
    ks = np.asarray(ks)
    if np.any(ks < 0):
        raise InvalidArgument("k must be >= 0")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    mu = np.asarray(spec.drift_target, dtype=float)
    c = float(spec.contraction)
    ck = c ** ks.astype(float)
    c2 = c * c
    # geometric sum 1 + c^2 + ... + c^{2(k-1)}
    geo = ks.astype(float) if c2 == 1.0 else (1.0 - ck * ck) / (1.0 - c2)
    means = mu + ck[:, None] * (theta0 - mu)
    return means, spec.noise_var * geo


def chain_spec_for(target, h: float, noise_var: float) -> AffineChainSpec:
    """Affine chain theta - h grad f(theta) + noise, for a quadratic target."""
    curv = getattr(target, "scalar_curvature", None)
    if curv is not None:
        contraction = 1.0 - h * curv
    else:
        contraction = np.eye(target.dim) - h * target.hessian()
    return AffineChainSpec(contraction, target.minimizer, noise_var)


def lmc_chain_spec(target, h: float) -> AffineChainSpec:
    return chain_spec_for(target, h, 2.0 * h)


def sgd_chain_spec(target, h: float, b: float) -> AffineChainSpec:
    return chain_spec_for(target, h, h * h * isotropic_noise_variance(target.n, b))


def isotropic_noise_variance(n: int, b: float) -> float:
    """Per-coordinate variance n(n-b)/b of the idealized mini-batch noise."""
    if not 1 <= b <= n:
        raise InvalidArgument(f"batch size must lie in [1, {n}], got {b}")
    return n * (n - b) / b


def _check_subset_args(a, b):
    a = np.asarray(a, dtype=float).ravel()
    n = a.size
    if n < 2:
        raise InvalidArgument("need at least two numbers")
    if not (int(b) == b and 1 <= b <= n):
        raise InvalidArgument(f"batch size must be an integer in [1, {n}], got {b}")
    return a, n, int(b)


def subset_estimator_variance_formula(a, b) -> float:
    """Variance of X = (n/b) sum_{i in I} a_i over uniform size-b subsets I.

    V = ((n-b)/b) sum a_i^2 + ((b-n)/(nb-b)) sum_{i != j} a_i a_j
    """
    a, n, b = _check_subset_args(a, b)
    sum_sq = math.fsum(a * a)
    total = math.fsum(a)
    # ordered off-diagonal pairs
    cross = math.fsum([total * total, -sum_sq])
    return math.fsum([(n - b) / b * sum_sq, (b - n) / (n * b - b) * cross])


def subset_estimator_variance_bruteforce(a, b) -> float:
    """Population variance of X over all C(n, b) subsets, by enumeration."""
    a, n, b = _check_subset_args(a, b)
    count = math.comb(n, b)
    if count > ENUMERATION_GUARD:
        raise ResourceLimit(f"C({n},{b}) = {count} subsets exceeds the guard {ENUMERATION_GUARD}")
    idx = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), b)),
        dtype=np.intp,
        count=count * b,
    ).reshape(count, b)
    x = (n / b) * a[idx].sum(axis=1)
    mean = math.fsum(x) / count
    d = x - mean
    return math.fsum(d * d) / count
