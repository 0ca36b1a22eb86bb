"""Self-check suites run by ``sgdlangevin verify``.

Each suite returns a list of ``Check`` records; a suite passes when all do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import w2_empirical, w2_gaussian, w2_isotropic
from .oracles import (gaussian_chain_law, lmc_chain_spec, scalar_chain_moments, sgd_chain_spec,
                      subset_estimator_variance_bruteforce, subset_estimator_variance_formula)
from .planner import lmc_bound_first_order
from .potentials import GaussianLaw, make_isotropic_gaussian_target, make_ridge_target
from .samplers import SamplerConfig, minibatch_noise_moments, run_chains


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict

    def to_dict(self):
        return {"name": self.name, "pass": bool(self.passed), "detail": self.detail}


def relative_error(x, y):
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def variance_suite(seed=0, trials=100, max_n=10, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(2, max_n + 1):
        for _ in range(trials):
            a = rng.standard_normal(n)
            for b in range(1, n + 1):
                worst = max(worst, relative_error(subset_estimator_variance_formula(a, b),
                                                  subset_estimator_variance_bruteforce(a, b)))
    return [Check("subset variance formula == enumeration", worst <= tol,
                  {"max_relative_error": worst, "tolerance": tol})]


def minibatch_suite(seed=0, max_n=8, tol=1e-10):
    """Exact mini-batch noise moments vs zero mean and the subset-variance formula."""
    rng = np.random.default_rng(seed)
    worst_mean = worst_var = 0.0
    for n in range(2, max_n + 1):
        p = 2
        X, y = rng.standard_normal((n, p)), rng.standard_normal(n)
        target = make_ridge_target(X, y, lam=1.0)
        theta = rng.standard_normal(p)
        grads = target.component_grads(theta)
        scale = float(np.abs(grads).sum()) * n
        for b in range(1, n + 1):
            mean, var = minibatch_noise_moments(target, theta, b)
            worst_mean = max(worst_mean, float(np.max(np.abs(mean))) / scale)
            formula = [subset_estimator_variance_formula(grads[:, j], b) for j in range(p)]
            worst_var = max(worst_var, *(relative_error(v, f) for v, f in zip(var, formula)))
    return [Check("minibatch noise has zero mean", worst_mean <= tol, {"max_scaled_mean": worst_mean}),
            Check("minibatch noise variance == formula", worst_var <= tol, {"max_relative_error": worst_var})]


def chain_law_suite(seed=0, chains=2000, checkpoints=(1, 10, 100, 1000)):
    target = make_isotropic_gaussian_target(2, 10, 1.0, np.random.default_rng(seed).standard_normal((10, 2)))
    theta0 = np.array([3.0, -2.0])
    h = 0.05
    b = 3
    out = []
    for config, spec in [(SamplerConfig("lmc", h), lmc_chain_spec(target, h)),
                         (SamplerConfig("sgd_idealized", h, b), sgd_chain_spec(target, h, b))]:
        _, snaps = run_chains(config, target, theta0, max(checkpoints), chains, seed, checkpoints)
        worst = 0.0
        for k in checkpoints:
            law = gaussian_chain_law(spec, theta0, k)
            x = snaps[k]
            var = np.diagonal(law.cov)
            z_mean = np.abs(x.mean(axis=0) - law.mean) / np.sqrt(var / chains)
            z_var = np.abs(x.var(axis=0, ddof=1) - var) / (var * math.sqrt(2.0 / (chains - 1)))
            worst = max(worst, float(z_mean.max()), float(z_var.max()))
        out.append(Check(f"{config.kind} moments within 3 SE of exact chain law", worst <= 3.0,
                         {"max_z": worst, "checkpoints": list(checkpoints)}))
    return out


def metric_suite(seed=0, trials=50):
    rng = np.random.default_rng(seed)
    sym = tri = 0.0
    nonneg = identity = True
    sorted_gap = 0.0
    for _ in range(trials):
        n, p = int(rng.integers(1, 12)), int(rng.integers(1, 4))
        a, b, c = rng.standard_normal((3, n, p))
        ab, ba = w2_empirical(a, b), w2_empirical(b, a)
        sym = max(sym, abs(ab - ba))
        tri = max(tri, ab - w2_empirical(a, c) - w2_empirical(c, b))
        nonneg &= ab >= 0
        identity &= w2_empirical(a, a[rng.permutation(n)]) == 0.0
        u, v = rng.standard_normal((2, n))
        oracle = math.sqrt(np.mean((np.sort(u) - np.sort(v)) ** 2))
        sorted_gap = max(sorted_gap, abs(w2_empirical(u, v) - oracle))
    return [
        Check("symmetry", sym == 0.0, {"max_gap": sym}),
        Check("triangle inequality", tri <= 1e-9, {"max_excess": tri}),
        Check("nonnegativity", bool(nonneg), {}),
        Check("zero on permuted copies", bool(identity), {}),
        Check("1-D sorted matching oracle", sorted_gap <= 1e-12, {"max_gap": sorted_gap}),
    ]


def bound_validity_violations(p, m=1.0, grid=20, K_max=10_000, seed=0):
    """Count (h, K) pairs on the grid where the first-order bound is below exact W2.

    Exact W2 comes from the closed-form chain moments; a handful of K per h are
    cross-checked against ``gaussian_chain_law`` + ``w2_gaussian``.
    """
    rng = np.random.default_rng(seed)
    target = make_isotropic_gaussian_target(p, 1, m, rng.standard_normal((1, p)))
    pi = target.stationary_law()
    pi_var = 1.0 / target.scalar_curvature
    theta0 = pi.mean + 3.0 * rng.standard_normal(p)
    W0 = w2_gaussian(GaussianLaw.point_mass(theta0), pi)
    ks = np.arange(1, K_max + 1)
    violations, checked, min_gap, path_gap = 0, 0, math.inf, 0.0
    for j in range(1, grid + 1):
        h = j / (grid * m)
        spec = lmc_chain_spec(target, h)
        means, variances = scalar_chain_moments(spec, theta0, ks)
        exact = w2_isotropic(means, variances, pi.mean, pi_var)
        for K in (1, 2, 10, K_max):
            direct = w2_gaussian(gaussian_chain_law(spec, theta0, K), pi)
            path_gap = max(path_gap, abs(direct - exact[K - 1]))
        c, noise = 1.0 - m * h, 1.65 * (target.M / target.m) * math.sqrt(h * p)
        if h > 2.0 / (target.m + target.M):
            c, noise = target.M * h - 1.0, 1.65 * target.M * h / (2.0 - target.M * h) * math.sqrt(h * p)
        bounds = c ** ks.astype(float) * W0 + noise
        for K in (1, 2, 10, K_max):
            path_gap = max(path_gap, abs(bounds[K - 1] - lmc_bound_first_order(h, K, W0, target.m, target.M, p)))
        gap = bounds - exact
        min_gap = min(min_gap, float(gap.min()))
        violations += int(np.sum(gap < 0))
        checked += ks.size
    return violations, checked, min_gap, path_gap


def bound_validity_suite(seed=0, K_max=10_000):
    out = []
    for p in (1, 4):
        v, n, gap, path_gap = bound_validity_violations(p, K_max=K_max, seed=seed)
        out.append(Check(f"first-order bound dominates exact W2 (p={p})", v == 0 and path_gap < 1e-12,
                         {"violations": v, "pairs": n, "min_slack": gap, "path_vs_direct": path_gap}))
    return out


SUITES = {
    "variance": variance_suite,
    "minibatch": minibatch_suite,
    "chain-law": chain_law_suite,
    "metric": metric_suite,
    "bound-validity": bound_validity_suite,
}


def run_suite(name, seed=0):
    if name == "all":
        return [c for s in SUITES.values() for c in s(seed=seed)]
    return SUITES[name](seed=seed)
