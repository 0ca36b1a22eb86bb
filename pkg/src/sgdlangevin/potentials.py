"""Target potentials f (pi proportional to exp(-f)) with declared convexity constants.

Two families of sum-decomposable quadratic targets are built in:

* ``IsotropicGaussianTarget``: g_i(theta) = (m_g/2)||theta - z_i||^2
* ``RidgeTarget``: g_i(theta) = 1/2 (y_i - x_i^T theta)^2 + (lam/2n)||theta||^2

Both have a Gaussian stationary law, which is what makes the exact oracles
in :mod:`sgdlangevin.oracles` possible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InvalidArgument

FD_RELATIVE_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    mean: np.ndarray
    cov: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0:
            cov = cov * np.eye(mean.size)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InvalidArgument(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        scale = max(1.0, float(np.max(np.abs(cov), initial=0.0)))
        off = cov - np.diag(np.diagonal(cov))
        if off.any():
            if np.max(np.abs(cov - cov.T)) > self.tol * scale:
                raise InvalidArgument("covariance is not symmetric")
            cov = 0.5 * (cov + cov.T)
            smallest = np.linalg.eigvalsh(cov)[0]
        else:
            smallest = np.min(np.diagonal(cov), initial=0.0)
        if smallest < -self.tol * scale:
            raise InvalidArgument("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def point_mass(cls, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return cls(theta, np.zeros((theta.size, theta.size)))

    @property
    def dim(self) -> int:
        return self.mean.size

    def sqrt_cov(self) -> np.ndarray:
        return psd_sqrt(self.cov)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` points, shape (size, p)."""
        z = rng.standard_normal((size, self.dim))
        return self.mean + z @ self.sqrt_cov()


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root, negative eigenvalues from round-off clamped to 0."""
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _check_constants(m, M, L=None):
    if not (m > 0 and M >= m and math.isfinite(M)):
        raise InvalidArgument(f"need 0 < m <= M, got m={m}, M={M}")
    if L is not None and not L >= 0:
        raise InvalidArgument(f"need L >= 0, got {L}")


class Potential:
    """A differentiable potential with declared constants.

    Subclasses provide ``dim``, ``m``, ``M``, ``L`` (may be None), ``value``
    and ``grad``. ``value``/``grad`` accept a single point of shape (p,) or a
    batch of shape (C, p).
    """

    L: float | None = None

    def value(self, theta):
        raise NotImplementedError

    def grad(self, theta):
        raise NotImplementedError

    def excess_value(self, theta) -> float:
        """f(theta) - inf f when the minimum is known; otherwise f(theta), assumed >= 0."""
        return float(self.value(theta))


@dataclass(frozen=True, eq=False)
class FunctionPotential(Potential):
    dim: int
    m: float
    M: float
    value_fn: Callable
    grad_fn: Callable
    L: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgument("dim must be positive")
        _check_constants(self.m, self.M, self.L)

    def value(self, theta):
        return self.value_fn(np.asarray(theta, dtype=float))

    def grad(self, theta):
        return self.grad_fn(np.asarray(theta, dtype=float))


class QuadraticMixin:
    """Shared behaviour of potentials of the form 1/2 (theta - mu)^T A (theta - mu) + const."""

    def hessian(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def minimizer(self) -> np.ndarray:
        raise NotImplementedError

    def excess_value(self, theta) -> float:
        d = np.asarray(theta, dtype=float) - self.minimizer
        return float(0.5 * d @ self.hessian() @ d)

    def stationary_law(self) -> GaussianLaw:
        return GaussianLaw(self.minimizer, np.linalg.inv(self.hessian()))


@dataclass(frozen=True, eq=False)
class QuadraticPotential(QuadraticMixin, Potential):
    """f(theta) = 1/2 (theta - center)^T A (theta - center)."""

    A: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if A.shape != (center.size, center.size) or not np.allclose(A, A.T):
            raise InvalidArgument("A must be a symmetric p x p matrix")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "center", center)
        w = np.linalg.eigvalsh(A)
        _check_constants(w[0], w[-1])

    @property
    def dim(self):
        return self.center.size

    @property
    def m(self):
        return float(np.linalg.eigvalsh(self.A)[0])

    @property
    def M(self):
        return float(np.linalg.eigvalsh(self.A)[-1])

    L = 0.0

    def hessian(self):
        return self.A

    @property
    def minimizer(self):
        return self.center

    def value(self, theta):
        d = np.asarray(theta, dtype=float) - self.center
        return 0.5 * np.sum((d @ self.A) * d, axis=-1)

    def grad(self, theta):
        return (np.asarray(theta, dtype=float) - self.center) @ self.A


class DecomposableTarget(Potential):
    """f = sum_i g_i with per-component constants m_g, M_g and optional L_g.

    Aggregate constants follow as m = n m_g, M = n M_g, L = n L_g.
    """

    n: int
    m_g: float
    M_g: float
    L_g: float | None

    @property
    def m(self):
        return self.n * self.m_g

    @property
    def M(self):
        return self.n * self.M_g

    @property
    def L(self):
        return None if self.L_g is None else self.n * self.L_g

    @property
    def kappa(self):
        return self.M_g / self.m_g

    def component_values(self, theta) -> np.ndarray:
        """g_i(theta) for all i, shape (n,)."""
        raise NotImplementedError

    def component_grads(self, theta) -> np.ndarray:
        """grad g_i(theta) for all i, shape (n, p)."""
        raise NotImplementedError

    def value(self, theta):
        return math.fsum(self.component_values(theta))

    def grad(self, theta):
        return self.component_grads(theta).sum(axis=0)


@dataclass(frozen=True, eq=False)
class IsotropicGaussianTarget(QuadraticMixin, DecomposableTarget):
    centers: np.ndarray
    m_g: float
    M_g: float
    L_g: float | None = 0.0
    offset: float = 0.0

    def __post_init__(self):
        _check_constants(self.m_g, self.M_g, self.L_g)

    @property
    def n(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def scalar_curvature(self) -> float:
        return self.n * self.m_g

    @property
    def _center_sum(self):
        return self.centers.sum(axis=0)

    def hessian(self):
        return self.scalar_curvature * np.eye(self.dim)

    @property
    def minimizer(self):
        return self._center_sum / self.n

    def excess_value(self, theta):
        d = np.asarray(theta, dtype=float) - self.minimizer
        return float(0.5 * self.scalar_curvature * (d @ d))

    def stationary_law(self):
        return GaussianLaw(self.minimizer, np.eye(self.dim) / self.scalar_curvature)

    def component_values(self, theta):
        d = np.asarray(theta, dtype=float) - self.centers
        return 0.5 * self.m_g * np.sum(d * d, axis=1) + self.offset

    def component_grads(self, theta):
        return self.m_g * (np.asarray(theta, dtype=float) - self.centers)

    def value(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            return super().value(theta)
        return np.array([super(IsotropicGaussianTarget, self).value(t) for t in theta])

    def grad(self, theta):
        # elementwise, so single points and batches round identically
        return self.m_g * (self.n * np.asarray(theta, dtype=float) - self._center_sum)


@dataclass(frozen=True, eq=False)
class RidgeTarget(QuadraticMixin, DecomposableTarget):
    X: np.ndarray
    y: np.ndarray
    lam: float
    m_g: float
    M_g: float
    L_g: float | None = 0.0
    offset: float = 0.0

    def __post_init__(self):
        _check_constants(self.m_g, self.M_g, self.L_g)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def hessian(self):
        return self.X.T @ self.X + self.lam * np.eye(self.dim)

    @property
    def minimizer(self):
        return np.linalg.solve(self.hessian(), self.X.T @ self.y)

    def component_values(self, theta):
        theta = np.asarray(theta, dtype=float)
        resid = self.y - self.X @ theta
        return 0.5 * resid**2 + 0.5 * self.lam / self.n * (theta @ theta) + self.offset

    def component_grads(self, theta):
        theta = np.asarray(theta, dtype=float)
        resid = self.y - self.X @ theta
        return -resid[:, None] * self.X + (self.lam / self.n) * theta

    def value(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            return super().value(theta)
        return np.array([super(RidgeTarget, self).value(t) for t in theta])

    def grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta @ self.hessian() - self.X.T @ self.y


def make_isotropic_gaussian_target(p, n, m_g, centers, L_g=0.0, offset=0.0) -> IsotropicGaussianTarget:
    """Sum of n isotropic quadratics; pi = N(mean(centers), I / (n m_g))."""
    if not (int(p) == p and p >= 1 and int(n) == n and n >= 1):
        raise InvalidArgument(f"p and n must be positive integers, got p={p}, n={n}")
    if not m_g > 0:
        raise InvalidArgument(f"m_g must be positive, got {m_g}")
    centers = np.asarray(centers, dtype=float).reshape(int(n), int(p))
    return IsotropicGaussianTarget(centers=centers, m_g=float(m_g), M_g=float(m_g), L_g=L_g, offset=offset)


def make_ridge_target(X, y, lam, L_g=0.0, offset=0.0) -> RidgeTarget:
    """Ridge regression posterior split into n per-observation components."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not lam > 0:
        raise InvalidArgument(f"ridge parameter must be positive, got {lam}")
    n = X.shape[0]
    if n < 1 or y.shape != (n,):
        raise InvalidArgument(f"design has {n} rows but responses have shape {y.shape}")
    m_g = lam / n
    M_g = lam / n + float(np.max(np.sum(X * X, axis=1)))
    return RidgeTarget(X=X, y=y, lam=float(lam), m_g=m_g, M_g=M_g, L_g=L_g, offset=offset)


@dataclass
class ConstantsReport:
    trials: int
    convexity_violation: float
    smoothness_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.convexity_violation, self.smoothness_violation) <= self.tolerance


def _violations(values1, values2, grads1, grads2, diff, m, M):
    # normalized so the report does not depend on how far apart the pair is
    d2 = float(diff @ diff)
    gap = values1 + grads1 @ diff + 0.5 * m * d2 - values2
    convex = np.max(gap) / d2
    dg = np.linalg.norm(np.atleast_2d(grads1 - grads2), axis=-1)
    smooth = np.max(dg) / math.sqrt(d2) - M
    return max(float(convex), 0.0), max(float(smooth), 0.0)


def validate_constants(target, trials=100, tolerance=1e-8, box=5.0, seed=0) -> ConstantsReport:
    """Randomized audit of the declared strong-convexity and smoothness constants.

    Decomposable targets are audited per component against (m_g, M_g) and as
    a sum against (m, M).
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst_c = worst_s = 0.0
    for _ in range(trials):
        t1, t2 = rng.uniform(-box, box, size=(2, target.dim))
        diff = t2 - t1
        if not np.any(diff):
            continue
        checks = [(np.float64(target.value(t1)), np.float64(target.value(t2)),
                   target.grad(t1), target.grad(t2), target.m, target.M)]
        if isinstance(target, DecomposableTarget):
            checks.append((target.component_values(t1), target.component_values(t2),
                           target.component_grads(t1), target.component_grads(t2),
                           target.m_g, target.M_g))
        for v1, v2, g1, g2, m, M in checks:
            c, s = _violations(v1, v2, g1, g2, diff, m, M)
            worst_c, worst_s = max(worst_c, c), max(worst_s, s)
    return ConstantsReport(trials, worst_c, worst_s, tolerance)


def gradient_check(potential, theta) -> float:
    """Max abs gap between ``grad`` and central finite differences at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    step = FD_RELATIVE_STEP * (1.0 + np.linalg.norm(theta))
    fd = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = step
        fd[j] = (potential.value(theta + e) - potential.value(theta - e)) / (2 * step)
    return float(np.max(np.abs(fd - potential.grad(theta))))


def load_design_csv(path) -> np.ndarray:
    """Row-major numeric CSV; a non-numeric first row is treated as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    return np.array([[float(c) for c in r] for r in rows], dtype=float)


def target_from_dict(desc: dict, base_dir=None) -> DecomposableTarget:
    """Build a target from its JSON description.

    ``{"kind": "isotropic_gaussian", "p", "n", "m_g", "centers" | "seed"}`` or
    ``{"kind": "ridge", "X" | "design_csv", "y" | "responses_csv", "lam"}``.
    Both accept optional ``"L_g"`` (a declared Hessian-Lipschitz constant; left
    undeclared when absent) and ``"offset"``.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    kind = desc.get("kind")
    extra = {"L_g": desc.get("L_g"), "offset": desc.get("offset", 0.0)}
    if kind == "isotropic_gaussian":
        p, n = desc["p"], desc["n"]
        centers = desc.get("centers")
        if centers is None:
            rng = np.random.default_rng(desc.get("seed", 0))
            centers = rng.standard_normal((n, p)) * desc.get("center_scale", 1.0)
        return make_isotropic_gaussian_target(p, n, desc.get("m_g", 1.0), centers, **extra)
    if kind == "ridge":
        X = desc.get("X")
        if X is None:
            X = load_design_csv(base / desc["design_csv"])
        y = desc.get("y")
        if y is None:
            y = load_design_csv(base / desc["responses_csv"]).ravel()
        return make_ridge_target(X, y, desc["lam"], **extra)
    raise InvalidArgument(f"unknown target kind {kind!r}")
