"""Update rules: Langevin Monte Carlo, SGD with idealized isotropic Gaussian
noise, and SGD with genuine uniformly drawn mini-batches.

RNG discipline (per step, from the chain's own ``numpy.random.Generator``):

* ``lmc`` and ``sgd_idealized``: one ``standard_normal(p)`` call, p values.
* ``sgd_minibatch``: one ``integers(arange(b), n)`` call, b values, used as
  the swap positions of a partial Fisher-Yates shuffle.

Per-chain generators are PCG64 seeded with ``SeedSequence(seed, spawn_key=(chain_id,))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericFailure, ResourceLimit
from .oracles import ENUMERATION_GUARD, isotropic_noise_variance

KINDS = ("lmc", "sgd_idealized", "sgd_minibatch")


def chain_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chain_id,))))


@dataclass
class ChainState:
    theta: np.ndarray
    k: int = 0
    rng: np.random.Generator = field(default_factory=lambda: chain_rng(0), repr=False)

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))


@dataclass(frozen=True)
class SamplerConfig:
    kind: str
    h: float
    b: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if not self.h > 0:
            raise InvalidArgument(f"step size must be positive, got {self.h}")
        if self.kind != "lmc" and self.b is None:
            raise InvalidArgument(f"{self.kind} needs a batch size")

    def validate_for(self, target):
        if self.kind == "lmc":
            if not self.h < 2.0 / target.M:
                raise InvalidArgument(f"LMC needs h < 2/M = {2.0 / target.M}, got {self.h}")
        else:
            _check_batch(self.b, target.n, integer=self.kind == "sgd_minibatch")


def _check_batch(b, n, integer=False):
    if b is None or not 1 <= b <= n or (integer and int(b) != b):
        kind = "an integer" if integer else "a number"
        raise InvalidArgument(f"batch size must be {kind} in [1, {n}], got {b}")


def _gradient(target, theta, k):
    g = target.grad(theta)
    if not np.all(np.isfinite(g)):
        raise NumericFailure(f"non-finite gradient at step {k}", theta=np.array(theta), step=k)
    return g


def _finish(state, theta):
    if not np.all(np.isfinite(theta)):
        raise NumericFailure(f"non-finite iterate at step {state.k + 1}", theta=theta, step=state.k + 1)
    return ChainState(theta, state.k + 1, state.rng)


def lmc_step(state: ChainState, target, h: float, xi=None) -> ChainState:
    """theta - h grad f(theta) + sqrt(2h) xi.

    ``xi`` overrides the Gaussian draw (nothing is consumed from the RNG then).
    """
    if not h > 0:
        raise InvalidArgument(f"step size must be positive, got {h}")
    g = _gradient(target, state.theta, state.k)
    if xi is None:
        xi = state.rng.standard_normal(state.theta.size)
    return _finish(state, state.theta - h * g + math.sqrt(2.0 * h) * xi)


def sgd_idealized_step(state: ChainState, target, h: float, b: float, xi=None) -> ChainState:
    """theta - h grad f(theta) + h zeta, zeta ~ N(0, n(n-b)/b I).

    ``b`` may be real-valued; b = n gives plain gradient descent.
    """
    if not h > 0:
        raise InvalidArgument(f"step size must be positive, got {h}")
    _check_batch(b, target.n)
    sigma = math.sqrt(isotropic_noise_variance(target.n, b))
    g = _gradient(target, state.theta, state.k)
    if xi is None:
        xi = state.rng.standard_normal(state.theta.size)
    return _finish(state, state.theta - h * g + (h * sigma) * xi)


def draw_subset(rng: np.random.Generator, n: int, b: int) -> np.ndarray:
    """Uniform size-b subset of range(n) by a partial Fisher-Yates shuffle."""
    idx = np.arange(n)
    swaps = rng.integers(np.arange(b), n)
    for j, r in enumerate(swaps):
        idx[j], idx[r] = idx[r], idx[j]
    return idx[:b]


def minibatch_gradient(target, theta, subset) -> np.ndarray:
    """(n/b) sum_{i in subset} grad g_i(theta)."""
    grads = target.component_grads(theta)
    return (target.n / len(subset)) * grads[np.asarray(subset)].sum(axis=0)


def sgd_minibatch_step(state: ChainState, target, h: float, b: int, subset=None) -> ChainState:
    """theta - (h n / b) sum_{i in B} grad g_i(theta) with B uniform over size-b subsets."""
    if not h > 0:
        raise InvalidArgument(f"step size must be positive, got {h}")
    _check_batch(b, target.n, integer=True)
    b = int(b)
    if subset is None:
        subset = draw_subset(state.rng, target.n, b)
    g = minibatch_gradient(target, state.theta, subset)
    if not np.all(np.isfinite(g)):
        raise NumericFailure(f"non-finite gradient at step {state.k}", theta=state.theta, step=state.k)
    return _finish(state, state.theta - h * g)


def noise_covariance(target, theta) -> np.ndarray:
    """Empirical covariance of the component gradients at theta (divides by n)."""
    grads = target.component_grads(theta)
    centered = grads - grads.mean(axis=0)
    cov = centered.T @ centered / target.n
    return 0.5 * (cov + cov.T)


def minibatch_noise_moments(target, theta, b: int):
    """Exact mean and per-coordinate variance of the mini-batch noise zeta,
    by enumeration of every size-b subset.

    zeta = n * (mean over batch - mean over all) of the component gradients.
    """
    n = target.n
    _check_batch(b, n, integer=True)
    b = int(b)
    if math.comb(n, b) > ENUMERATION_GUARD:
        raise ResourceLimit(f"C({n},{b}) subsets exceeds the guard {ENUMERATION_GUARD}")
    grads = target.component_grads(theta)
    full = grads.sum(axis=0)
    zetas = np.array([(n / b) * grads[list(s)].sum(axis=0) - full
                      for s in itertools.combinations(range(n), b)])
    mean = zetas.mean(axis=0)
    var = ((zetas - mean) ** 2).mean(axis=0)
    return mean, var


_STEPS = {"lmc": lmc_step, "sgd_idealized": sgd_idealized_step, "sgd_minibatch": sgd_minibatch_step}


def step(state, target, config: SamplerConfig) -> ChainState:
    if config.kind == "lmc":
        return lmc_step(state, target, config.h)
    return _STEPS[config.kind](state, target, config.h, config.b)


@dataclass
class ChainResult:
    state: ChainState
    steps: list[int]
    trajectory: np.ndarray | None

    @property
    def theta(self):
        return self.state.theta


def run_chain(config: SamplerConfig, target, theta0, K: int, seed: int = 0, chain_id: int = 0,
              record: bool = False, thin: int = 1) -> ChainResult:
    """Run K steps from theta0. With ``record``, keep every ``thin``-th iterate
    (k = 0, thin, 2 thin, ..., plus the last)."""
    if K < 0:
        raise InvalidArgument("K must be >= 0")
    if thin < 1:
        raise InvalidArgument("thin must be >= 1")
    config.validate_for(target)
    state = ChainState(np.array(theta0, dtype=float), 0, chain_rng(seed, chain_id))
    steps, traj = [], []
    if record:
        steps.append(0)
        traj.append(state.theta.copy())
    for _ in range(K):
        state = step(state, target, config)
        if record and (state.k % thin == 0 or state.k == K):
            steps.append(state.k)
            traj.append(state.theta.copy())
    return ChainResult(state, steps, np.array(traj) if record else None)


def run_chains(config: SamplerConfig, target, theta0, K: int, chains: int, seed: int = 0,
               checkpoints=(), chunk: int = 512):
    """Run independent chains; returns (final iterates (chains, p), {k: snapshot}).

    Chain c uses the stream ``chain_rng(seed, c)``, consuming the same values
    as ``run_chain(..., chain_id=c)``. LMC and idealized SGD are advanced as one
    batch with noise pre-drawn per chain in blocks of ``chunk`` steps.
    """
    if K < 0 or chains < 1:
        raise InvalidArgument("need K >= 0 and chains >= 1")
    config.validate_for(target)
    wanted = sorted({int(k) for k in checkpoints if 0 <= k <= K})
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    p = theta0.size
    snaps = {}
    if config.kind == "sgd_minibatch":
        finals = np.empty((chains, p))
        per_chain = {k: np.empty((chains, p)) for k in wanted}
        for c in range(chains):
            state = ChainState(theta0.copy(), 0, chain_rng(seed, c))
            if 0 in per_chain:
                per_chain[0][c] = state.theta
            for _ in range(K):
                state = sgd_minibatch_step(state, target, config.h, config.b)
                if state.k in per_chain:
                    per_chain[state.k][c] = state.theta
            finals[c] = state.theta
        return finals, per_chain

    if config.kind == "lmc":
        scale = math.sqrt(2.0 * config.h)
    else:
        scale = config.h * math.sqrt(isotropic_noise_variance(target.n, config.b))
    rngs = [chain_rng(seed, c) for c in range(chains)]
    theta = np.tile(theta0, (chains, 1))
    if 0 in wanted:
        snaps[0] = theta.copy()
    k = 0
    while k < K:
        block = min(chunk, K - k)
        noise = np.stack([r.standard_normal((block, p)) for r in rngs], axis=1)
        for j in range(block):
            g = target.grad(theta)
            if not np.all(np.isfinite(g)):
                bad = int(np.argmax(~np.all(np.isfinite(g), axis=1)))
                raise NumericFailure(f"non-finite gradient at step {k} in chain {bad}",
                                     theta=theta[bad].copy(), step=k)
            theta = theta - config.h * g + scale * noise[j]
            k += 1
            if k in wanted:
                snaps[k] = theta.copy()
    if not np.all(np.isfinite(theta)):
        raise NumericFailure("non-finite iterate", step=K)
    return theta, snaps
