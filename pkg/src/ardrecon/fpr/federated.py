"""Simulated federated proximal gradient with Gaussian-mechanism gradient noise."""
import math

import numpy as np

from .._rng import as_generator, spawn_seeds
from ..errors import OptimizationError, ParameterError
from .solver import FprConfig, FprModel, Problem, _prox, _start, metric

DP_DELTA = 1e-5


def split_rows(n, parties, seed=None):
    """Partition ``range(n)`` into ``parties`` shards (random if ``seed`` is given)."""
    if not 1 <= parties <= n:
        raise ParameterError("parties must lie in [1, n]")
    order = np.arange(n) if seed is None else as_generator(seed).permutation(n)
    return [np.sort(s) for s in np.array_split(order, parties)]


def _check_shards(shards, n):
    seen = np.zeros(n, dtype=np.int64)
    for s in shards:
        s = np.asarray(s, dtype=np.int64)
        if s.size and (s.min() < 0 or s.max() >= n):
            raise ParameterError("shard row index out of range")
        np.add.at(seen, s, 1)
    if np.any(seen > 1):
        raise ParameterError("shards overlap")


def noise_sd(epsilon, rounds, clip=1.0, delta=DP_DELTA):
    """Per-round Gaussian-mechanism sd with the budget split evenly over rounds."""
    if math.isinf(epsilon):
        return 0.0
    return clip * math.sqrt(2.0 * math.log(1.25 / delta)) / (epsilon / rounds)


def _clip(g, c):
    norm = float(np.linalg.norm(g))
    return g if norm <= c else g * (c / norm)


def federated_fit(y, traits, shards, epsilon=math.inf, rounds=100, step=1e-3, cfg=None,
                  clip=1.0, seed=None):
    """Synchronous federated proximal gradient over respondent-row shards.

    Each round every party computes the smooth-term gradient on its own
    rows. With finite ``epsilon`` the gradient is clipped to norm ``clip``
    and Gaussian noise is added before it leaves the party. The coordinator
    sums the party gradients (the gradient of a sum is the sum of shard
    gradients), takes one fixed-size proximal step and broadcasts ``beta``.
    ``shards`` is a list of disjoint row-index arrays or a party count;
    rows outside every shard (e.g. held out for evaluation) are unused.
    """
    cfg = cfg or FprConfig()
    if rounds < 1:
        raise ParameterError("rounds must be >= 1")
    if not epsilon > 0:
        raise ParameterError("epsilon must be > 0")
    if cfg.deviance.kind == "huber":
        raise ParameterError("federated fitting supports poisson and logistic deviances")
    if np.isscalar(shards):
        shards = split_rows(traits.n, int(shards))
    _check_shards(shards, traits.n)
    parties = [Problem(y, traits, cfg.deviance, cfg.weight_scale, rows) for rows in shards]
    sd = noise_sd(epsilon, rounds, clip)
    rngs = [as_generator(s) for s in spawn_seeds(seed, len(parties))]
    full = Problem(y, traits, cfg.deviance, cfg.weight_scale, np.concatenate(shards))
    beta = _start(full, cfg)
    D = metric(full, cfg)
    for r in range(rounds):
        total = np.zeros_like(beta)
        for prob, rng in zip(parties, rngs):
            _, g = prob.value_grad(beta)
            if sd > 0:
                g = _clip(g, clip) + sd * rng.standard_normal(g.size)
            total += g
        if not np.all(np.isfinite(total)):
            raise OptimizationError(f"non-finite gradient in round {r}", state=beta.copy())
        beta = _prox(cfg.penalty, beta - (step * D) * total, step * D, cfg.penalize_intercept)
    fm = parties[0].fm
    return FprModel(beta, fm, cfg.penalty, cfg.deviance, cfg.weight_scale,
                    cfg.penalize_intercept, None, rounds, False)


def centralized_fixed_step(y, traits, rounds=100, step=1e-3, cfg=None):
    """Reference ISTA run with the same fixed step schedule as :func:`federated_fit`."""
    from .solver import fit
    cfg = cfg or FprConfig()
    c = FprConfig(**{**cfg.__dict__, "step": step, "accelerate": False,
                     "max_iter": rounds, "tol": 1e-300})
    return fit(y, traits, c)
