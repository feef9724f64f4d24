"""Penalised aggregated-deviance regression fitted by proximal gradient."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .._rng import as_generator
from ..ard import ArdMatrix
from ..errors import DataError, OptimizationError, ParameterError
from .deviance import Deviance
from .features import FeatureMap
from .penalties import Penalty

log = logging.getLogger(__name__)


@dataclass
class FprConfig:
    penalty: Penalty = field(default_factory=lambda: Penalty("l1", 1.0))
    deviance: Deviance = field(default_factory=Deviance)
    max_iter: int = 2000
    tol: float = 1e-6
    accelerate: bool = True     # monotone FISTA; False gives plain ISTA
    step: float = None          # fixed step, disables the line search
    step_init: float = 1.0
    shrink: float = 0.5
    penalize_intercept: bool = False
    weight_scale: float = 1.0
    warm_start: bool = True     # intercept starts at the logit of the observed density
    precondition: bool = True   # per-coordinate steps inversely proportional to pair counts

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0:
            raise ParameterError("max_iter must be >= 1 and tol > 0")
        if self.step is not None and not self.step > 0:
            raise ParameterError("step must be > 0")
        if not 0 < self.shrink < 1:
            raise ParameterError("shrink must lie in (0, 1)")
        if not self.weight_scale > 0:
            raise ParameterError("weight_scale must be > 0")


@dataclass
class FprModel:
    beta: np.ndarray
    features: FeatureMap
    penalty: Penalty
    deviance: Deviance
    weight_scale: float = 1.0
    penalize_intercept: bool = False
    trace: np.ndarray = None
    n_iter: int = 0
    converged: bool = False

    def link_matrix(self, membership):
        P = expit(self.features.linear_predictor(self.beta, membership))
        np.fill_diagonal(P, 0.0)
        return P

    def coefficients(self):
        return dict(zip(self.features.names, self.beta.tolist()))


def _values(y):
    vals = y.values if isinstance(y, ArdMatrix) else np.asarray(y)
    if np.any(vals < 0):
        raise DataError("negative ARD counts")
    return np.asarray(vals, dtype=float)


def _sigmoid(x):
    """Logistic function; several times faster than ``expit`` on large arrays."""
    with np.errstate(over="ignore"):
        out = np.exp(-x)
    out += 1.0
    return np.reciprocal(out, out=out)


class Problem:
    """Smooth part of the objective restricted to the respondent rows in ``rows``."""

    def __init__(self, y, traits, deviance, weight_scale=1.0, rows=None):
        self.y = _values(y)
        if self.y.shape != (traits.n, traits.K):
            raise ParameterError("ARD and trait partition disagree on shape")
        self.traits = traits
        self.M = np.asarray(traits.membership)
        self.fm = FeatureMap.for_traits(traits)
        self.dev = deviance
        self.ws = float(weight_scale)
        self.trials = traits.others_count().astype(float)
        self.mask = np.zeros(traits.n, dtype=bool)
        if rows is None:
            self.mask[:] = True
        else:
            self.mask[np.asarray(rows, dtype=np.int64)] = True
        self._cache = {}

    def rates(self, beta):
        # the Huber path asks for the same beta twice per iteration
        key = beta.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        eta = self.fm.linear_predictor(beta, self.M)
        P = _sigmoid(eta)
        np.fill_diagonal(P, 0.0)
        out = (eta, P, self.ws * (P @ self.M))
        if len(self._cache) >= 3:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = out
        return out

    def scale(self, beta):
        _, _, mu = self.rates(beta)
        return self.dev.scale(self.y[self.mask], mu[self.mask])

    def value(self, beta, scale=1.0):
        _, _, mu = self.rates(beta)
        m = self.mask
        return float(np.sum(self.dev.value(self.y[m], mu[m], self.trials[m], scale)))

    def value_grad(self, beta, scale=1.0):
        eta, P, mu = self.rates(beta)
        m = self.mask
        val = float(np.sum(self.dev.value(self.y[m], mu[m], self.trials[m], scale)))
        G = np.zeros_like(mu)
        G[m] = self.dev.grad(self.y[m], mu[m], self.trials[m], scale)
        # d mu_ik / d eta_ij = ws * sigma'(eta_ij) * M_jk, summed over ordered pairs
        W = (P * (1.0 - P)) * (self.ws * (G @ self.M.T))
        np.fill_diagonal(W, 0.0)
        grad = self.fm.join_gradient(W.sum(), W.sum(axis=1) + W.sum(axis=0), self.M.T @ W @ self.M)
        return val, grad


def pair_counts(fm, M):
    """Sum over ordered pairs ``i != j`` of each feature coordinate."""
    n = fm.n
    s = M.sum(axis=0)
    C = np.outer(s, s) - M.T @ M
    k, l = fm.kl[:, 0], fm.kl[:, 1]
    cb = np.where(k == l, C[k, l], 2.0 * C[k, l])
    return np.concatenate([[n * (n - 1.0)], np.full(n, 2.0 * (n - 1)), cb])


def metric(prob, cfg):
    """Diagonal step scaling; the intercept keeps scale 1."""
    if not cfg.precondition:
        return np.ones(prob.fm.dim)
    c = pair_counts(prob.fm, prob.M)
    return np.where(c > 0, c[0] / np.maximum(c, 1.0), 1.0)


def _penalty_value(pen, beta, penalize_intercept):
    return pen.value(beta if penalize_intercept else beta[1:])


def _prox(pen, v, step, penalize_intercept):
    """Coordinate-wise thresholding; ``step`` may be a per-coordinate array."""
    out = pen.prox(v, step)
    if not penalize_intercept:
        out[0] = v[0]
    return out


def _start(prob, cfg, beta0=None):
    if beta0 is not None:
        return np.array(beta0, dtype=float)
    beta = np.zeros(prob.fm.dim)
    if cfg.warm_start:
        m = prob.mask
        dens = prob.y[m].sum() / max(cfg.weight_scale * prob.trials[m].sum(), 1.0)
        dens = min(max(dens, 1e-4), 1 - 1e-4)
        beta[0] = math.log(dens / (1 - dens))
    return beta


def _solve(prob, cfg, beta0=None):
    """(Monotone) proximal gradient with backtracking; returns (beta, trace, iters, converged)."""
    pen, pi = cfg.penalty, cfg.penalize_intercept
    x = _start(prob, cfg, beta0)
    scale = prob.scale(x)
    fx = prob.value(x, scale) + _penalty_value(pen, x, pi)
    if not np.isfinite(fx):
        raise OptimizationError("objective is not finite at the starting point")
    trace = [fx]
    yk, tk = x.copy(), 1.0
    step = cfg.step or cfg.step_init
    D = metric(prob, cfg)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if prob.dev.kind == "huber":
            scale = prob.scale(yk)
            fx = prob.value(x, scale) + _penalty_value(pen, x, pi)
        fy, gy = prob.value_grad(yk, scale)
        if not (np.isfinite(fy) and np.all(np.isfinite(gy))):
            raise OptimizationError(f"non-finite smooth objective at iteration {it}",
                                    state=x.copy())
        while True:
            z = _prox(pen, yk - (step * D) * gy, step * D, pi)
            if cfg.step is not None:
                fz_smooth = prob.value(z, scale)
                break
            d = z - yk
            fz_smooth = prob.value(z, scale)
            if fz_smooth <= fy + gy @ d + (d @ (d / D)) / (2 * step) + 1e-12 * abs(fy):
                break
            step *= cfg.shrink
            if step < 1e-300:
                raise OptimizationError("line search failed", state=x.copy())
        fz = fz_smooth + _penalty_value(pen, z, pi)
        if not np.isfinite(fz):
            raise OptimizationError(f"non-finite objective at iteration {it}", state=x.copy())
        move = float(np.max(np.abs(z - yk)))
        if cfg.accelerate:
            x_old = x
            if fz <= fx:
                x, fx = z, fz
            t_new = 0.5 * (1 + math.sqrt(1 + 4 * tk * tk))
            yk = x + (tk / t_new) * (z - x) + ((tk - 1) / t_new) * (x - x_old)
            tk = t_new
        else:
            x, fx = z, fz
            yk = x
        trace.append(fx)
        if move < cfg.tol:
            converged = True
            break
    return x, np.asarray(trace), it, converged


def fit(y, traits, cfg=None, rows=None, beta0=None):
    """Minimise aggregated deviance plus penalty over ``beta``.

    ``rows`` restricts the loss to a subset of respondents (used by
    cross-validation). Stops when the proximal step moves no coordinate by
    more than ``cfg.tol`` or after ``cfg.max_iter`` iterations.
    """
    cfg = cfg or FprConfig()
    prob = Problem(y, traits, cfg.deviance, cfg.weight_scale, rows)
    beta, trace, iters, conv = _solve(prob, cfg, beta0)
    if not conv:
        log.debug("fpr fit stopped at the iteration cap (%d)", iters)
    return FprModel(beta, prob.fm, cfg.penalty, cfg.deviance, cfg.weight_scale,
                    cfg.penalize_intercept, trace, iters, conv)


def objective(model, y, traits):
    """Deviance summed over all cells plus the configured penalty."""
    prob = Problem(y, traits, model.deviance, model.weight_scale)
    scale = prob.scale(model.beta)
    return prob.value(model.beta, scale) + _penalty_value(model.penalty, model.beta,
                                                          model.penalize_intercept)


def predicted_rate(model, traits, i, k):
    """``mu_ik = sum_{j in G_k, j != i} sigma(X_ij' beta)`` (times the weight scale)."""
    members = traits.groups[k]
    members = members[members != i]
    if members.size == 0:
        return 0.0
    M = np.asarray(traits.membership)
    b0, a, B = model.features.split(model.beta)
    eta = b0 + a[i] + a[members] + M[members] @ B @ M[i]
    return float(model.weight_scale * expit(eta).sum())


def predict_links(model, pairs, membership):
    """``sigma(X_ij' beta)`` for each row ``(i, j)`` of ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    i, j = pairs[:, 0], pairs[:, 1]
    b0, a, B = model.features.split(model.beta)
    M = np.asarray(membership, dtype=float)
    eta = b0 + a[i] + a[j] + np.einsum("pk,kl,pl->p", M[i], B, M[j])
    return expit(eta)


def heldout_deviance(model, y, traits, rows):
    """Mean Poisson deviance over the cells of the held-out respondents."""
    prob = Problem(y, traits, Deviance("poisson"), model.weight_scale, rows)
    return prob.value(model.beta) / max(1, int(prob.mask.sum()) * traits.K)


def cross_validate(y, traits, lambdas, folds=5, cfg=None, seed=None, tie_tol=1e-6):
    """Pick ``lambda`` by row-wise K-fold held-out Poisson deviance.

    Returns ``(best_lambda, curve)`` with ``curve`` the mean held-out
    deviance per cell at each grid point. Grid points within ``tie_tol``
    (relative, absolute below 1) of the minimum count as ties and the
    smallest ``lambda`` among them wins.
    """
    lambdas = np.asarray(list(lambdas), dtype=float)
    if lambdas.size == 0:
        raise ParameterError("empty lambda grid")
    if folds < 2:
        raise ParameterError("need at least two folds")
    cfg = cfg or FprConfig()
    n = traits.n
    if folds > n:
        raise ParameterError("more folds than respondents")
    rng = as_generator(seed)
    assign = rng.permutation(n) % folds
    curve = np.zeros(lambdas.size)
    for f in range(folds):
        train = np.flatnonzero(assign != f)
        test = np.flatnonzero(assign == f)
        for g, lam in enumerate(lambdas):
            c = FprConfig(**{**cfg.__dict__, "penalty": cfg.penalty.with_lambda(lam)})
            model = fit(y, traits, c, rows=train)
            curve[g] += heldout_deviance(model, y, traits, test) / folds
    best = curve.min()
    tied = np.flatnonzero(curve <= best + tie_tol * max(1.0, abs(best)))
    return float(lambdas[tied].min()), curve
