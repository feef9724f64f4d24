"""Mean-field variational fit: Gaussian intercepts, vMF positions, log-normal scale."""
import math
from dataclasses import dataclass

import numpy as np

from .._rng import as_generator
from ..errors import OptimizationError, ParameterError
from .init import initialize
from .model import (BlsmParams, LikelihoodSpec, _values, default_priors,
                    loglik_gradients, log_prior_zeta)


@dataclass
class ViConfig:
    iterations: int = 1500
    samples: int = 4          # Monte Carlo draws per ELBO estimate
    learning_rate: float = 0.05
    lr_final: float = 0.02    # learning rate decays geometrically to this fraction
    kappa: float = 100.0      # fixed concentration of each q(z_i)
    init_sd_v: float = 0.1
    init_sd_log_zeta: float = 0.1
    seed: int = None
    p: int = 2

    def __post_init__(self):
        if self.iterations < 1 or self.samples < 1:
            raise ParameterError("iterations and samples must be >= 1")
        if not self.learning_rate > 0 or not self.kappa > 0:
            raise ParameterError("learning_rate and kappa must be > 0")
        if not 0 < self.lr_final <= 1:
            raise ParameterError("lr_final must lie in (0, 1]")


def sample_vmf_cosine(kappa, d, size, rng):
    """Draw ``w = mu'z`` for ``z ~ vMF(mu, kappa)`` on S^{d-1}.

    Exact inverse CDF on S^2, Wood's rejection sampler otherwise.
    """
    if d == 3:
        u = rng.random(size)
        return 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * kappa)) / kappa
    b = (d - 1) / (2.0 * kappa + math.sqrt(4.0 * kappa ** 2 + (d - 1) ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1) * math.log(1.0 - x0 ** 2)
    out = np.empty(size)
    flat = out.reshape(-1)
    for t in range(flat.size):
        while True:
            zz = rng.beta((d - 1) / 2.0, (d - 1) / 2.0)
            w = (1.0 - (1.0 + b) * zz) / (1.0 - (1.0 - b) * zz)
            if kappa * w + (d - 1) * math.log(1.0 - x0 * w) - c >= math.log(rng.random()):
                flat[t] = w
                break
    return out


def vmf_reparam(mu, w, eps):
    """``z = w mu + sqrt(1 - w^2) t`` with ``t`` the normalised tangent projection of ``eps``."""
    a = eps - np.sum(eps * mu, axis=1, keepdims=True) * mu
    an = np.linalg.norm(a, axis=1, keepdims=True)
    t = a / an
    s = np.sqrt(np.clip(1.0 - w ** 2, 0.0, None))[:, None]
    return w[:, None] * mu + s * t, (t, an, s)


def vmf_reparam_vjp(g, mu, w, eps, cache):
    """Pull the gradient ``g`` wrt ``z`` back to the (unconstrained) mean ``mu``."""
    t, an, s = cache
    h = (g - np.sum(g * t, axis=1, keepdims=True) * t) / an
    back = -np.sum(mu * eps, axis=1, keepdims=True) * h - eps * np.sum(mu * h, axis=1, keepdims=True)
    return w[:, None] * g + s * back


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        """In-place ascent step for every array in ``params``."""
        self.t += 1
        for key, g in grads.items():
            m = self.m.setdefault(key, np.zeros_like(g))
            v = self.v.setdefault(key, np.zeros_like(g))
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            mhat = m / (1 - self.b1 ** self.t)
            vhat = v / (1 - self.b2 ** self.t)
            params[key] += self.lr * mhat / (np.sqrt(vhat) + self.eps)


def smooth(trace, window=50):
    """Trailing moving average used to judge ascent of a noisy ELBO trace."""
    trace = np.asarray(trace, dtype=float)
    c = np.cumsum(np.insert(trace, 0, 0.0))
    out = np.empty_like(trace)
    for i in range(len(trace)):
        lo = max(0, i + 1 - window)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def vi_fit(y, traits, priors=None, cfg=None, spec=None, init=None):
    """Maximise a Monte Carlo ELBO by stochastic gradient ascent.

    Returns the variational point estimate (intercept means, vMF mean
    directions, log-normal mean of ``zeta``) and the ELBO trace, one value
    per iteration.
    """
    cfg = cfg or ViConfig()
    spec = spec or LikelihoodSpec()
    vals = _values(y)
    if vals.shape != (traits.n, traits.K):
        raise ParameterError("ARD and trait partition disagree on shape")
    priors = priors or default_priors(vals, traits)
    if init is None:
        init = initialize(vals, traits, cfg.p, seed=cfg.seed)
    rng = as_generator(cfg.seed)
    n, d = init.z.shape
    kappa = cfg.kappa
    prior_kappa = float(priors.z_kappa)
    prior_mean = np.asarray(priors.z_mean, dtype=float) if prior_kappa > 0 else np.zeros(d)

    q = {
        "m_v": init.v.copy(),
        "log_s_v": np.full(n, math.log(cfg.init_sd_v)),
        "mu_z": init.z.copy(),
        "a": np.array([math.log(init.zeta)]),
        "log_b": np.array([math.log(cfg.init_sd_log_zeta)]),
    }
    opt = _Adam(cfg.learning_rate)
    trace = np.empty(cfg.iterations)
    last_good = {k: val.copy() for k, val in q.items()}

    for it in range(cfg.iterations):
        s_v = np.exp(q["log_s_v"])
        b = math.exp(q["log_b"][0])
        grads = {k: np.zeros_like(val) for k, val in q.items()}
        elbo = 0.0
        for _ in range(cfg.samples):
            e_v = rng.standard_normal(n)
            v = q["m_v"] + s_v * e_v
            w = sample_vmf_cosine(kappa, d, n, rng)
            e_z = rng.standard_normal((n, d))
            z, cache = vmf_reparam(q["mu_z"], w, e_z)
            e_zeta = rng.standard_normal()
            # overflow here is caught by the divergence check below
            with np.errstate(over="ignore", invalid="ignore"):
                zeta = float(np.exp(q["a"][0] + b * e_zeta))
                ll, g_v, g_z, g_zeta = loglik_gradients(v, z, zeta, vals, traits, spec)
            lp = (ll - 0.5 * np.sum(((v - priors.mu_v) / priors.sigma_v) ** 2)
                  + log_prior_zeta(zeta, priors.zeta_scale)
                  + prior_kappa * float(np.sum(z @ prior_mean)))
            elbo += lp
            g_v = g_v - (v - priors.mu_v) / priors.sigma_v ** 2
            g_zeta = g_zeta - 2.0 * zeta / (priors.zeta_scale ** 2 + zeta ** 2)
            g_z = g_z + prior_kappa * prior_mean
            grads["m_v"] += g_v
            grads["log_s_v"] += g_v * e_v * s_v
            grads["a"] += g_zeta * zeta
            grads["log_b"] += g_zeta * zeta * b * e_zeta
            grads["mu_z"] += vmf_reparam_vjp(g_z, q["mu_z"], w, e_z, cache)
        for key in grads:
            grads[key] /= cfg.samples
        # entropy terms (the vMF entropy is constant for fixed kappa)
        entropy = float(np.sum(q["log_s_v"])) + q["a"][0] + q["log_b"][0]
        grads["log_s_v"] += 1.0
        grads["a"] += 1.0
        grads["log_b"] += 1.0
        elbo = elbo / cfg.samples + entropy
        if not np.isfinite(elbo) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            state = BlsmParams(last_good["m_v"], last_good["mu_z"], math.exp(last_good["a"][0]))
            raise OptimizationError(f"ELBO diverged at iteration {it}", state=state)
        trace[it] = elbo
        last_good = {k: val.copy() for k, val in q.items()}

        opt.lr = cfg.learning_rate * cfg.lr_final ** (it / max(cfg.iterations - 1, 1))
        mu = q["mu_z"]
        grads["mu_z"] -= np.sum(grads["mu_z"] * mu, axis=1, keepdims=True) * mu
        opt.step(q, grads)
        q["mu_z"] /= np.linalg.norm(q["mu_z"], axis=1, keepdims=True)
        np.clip(q["log_s_v"], -10.0, 3.0, out=q["log_s_v"])
        np.clip(q["log_b"], -10.0, 3.0, out=q["log_b"])

    b = math.exp(q["log_b"][0])
    zeta_mean = math.exp(q["a"][0] + 0.5 * b * b)
    return BlsmParams.normalized(q["m_v"], q["mu_z"], zeta_mean), trace
