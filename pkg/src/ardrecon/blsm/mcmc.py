"""Metropolis-within-Gibbs sampler for the latent surface model."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from .._rng import as_generator
from ..errors import InitializationError, ParameterError
from .init import initialize
from .model import (BlsmParams, LikelihoodSpec, _values, default_priors, link_matrix,
                    log_pmf, log_prior_zeta)

log = logging.getLogger(__name__)


@dataclass
class McmcConfig:
    iterations: int = 5000
    burn_in: int = 1000
    thin: int = 10
    step_z: float = 0.1
    step_v: float = 0.2
    step_zeta: float = 0.1
    adapt: bool = True
    adapt_window: int = 50
    target_accept: float = 0.3
    seed: int = None
    p: int = 2
    refresh_every: int = 100  # full recomputation of rates to stop drift

    def __post_init__(self):
        if self.iterations < 1 or self.thin < 1 or self.burn_in < 0:
            raise ParameterError("iterations, thin must be >= 1 and burn_in >= 0")
        if self.burn_in >= self.iterations:
            raise ParameterError("burn_in must be < iterations")
        if min(self.step_z, self.step_v, self.step_zeta) <= 0:
            raise ParameterError("step sizes must be > 0")


@dataclass
class PosteriorSamples:
    """Thinned post-burn-in draws stored as stacked arrays."""

    v: np.ndarray          # (S, n)
    z: np.ndarray          # (S, n, p+1)
    zeta: np.ndarray       # (S,)
    acceptance: dict
    loglik: np.ndarray     # one entry per iteration, burn-in included
    steps: dict = field(default_factory=dict)
    link: str = "logistic"
    draw_loglik: np.ndarray = None  # log-likelihood at each stored draw

    def __len__(self):
        return len(self.zeta)

    def __getitem__(self, s):
        return BlsmParams(self.v[s], self.z[s], self.zeta[s])

    def draws(self):
        for s in range(len(self)):
            yield self[s]

    def mean_link_matrix(self):
        total = None
        for prm in self.draws():
            P = link_matrix(prm, self.link)
            total = P if total is None else total + P
        return total / len(self)

    def posterior_mean_params(self):
        """Mean intercepts and scale with positions averaged then renormalised."""
        zbar = self.z.mean(axis=0)
        return BlsmParams.normalized(self.v.mean(axis=0), zbar, float(self.zeta.mean()))


class _State:
    """Mutable sampler state: parameters plus cached link probabilities and rates."""

    def __init__(self, params, vals, traits, spec):
        self.v = params.v.copy()
        self.z = params.z.copy()
        self.zeta = float(params.zeta)
        self.vals = vals
        self.traits = traits
        self.spec = spec
        self.refresh()

    def full_rates(self, zeta):
        P = link_matrix(BlsmParams(self.v, self.z, zeta), self.spec.link)
        return P, self.spec.weight_scale * (P @ self.traits.membership)

    def refresh(self):
        self.P, self.lam = self.full_rates(self.zeta)

    def loglik(self, lam=None):
        return float(np.sum(log_pmf(self.vals, self.lam if lam is None else lam, self.spec)))


def mcmc_fit(y, traits, priors=None, cfg=None, spec=None, init=None, anchors=None):
    """Run the blocked sampler and return thinned post-burn-in draws.

    Each iteration updates, node by node, the positions (tangent-plane
    Gaussian step then renormalisation), then the intercepts (Gaussian random
    walk), then ``zeta`` (random walk on ``log zeta`` with the Jacobian term).
    During burn-in each block's step size is tuned towards ``target_accept``.
    Nodes listed in ``anchors`` keep their initial positions.
    """
    cfg = cfg or McmcConfig()
    spec = spec or LikelihoodSpec()
    vals = _values(y)
    if vals.shape != (traits.n, traits.K):
        raise ParameterError("ARD and trait partition disagree on shape")
    priors = priors or default_priors(vals, traits)
    if init is None:
        init = initialize(vals, traits, cfg.p, seed=cfg.seed)
    rng = as_generator(cfg.seed)

    st = _State(init, vals, traits, spec)
    ll = st.loglik()
    if not np.isfinite(ll) or not np.isfinite(log_prior_zeta(st.zeta, priors.zeta_scale)):
        raise InitializationError("log-posterior is not finite at the initial state")

    n, d = st.z.shape
    kappa = float(priors.z_kappa)
    zmean = (np.asarray(priors.z_mean, dtype=float) if kappa > 0 else np.zeros(d))
    fixed = np.zeros(n, dtype=bool)
    if anchors is not None:
        fixed[np.asarray(anchors, dtype=np.int64)] = True
    n_free = max(int((~fixed).sum()), 1)
    fam, disp, link, ws = spec.family_code, spec.disp, spec.link_code, spec.weight_scale
    ptr, idx = traits.tr_ptr, traits.tr_idx

    steps = {"z": cfg.step_z, "v": cfg.step_v, "zeta": cfg.step_zeta}
    window = {"z": 0, "v": 0, "zeta": 0}
    kept = {"z": 0, "v": 0, "zeta": 0}
    n_keep = len(range(cfg.burn_in, cfg.iterations, cfg.thin))
    out_v = np.empty((n_keep, n))
    out_z = np.empty((n_keep, n, d))
    out_zeta = np.empty(n_keep)
    out_ll = np.empty(n_keep)
    trace = np.empty(cfg.iterations)
    s = 0

    for it in range(cfg.iterations):
        noise = rng.standard_normal((n, d))
        logu = np.log(rng.random(n))
        logu[fixed] = np.inf
        acc_z = kernels.sweep_positions(vals, ptr, idx, st.v, st.z, st.zeta, st.P, st.lam,
                                        noise, logu, steps["z"], fam, disp, link, ws,
                                        kappa, zmean)

        noise = rng.standard_normal(n)
        logu = np.log(rng.random(n))
        acc_v = kernels.sweep_intercepts(vals, ptr, idx, st.v, st.z, st.zeta, st.P, st.lam,
                                         noise, logu, steps["v"], fam, disp, link, ws,
                                         priors.mu_v, priors.sigma_v)

        if it % cfg.refresh_every == 0:
            st.refresh()
        ll = st.loglik()
        zeta_new = st.zeta * math.exp(steps["zeta"] * rng.standard_normal())
        P_new, lam_new = st.full_rates(zeta_new)
        ll_new = st.loglik(lam_new)
        log_ratio = (ll_new - ll
                     + log_prior_zeta(zeta_new, priors.zeta_scale)
                     - log_prior_zeta(st.zeta, priors.zeta_scale)
                     + math.log(zeta_new / st.zeta))
        acc_zeta = int(math.log(rng.random()) < log_ratio)
        if acc_zeta:
            st.zeta, st.P, st.lam, ll = zeta_new, P_new, lam_new, ll_new
        trace[it] = ll

        counts = {"z": acc_z / n_free, "v": acc_v / n, "zeta": acc_zeta}
        if it < cfg.burn_in:
            for key in window:
                window[key] += counts[key]
            if cfg.adapt and (it + 1) % cfg.adapt_window == 0:
                for key in steps:
                    rate = window[key] / cfg.adapt_window
                    steps[key] *= math.exp(1.5 * (rate - cfg.target_accept))
                    window[key] = 0
                steps["z"] = min(steps["z"], 2.0)
        else:
            for key in kept:
                kept[key] += counts[key]
            if (it - cfg.burn_in) % cfg.thin == 0:
                out_v[s] = st.v
                out_z[s] = st.z
                out_zeta[s] = st.zeta
                out_ll[s] = ll
                s += 1

    n_post = cfg.iterations - cfg.burn_in
    acceptance = {key: kept[key] / n_post for key in kept}
    log.debug("mcmc acceptance %s steps %s", acceptance, steps)
    return PosteriorSamples(out_v, out_z, out_zeta, acceptance, trace, steps, spec.link,
                            out_ll)
