"""Latent surface model: link probabilities, ARD rates, likelihood and prior."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, ive, ndtr

from ..ard import ArdMatrix
from ..errors import DataError, ParameterError
from ..kernels import LAM_FLOOR, LOGISTIC, NEGBIN, POISSON, PROBIT

LINKS = {"logistic": LOGISTIC, "probit": PROBIT}
FAMILIES = {"poisson": POISSON, "negative-binomial": NEGBIN}


@dataclass(frozen=True, eq=False)
class BlsmParams:
    """Node intercepts ``v``, unit-sphere positions ``z`` (rows) and scale ``zeta``."""

    v: np.ndarray
    z: np.ndarray
    zeta: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 2 or v.shape != (z.shape[0],):
            raise ParameterError("v must be (n,) and z must be (n, p+1)")
        if np.any(np.abs(np.linalg.norm(z, axis=1) - 1.0) > 1e-10):
            raise ParameterError("rows of z must be unit vectors")
        if not self.zeta > 0:
            raise ParameterError("zeta must be > 0")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "zeta", float(self.zeta))

    @classmethod
    def normalized(cls, v, z, zeta):
        z = np.asarray(z, dtype=float)
        return cls(v, z / np.linalg.norm(z, axis=1, keepdims=True), zeta)

    @property
    def n(self):
        return self.z.shape[0]

    @property
    def p(self):
        return self.z.shape[1] - 1

    def rotated(self, Q):
        return BlsmParams(self.v, self.z @ Q, self.zeta)


@dataclass(frozen=True)
class BlsmPriors:
    """Normal prior on intercepts, half-Cauchy on ``zeta``, uniform or vMF on positions.

    ``z_kappa = 0`` means the uniform sphere prior; otherwise positions have
    a von Mises-Fisher prior with mean ``z_mean`` and concentration ``z_kappa``.
    """

    mu_v: float = 0.0
    sigma_v: float = 1.0
    zeta_scale: float = 2.5
    z_kappa: float = 0.0
    z_mean: tuple = None

    def __post_init__(self):
        if not self.sigma_v > 0 or not self.zeta_scale > 0:
            raise ParameterError("sigma_v and zeta_scale must be > 0")
        if self.z_kappa < 0:
            raise ParameterError("z_kappa must be >= 0")
        if self.z_kappa > 0 and self.z_mean is None:
            raise ParameterError("a von Mises-Fisher prior needs z_mean")


@dataclass(frozen=True)
class LikelihoodSpec:
    """Count family for ``y_ik`` and link for edge probabilities.

    ``weight_scale`` multiplies the rate so weighted ARD can be modelled as
    ``weight_scale * sum_j P(g_ij = 1)``; it is 1 for binary graphs.
    """

    family: str = "poisson"
    dispersion: float = None
    link: str = "logistic"
    weight_scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.link not in LINKS:
            raise ParameterError(f"unknown link {self.link!r}")
        if self.family == "negative-binomial" and not (self.dispersion or 0) > 0:
            raise ParameterError("negative-binomial needs dispersion r > 0")
        if not self.weight_scale > 0:
            raise ParameterError("weight_scale must be > 0")

    @property
    def family_code(self):
        return FAMILIES[self.family]

    @property
    def link_code(self):
        return LINKS[self.link]

    @property
    def disp(self):
        return float(self.dispersion or 0.0)


def sigma(x, link="logistic"):
    if link == "probit":
        return ndtr(x)
    return expit(x)


def sigma_prime(x, link="logistic"):
    if link == "probit":
        return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)
    s = expit(x)
    return s * (1.0 - s)


def link_prob(params, i, j, link="logistic"):
    """``sigma(v_i + v_j + zeta <z_i, z_j>)``."""
    if i == j:
        raise ParameterError("link_prob is undefined for i == j")
    eta = params.v[i] + params.v[j] + params.zeta * float(params.z[i] @ params.z[j])
    return float(sigma(eta, link))


def linear_predictor(params):
    return params.v[:, None] + params.v[None, :] + params.zeta * (params.z @ params.z.T)


def link_matrix(params, link="logistic"):
    """All pairwise link probabilities with a zero diagonal."""
    P = sigma(linear_predictor(params), link)
    np.fill_diagonal(P, 0.0)
    return P


def rates(params, traits, spec=None):
    """``lambda_ik = weight_scale * sum_{j in G_k, j != i} P(g_ij = 1)`` for all cells."""
    spec = spec or LikelihoodSpec()
    return spec.weight_scale * (link_matrix(params, spec.link) @ traits.membership)


def ard_rate(params, traits, i, k, spec=None):
    spec = spec or LikelihoodSpec()
    members = traits.groups[k]
    members = members[members != i]
    if members.size == 0:
        return 0.0
    eta = params.v[i] + params.v[members] + params.zeta * (params.z[members] @ params.z[i])
    return float(spec.weight_scale * sigma(eta, spec.link).sum())


def _values(y):
    vals = y.values if isinstance(y, ArdMatrix) else np.asarray(y)
    if np.any(vals < 0):
        raise DataError("negative ARD counts")
    return vals.astype(float)


def log_pmf(y, lam, spec):
    lam = np.maximum(lam, LAM_FLOOR)
    if spec.family == "negative-binomial":
        r = spec.dispersion
        return (gammaln(y + r) - gammaln(r) - gammaln(y + 1.0)
                + r * np.log(r / (r + lam)) + y * np.log(lam / (r + lam)))
    return y * np.log(lam) - lam - gammaln(y + 1.0)


def log_likelihood(params, y, traits, spec=None):
    spec = spec or LikelihoodSpec()
    vals = _values(y)
    if vals.shape != (params.n, traits.K) or traits.n != params.n:
        raise ParameterError("dimension mismatch between params, ARD and traits")
    return float(np.sum(log_pmf(vals, rates(params, traits, spec), spec)))


def log_prior_zeta(zeta, scale):
    if zeta <= 0:
        return -np.inf
    return math.log(2.0 / (math.pi * scale)) - math.log1p((zeta / scale) ** 2)


def log_prior(params, priors):
    if not params.zeta > 0:
        return -np.inf
    dv = params.v - priors.mu_v
    out = float(np.sum(-0.5 * (dv / priors.sigma_v) ** 2
                       - math.log(priors.sigma_v) - 0.5 * math.log(2 * math.pi)))
    out += log_prior_zeta(params.zeta, priors.zeta_scale)
    d = params.z.shape[1]
    if priors.z_kappa > 0:
        mean = np.asarray(priors.z_mean, dtype=float)
        out += params.n * log_vmf_normalizer(priors.z_kappa, d)
        out += priors.z_kappa * float(np.sum(params.z @ mean))
    else:
        # uniform density on S^{d-1}: 1 / area
        area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
        out -= params.n * math.log(area)
    return out


def log_vmf_normalizer(kappa, d):
    """``log C_d(kappa)`` for the vMF density ``C_d(kappa) exp(kappa mu'z)`` on S^{d-1}."""
    nu = d / 2.0 - 1.0
    return (nu * math.log(kappa) - (d / 2.0) * math.log(2 * math.pi)
            - (math.log(ive(nu, kappa)) + kappa))


def default_priors(y, traits):
    """Weakly informative priors centred on the observed density.

    ``mu_v`` is half the logit of (mean count / mean group size) because two
    intercepts enter each linear predictor.
    """
    vals = _values(y)
    dens = vals.mean() / max(traits.others_count().mean(), 1.0)
    dens = min(max(dens, 1e-4), 1 - 1e-4)
    return BlsmPriors(mu_v=0.5 * math.log(dens / (1 - dens)), sigma_v=1.0, zeta_scale=2.5)


def loglik_gradients(v, z, zeta, y, traits, spec=None):
    """Log-likelihood and its gradients with respect to ``v``, ``z`` (Euclidean) and ``zeta``.

    Works on raw arrays so that ``z`` need not be normalised (finite-difference
    checks perturb it off the sphere).
    """
    spec = spec or LikelihoodSpec()
    vals = _values(y)
    M = traits.membership
    eta = v[:, None] + v[None, :] + zeta * (z @ z.T)
    P = sigma(eta, spec.link)
    np.fill_diagonal(P, 0.0)
    lam = spec.weight_scale * (P @ M)
    lam_f = np.maximum(lam, LAM_FLOOR)
    ll = float(np.sum(log_pmf(vals, lam, spec)))
    if spec.family == "negative-binomial":
        r = spec.dispersion
        R = vals / lam_f - (vals + r) / (r + lam_f)
    else:
        R = vals / lam_f - 1.0
    R = np.where(lam > LAM_FLOOR, R, 0.0)
    A = spec.weight_scale * (R @ M.T)
    W = sigma_prime(eta, spec.link) * (A + A.T)
    np.fill_diagonal(W, 0.0)
    grad_v = W.sum(axis=1)
    grad_z = zeta * (W @ z)
    grad_zeta = 0.5 * float(np.sum(W * (z @ z.T)))
    return ll, grad_v, grad_z, grad_zeta


def predict_links(source, pairs, link="logistic"):
    """Link probabilities for ``pairs`` from a point estimate or posterior samples.

    ``source`` is a :class:`BlsmParams` or anything exposing ``draws()``
    (e.g. :class:`PosteriorSamples`); for samples the probabilities are
    averaged over draws.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    i, j = pairs[:, 0], pairs[:, 1]
    if isinstance(source, BlsmParams):
        draws = [source]
    else:
        draws = list(source.draws())
        if not draws:
            raise ParameterError("empty sample set")
    total = np.zeros(len(pairs))
    for prm in draws:
        eta = prm.v[i] + prm.v[j] + prm.zeta * np.einsum("ij,ij->i", prm.z[i], prm.z[j])
        total += sigma(eta, link)
    return total / len(draws)
