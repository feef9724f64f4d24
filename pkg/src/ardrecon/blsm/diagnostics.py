"""Effective sample size and potential scale reduction for scalar chains."""
import numpy as np

from ..errors import ParameterError


def autocorr(x):
    """Sample autocorrelation at every lag via FFT (biased, normalised to lag 0)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    xc = x - x.mean()
    f = np.fft.rfft(xc, n=2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    if acov[0] <= 0:
        return np.r_[1.0, np.ones(n - 1)]
    return acov / acov[0]


def ess(x):
    """ESS with Geyer's initial positive sequence truncation.

    Consecutive autocorrelation pairs ``rho_{2m} + rho_{2m+1}`` are summed
    while they stay positive. A constant chain has ESS 1.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return float(n)
    if np.ptp(x) == 0:
        return 1.0
    rho = autocorr(x)
    tau = -1.0
    for m in range(0, n - 1, 2):
        pair = rho[m] + rho[m + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(min(n / max(tau, 1e-12), n * np.log10(n)))


def gelman_rubin(chains):
    """Potential scale reduction ``sqrt((W + B/N) / W)`` for an (m, N) array.

    Identical chains give exactly 1.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim != 2 or chains.shape[0] < 2:
        raise ParameterError("Gelman-Rubin needs at least two chains")
    m, N = chains.shape
    if N < 2:
        raise ParameterError("chains need at least two draws")
    means = chains.mean(axis=1)
    W = chains.var(axis=1, ddof=1).mean()
    B = N * means.var(ddof=1)
    if W == 0:
        return 1.0 if B == 0 else float("inf")
    return float(np.sqrt(1.0 + B / (N * W)))


def _scalars(samples):
    out = {f"v[{i}]": samples.v[:, i] for i in range(samples.v.shape[1])}
    out["zeta"] = samples.zeta
    # positions are only identified up to rotation, so they are summarised
    # through the log-likelihood at each stored draw
    if samples.draw_loglik is not None:
        out["loglik"] = samples.draw_loglik
    return out


def diagnostics(samples, chains=None, gelman=None):
    """Per-parameter ESS and (with two or more chains) Gelman-Rubin.

    ``samples`` is one :class:`PosteriorSamples`; ``chains`` optionally a
    list of further chains run on the same data. Asking for Gelman-Rubin
    with a single chain (``gelman=True``) is an error.
    """
    all_chains = [samples] + list(chains or [])
    if gelman is None:
        gelman = len(all_chains) > 1
    if gelman and len(all_chains) < 2:
        raise ParameterError("Gelman-Rubin needs at least two chains")
    per_chain = [_scalars(c) for c in all_chains]
    out = {"ess": {}, "gelman_rubin": {}}
    for name in per_chain[0]:
        out["ess"][name] = float(sum(ess(c[name]) for c in per_chain))
        if gelman:
            N = min(len(c[name]) for c in per_chain)
            out["gelman_rubin"][name] = gelman_rubin([c[name][-N:] for c in per_chain])
    return out
