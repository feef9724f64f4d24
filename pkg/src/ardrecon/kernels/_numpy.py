"""Vectorised numpy versions of the kernels in ``_numba``.

Same signatures and return values; loops that are inherently sequential
(Metropolis node updates, BFS levels) stay in Python with the inner work
vectorised.
"""
import numpy as np
from scipy.special import erfc, expit

LAM_FLOOR = 1e-12
LOGISTIC = 0
PROBIT = 1
POISSON = 0
NEGBIN = 1


def _membership(n, n_traits, tr_ptr, tr_idx):
    M = np.zeros((n, n_traits))
    rows = np.repeat(np.arange(n), np.diff(tr_ptr))
    M[rows, tr_idx] = 1.0
    return M


def ard_counts(n, n_traits, edges, weights, tr_ptr, tr_idx):
    M = _membership(n, n_traits, tr_ptr, tr_idx)
    y = np.zeros((n, n_traits))
    if len(edges):
        i, j = edges[:, 0], edges[:, 1]
        np.add.at(y, i, weights[:, None] * M[j])
        np.add.at(y, j, weights[:, None] * M[i])
    return y


def brandes(n, indptr, indices):
    """Level-synchronous Brandes: each BFS level is processed as one edge batch."""
    src = np.repeat(np.arange(n), np.diff(indptr))
    dst = np.asarray(indices, dtype=np.int64)
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        frontier = np.array([s])
        level = 0
        while frontier.size:
            on_front = np.zeros(n, dtype=bool)
            on_front[frontier] = True
            out = on_front[src]
            nxt = dst[out]
            fresh = np.unique(nxt[dist[nxt] < 0])
            dist[fresh] = level + 1
            tree = out & (dist[dst] == level + 1)
            np.add.at(sigma, dst[tree], sigma[src[tree]])
            frontier = fresh
            level += 1
        delta = np.zeros(n)
        tree_all = (dist[src] >= 0) & (dist[dst] == dist[src] + 1)
        for lev in range(level - 1, -1, -1):
            sel = tree_all & (dist[src] == lev)
            v, w = src[sel], dst[sel]
            np.add.at(delta, v, sigma[v] / sigma[w] * (1.0 + delta[w]))
        delta[s] = 0.0
        bc += delta
    return bc


def _link(x, link):
    if link == PROBIT:
        return 0.5 * erfc(-x / np.sqrt(2.0))
    return expit(x)


def _loglam_term(y, lam, family, disp):
    lam = np.maximum(lam, LAM_FLOOR)
    if family == NEGBIN:
        return y * np.log(lam) - (y + disp) * np.log(disp + lam)
    return y * np.log(lam) - lam


def _row_update(i, pnew, y, M, P, lam, family, disp, wscale):
    """Return (delta loglik, new lam row i, new lam columns of i's traits)."""
    d = wscale * (pnew - P[i])
    d[i] = 0.0
    lam_i = lam[i] + d @ M
    traits = np.flatnonzero(M[i])
    cols_old = lam[:, traits]
    cols_new = cols_old + d[:, None]
    yi = y[:, traits]
    mask = np.ones(len(d), dtype=bool)
    mask[i] = False
    total = np.sum((_loglam_term(yi, cols_new, family, disp)
                    - _loglam_term(yi, cols_old, family, disp))[mask])
    total += np.sum(_loglam_term(y[i], lam_i, family, disp)
                    - _loglam_term(y[i], lam[i], family, disp))
    return total, lam_i, traits, cols_new


def _commit(i, pnew, P, lam, lam_i, traits, cols_new):
    mask = np.ones(P.shape[0], dtype=bool)
    mask[i] = False
    for c, k in enumerate(traits):
        lam[mask, k] = cols_new[mask, c]
    lam[i] = lam_i
    P[i, mask] = pnew[mask]
    P[mask, i] = pnew[mask]


def sweep_positions(y, tr_ptr, tr_idx, v, z, zeta, P, lam, noise, logu, step,
                    family, disp, link, wscale, kappa, zmean):
    n = z.shape[0]
    M = _membership(n, lam.shape[1], tr_ptr, tr_idx)
    accepted = 0
    for i in range(n):
        xi = noise[i]
        prop = z[i] + step * (xi - (xi @ z[i]) * z[i])
        prop /= np.sqrt(prop @ prop)
        pnew = _link(v[i] + v + zeta * (z @ prop), link)
        pnew[i] = 0.0
        delta, lam_i, traits, cols_new = _row_update(i, pnew, y, M, P, lam, family, disp, wscale)
        if kappa > 0.0:
            delta += kappa * (zmean @ (prop - z[i]))
        if logu[i] < delta:
            _commit(i, pnew, P, lam, lam_i, traits, cols_new)
            z[i] = prop
            accepted += 1
    return accepted


def sweep_intercepts(y, tr_ptr, tr_idx, v, z, zeta, P, lam, noise, logu, step,
                     family, disp, link, wscale, mu_v, sigma_v):
    n = z.shape[0]
    M = _membership(n, lam.shape[1], tr_ptr, tr_idx)
    accepted = 0
    for i in range(n):
        vi = v[i] + step * noise[i]
        pnew = _link(vi + v + zeta * (z @ z[i]), link)
        pnew[i] = 0.0
        delta, lam_i, traits, cols_new = _row_update(i, pnew, y, M, P, lam, family, disp, wscale)
        delta += ((v[i] - mu_v) ** 2 - (vi - mu_v) ** 2) / (2.0 * sigma_v ** 2)
        if logu[i] < delta:
            _commit(i, pnew, P, lam, lam_i, traits, cols_new)
            v[i] = vi
            accepted += 1
    return accepted
