"""Numba-compiled hot loops. Must stay numerically equivalent to ``_numpy``."""
import math

import numpy as np
from numba import njit

LAM_FLOOR = 1e-12
LOGISTIC = 0
PROBIT = 1
POISSON = 0
NEGBIN = 1


@njit(cache=True)
def ard_counts(n, n_traits, edges, weights, tr_ptr, tr_idx):
    y = np.zeros((n, n_traits))
    for e in range(edges.shape[0]):
        i = edges[e, 0]
        j = edges[e, 1]
        w = weights[e]
        for t in range(tr_ptr[j], tr_ptr[j + 1]):
            y[i, tr_idx[t]] += w
        for t in range(tr_ptr[i], tr_ptr[i + 1]):
            y[j, tr_idx[t]] += w
    return y


@njit(cache=True)
def brandes(n, indptr, indices):
    """Raw Brandes scores; on an undirected graph each pair is counted twice."""
    bc = np.zeros(n)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n)
    delta = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        head = 0
        tail = 1
        queue[0] = s
        n_seen = 0
        while head < tail:
            v = queue[head]
            head += 1
            order[n_seen] = v
            n_seen += 1
            for t in range(indptr[v], indptr[v + 1]):
                w = indices[t]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for idx in range(n_seen - 1, -1, -1):
            w = order[idx]
            for t in range(indptr[w], indptr[w + 1]):
                v = indices[t]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


@njit(cache=True)
def _link(x, link):
    if link == PROBIT:
        return 0.5 * math.erfc(-x / math.sqrt(2.0))
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


@njit(cache=True)
def _loglam_term(y, lam, family, disp):
    # lambda-dependent part of the log pmf
    lam = max(lam, LAM_FLOOR)
    if family == NEGBIN:
        return y * math.log(lam) - (y + disp) * math.log(disp + lam)
    return y * math.log(lam) - lam


@njit(cache=True)
def _row_delta(i, pnew, y, tr_ptr, tr_idx, P, lam, dlam, family, disp, wscale):
    """Log-likelihood change if row/column i of P is replaced by ``pnew``."""
    n = P.shape[0]
    dlam[:] = 0.0
    total = 0.0
    for j in range(n):
        if j == i:
            continue
        d = wscale * (pnew[j] - P[i, j])
        for t in range(tr_ptr[j], tr_ptr[j + 1]):
            dlam[tr_idx[t]] += d
        for t in range(tr_ptr[i], tr_ptr[i + 1]):
            k = tr_idx[t]
            total += (_loglam_term(y[j, k], lam[j, k] + d, family, disp)
                      - _loglam_term(y[j, k], lam[j, k], family, disp))
    for k in range(lam.shape[1]):
        if dlam[k] != 0.0:
            total += (_loglam_term(y[i, k], lam[i, k] + dlam[k], family, disp)
                      - _loglam_term(y[i, k], lam[i, k], family, disp))
    return total


@njit(cache=True)
def _commit_row(i, pnew, tr_ptr, tr_idx, P, lam, dlam, wscale):
    n = P.shape[0]
    for j in range(n):
        if j == i:
            continue
        d = wscale * (pnew[j] - P[i, j])
        for t in range(tr_ptr[i], tr_ptr[i + 1]):
            lam[j, tr_idx[t]] += d
        P[i, j] = pnew[j]
        P[j, i] = pnew[j]
    for k in range(lam.shape[1]):
        lam[i, k] += dlam[k]


@njit(cache=True)
def sweep_positions(y, tr_ptr, tr_idx, v, z, zeta, P, lam, noise, logu, step,
                    family, disp, link, wscale, kappa, zmean):
    n, d = z.shape
    pnew = np.empty(n)
    dlam = np.empty(lam.shape[1])
    prop = np.empty(d)
    accepted = 0
    for i in range(n):
        dot = 0.0
        for a in range(d):
            dot += noise[i, a] * z[i, a]
        norm = 0.0
        for a in range(d):
            prop[a] = z[i, a] + step * (noise[i, a] - dot * z[i, a])
            norm += prop[a] * prop[a]
        norm = math.sqrt(norm)
        for a in range(d):
            prop[a] /= norm
        for j in range(n):
            if j == i:
                pnew[j] = 0.0
                continue
            ip = 0.0
            for a in range(d):
                ip += prop[a] * z[j, a]
            pnew[j] = _link(v[i] + v[j] + zeta * ip, link)
        delta = _row_delta(i, pnew, y, tr_ptr, tr_idx, P, lam, dlam, family, disp, wscale)
        if kappa > 0.0:
            for a in range(d):
                delta += kappa * zmean[a] * (prop[a] - z[i, a])
        if logu[i] < delta:
            _commit_row(i, pnew, tr_ptr, tr_idx, P, lam, dlam, wscale)
            for a in range(d):
                z[i, a] = prop[a]
            accepted += 1
    return accepted


@njit(cache=True)
def sweep_intercepts(y, tr_ptr, tr_idx, v, z, zeta, P, lam, noise, logu, step,
                     family, disp, link, wscale, mu_v, sigma_v):
    n, d = z.shape
    pnew = np.empty(n)
    dlam = np.empty(lam.shape[1])
    accepted = 0
    for i in range(n):
        vi = v[i] + step * noise[i]
        for j in range(n):
            if j == i:
                pnew[j] = 0.0
                continue
            ip = 0.0
            for a in range(d):
                ip += z[i, a] * z[j, a]
            pnew[j] = _link(vi + v[j] + zeta * ip, link)
        delta = _row_delta(i, pnew, y, tr_ptr, tr_idx, P, lam, dlam, family, disp, wscale)
        delta += ((v[i] - mu_v) ** 2 - (vi - mu_v) ** 2) / (2.0 * sigma_v ** 2)
        if logu[i] < delta:
            _commit_row(i, pnew, tr_ptr, tr_idx, P, lam, dlam, wscale)
            v[i] = vi
            accepted += 1
    return accepted
