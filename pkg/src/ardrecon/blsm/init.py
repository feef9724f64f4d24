import logging
import warnings

import numpy as np

from .._rng import as_generator
from .model import BlsmParams, _values

log = logging.getLogger(__name__)


def random_sphere(n, d, seed=None):
    rng = as_generator(seed)
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def classical_mds(D, dim):
    """Classical (Torgerson) scaling of a distance matrix into ``dim`` coordinates."""
    n = D.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D ** 2) @ J
    w, V = np.linalg.eigh(B)
    order = np.argsort(w)[::-1][:dim]
    w, V = np.clip(w[order], 0.0, None), V[:, order]
    w[w < 1e-10 * max(w.max(initial=0.0), 1e-300)] = 0.0  # round-off directions
    X = V * np.sqrt(w)
    if X.shape[1] < dim:
        X = np.pad(X, ((0, 0), (0, dim - X.shape[1])))
    return X


def initialize(y, traits, p=2, seed=None):
    """Starting point from an MDS embedding of the row-normalised ARD profiles.

    Positions are classical MDS of the pairwise cosine distances between
    profiles ``y_i / max(1, sum_k y_ik)``, projected to the unit sphere.
    Intercepts are half the logit of each node's plug-in link density, and
    ``zeta`` starts at 1.
    """
    vals = _values(y)
    n, K = vals.shape
    d = p + 1
    if d > K:
        warnings.warn(f"K={K} traits cannot pin down a {p}-sphere embedding (need K >= p + 1)")
    rng = as_generator(seed)
    if not vals.any():
        warnings.warn("all-zero ARD; falling back to a random initialisation")
        z = random_sphere(n, d, rng)
        return BlsmParams(np.full(n, -3.0), z, 1.0)

    prof = vals / np.maximum(1.0, vals.sum(axis=1, keepdims=True))
    norms = np.linalg.norm(prof, axis=1)
    unit = np.divide(prof, norms[:, None], out=np.zeros_like(prof), where=norms[:, None] > 0)
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    D = 1.0 - cos
    np.fill_diagonal(D, 0.0)
    X = classical_mds(D, d)
    rn = np.linalg.norm(X, axis=1)
    bad = rn < 1e-12
    if bad.any():
        X[bad] = random_sphere(int(bad.sum()), d, rng)
        rn[bad] = 1.0
    z = X / rn[:, None]

    denom = np.maximum(traits.others_count().sum(axis=1), 1.0)
    dens = np.clip(vals.sum(axis=1) / denom, 1e-3, 1 - 1e-3)
    v = 0.5 * np.log(dens / (1.0 - dens))
    return BlsmParams(v, z, 1.0)
