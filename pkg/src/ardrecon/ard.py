"""Trait groups, ARD aggregation, misreporting and differential-privacy noise."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._rng import as_generator
from .errors import DataError, ParameterError, StateError

PROVENANCES = ("clean", "misreported", "dp-noised")


class TraitPartition:
    """``K`` (possibly overlapping) node subsets ``G_k`` over ``n`` nodes."""

    def __init__(self, n, groups):
        self.n = int(n)
        self.groups = [np.unique(np.asarray(g, dtype=np.int64)) for g in groups]
        if not self.groups:
            raise ParameterError("need at least one trait")
        for g in self.groups:
            if g.size and (g[0] < 0 or g[-1] >= self.n):
                raise ParameterError("trait member index out of range")
        M = np.zeros((self.n, self.K))
        for k, g in enumerate(self.groups):
            M[g, k] = 1.0
        M.flags.writeable = False
        self.membership = M
        counts = M.sum(axis=1).astype(np.int64)
        self.tr_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.tr_idx = np.nonzero(M)[1].astype(np.int64)

    @property
    def K(self):
        return len(self.groups)

    @property
    def sizes(self):
        return np.array([len(g) for g in self.groups])

    @property
    def membership_index(self):
        return [self.tr_idx[self.tr_ptr[i]:self.tr_ptr[i + 1]].tolist() for i in range(self.n)]

    @property
    def max_traits_per_node(self):
        return int(np.diff(self.tr_ptr).max()) if self.n else 0

    def others_count(self):
        """``|G_k \\ {i}|`` as an ``(n, K)`` array."""
        return self.sizes[None, :] - self.membership

    def __eq__(self, other):
        return (isinstance(other, TraitPartition) and self.n == other.n
                and self.K == other.K
                and all(np.array_equal(a, b) for a, b in zip(self.groups, other.groups)))

    def __repr__(self):
        return f"TraitPartition(n={self.n}, K={self.K}, sizes={self.sizes.tolist()})"


@dataclass(frozen=True, eq=False)
class ArdMatrix:
    """``n x K`` non-negative integer counts with provenance metadata."""

    values: np.ndarray
    provenance: str = "clean"
    misreporters: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.values)
        if y.ndim != 2:
            raise DataError("ARD must be a 2-d array")
        if np.any(y < 0):
            raise DataError("ARD counts must be non-negative")
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise DataError("ARD counts must be integers")
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        y = y.astype(np.int64)
        y.flags.writeable = False
        object.__setattr__(self, "values", y)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[1]


def assign_traits(n, K, coverage, overlap=0.0, seed=None):
    """Random trait groups of size ``ceil(coverage * n)``.

    Nodes are shuffled into ``K`` near-equal blocks. Trait ``k`` keeps
    members of block ``k`` and draws an ``overlap`` share of its members
    from outside the block; with ``overlap=0`` the groups are disjoint.
    """
    if K < 1:
        raise ParameterError("K must be >= 1")
    if not 0.0 < coverage <= 1.0:
        raise ParameterError("coverage must lie in (0, 1]")
    if not 0.0 <= overlap < 1.0:
        raise ParameterError("overlap must lie in [0, 1)")
    size = math.ceil(coverage * n)
    if size < 1:
        raise ParameterError("coverage * n must be >= 1")
    rng = as_generator(seed)
    blocks = np.array_split(rng.permutation(n), K)
    if overlap == 0.0 and size > min(len(b) for b in blocks):
        raise ParameterError(
            f"disjoint traits of size {size} do not fit into {K} blocks of {n} nodes")
    groups = []
    for k, block in enumerate(blocks):
        n_over = int(round(overlap * size))
        n_own = min(len(block), size - n_over)
        n_over = size - n_own
        outside = np.setdiff1d(np.arange(n), block)
        if n_over > len(outside):
            raise ParameterError("overlap request exceeds available nodes")
        own = rng.choice(block, size=n_own, replace=False)
        extra = rng.choice(outside, size=n_over, replace=False)
        groups.append(np.concatenate([own, extra]))
    return TraitPartition(n, groups)


def compute_ard(g, traits):
    """``y_ik = sum_{j in G_k, j != i} w_ij g_ij``."""
    if traits.n != g.n:
        raise ParameterError("trait partition and graph disagree on n")
    y = kernels.ard_counts(g.n, traits.K, g.edges, g.edge_weights(),
                           traits.tr_ptr, traits.tr_idx)
    return ArdMatrix(np.rint(y).astype(np.int64), "clean")


def inject_misreporting(y, rho, max_frac=0.2, seed=None):
    """Perturb the rows of ``ceil(rho * n)`` random respondents by up to ``max_frac``.

    For a flagged node each count moves by ``+/- delta`` with ``delta``
    uniform on ``{0, ..., ceil(max_frac * y_ik)}`` and a fair-coin sign; the
    result is clamped at zero.
    """
    if y.provenance != "clean":
        raise StateError("misreporting must be applied to clean ARD")
    if not 0.0 <= rho <= 1.0:
        raise ParameterError("rho must lie in [0, 1]")
    if max_frac < 0:
        raise ParameterError("max_frac must be >= 0")
    rng = as_generator(seed)
    vals = y.values.copy()
    n_flag = math.ceil(rho * y.n - 1e-12)
    flags = np.zeros(y.n, dtype=bool)
    flags[rng.choice(y.n, size=n_flag, replace=False)] = True
    rows = vals[flags]
    bound = np.ceil(max_frac * rows - 1e-12).astype(np.int64)
    delta = np.floor(rng.random(rows.shape) * (bound + 1)).astype(np.int64)
    sign = np.where(rng.random(rows.shape) < 0.5, -1, 1)
    vals[flags] = np.maximum(rows + sign * delta, 0)
    meta = dict(y.meta, rho=rho, max_frac=max_frac)
    return ArdMatrix(vals, "misreported", misreporters=flags, meta=meta)


def laplace_noise(shape, epsilon, sensitivity, seed=None):
    """Laplace mechanism noise of scale ``sensitivity / epsilon``."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be > 0")
    rng = as_generator(seed)
    return rng.laplace(0.0, sensitivity / epsilon, size=shape)


def inject_dp_noise(y, epsilon, traits=None, sensitivity=None, seed=None):
    """Laplace-noised counts, rounded and clamped at zero.

    Sensitivity defaults to the largest number of traits any node carries,
    taken from ``traits``; pass ``sensitivity`` directly when the partition
    is not at hand.
    """
    if not epsilon > 0:
        raise ParameterError("epsilon must be > 0")
    if sensitivity is None:
        if traits is None:
            raise ParameterError("need traits or an explicit sensitivity")
        sensitivity = traits.max_traits_per_node
    noise = laplace_noise(y.values.shape, epsilon, sensitivity, seed)
    vals = np.maximum(np.rint(y.values + noise), 0).astype(np.int64)
    meta = dict(y.meta, epsilon=epsilon, sensitivity=sensitivity)
    return ArdMatrix(vals, "dp-noised", misreporters=y.misreporters, meta=meta)
