"""Synthetic undirected networks: scale-free, small-world, interbank, weighted."""
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ._rng import as_generator
from .errors import ParameterError, StateError


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` int array in canonical form: ``i < j`` on each
    row, rows sorted lexicographically, no duplicates. ``weights`` (positive
    integers) and ``sizes`` (positive reals) are optional.
    """

    n: int
    edges: np.ndarray
    weights: np.ndarray = None
    sizes: np.ndarray = None
    _csr: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if n < 0:
            raise ParameterError("n must be non-negative")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ParameterError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise ParameterError("duplicate edge")
        w = self.weights
        if w is not None:
            w = np.asarray(w, dtype=np.int64)[order]
            if w.shape != (len(e),):
                raise ParameterError("weights must have one entry per edge")
            if np.any(w < 1):
                raise ParameterError("edge weights must be >= 1")
        s = self.sizes
        if s is not None:
            s = np.asarray(s, dtype=float)
            if s.shape != (n,) or np.any(s <= 0):
                raise ParameterError("sizes must be n positive reals")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sizes", s)

    @property
    def m(self):
        return len(self.edges)

    @property
    def weighted(self):
        return self.weights is not None

    def edge_weights(self):
        """Per-edge weights as floats (all ones when unweighted)."""
        if self.weights is None:
            return np.ones(self.m)
        return self.weights.astype(float)

    def edge_set(self):
        return set(map(tuple, self.edges.tolist()))

    def adjacency(self, weighted=False):
        A = np.zeros((self.n, self.n))
        vals = self.edge_weights() if weighted else 1.0
        A[self.edges[:, 0], self.edges[:, 1]] = vals
        A[self.edges[:, 1], self.edges[:, 0]] = vals
        return A

    def sparse_adjacency(self):
        if self._csr is None:
            i, j = self.edges[:, 0], self.edges[:, 1]
            data = np.ones(2 * self.m)
            A = sparse.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(self.n, self.n))
            A.sort_indices()
            object.__setattr__(self, "_csr", A)
        return self._csr

    def csr(self):
        """``(indptr, indices)`` of the symmetric adjacency."""
        A = self.sparse_adjacency()
        return A.indptr.astype(np.int64), A.indices.astype(np.int64)

    def degrees(self, weighted=False):
        d = np.zeros(self.n)
        w = self.edge_weights() if weighted else np.ones(self.m)
        np.add.at(d, self.edges[:, 0], w)
        np.add.at(d, self.edges[:, 1], w)
        return d if weighted else d.astype(np.int64)

    def with_weights(self, weights):
        return Graph(self.n, self.edges, weights=weights, sizes=self.sizes)


@dataclass(frozen=True)
class GraphStats:
    density: float
    degree_sequence: list
    clustering_coeff: float
    avg_path_length: float  # over the largest connected component
    tail_exponent_estimate: float


def _bernoulli_upper(prob, rng):
    """Sample i<j pairs with the given (n, n) probability matrix."""
    n = prob.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < prob[iu, ju]
    return np.column_stack([iu[hit], ju[hit]])


def gen_scale_free(n, gamma, k_min, seed=None, offset=1.0):
    """Chung-Lu graph with power-law expected degrees.

    Expected degrees are ``w_i = c (i + offset)^(-1/(gamma-1))`` with ``c``
    chosen so that the smallest expected degree equals ``k_min``; each pair is
    linked independently with probability ``min(1, w_i w_j / sum(w))``.
    ``k_min`` bounds the *expected* degrees; realised degrees fluctuate
    around them. Larger ``offset`` truncates the hub tail.
    """
    if n < 10:
        raise ParameterError("gen_scale_free needs n >= 10")
    if not 2.0 < gamma < 3.0:
        raise ParameterError("gamma must lie in (2, 3)")
    if k_min < 1:
        raise ParameterError("k_min must be >= 1")
    if k_min > (n - 1) / 4:
        raise ParameterError(f"n={n} is too small to realise k_min={k_min}")
    rng = as_generator(seed)
    expo = -1.0 / (gamma - 1.0)
    idx = np.arange(n, dtype=float)
    w = (idx + offset) ** expo
    w *= k_min / w[-1]
    prob = np.minimum(1.0, np.outer(w, w) / w.sum())
    return Graph(n, _bernoulli_upper(prob, rng))


def gen_small_world(n, k, p_r, seed=None):
    """Watts-Strogatz ring of ``k`` nearest neighbours with rewiring probability ``p_r``."""
    if k % 2:
        raise ParameterError("k must be even")
    if not 2 <= k < n:
        raise ParameterError("need 2 <= k < n")
    if not 0.0 <= p_r <= 1.0:
        raise ParameterError("p_r must lie in [0, 1]")
    rng = as_generator(seed)
    nbrs = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
    for j in range(1, k // 2 + 1):
        draws = rng.random(n)
        for u in range(n):
            v = (u + j) % n
            if draws[u] >= p_r or v not in nbrs[u] or len(nbrs[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in nbrs[u]:
                w = int(rng.integers(n))
            nbrs[u].discard(v)
            nbrs[v].discard(u)
            nbrs[u].add(w)
            nbrs[w].add(u)
    edges = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def draw_sizes(n, size_dist="lognormal", size_params=None, seed=None):
    """Bank sizes: ``lognormal`` (mean, sigma) or ``categorical`` (values, probs)."""
    rng = as_generator(seed)
    params = dict(size_params or {})
    if size_dist == "lognormal":
        return rng.lognormal(params.get("mean", 0.0), params.get("sigma", 1.0), size=n)
    if size_dist == "categorical":
        values = np.asarray(params.get("values", [1.0, 10.0, 100.0]), dtype=float)
        probs = params.get("probs", [0.6, 0.3, 0.1])
        return rng.choice(values, size=n, p=probs)
    raise ParameterError(f"unknown size distribution {size_dist!r}")


def gen_interbank(n, p0, alpha, noise_scale=0.0, size_dist="lognormal",
                  size_params=None, seed=None):
    """Size-driven interbank network.

    ``p_ij = p0 + alpha (log(1+s_i) + log(1+s_j)) + noise_scale (Beta(2,2) - 1/2)``
    clipped to ``[0, 1]``, then one Bernoulli draw per pair.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ParameterError("p0 must lie in [0, 1]")
    if alpha < 0 or noise_scale < 0:
        raise ParameterError("alpha and noise_scale must be >= 0")
    if n < 2:
        raise ParameterError("n must be >= 2")
    rng = as_generator(seed)
    sizes = draw_sizes(n, size_dist, size_params, rng)
    f = np.log1p(sizes)
    prob = p0 + alpha * (f[:, None] + f[None, :])
    if noise_scale > 0:
        eps = rng.beta(2.0, 2.0, size=(n, n)) - 0.5
        eps = np.triu(eps, 1)
        prob = prob + noise_scale * (eps + eps.T)
    prob = np.clip(prob, 0.0, 1.0)
    return Graph(n, _bernoulli_upper(prob, rng), sizes=sizes)


def add_negbin_weights(g, r, q, seed=None):
    """Give every edge weight ``1 + NegBin(r, q)`` (mean ``1 + r q / (1 - q)``)."""
    if g.weighted:
        raise StateError("graph already carries weights")
    if r <= 0 or not 0.0 < q < 1.0:
        raise ParameterError("need r > 0 and q in (0, 1)")
    rng = as_generator(seed)
    w = 1 + rng.negative_binomial(r, 1.0 - q, size=g.m)
    return g.with_weights(w)


def hill_exponent(degrees, frac=0.1):
    """Hill estimate of the degree-distribution exponent from the top ``frac`` of degrees.

    Returns ``1 + alpha_hat`` so that it is comparable to ``gamma`` in
    ``P(D = d) ~ d^-gamma``.
    """
    d = np.sort(np.asarray(degrees, dtype=float))[::-1]
    d = d[d > 0]
    k = max(2, int(len(d) * frac))
    if len(d) <= k:
        return float("nan")
    logs = np.log(d[:k]) - np.log(d[k])
    s = logs.sum()
    if s <= 0:
        return float("inf")
    return 1.0 + k / s


def graph_stats(g):
    if g.n < 2:
        raise ParameterError("graph_stats needs n >= 2")
    deg = g.degrees()
    density = 2.0 * g.m / (g.n * (g.n - 1))
    A = g.sparse_adjacency()
    closed = A.multiply(A @ A).sum()  # 6 * triangles
    triples = float(np.sum(deg * (deg - 1)))
    clustering = float(closed / triples) if triples > 0 else 0.0
    n_comp, labels = csgraph.connected_components(A, directed=False)
    big = np.argmax(np.bincount(labels))
    nodes = np.flatnonzero(labels == big)
    if len(nodes) > 1:
        sub = A[nodes][:, nodes]
        dist = csgraph.shortest_path(sub, method="D", unweighted=True, directed=False)
        avg_path = float(dist.sum() / (len(nodes) * (len(nodes) - 1)))
    else:
        avg_path = 0.0
    return GraphStats(
        density=float(density),
        degree_sequence=deg.tolist(),
        clustering_coeff=clustering,
        avg_path_length=avg_path,
        tail_exponent_estimate=float(hill_exponent(deg)),
    )
