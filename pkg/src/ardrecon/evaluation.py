"""Reconstruction metrics, embedding alignment, centrality and risk ranking."""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.stats import rankdata

from . import kernels
from .errors import DataError, ParameterError

RISK_COLUMNS = ("Node ID", "Degree", "Betweenness", "Risk Rank")


def pair_index(n):
    """Row-major unordered pairs ``i < j``; the order every pair vector uses."""
    return np.triu_indices(n, 1)


def _pair_vector(values, n):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        if values.shape != (n, n):
            raise ParameterError(f"expected an {n}x{n} matrix")
        return values[pair_index(n)]
    if values.shape != (n * (n - 1) // 2,):
        raise ParameterError("predictions must cover every unordered pair i < j")
    return values


def auc_scores(labels, scores):
    """Mann-Whitney AUC of ``scores`` for binary ``labels`` (ties count one half)."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape:
        raise ParameterError("labels and scores differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC is undefined without both edges and non-edges")
    r = rankdata(scores)
    return float((r[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc(truth, predicted):
    """AUC over all unordered pairs of ``truth`` (a Graph).

    ``predicted`` is an n x n score matrix or a vector in ``pair_index`` order.
    """
    n = truth.n
    labels = truth.adjacency()[pair_index(n)] > 0
    return auc_scores(labels, _pair_vector(predicted, n))


def rmse(truth, predicted):
    truth = np.asarray(truth, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if truth.shape != predicted.shape:
        raise ParameterError("truth and predicted differ in length")
    if truth.size == 0:
        raise ParameterError("empty input")
    return float(np.sqrt(np.mean((truth - predicted) ** 2)))


def pair_weights(g):
    """Edge weight (0 for absent edges) for every unordered pair."""
    return g.adjacency(weighted=True)[pair_index(g.n)]


def procrustes_align(z_hat, z_true):
    """Orthogonal ``Q`` minimising ``||z_hat Q - z_true||_F`` and the aligned ``z_hat``."""
    z_hat = np.asarray(z_hat, dtype=float)
    z_true = np.asarray(z_true, dtype=float)
    if z_hat.shape != z_true.shape or z_hat.ndim != 2:
        raise ParameterError("embeddings must have equal 2-d shapes")
    Q, _ = orthogonal_procrustes(z_hat, z_true)
    return Q, z_hat @ Q


def procrustes_error(z_hat, z_true, per_node=False):
    """``min_Q ||z_hat Q - z_true||_F`` over orthogonal ``Q`` (reflections allowed).

    With ``per_node`` the error is divided by ``sqrt(n)``, i.e. the RMS
    per-node distance after alignment, which is comparable across sizes.
    """
    _, aligned = procrustes_align(z_hat, z_true)
    err = float(np.linalg.norm(aligned - np.asarray(z_true, dtype=float)))
    return err / np.sqrt(len(aligned)) if per_node else err


def betweenness(g):
    """Exact betweenness on the unweighted graph, normalised by ``(n-1)(n-2)/2``."""
    n = g.n
    if n < 2:
        raise ParameterError("betweenness needs n >= 2")
    indptr, indices = g.csr()
    raw = kernels.brandes(n, indptr, indices) / 2.0  # each unordered pair counted twice
    if n < 3:
        return np.zeros(n)
    return raw / ((n - 1) * (n - 2) / 2.0)


@dataclass
class RiskTable:
    """Nodes sorted by composite risk score (rank 1 = riskiest)."""

    node: np.ndarray
    degree: np.ndarray
    betweenness: np.ndarray
    score: np.ndarray
    rank: np.ndarray

    def __len__(self):
        return len(self.node)

    def rows(self, include_score=False):
        out = []
        for t in range(len(self)):
            row = {"Node ID": int(self.node[t]), "Degree": int(self.degree[t]),
                   "Betweenness": float(self.betweenness[t]), "Risk Rank": int(self.rank[t])}
            if include_score:
                row["Risk Score"] = float(self.score[t])
            out.append(row)
        return out


def risk_rank(g, w_deg=0.5, w_btw=0.5):
    """Rank nodes by ``w_deg * deg / max deg + w_btw * btw / max btw``.

    A criterion whose maximum is zero is dropped. Ties go to the smaller node id.
    """
    if w_deg < 0 or w_btw < 0 or (w_deg == 0 and w_btw == 0):
        raise ParameterError("weights must be >= 0 and not both zero")
    deg = g.degrees().astype(float)
    btw = betweenness(g) if g.n >= 2 else np.zeros(g.n)
    score = np.zeros(g.n)
    if deg.max(initial=0) > 0:
        score += w_deg * deg / deg.max()
    if btw.max(initial=0) > 0:
        score += w_btw * btw / btw.max()
    order = np.lexsort((np.arange(g.n), -score))
    rank = np.arange(1, g.n + 1)
    return RiskTable(order, deg[order].astype(np.int64), btw[order], score[order], rank)


@dataclass
class MetricsReport:
    auc: float
    rmse: float
    procrustes_error: float = None
    runtime_seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.auc is not None and not 0.0 <= self.auc <= 1.0:
            raise ParameterError("auc must lie in [0, 1]")
        if self.rmse is not None and self.rmse < 0:
            raise ParameterError("rmse must be >= 0")

    def as_dict(self):
        d = asdict(self)
        meta = d.pop("meta")
        return {**meta, **d}


def evaluate(truth, probs, z_hat=None, z_true=None, runtime=0.0, weight_pred=None, **meta):
    """AUC and RMSE of predicted link probabilities (or weights) against ``truth``.

    Binary graphs get probability-RMSE against the 0/1 adjacency; when
    ``weight_pred`` is given the RMSE is against the pair weights instead.
    """
    n = truth.n
    p = _pair_vector(probs, n)
    if weight_pred is None:
        err = rmse(truth.adjacency()[pair_index(n)], p)
        meta.setdefault("rmse_kind", "probability")
    else:
        err = rmse(pair_weights(truth), _pair_vector(weight_pred, n))
        meta.setdefault("rmse_kind", "weight")
    perr = None
    if z_hat is not None and z_true is not None:
        perr = procrustes_error(z_hat, z_true)
    return MetricsReport(auc(truth, p), err, perr, runtime, meta)
