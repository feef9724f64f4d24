"""CSV readers and writers for graphs, traits, ARD, fits and reports.

Every CSV starts with its header row. Anything a table cannot carry
(node count, provenance, penalty settings) goes into a ``<file>.json``
sidecar next to it.
"""
import csv
import json
from pathlib import Path

import numpy as np

from .ard import ArdMatrix, TraitPartition
from .blsm.mcmc import PosteriorSamples
from .blsm.model import BlsmParams
from .errors import DataError
from .fpr.deviance import Deviance
from .fpr.features import FeatureMap
from .fpr.penalties import Penalty
from .fpr.solver import FprModel
from .graphgen import Graph


def _sidecar(path):
    return Path(str(path) + ".json")


def _write_meta(path, meta):
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default))


def _read_table(path):
    """``(meta, header, rows)``; ``meta`` comes from the sidecar when present."""
    side = _sidecar(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    return meta, header, [r for r in reader if r]


def write_rows(path, rows, columns=None):
    """Write a list of dicts as CSV (columns default to the first row's keys)."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _parse(x):
    if x == "":
        return None
    for cast in (int, float):
        try:
            return cast(x)
        except ValueError:
            pass
    return x


def read_rows(path):
    _, header, rows = _read_table(path)
    return [{k: _parse(v) for k, v in zip(header, r)} for r in rows]


def write_edges(path, g):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "weight"] if g.weighted else ["src", "dst"])
        for t, (i, j) in enumerate(g.edges.tolist()):
            w.writerow([i, j, int(g.weights[t])] if g.weighted else [i, j])
    _write_meta(path, {"nodes": g.n})


def read_edges(path, n=None, sizes=None):
    meta, header, rows = _read_table(path)
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    edges = arr[:, :2].astype(np.int64)
    if n is None:
        n = int(meta["nodes"]) if "nodes" in meta else int(edges.max()) + 1 if len(edges) else 0
    weights = arr[:, 2].astype(np.int64) if "weight" in header else None
    return Graph(n, edges, weights=weights, sizes=sizes)


def write_sizes(path, sizes):
    write_rows(path, [{"node": i, "size": float(s)} for i, s in enumerate(sizes)])


def read_sizes(path):
    return np.array([r["size"] for r in read_rows(path)], dtype=float)


def write_traits(path, traits):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "trait"])
        for k, grp in enumerate(traits.groups):
            for i in grp.tolist():
                w.writerow([i, k])
    _write_meta(path, {"nodes": traits.n, "traits": traits.K})


def read_traits(path):
    meta, _, rows = _read_table(path)
    arr = np.array(rows, dtype=np.int64).reshape(-1, 2)
    n = int(meta.get("nodes", arr[:, 0].max() + 1))
    K = int(meta.get("traits", arr[:, 1].max() + 1))
    return TraitPartition(n, [arr[arr[:, 1] == k, 0] for k in range(K)])


def write_ard(path, y):
    vals = y.values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node"] + [f"y_{k + 1}" for k in range(vals.shape[1])])
        for i, row in enumerate(vals.tolist()):
            w.writerow([i] + row)
    side = {"provenance": y.provenance, "meta": y.meta,
            "misreporters": None if y.misreporters is None else np.asarray(y.misreporters).tolist()}
    _write_meta(path, side)


def read_ard(path):
    side, _, rows = _read_table(path)
    vals = np.array(rows, dtype=np.int64)[:, 1:]
    mis = side.get("misreporters")
    return ArdMatrix(vals, side.get("provenance", "clean"),
                     None if mis is None else np.asarray(mis),
                     side.get("meta", {}))


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def write_embedding(path, z):
    z = np.asarray(z)
    write_rows(path, [{"node": i, **{f"z{d}": float(x) for d, x in enumerate(row)}}
                      for i, row in enumerate(z)])


def read_embedding(path):
    _, header, rows = _read_table(path)
    return np.array(rows, dtype=float)[:, 1:]


def _param_columns(n, d):
    return ([f"v_{i}" for i in range(n)]
            + [f"z_{i}_{c}" for i in range(n) for c in range(d)] + ["zeta"])


def write_posterior(path, samples):
    """One row per draw with flattened ``(v, z, zeta)``; a point estimate is one draw."""
    if isinstance(samples, BlsmParams):
        v, z, zeta = samples.v[None], samples.z[None], np.array([samples.zeta])
    else:
        v, z, zeta = samples.v, samples.z, samples.zeta
    S, n, d = z.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw"] + _param_columns(n, d))
        for s in range(S):
            w.writerow([s] + [repr(float(x)) for x in np.r_[v[s], z[s].ravel(), zeta[s]]])
    _write_meta(path, {"nodes": n, "dim": d, "draws": S})


def read_posterior(path, link="logistic"):
    meta, _, rows = _read_table(path)
    n, d = int(meta["nodes"]), int(meta["dim"])
    arr = np.array(rows, dtype=float).reshape(-1, 1 + n + n * d + 1)[:, 1:]
    S = arr.shape[0]
    return PosteriorSamples(arr[:, :n], arr[:, n:n + n * d].reshape(S, n, d), arr[:, -1],
                            {}, np.empty(0), {}, link)


def write_model(path, model):
    rows = [{"index": t, "name": name, "value": float(b)}
            for t, (name, b) in enumerate(zip(model.features.names, model.beta))]
    write_rows(path, rows, ["index", "name", "value"])
    side = {"n": model.features.n, "K": model.features.K,
            "penalty": {"kind": model.penalty.kind, "lam": model.penalty.lam, "a": model.penalty.a},
            "deviance": {"kind": model.deviance.kind, "delta": model.deviance.delta},
            "weight_scale": model.weight_scale, "penalize_intercept": model.penalize_intercept,
            "n_iter": model.n_iter, "converged": model.converged}
    _write_meta(path, side)


def read_model(path):
    rows = read_rows(path)
    beta = np.array([r["value"] for r in rows], dtype=float)
    side = json.loads(_sidecar(path).read_text())  # feature map and settings
    fm = FeatureMap(side["n"], side["K"])
    if fm.dim != len(beta):
        raise DataError("model file does not match its feature map")
    pen = Penalty(side["penalty"]["kind"], side["penalty"]["lam"], side["penalty"]["a"])
    dev = Deviance(side["deviance"]["kind"], side["deviance"]["delta"])
    return FprModel(beta, fm, pen, dev, side["weight_scale"], side["penalize_intercept"],
                    None, side["n_iter"], side["converged"])


def write_predictions(path, n, probs):
    """Pair probabilities in ``i < j`` row-major order."""
    iu = np.triu_indices(n, 1)
    P = np.asarray(probs, dtype=float)
    vals = P[iu] if P.ndim == 2 else P
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "prob"])
        for i, j, p in zip(iu[0].tolist(), iu[1].tolist(), vals.tolist()):
            w.writerow([i, j, repr(p)])
    _write_meta(path, {"nodes": n})


def read_predictions(path):
    """Return ``(n, P)`` with ``P`` the symmetric probability matrix (zero diagonal)."""
    meta, _, rows = _read_table(path)
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    i, j = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64)
    n = int(meta["nodes"]) if "nodes" in meta else int(max(i.max(), j.max())) + 1
    P = np.zeros((n, n))
    P[i, j] = arr[:, 2]
    P[j, i] = arr[:, 2]
    return n, P


def write_risk(path, table, include_score=False):
    cols = ["Node ID", "Degree", "Betweenness", "Risk Rank"] + (["Risk Score"] if include_score else [])
    write_rows(path, table.rows(include_score), cols)


def read_risk(path):
    from .evaluation import RiskTable
    rows = read_rows(path)
    col = lambda k, dt: np.array([r[k] for r in rows], dtype=dt)
    score = col("Risk Score", float) if rows and "Risk Score" in rows[0] else np.full(len(rows), np.nan)
    return RiskTable(col("Node ID", np.int64), col("Degree", np.int64),
                     col("Betweenness", float), score, col("Risk Rank", np.int64))
