"""Scenario runner: generate, corrupt, fit, evaluate, aggregate, write CSVs."""
import configparser
import hashlib
import json
import logging
import math
import platform
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import io as aio
from ._rng import as_generator
from .ard import assign_traits, compute_ard, inject_dp_noise, inject_misreporting, TraitPartition
from .blsm import (LikelihoodSpec, McmcConfig, ViConfig, link_matrix, mcmc_fit, vi_fit)
from .blsm.simulate import simulate_blsm
from .errors import ArdError, ParameterError
from .evaluation import MetricsReport, auc, evaluate, pair_index, risk_rank
from .fpr import Deviance, FprConfig, Penalty, fit as fpr_fit
from .graphgen import (Graph, add_negbin_weights, gen_interbank, gen_scale_free,
                       gen_small_world)

log = logging.getLogger(__name__)

METHODS = ("blsm-mcmc", "blsm-vi", "fpr", "fpr-robust")
METHOD_LABELS = {"blsm-mcmc": "BLSM (MCMC)", "blsm-vi": "BLSM (VI)",
                 "fpr": "FPR (PG)", "fpr-robust": "FPR (Robust)"}
GENERATORS = ("latent", "scale-free", "small-world", "interbank")
RHOS = (0.0, 0.1, 0.2, 0.3)
EPSILONS = (0.1, 0.5, 1.0, 2.0)
SIZES = (250, 500, 1000)
GEN_DEFAULTS = {
    "latent": {"zeta": 6.0, "v_mean": -2.5, "v_sd": 0.5},
    "scale-free": {"gamma": 2.5, "k_min": 3},
    "small-world": {"k": 10, "p_r": 0.1},
    "interbank": {"p0": 0.0, "alpha": 0.1, "noise_scale": 0.02, "size_dist": "categorical",
                  "size_values": (0.05, 1.0, 50.0), "size_probs": (0.6, 0.3, 0.1),
                  "size_sigma": 1.0, "tiers": 3, "regions": 3},
}
SUMMARY_COLUMNS = ("auc_mean", "auc_sd", "rmse_mean", "rmse_sd")


@dataclass
class Scenario:
    """Everything needed to run one simulated reconstruction study."""

    name: str = "base"
    generator: str = "latent"
    n: int = 250
    K: int = 8
    coverage: float = 0.25
    overlap: float = 0.0
    gen_params: dict = field(default_factory=dict)
    rho: float = 0.0
    epsilon: float = None
    weighted: bool = False
    weight_r: float = 2.0
    weight_q: float = 0.5
    methods: tuple = ("fpr", "fpr-robust")
    replications: int = 1
    seed: int = 0
    p: int = 2
    mcmc_iterations: int = 5000
    mcmc_burn_in: int = 1000
    mcmc_thin: int = 10
    vi_iterations: int = 1000
    vi_samples: int = 1
    fpr_penalty: str = "l1"
    fpr_lambda: float = 1.0
    fpr_max_iter: int = 2000
    huber_delta: float = 1.345

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if self.generator not in GENERATORS:
            raise ParameterError(f"unknown generator {self.generator!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ParameterError(f"unknown or empty methods {bad}")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError("rho must lie in [0, 1]")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be > 0")
        if self.n < 10 or self.K < 1:
            raise ParameterError("need n >= 10 and K >= 1")
        if self.mcmc_burn_in >= self.mcmc_iterations:
            raise ParameterError("mcmc_burn_in must be < mcmc_iterations")
        Penalty(self.fpr_penalty, self.fpr_lambda)

    @property
    def params(self):
        return {**GEN_DEFAULTS[self.generator], **self.gen_params}

    @property
    def mean_weight(self):
        """Expected edge weight ``1 + r q / (1 - q)`` (1 for binary graphs)."""
        if not self.weighted:
            return 1.0
        return 1.0 + self.weight_r * self.weight_q / (1.0 - self.weight_q)

    @property
    def scenario_id(self):
        eps = "none" if self.epsilon is None else f"{self.epsilon:g}"
        return (f"{self.name}:{self.generator}:n{self.n}:K{self.K}:rho{self.rho:g}:eps{eps}"
                f":{'w' if self.weighted else 'b'}")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class RunRecord:
    scenario: Scenario
    method: str
    replication: int
    seed: int
    report: MetricsReport = None
    error: str = ""

    @property
    def ok(self):
        return self.report is not None

    def row(self):
        s = self.scenario
        r = self.report
        return {
            "scenario": s.scenario_id, "generator": s.generator, "n": s.n, "K": s.K,
            "rho": s.rho, "epsilon": "none" if s.epsilon is None else s.epsilon,
            "weighted": int(s.weighted), "method": self.method,
            "replication": self.replication, "seed": self.seed,
            "status": "ok" if self.ok else "failed",
            "auc": r.auc if r else None, "rmse": r.rmse if r else None,
            "rmse_kind": r.meta.get("rmse_kind") if r else None,
            "procrustes_error": r.procrustes_error if r else None,
            "runtime_seconds": r.runtime_seconds if r else None,
            "error": self.error,
        }


RECORD_COLUMNS = tuple(RunRecord(Scenario(), "fpr", 0, 0).row().keys())
TIMING_COLUMNS = ("runtime_seconds", "time_mean")


def interbank_traits(sizes, tiers=3, regions=3, seed=None):
    """Size tiers plus random regions.

    Tiers are the distinct size classes when there are at most ``tiers`` of
    them (categorical sizes), otherwise quantile bins. Every bank belongs to
    one tier and one region, so the two families of traits overlap.
    """
    sizes = np.asarray(sizes, dtype=float)
    n = len(sizes)
    rng = as_generator(seed)
    classes = np.unique(sizes)
    if len(classes) <= tiers:
        groups = [np.flatnonzero(sizes == c) for c in classes]
    else:
        order = np.argsort(sizes, kind="stable")
        groups = [np.sort(b) for b in np.array_split(order, tiers)]
    region = rng.permutation(n) % regions
    groups += [np.flatnonzero(region == r) for r in range(regions)]
    return TraitPartition(n, groups)


def _rep_seeds(s):
    """Per-replication child seeds: graph, traits, weights, misreport, dp, fit."""
    root = np.random.SeedSequence(s.seed)
    out = []
    for child in root.spawn(s.replications):
        out.append([int(c.generate_state(1)[0]) for c in child.spawn(6)])
    return out


def generate(s, seeds):
    """Ground-truth graph, traits, true positions (latent only) and ARD for one replication."""
    g_seed, t_seed, w_seed, m_seed, d_seed, _ = seeds
    prm = s.params
    z_true = None
    if s.generator == "latent":
        sim = simulate_blsm(s.n, s.p, s.K, s.coverage, prm["zeta"], prm["v_mean"], prm["v_sd"],
                            seed=g_seed)
        g, traits, z_true = sim.graph, sim.traits, sim.params.z
    else:
        if s.generator == "scale-free":
            g = gen_scale_free(s.n, prm["gamma"], prm["k_min"], seed=g_seed)
        elif s.generator == "small-world":
            g = gen_small_world(s.n, prm["k"], prm["p_r"], seed=g_seed)
        else:
            if prm["size_dist"] == "categorical":
                sp = {"values": list(prm["size_values"]), "probs": list(prm["size_probs"])}
            else:
                sp = {"mean": 0.0, "sigma": prm["size_sigma"]}
            g = gen_interbank(s.n, prm["p0"], prm["alpha"], prm["noise_scale"],
                              size_dist=prm["size_dist"], size_params=sp, seed=g_seed)
        if s.generator == "interbank":
            traits = interbank_traits(g.sizes, prm["tiers"], prm["regions"], t_seed)
        else:
            traits = assign_traits(s.n, s.K, s.coverage, s.overlap, seed=t_seed)
    if s.weighted:
        g = add_negbin_weights(g, s.weight_r, s.weight_q, seed=w_seed)
    y = compute_ard(g, traits)
    if s.rho > 0:
        y = inject_misreporting(y, s.rho, seed=m_seed)
    if s.epsilon is not None:
        y = inject_dp_noise(y, s.epsilon, traits, seed=d_seed)
    return g, traits, z_true, y


def fit_method(method, y, traits, s, seed):
    """Link-probability matrix and (BLSM only) estimated positions."""
    ws = s.mean_weight
    if method == "blsm-mcmc":
        cfg = McmcConfig(iterations=s.mcmc_iterations, burn_in=s.mcmc_burn_in,
                         thin=s.mcmc_thin, seed=seed, p=s.p)
        smp = mcmc_fit(y, traits, cfg=cfg, spec=LikelihoodSpec(weight_scale=ws))
        return smp.mean_link_matrix(), smp.posterior_mean_params().z
    if method == "blsm-vi":
        cfg = ViConfig(iterations=s.vi_iterations, samples=s.vi_samples, seed=seed, p=s.p)
        est, _ = vi_fit(y, traits, cfg=cfg, spec=LikelihoodSpec(weight_scale=ws))
        return link_matrix(est), est.z
    kind = "huber" if method == "fpr-robust" else "poisson"
    cfg = FprConfig(penalty=Penalty(s.fpr_penalty, s.fpr_lambda),
                    deviance=Deviance(kind, s.huber_delta), max_iter=s.fpr_max_iter,
                    weight_scale=ws)
    model = fpr_fit(y, traits, cfg)
    return model.link_matrix(traits.membership), None


def run_scenario(s):
    """One RunRecord per (method, replication); module errors become failure rows."""
    records = []
    for rep, seeds in enumerate(_rep_seeds(s)):
        try:
            g, traits, z_true, y = generate(s, seeds)
        except ArdError as exc:
            log.warning("replication %d of %s failed in generation: %s", rep, s.scenario_id, exc)
            records += [RunRecord(s, m, rep, seeds[0], None, f"{type(exc).__name__}: {exc}")
                        for m in s.methods]
            continue
        for method in s.methods:
            t0 = time.perf_counter()
            try:
                P, z_hat = fit_method(method, y, traits, s, seeds[5])
                runtime = time.perf_counter() - t0
                rep_ = evaluate(g, P, z_hat, z_true, runtime,
                                weight_pred=s.mean_weight * P if s.weighted else None,
                                method=method)
                records.append(RunRecord(s, method, rep, seeds[0], rep_))
            except ArdError as exc:
                log.warning("%s replication %d of %s failed: %s", method, rep, s.scenario_id, exc)
                records.append(RunRecord(s, method, rep, seeds[0], None,
                                         f"{type(exc).__name__}: {exc}"))
    return records


def _sd(x):
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def summarize(records, key):
    """Mean/sd of AUC and RMSE grouped by ``key(record)`` and method, sorted."""
    groups = {}
    for r in records:
        if r.ok:
            groups.setdefault((key(r), r.method), []).append(r.report)
    rows = []
    for (k, method), reps in sorted(groups.items(), key=lambda kv: (kv[0][0], METHODS.index(kv[0][1]))):
        a = [x.auc for x in reps]
        e = [x.rmse for x in reps]
        rows.append({"key": k, "method": method, "auc_mean": float(np.mean(a)), "auc_sd": _sd(a),
                     "rmse_mean": float(np.mean(e)), "rmse_sd": _sd(e),
                     "time_mean": float(np.mean([x.runtime_seconds for x in reps])),
                     "runs": len(reps)})
    return rows


def _rename(rows, name, keep=SUMMARY_COLUMNS):
    return [{name: r["key"], "method": r["method"], **{c: r[c] for c in keep}} for r in rows]


def sweep_misreporting(base, rhos=RHOS):
    """Rows ``(rho, method, auc_mean, auc_sd, rmse_mean, rmse_sd)`` and the raw records.

    The replication seeds do not depend on ``rho``, so each replication sees
    the same graph and traits at every contamination level.
    """
    records = []
    for rho in rhos:
        records += run_scenario(base.with_(rho=float(rho)))
    return _rename(summarize(records, lambda r: r.scenario.rho), "rho"), records


def sweep_privacy(base, epsilons=EPSILONS, include_clean=True):
    """Rows over the privacy budgets; a clean (noise-free) run is labelled ``epsilon = inf``."""
    records = []
    for eps in epsilons:
        records += run_scenario(base.with_(epsilon=float(eps)))
    if include_clean:
        records += run_scenario(base.with_(epsilon=None))
    key = lambda r: math.inf if r.scenario.epsilon is None else r.scenario.epsilon
    return _rename(summarize(records, key), "epsilon"), records


def sweep_sizes(base, sizes=SIZES, mcmc_max_n=500):
    """Size grid; MCMC is only run up to ``mcmc_max_n`` (VI covers larger sizes)."""
    records = []
    for n in sizes:
        methods = tuple(m for m in base.methods if m != "blsm-mcmc" or n <= mcmc_max_n)
        if methods:
            records += run_scenario(base.with_(n=int(n), methods=methods))
    rows = summarize(records, lambda r: r.scenario.n)
    return _rename(rows, "n", SUMMARY_COLUMNS + ("time_mean",)), records


def size_table(rows):
    """Wide layout: one row per (n, metric), one column per method label."""
    out = []
    for n in sorted({r["n"] for r in rows}):
        for metric in ("AUC", "RMSE"):
            row = {"Size (n)": n, "Metric": metric}
            for r in rows:
                if r["n"] == n:
                    row[METHOD_LABELS[r["method"]]] = r[f"{metric.lower()}_mean"]
            out.append(row)
    return out


def sweep_weighted(base, sizes=SIZES, mcmc_max_n=500):
    """Weight-RMSE against network size on negative-binomial weighted graphs."""
    rows, records = sweep_sizes(base.with_(weighted=True), sizes, mcmc_max_n)
    return [{"n": r["n"], "method": r["method"], "rmse_mean": r["rmse_mean"],
             "rmse_sd": r["rmse_sd"]} for r in rows], records


@dataclass
class InterbankResult:
    truth: Graph
    reconstructed: Graph
    probs: np.ndarray
    traits: TraitPartition
    ard: object
    risk: object
    auc: float
    threshold: float


def interbank_study(n=200, seed=0, threshold=0.5, w_deg=0.5, w_btw=0.5, rho=0.0,
                    lam=1.0, penalty="l1", max_iter=2000, **gen):
    """Robust FPR on ARD from a size-driven interbank network; risk-rank the reconstruction.

    Predicted probabilities above ``threshold`` become edges of the
    reconstructed graph; AUC is scored on the probabilities themselves.
    """
    s = Scenario(name="interbank", generator="interbank", n=n, gen_params=gen, rho=rho,
                 methods=("fpr-robust",), seed=seed, fpr_lambda=lam, fpr_penalty=penalty,
                 fpr_max_iter=max_iter)
    seeds = _rep_seeds(s)[0]
    g, traits, _, y = generate(s, seeds)
    P, _ = fit_method("fpr-robust", y, traits, s, seeds[5])
    iu = pair_index(n)
    keep = P[iu] > threshold
    recon = Graph(n, np.column_stack([iu[0][keep], iu[1][keep]]), sizes=g.sizes)
    table = risk_rank(recon, w_deg, w_btw)
    return InterbankResult(g, recon, P, traits, y, table, auc(g, P), threshold)


def write_interbank(res, outdir):
    """Risk-ranking CSV plus node and edge CSVs for external plotting."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    aio.write_risk(outdir / "table6_1_risk.csv", res.risk, include_score=True)
    n = res.truth.n
    rank = np.empty(n, dtype=np.int64)
    rank[res.risk.node] = res.risk.rank
    score = np.empty(n)
    score[res.risk.node] = res.risk.score
    M = np.asarray(res.traits.membership)
    deg_t, deg_r = res.truth.degrees(), res.reconstructed.degrees()
    nodes = [{"node": i, "size": float(res.truth.sizes[i]),
              "traits": ";".join(str(k) for k in np.flatnonzero(M[i])),
              "degree_true": int(deg_t[i]), "degree_reconstructed": int(deg_r[i]),
              "risk_score": float(score[i]), "risk_rank": int(rank[i])} for i in range(n)]
    aio.write_rows(outdir / "fig6_1_nodes.csv", nodes)
    truth = res.truth.edge_set()
    recon = res.reconstructed.edge_set()
    iu = pair_index(n)
    edges = [{"src": int(i), "dst": int(j), "prob": float(res.probs[i, j]),
              "in_truth": int((i, j) in truth), "in_reconstruction": int((i, j) in recon)}
             for i, j in zip(*iu) if (i, j) in truth or (i, j) in recon]
    aio.write_rows(outdir / "fig6_1_edges.csv", edges,
                   ["src", "dst", "prob", "in_truth", "in_reconstruction"])


def benchmark(sizes=SIZES, methods=METHODS, base=None, repeats=1):
    """Wall-clock seconds per (method, size), one row per method, one column per size.

    Each cell is the mean over ``repeats`` single-replication runs of the
    same scenario (fit time only; generation is excluded).
    """
    base = base or Scenario(name="benchmark", mcmc_iterations=1000, mcmc_burn_in=200)
    cells = {}
    for n in sizes:
        s = base.with_(n=int(n), methods=tuple(methods), replications=1)
        seeds = _rep_seeds(s)[0]
        g, traits, _, y = generate(s, seeds)
        for m in methods:
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                fit_method(m, y, traits, s, seeds[5])
                times.append(time.perf_counter() - t0)
            cells[(m, n)] = float(np.mean(times))
    rows = [{"Method": METHOD_LABELS[m], **{f"n = {n}": cells[(m, n)] for n in sizes}}
            for m in methods]
    return rows, cells


# configuration files ----------------------------------------------------------

_SCENARIO_TYPES = {f.name: f.type for f in fields(Scenario)}


def _coerce(name, raw):
    raw = raw.strip()
    if name == "methods":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if name == "epsilon":
        return None if raw.lower() in ("", "none") else float(raw)
    typ = _SCENARIO_TYPES[name]
    if typ in (bool, "bool"):
        return raw.lower() in ("1", "true", "yes", "on")
    if typ in (int, "int"):
        return int(raw)
    if typ in (float, "float"):
        return float(raw)
    return raw


def _value(raw):
    """Generator parameter: int, float, comma-separated numbers, or a bare string."""
    raw = raw.strip()
    if "," in raw:
        return tuple(_value(x) for x in raw.split(",") if x.strip())
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _floats(raw):
    return [float(x) for x in raw.split(",") if x.strip()]


def parse_config(text):
    """``(Scenario, experiment options)`` from INI-style text.

    Sections: ``[scenario]`` (Scenario fields), ``[generator]`` (generator
    parameters) and ``[experiment]`` (which sweeps to run and their grids).
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep "K" distinct from "k"
    cp.read_string(text)
    if not cp.has_section("scenario"):
        raise ParameterError("config needs a [scenario] section")
    kw = {}
    for key, raw in cp.items("scenario"):
        if key not in _SCENARIO_TYPES or key == "gen_params":
            raise ParameterError(f"unknown scenario key {key!r}")
        kw[key] = _coerce(key, raw)
    if cp.has_section("generator"):
        kw["gen_params"] = {k: _value(v) for k, v in cp.items("generator")}
    scenario = Scenario(**kw)
    exp = {"sweeps": ["misreporting", "privacy"], "rhos": list(RHOS),
           "epsilons": list(EPSILONS), "sizes": list(SIZES), "mcmc_max_n": 500,
           "benchmark_methods": list(METHODS), "interbank_n": 200, "interbank_seeds": 1}
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        if "sweeps" in sec:
            exp["sweeps"] = [x.strip() for x in sec["sweeps"].split(",") if x.strip()]
        for k in ("rhos", "epsilons", "sizes"):
            if k in sec:
                exp[k] = _floats(sec[k])
        exp["sizes"] = [int(x) for x in exp["sizes"]]
        for k in ("mcmc_max_n", "interbank_n", "interbank_seeds"):
            if k in sec:
                exp[k] = int(sec[k])
        if "benchmark_methods" in sec:
            exp["benchmark_methods"] = [x.strip() for x in sec["benchmark_methods"].split(",")]
    unknown = set(exp["sweeps"]) - set(SWEEPS)
    if unknown:
        raise ParameterError(f"unknown sweeps {sorted(unknown)}")
    return scenario, exp


def load_config(path):
    return parse_config(Path(path).read_text())


SWEEPS = ("scenario", "misreporting", "privacy", "sizes", "weighted", "interbank", "benchmark")


def _versions():
    import numba
    import scipy
    return {"ardrecon": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
            "kernel_backend": kernels.BACKEND}


def run_experiment(config_path, outdir):
    """Run every sweep named in the config and write CSVs plus ``manifest.json``."""
    text = Path(config_path).read_text()
    scenario, exp = parse_config(text)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = {}

    def emit(name, rows, columns=None):
        aio.write_rows(outdir / name, rows, columns)
        outputs[name] = len(rows)

    all_records = []
    for sweep in exp["sweeps"]:
        if sweep == "scenario":
            recs = run_scenario(scenario)
            emit("runs.csv", [r.row() for r in recs], RECORD_COLUMNS)
        elif sweep == "misreporting":
            rows, recs = sweep_misreporting(scenario, exp["rhos"])
            emit("fig5_3_misreporting.csv", rows, ("rho", "method") + SUMMARY_COLUMNS)
        elif sweep == "privacy":
            rows, recs = sweep_privacy(scenario, exp["epsilons"])
            emit("fig5_5_privacy.csv", rows, ("epsilon", "method") + SUMMARY_COLUMNS)
        elif sweep == "sizes":
            rows, recs = sweep_sizes(scenario, exp["sizes"], exp["mcmc_max_n"])
            emit("table5_1_sizes.csv", size_table(rows))
            emit("fig5_1_sizes.csv", rows, ("n", "method") + SUMMARY_COLUMNS + ("time_mean",))
        elif sweep == "weighted":
            rows, recs = sweep_weighted(scenario, exp["sizes"], exp["mcmc_max_n"])
            emit("fig5_7_weighted.csv", rows, ("n", "method", "rmse_mean", "rmse_sd"))
        elif sweep == "interbank":
            recs = []
            rows = []
            for k in range(exp["interbank_seeds"]):
                res = interbank_study(exp["interbank_n"], seed=scenario.seed + k,
                                      **scenario.gen_params if scenario.generator == "interbank" else {})
                rows.append({"seed": scenario.seed + k, "auc": res.auc,
                             "edges_true": res.truth.m, "edges_reconstructed": res.reconstructed.m})
                if k == 0:
                    write_interbank(res, outdir)
            emit("interbank_auc.csv", rows)
        elif sweep == "benchmark":
            rows, _ = benchmark(exp["sizes"], exp["benchmark_methods"], scenario)
            emit("tableA1_timing.csv", rows)
            recs = []
        all_records += recs
    if all_records:
        emit("runs_all.csv", [r.row() for r in all_records], RECORD_COLUMNS)

    manifest = {
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "scenario": {k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in asdict(scenario).items()},
        "experiment": exp,
        "base_seed": scenario.seed,
        "replication_seeds": _rep_seeds(scenario),
        "versions": _versions(),
        "outputs": outputs,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
