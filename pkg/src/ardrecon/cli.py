"""Command-line front end: ``ardrecon <subcommand> ...``."""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io as aio
from .ard import assign_traits, compute_ard, inject_dp_noise, inject_misreporting
from .blsm import (LikelihoodSpec, McmcConfig, ViConfig, diagnostics, link_matrix, mcmc_fit,
                   vi_fit)
from .errors import ArdError
from .evaluation import evaluate, risk_rank
from .fpr import (Deviance, FprConfig, Penalty, cross_validate, federated_fit, fit as fpr_fit,
                  split_rows)
from .graphgen import gen_interbank, gen_scale_free, gen_small_world
from .harness import METHODS, benchmark, run_experiment, Scenario


def _generate(a):
    if a.model == "scale-free":
        g = gen_scale_free(a.n, a.gamma, a.k_min, seed=a.seed)
    elif a.model == "small-world":
        g = gen_small_world(a.n, a.k, a.p_r, seed=a.seed)
    else:
        g = gen_interbank(a.n, a.p0, a.alpha, a.noise_scale, seed=a.seed)
    aio.write_edges(a.out, g)
    if g.sizes is not None:
        aio.write_sizes(Path(a.out).with_name(Path(a.out).stem + "_sizes.csv"), g.sizes)
    if a.traits_out:
        aio.write_traits(a.traits_out, assign_traits(g.n, a.K, a.coverage, a.overlap,
                                                     seed=a.seed))
    print(f"wrote {g.m} edges on {g.n} nodes to {a.out}")


def _ard(a):
    g = aio.read_edges(a.graph)
    traits = aio.read_traits(a.traits)
    y = compute_ard(g, traits)
    if a.misreport:
        y = inject_misreporting(y, a.misreport, seed=a.seed)
    if a.dp:
        y = inject_dp_noise(y, a.dp, traits, seed=a.seed)
    y.meta["seed"] = a.seed
    aio.write_ard(a.out, y)
    print(f"wrote {y.n}x{y.K} ARD ({y.provenance}) to {a.out}")


def _fit_blsm(a):
    y = aio.read_ard(a.ard)
    traits = aio.read_traits(a.traits)
    spec = LikelihoodSpec(family=a.family, dispersion=a.dispersion, link=a.link)
    if a.mode == "mcmc":
        cfg = McmcConfig(iterations=a.iters, burn_in=a.burnin, thin=a.thin, seed=a.seed, p=a.p)
        smp = mcmc_fit(y, traits, cfg=cfg, spec=spec)
        aio.write_posterior(a.out, smp)
        diag = diagnostics(smp)
        rows = [{"parameter": k, "ess": v} for k, v in diag["ess"].items()]
        rows += [{"parameter": f"acceptance_{k}", "ess": v} for k, v in smp.acceptance.items()]
        aio.write_rows(Path(a.out).with_name(Path(a.out).stem + "_diagnostics.csv"), rows)
        P = smp.mean_link_matrix()
        print(f"stored {len(smp)} draws; acceptance {smp.acceptance}")
    else:
        cfg = ViConfig(iterations=a.iters, seed=a.seed, p=a.p)
        est, trace = vi_fit(y, traits, cfg=cfg, spec=spec)
        aio.write_posterior(a.out, est)
        aio.write_rows(Path(a.out).with_name(Path(a.out).stem + "_elbo.csv"),
                       [{"iteration": t, "elbo": float(e)} for t, e in enumerate(trace)])
        P = link_matrix(est, a.link)
        print(f"final ELBO {trace[-1]:.3f}")
    if a.pred:
        aio.write_predictions(a.pred, traits.n, P)


def _fit_fpr(a):
    y = aio.read_ard(a.ard)
    traits = aio.read_traits(a.traits)
    cfg = FprConfig(penalty=Penalty(a.penalty, a.lam or 0.0, a.a),
                    deviance=Deviance(a.deviance), max_iter=a.max_iter)
    if a.cv:
        grid = a.grid or list(np.logspace(-2, 2, 9))
        best, curve = cross_validate(y, traits, grid, folds=a.cv, cfg=cfg, seed=a.seed)
        cfg.penalty = cfg.penalty.with_lambda(best)
        print("cv curve: " + ", ".join(f"{l:g}:{c:.4f}" for l, c in zip(grid, curve)))
        print(f"selected lambda {best:g}")
    if a.federated:
        eps = math.inf if a.eps is None else a.eps
        model = federated_fit(y, traits, split_rows(traits.n, a.federated, seed=a.seed),
                              epsilon=eps, rounds=a.rounds, step=a.step, cfg=cfg, seed=a.seed)
    else:
        model = fpr_fit(y, traits, cfg)
    aio.write_model(a.out, model)
    if a.pred:
        aio.write_predictions(a.pred, traits.n, model.link_matrix(traits.membership))
    print(f"wrote {len(model.beta)} coefficients to {a.out}")


def _evaluate(a):
    g = aio.read_edges(a.truth)
    _, P = aio.read_predictions(a.pred)
    zt = aio.read_embedding(a.embedding_true) if a.embedding_true else None
    ze = aio.read_embedding(a.embedding_est) if a.embedding_est else None
    rep = evaluate(g, P, ze, zt)
    aio.write_rows(a.out, [rep.as_dict()])
    print(f"AUC {rep.auc:.4f}  RMSE {rep.rmse:.4f}"
          + (f"  Procrustes {rep.procrustes_error:.4f}" if rep.procrustes_error is not None else ""))


def _risk(a):
    g = aio.read_edges(a.graph)
    table = risk_rank(g, a.w_deg, a.w_btw)
    aio.write_risk(a.out, table, include_score=a.score)
    for row in table.rows()[:a.top]:
        print(row)


def _experiment(a):
    manifest = run_experiment(a.config, a.out)
    for name, count in manifest["outputs"].items():
        print(f"{name}: {count} rows")


def _benchmark(a):
    base = Scenario(name="benchmark", mcmc_iterations=a.mcmc_iters,
                    mcmc_burn_in=min(a.mcmc_iters // 5, a.mcmc_iters - 1), seed=a.seed)
    rows, _ = benchmark(a.sizes, a.methods, base, a.repeats)
    if a.out:
        aio.write_rows(a.out, rows)
    cols = list(rows[0].keys())
    print("\t".join(cols))
    for r in rows:
        print("\t".join(str(r[c]) if c == "Method" else f"{r[c]:.2f}" for c in cols))


def build_parser():
    p = argparse.ArgumentParser(prog="ardrecon", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic graph to an edge CSV")
    g.add_argument("--model", choices=["scale-free", "small-world", "interbank"], required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--gamma", type=float, default=2.5)
    g.add_argument("--k-min", type=int, default=3)
    g.add_argument("--k", type=int, default=10)
    g.add_argument("--p-r", type=float, default=0.1)
    g.add_argument("--p0", type=float, default=0.02)
    g.add_argument("--alpha", type=float, default=0.01)
    g.add_argument("--noise-scale", type=float, default=0.0)
    g.add_argument("--traits-out", help="also write random traits here")
    g.add_argument("--K", type=int, default=8)
    g.add_argument("--coverage", type=float, default=0.1)
    g.add_argument("--overlap", type=float, default=0.0)
    g.set_defaults(func=_generate)

    r = sub.add_parser("ard", help="aggregate a graph into ARD, optionally corrupted")
    r.add_argument("--graph", required=True)
    r.add_argument("--traits", required=True)
    r.add_argument("--misreport", type=float, default=0.0, metavar="RHO")
    r.add_argument("--dp", type=float, default=None, metavar="EPS")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_ard)

    b = sub.add_parser("fit-blsm", help="latent surface model by MCMC or VI")
    b.add_argument("--ard", required=True)
    b.add_argument("--traits", required=True)
    b.add_argument("--mode", choices=["mcmc", "vi"], default="mcmc")
    b.add_argument("--p", type=int, default=2)
    b.add_argument("--iters", type=int, default=5000)
    b.add_argument("--burnin", type=int, default=1000)
    b.add_argument("--thin", type=int, default=10)
    b.add_argument("--family", choices=["poisson", "negative-binomial"], default="poisson")
    b.add_argument("--dispersion", type=float, default=None)
    b.add_argument("--link", choices=["logistic", "probit"], default="logistic")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--pred", help="also write pair probabilities here")
    b.set_defaults(func=_fit_blsm)

    f = sub.add_parser("fit-fpr", help="penalised regression on ARD")
    f.add_argument("--ard", required=True)
    f.add_argument("--traits", required=True)
    f.add_argument("--penalty", choices=["l1", "l2", "scad", "mcp"], default="l1")
    lam = f.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--cv", type=int, metavar="FOLDS")
    f.add_argument("--grid", type=float, nargs="+", help="lambda grid for --cv")
    f.add_argument("--a", type=float, default=None, help="SCAD/MCP shape")
    f.add_argument("--deviance", choices=["poisson", "huber", "logistic"], default="poisson")
    f.add_argument("--max-iter", type=int, default=2000)
    f.add_argument("--federated", type=int, metavar="PARTIES")
    f.add_argument("--eps", type=float, default=None)
    f.add_argument("--rounds", type=int, default=100)
    f.add_argument("--step", type=float, default=1e-4)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.add_argument("--pred", help="also write pair probabilities here")
    f.set_defaults(func=_fit_fpr)

    e = sub.add_parser("evaluate", help="AUC / RMSE / Procrustes of predictions")
    e.add_argument("--truth", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--embedding-true")
    e.add_argument("--embedding-est")
    e.add_argument("--out", required=True)
    e.set_defaults(func=_evaluate)

    k = sub.add_parser("risk-rank", help="degree/betweenness systemic-risk table")
    k.add_argument("--graph", required=True)
    k.add_argument("--w-deg", type=float, default=0.5)
    k.add_argument("--w-btw", type=float, default=0.5)
    k.add_argument("--score", action="store_true", help="add the composite score column")
    k.add_argument("--top", type=int, default=5)
    k.add_argument("--out", required=True)
    k.set_defaults(func=_risk)

    x = sub.add_parser("experiment", help="run the sweeps named in a scenario config")
    x.add_argument("--config", required=True)
    x.add_argument("--out", required=True)
    x.set_defaults(func=_experiment)

    m = sub.add_parser("benchmark", help="wall-clock seconds per method and size")
    m.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    m.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    m.add_argument("--mcmc-iters", type=int, default=1000)
    m.add_argument("--repeats", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")
    m.set_defaults(func=_benchmark)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ArdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
