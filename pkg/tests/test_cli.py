import subprocess
import sys

import numpy as np
import pytest

from ardrecon import io as aio
from ardrecon.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--model", "small-world", "--n", "40", "--k", "4", "--seed", "1",
                 "--out", str(d / "edges.csv"), "--traits-out", str(d / "traits.csv"),
                 "--K", "4", "--coverage", "0.2"]) == 0
    assert main(["ard", "--graph", str(d / "edges.csv"), "--traits", str(d / "traits.csv"),
                 "--misreport", "0.1", "--seed", "2", "--out", str(d / "ard.csv")]) == 0
    return d


def test_generate_and_ard(workdir):
    g = aio.read_edges(workdir / "edges.csv")
    assert g.n == 40 and g.m == 80
    y = aio.read_ard(workdir / "ard.csv")
    assert y.values.shape == (40, 4) and y.meta["rho"] == 0.1 and y.meta["seed"] == 2


def test_generate_interbank_sizes(tmp_path):
    assert main(["generate", "--model", "interbank", "--n", "30", "--out",
                 str(tmp_path / "ib.csv")]) == 0
    assert aio.read_sizes(tmp_path / "ib_sizes.csv").shape == (30,)


def test_fit_fpr_and_evaluate(workdir):
    d = workdir
    assert main(["fit-fpr", "--ard", str(d / "ard.csv"), "--traits", str(d / "traits.csv"),
                 "--penalty", "mcp", "--cv", "3", "--grid", "0.1", "1", "10", "--max-iter", "50",
                 "--deviance", "huber", "--out", str(d / "model.csv"),
                 "--pred", str(d / "pred.csv")]) == 0
    m = aio.read_model(d / "model.csv")
    assert m.penalty.kind == "mcp" and m.penalty.lam in (0.1, 1.0, 10.0)
    assert main(["evaluate", "--truth", str(d / "edges.csv"), "--pred", str(d / "pred.csv"),
                 "--out", str(d / "report.csv")]) == 0
    rep = aio.read_rows(d / "report.csv")[0]
    assert 0.0 <= rep["auc"] <= 1.0


def test_fit_fpr_federated(workdir):
    d = workdir
    assert main(["fit-fpr", "--ard", str(d / "ard.csv"), "--traits", str(d / "traits.csv"),
                 "--lambda", "1", "--federated", "3", "--eps", "1.0", "--rounds", "20",
                 "--out", str(d / "fed.csv")]) == 0
    assert np.all(np.isfinite(aio.read_model(d / "fed.csv").beta))


@pytest.mark.parametrize("mode", ["mcmc", "vi"])
def test_fit_blsm(workdir, mode):
    d = workdir
    out = d / f"post_{mode}.csv"
    assert main(["fit-blsm", "--ard", str(d / "ard.csv"), "--traits", str(d / "traits.csv"),
                 "--mode", mode, "--iters", "60", "--burnin", "20", "--thin", "10",
                 "--out", str(out), "--pred", str(d / f"pred_{mode}.csv")]) == 0
    post = aio.read_posterior(out)
    assert len(post) == (4 if mode == "mcmc" else 1)
    side = d / (f"post_{mode}_diagnostics.csv" if mode == "mcmc" else f"post_{mode}_elbo.csv")
    assert len(aio.read_rows(side)) > 0
    n, P = aio.read_predictions(d / f"pred_{mode}.csv")
    assert n == 40 and np.all((P >= 0) & (P <= 1))


def test_risk_rank(workdir, capsys):
    d = workdir
    assert main(["risk-rank", "--graph", str(d / "edges.csv"), "--score", "--top", "3",
                 "--out", str(d / "risk.csv")]) == 0
    t = aio.read_risk(d / "risk.csv")
    assert t.rank.tolist() == list(range(1, 41))
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_experiment(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("[scenario]\nn = 30\nK = 4\ncoverage = 0.2\nmethods = fpr\n"
                   "fpr_max_iter = 30\n[experiment]\nsweeps = scenario\n")
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "manifest.json").exists()
    assert len(aio.read_rows(tmp_path / "o" / "runs.csv")) == 1


def test_benchmark(tmp_path):
    assert main(["benchmark", "--sizes", "30", "--methods", "fpr", "blsm-mcmc",
                 "--mcmc-iters", "20", "--out", str(tmp_path / "t.csv")]) == 0
    rows = aio.read_rows(tmp_path / "t.csv")
    assert [r["Method"] for r in rows] == ["FPR (PG)", "BLSM (MCMC)"]


def test_errors_return_nonzero(tmp_path, capsys):
    assert main(["risk-rank", "--graph", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "r.csv")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["ard", "--graph", str(tmp_path / "missing.csv"), "--traits", "x",
                 "--misreport", "2", "--out", "y"]) == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ardrecon", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "fit-blsm" in r.stdout
