import json

import numpy as np
import pytest

from ardrecon import io as aio
from ardrecon.ard import compute_ard, inject_misreporting
from ardrecon.blsm import McmcConfig, mcmc_fit, simulate_blsm
from ardrecon.errors import DataError
from ardrecon.evaluation import risk_rank
from ardrecon.fpr import FprConfig, Penalty, fit
from ardrecon.graphgen import add_negbin_weights, gen_interbank


@pytest.fixture(scope="module")
def sim():
    return simulate_blsm(25, K=4, seed=2)


def test_edges_round_trip(tmp_path, sim):
    for g in (sim.graph, add_negbin_weights(sim.graph, 2.0, 0.5, seed=0)):
        p = tmp_path / "edges.csv"
        aio.write_edges(p, g)
        back = aio.read_edges(p)
        assert back.n == g.n and np.array_equal(back.edges, g.edges)
        assert (back.weights is None) == (g.weights is None)
        if g.weighted:
            assert np.array_equal(back.weights, g.weights)
    header = p.read_text().splitlines()[0]
    assert header == "src,dst,weight"


def test_isolated_nodes_survive(tmp_path):
    from ardrecon.graphgen import Graph
    p = tmp_path / "e.csv"
    aio.write_edges(p, Graph(6, [(0, 1)]))
    assert aio.read_edges(p).n == 6


def test_sizes_round_trip(tmp_path):
    g = gen_interbank(20, 0.1, 0.01, seed=0)
    aio.write_sizes(tmp_path / "s.csv", g.sizes)
    np.testing.assert_array_equal(aio.read_sizes(tmp_path / "s.csv"), g.sizes)


def test_traits_round_trip(tmp_path, sim):
    aio.write_traits(tmp_path / "t.csv", sim.traits)
    assert aio.read_traits(tmp_path / "t.csv") == sim.traits


def test_ard_round_trip(tmp_path, sim):
    y = inject_misreporting(sim.ard, 0.3, seed=1)
    y.meta["seed"] = 1
    p = tmp_path / "ard.csv"
    aio.write_ard(p, y)
    back = aio.read_ard(p)
    assert np.array_equal(back.values, y.values)
    assert back.provenance == "misreported" and back.meta["rho"] == 0.3
    assert np.array_equal(back.misreporters, y.misreporters)
    assert p.read_text().splitlines()[0] == "node,y_1,y_2,y_3,y_4"
    assert json.loads((tmp_path / "ard.csv.json").read_text())["meta"]["seed"] == 1


def test_posterior_round_trip(tmp_path, sim):
    smp = mcmc_fit(sim.ard, sim.traits, cfg=McmcConfig(iterations=40, burn_in=20, thin=5, seed=0))
    aio.write_posterior(tmp_path / "post.csv", smp)
    back = aio.read_posterior(tmp_path / "post.csv")
    np.testing.assert_array_equal(back.z, smp.z)
    np.testing.assert_array_equal(back.zeta, smp.zeta)
    aio.write_posterior(tmp_path / "point.csv", smp[0])
    assert len(aio.read_posterior(tmp_path / "point.csv")) == 1


def test_model_round_trip(tmp_path, sim):
    m = fit(sim.ard, sim.traits, FprConfig(penalty=Penalty("scad", 0.5), max_iter=30))
    aio.write_model(tmp_path / "m.csv", m)
    back = aio.read_model(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.beta, m.beta)
    assert back.penalty.kind == "scad" and back.features.names == m.features.names
    assert (tmp_path / "m.csv").read_text().splitlines()[1].startswith("0,intercept,")


def test_predictions_round_trip(tmp_path, sim):
    P = np.random.default_rng(0).random((25, 25))
    P = np.triu(P, 1) + np.triu(P, 1).T
    aio.write_predictions(tmp_path / "p.csv", 25, P)
    n, back = aio.read_predictions(tmp_path / "p.csv")
    assert n == 25
    np.testing.assert_array_equal(back, P)


def test_embedding_and_risk(tmp_path, sim):
    aio.write_embedding(tmp_path / "z.csv", sim.params.z)
    np.testing.assert_array_equal(aio.read_embedding(tmp_path / "z.csv"), sim.params.z)
    t = risk_rank(sim.graph)
    aio.write_risk(tmp_path / "r.csv", t, include_score=True)
    back = aio.read_risk(tmp_path / "r.csv")
    assert back.node.tolist() == t.node.tolist()
    np.testing.assert_array_equal(back.score, t.score)
    assert (tmp_path / "r.csv").read_text().startswith("Node ID,Degree,Betweenness,Risk Rank")


def test_rows_round_trip(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": "x", "d": None}, {"a": 2, "b": 1e-300, "c": "y", "d": 3}]
    aio.write_rows(tmp_path / "r.csv", rows)
    assert aio.read_rows(tmp_path / "r.csv") == rows


def test_empty_file(tmp_path):
    (tmp_path / "x.csv").write_text("")
    with pytest.raises(DataError):
        aio.read_rows(tmp_path / "x.csv")
