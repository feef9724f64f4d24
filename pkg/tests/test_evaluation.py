from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation
from scipy.stats import ortho_group

from ardrecon.blsm.init import random_sphere
from ardrecon.errors import DataError, ParameterError
from ardrecon.evaluation import (RISK_COLUMNS, MetricsReport, auc, auc_scores, betweenness,
                                 evaluate, pair_index, procrustes_align, procrustes_error,
                                 risk_rank, rmse)
from ardrecon.graphgen import Graph, add_negbin_weights

from conftest import complete_graph, path_graph, random_graph, star_graph


def brute_betweenness(g):
    """All shortest paths by BFS distances, counted pair by pair through each node."""
    n = g.n
    A = g.adjacency() > 0
    INF = n + 1
    dist = np.full((n, n), INF)
    count = np.zeros((n, n))
    for s in range(n):
        dist[s, s], count[s, s] = 0, 1
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in np.flatnonzero(A[u]):
                    if dist[s, w] == INF:
                        dist[s, w] = dist[s, u] + 1
                        nxt.append(w)
                    if dist[s, w] == dist[s, u] + 1:
                        count[s, w] += count[s, u]
            frontier = nxt
    bc = np.zeros(n)
    for s in range(n):
        for t in range(s + 1, n):
            if dist[s, t] >= INF:
                continue
            for v in range(n):
                if v in (s, t):
                    continue
                if dist[s, v] + dist[v, t] == dist[s, t]:
                    bc[v] += count[s, v] * count[v, t] / count[s, t]
    return bc / ((n - 1) * (n - 2) / 2) if n > 2 else bc


def _random_search(zh, z, rng, draws=100_000):
    """Best of ``draws`` random orthogonal matrices, then random local refinement."""
    loss = lambda Qs: np.linalg.norm(np.einsum("nd,qde->qne", zh, Qs) - z, axis=(1, 2))
    Qs = ortho_group.rvs(3, size=draws, random_state=rng)
    errs = loss(Qs)
    best, Q = errs.min(), Qs[np.argmin(errs)]
    for scale in (0.05, 0.01, 0.002):
        R = Rotation.from_rotvec(scale * rng.standard_normal((20_000, 3))).as_matrix()
        cand = np.einsum("de,qef->qdf", Q, R)
        errs = loss(cand)
        if errs.min() < best:
            best, Q = errs.min(), cand[np.argmin(errs)]
    return best


class TestAuc:
    def test_perfect_and_reversed(self, rng):
        g = random_graph(30, 0.2, rng)
        A = g.adjacency()
        assert auc(g, A) == 1.0
        assert auc(g, 1 - A) == 0.0

    def test_random_scores(self):
        vals = []
        for s in range(10):
            r = np.random.default_rng(s)
            g = random_graph(100, 0.1, r)
            vals.append(auc(g, r.random(100 * 99 // 2)))
        assert abs(np.mean(vals) - 0.5) < 0.05

    def test_ties_count_half(self):
        assert auc_scores([1, 0, 1, 0], [1.0, 1.0, 1.0, 0.0]) == pytest.approx(0.75)

    def test_degenerate(self):
        with pytest.raises(DataError):
            auc(Graph(4, []), np.zeros((4, 4)))
        with pytest.raises(DataError):
            auc(complete_graph(4), np.zeros((4, 4)))

    def test_pair_order(self):
        i, j = pair_index(4)
        assert list(zip(i.tolist(), j.tolist())) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        with pytest.raises(ParameterError):
            auc(path_graph(4), np.zeros(5))

    @given(st.integers(0, 10**6))
    def test_monotone_invariance(self, seed):
        r = np.random.default_rng(seed)
        labels = r.random(40) < 0.3
        labels[:2] = [True, False]
        s = r.standard_normal(40)
        a = auc_scores(labels, s)
        assert auc_scores(labels, np.exp(3 * s) + 7) == pytest.approx(a)
        assert 0.0 <= a <= 1.0

    def test_matches_pairwise_definition(self, rng):
        labels = rng.random(50) < 0.4
        s = np.round(rng.random(50), 1)
        pos, neg = s[labels], s[~labels]
        ref = np.mean([(p > q) + 0.5 * (p == q) for p in pos for q in neg])
        assert auc_scores(labels, s) == pytest.approx(ref)


class TestRmse:
    def test_examples(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert rmse([0, 0], [1, 1]) == 1.0

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=20), st.floats(-5, 5))
    def test_homogeneity(self, xs, c):
        x = np.array(xs)
        base = rmse(np.zeros_like(x), x)
        assert rmse(np.zeros_like(x), c * x) == pytest.approx(abs(c) * base, rel=1e-9, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            rmse([1, 2], [1])


class TestProcrustes:
    def test_identity_and_rotation(self, rng):
        z = random_sphere(20, 3, rng)
        assert procrustes_error(z, z) < 1e-12
        for _ in range(50):
            Q = ortho_group.rvs(3, random_state=rng)
            assert procrustes_error(z @ Q, z) < 1e-10
            assert abs(procrustes_error(z @ Q, z) - procrustes_error(z, z @ Q)) < 1e-10

    def test_symmetric(self, rng):
        a, b = random_sphere(15, 3, rng), random_sphere(15, 3, rng)
        assert procrustes_error(a, b) == pytest.approx(procrustes_error(b, a), abs=1e-10)

    def test_antipode_random_search(self, rng):
        z = random_sphere(6, 3, rng)
        zh = z.copy()
        zh[2] *= -1
        err = procrustes_error(zh, z)
        assert err > 0
        brute = _random_search(zh, z, rng)
        assert err <= brute + 1e-12
        assert brute - err < 1e-3

    def test_alignment_returns_orthogonal(self, rng):
        Q, _ = procrustes_align(random_sphere(10, 3, rng), random_sphere(10, 3, rng))
        np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-12)

    def test_per_node(self, rng):
        a, b = random_sphere(16, 3, rng), random_sphere(16, 3, rng)
        assert procrustes_error(a, b, per_node=True) == pytest.approx(procrustes_error(a, b) / 4)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ParameterError):
            procrustes_error(random_sphere(5, 3, rng), random_sphere(4, 3, rng))


class TestBetweenness:
    def test_star(self):
        b = betweenness(star_graph(5))
        assert b[0] == pytest.approx(1.0) and np.all(b[1:] == 0)

    def test_complete(self):
        assert np.all(betweenness(complete_graph(6)) == 0)

    def test_path(self):
        assert betweenness(path_graph(3)).tolist() == [0.0, 1.0, 0.0]

    def test_brute_force(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 13))
            g = random_graph(n, rng.uniform(0.1, 0.6), rng)
            np.testing.assert_allclose(betweenness(g), brute_betweenness(g), atol=1e-12)

    def test_small(self):
        assert betweenness(path_graph(2)).tolist() == [0.0, 0.0]
        with pytest.raises(ParameterError):
            betweenness(Graph(1, []))


class TestRiskRank:
    def test_star_center_first(self):
        t = risk_rank(star_graph(6), 0.3, 0.7)
        assert t.node[0] == 0 and t.rank[0] == 1

    def test_degree_only_ranking(self, rng):
        g = random_graph(25, 0.15, rng)
        t = risk_rank(g, 1.0, 0.0)
        deg = g.degrees()
        ref = sorted(range(25), key=lambda i: (-deg[i], i))
        assert t.node.tolist() == ref

    def test_schema_and_permutation(self, rng):
        t = risk_rank(random_graph(30, 0.1, rng))
        rows = t.rows()
        assert tuple(rows[0]) == RISK_COLUMNS
        assert sorted(t.rank.tolist()) == list(range(1, 31))
        assert np.all(np.diff(t.score) <= 0)
        assert "Risk Score" in t.rows(include_score=True)[0]

    def test_empty_graph(self):
        t = risk_rank(Graph(4, []))
        assert t.node.tolist() == [0, 1, 2, 3] and np.all(t.score == 0)

    def test_bad_weights(self):
        with pytest.raises(ParameterError):
            risk_rank(path_graph(3), 0, 0)
        with pytest.raises(ParameterError):
            risk_rank(path_graph(3), -1, 1)


class TestEvaluate:
    def test_report(self, rng):
        g = random_graph(20, 0.2, rng)
        z = random_sphere(20, 3, rng)
        rep = evaluate(g, g.adjacency(), z, z, runtime=1.5, method="x")
        d = rep.as_dict()
        assert d["auc"] == 1.0 and d["rmse"] == 0.0 and d["procrustes_error"] < 1e-12
        assert d["method"] == "x" and d["rmse_kind"] == "probability"

    def test_weight_rmse(self, rng):
        g = add_negbin_weights(random_graph(15, 0.3, rng), 2.0, 0.5, seed=0)
        P = g.adjacency()
        rep = evaluate(g, P, weight_pred=g.adjacency(weighted=True))
        assert rep.rmse == 0.0 and rep.meta["rmse_kind"] == "weight"

    def test_report_validation(self):
        with pytest.raises(ParameterError):
            MetricsReport(1.5, 0.0)
        with pytest.raises(ParameterError):
            MetricsReport(0.5, -1.0)
