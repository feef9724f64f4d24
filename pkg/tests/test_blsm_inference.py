import numpy as np
import pytest
from scipy.special import expit, log_expit
from scipy.stats import ks_2samp

from ardrecon.ard import ArdMatrix, TraitPartition
from ardrecon.blsm import (BlsmParams, BlsmPriors, McmcConfig, ViConfig, diagnostics, ess,
                           gelman_rubin, mcmc_fit, simulate_blsm, vi_fit)
from ardrecon.blsm.diagnostics import autocorr
from ardrecon.blsm.model import link_matrix, log_prior_zeta
from ardrecon.blsm.vi import sample_vmf_cosine, smooth, vmf_reparam, vmf_reparam_vjp
from ardrecon.errors import InitializationError, OptimizationError, ParameterError
from ardrecon.evaluation import auc


@pytest.fixture(scope="module")
def small_sim():
    return simulate_blsm(40, K=6, seed=3)


@pytest.fixture(scope="module")
def short_chain(small_sim):
    cfg = McmcConfig(iterations=600, burn_in=300, thin=5, seed=1)
    return mcmc_fit(small_sim.ard, small_sim.traits, cfg=cfg)


class TestMcmc:
    def test_config_validation(self):
        with pytest.raises(ParameterError):
            McmcConfig(iterations=10, burn_in=10)

    def test_draw_invariants(self, short_chain):
        assert len(short_chain) == 60
        assert np.all(short_chain.zeta > 0)
        np.testing.assert_allclose(np.linalg.norm(short_chain.z, axis=2), 1.0, atol=1e-10)
        assert short_chain.draw_loglik.shape == (60,)
        assert short_chain.loglik.shape == (600,)

    def test_acceptance_after_adaptation(self, short_chain):
        for block, rate in short_chain.acceptance.items():
            assert 0.15 <= rate <= 0.5, (block, rate)

    def test_deterministic(self, small_sim, short_chain):
        cfg = McmcConfig(iterations=600, burn_in=300, thin=5, seed=1)
        again = mcmc_fit(small_sim.ard, small_sim.traits, cfg=cfg)
        np.testing.assert_array_equal(again.zeta, short_chain.zeta)
        np.testing.assert_array_equal(again.z, short_chain.z)

    def test_recovers_links(self, small_sim, short_chain):
        assert auc(small_sim.graph, short_chain.mean_link_matrix()) > 0.75

    def test_anchors_stay_fixed(self, small_sim):
        init = simulate_blsm(40, K=6, seed=99).params
        smp = mcmc_fit(small_sim.ard, small_sim.traits, init=init, anchors=[0, 5, 7],
                       cfg=McmcConfig(iterations=60, burn_in=20, thin=10, seed=0))
        for i in (0, 5, 7):
            np.testing.assert_array_equal(smp.z[:, i], np.broadcast_to(init.z[i], smp.z[:, i].shape))

    def test_posterior_mean_params(self, short_chain):
        pm = short_chain.posterior_mean_params()
        np.testing.assert_allclose(np.linalg.norm(pm.z, axis=1), 1.0)
        assert pm.zeta == pytest.approx(short_chain.zeta.mean())

    def test_bad_init(self, small_sim):
        v = small_sim.params.v.copy()
        v[0] = np.nan
        init = BlsmParams(v, small_sim.params.z, 1.0)
        with pytest.raises(InitializationError):
            mcmc_fit(small_sim.ard, small_sim.traits, init=init,
                     cfg=McmcConfig(iterations=2, burn_in=1, thin=1))


def _independence_reference(y, priors, draws, rng):
    """Independence Metropolis with prior proposals for the 2-node, 1-trait model."""
    def propose():
        v = priors.mu_v + priors.sigma_v * rng.standard_normal(2)
        z = rng.standard_normal((2, 3))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        zeta = abs(priors.zeta_scale * np.tan(np.pi * (rng.random() - 0.5)))
        return v, z, zeta

    def loglik(v, z, zeta):
        eta = v[0] + v[1] + zeta * z[0] @ z[1]
        return float(np.sum(y * log_expit(eta) - expit(eta)))

    cur = propose()
    ll = loglik(*cur)
    out = np.empty(draws)
    for t in range(draws):
        prop = propose()
        llp = loglik(*prop)
        if np.log(rng.random()) < llp - ll:
            cur, ll = prop, llp
        out[t] = cur[2]
    return out


@pytest.mark.slow
def test_zeta_marginal_matches_independence_sampler():
    t = TraitPartition(2, [[0, 1]])
    y = np.array([[1], [1]])
    priors = BlsmPriors(mu_v=0.0, sigma_v=1.0, zeta_scale=1.0)
    rng = np.random.default_rng(0)
    ref = _independence_reference(y.ravel(), priors, 200_000, rng)[::4]
    init = BlsmParams(np.zeros(2), np.array([[1.0, 0, 0], [0, 1.0, 0]]), 1.0)
    smp = mcmc_fit(y, t, priors=priors, init=init,
                   cfg=McmcConfig(iterations=60_000, burn_in=5_000, thin=5, seed=1))
    assert ks_2samp(smp.zeta, ref).statistic < 0.05


class TestDiagnostics:
    def test_identical_chains(self):
        x = np.random.default_rng(0).standard_normal(500)
        assert gelman_rubin([x, x]) == 1.0

    def test_iid_ess(self):
        x = np.random.default_rng(1).standard_normal(5000)
        assert 4000 <= ess(x) <= 6000

    def test_constant_chain(self):
        assert ess(np.full(100, 3.0)) == 1.0

    def test_ar1_ess(self):
        rng = np.random.default_rng(2)
        phi, N = 0.8, 20000
        x = np.empty(N)
        x[0] = rng.standard_normal()
        for t in range(1, N):
            x[t] = phi * x[t - 1] + rng.standard_normal()
        # asymptotic ESS of AR(1) is N (1 - phi) / (1 + phi)
        assert ess(x) == pytest.approx(N * 0.2 / 1.8, rel=0.2)

    def test_autocorr_lag0(self):
        assert autocorr(np.random.default_rng(3).standard_normal(50))[0] == pytest.approx(1.0)

    def test_shifted_chains_inflate(self):
        x = np.random.default_rng(4).standard_normal((2, 400))
        x[1] += 3
        assert gelman_rubin(x) > 1.5

    def test_single_chain_gelman(self, short_chain):
        with pytest.raises(ParameterError):
            diagnostics(short_chain, gelman=True)
        with pytest.raises(ParameterError):
            gelman_rubin(np.ones((1, 10)))

    def test_summary_keys(self, short_chain):
        d = diagnostics(short_chain, chains=[short_chain])
        assert {"zeta", "loglik", "v[0]"} <= set(d["ess"])
        assert all(r == 1.0 for r in d["gelman_rubin"].values())


class TestVmf:
    def test_cosine_mean_on_s2(self):
        rng = np.random.default_rng(0)
        k = 5.0
        w = sample_vmf_cosine(k, 3, 200_000, rng)
        # E[w] = coth(k) - 1/k on S^2
        assert w.mean() == pytest.approx(1 / np.tanh(k) - 1 / k, abs=3e-3)
        assert np.all((w >= -1) & (w <= 1))

    def test_wood_sampler_matches_inverse_cdf_moments(self):
        rng = np.random.default_rng(1)
        # Wood's sampler on S^3: E[w] = I_2(k) / I_1(k)
        from scipy.special import iv
        k = 4.0
        w = sample_vmf_cosine(k, 4, 20_000, rng)
        assert w.mean() == pytest.approx(iv(2, k) / iv(1, k), abs=0.01)

    def test_reparam_on_sphere(self):
        rng = np.random.default_rng(2)
        mu = rng.standard_normal((10, 3))
        mu /= np.linalg.norm(mu, axis=1, keepdims=True)
        w = sample_vmf_cosine(20.0, 3, 10, rng)
        z, _ = vmf_reparam(mu, w, rng.standard_normal((10, 3)))
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0)
        np.testing.assert_allclose(np.sum(z * mu, axis=1), w)

    def test_vjp_finite_difference(self):
        rng = np.random.default_rng(3)
        mu = rng.standard_normal((4, 3))
        w = rng.uniform(-0.9, 0.9, 4)
        eps = rng.standard_normal((4, 3))
        g = rng.standard_normal((4, 3))
        z, cache = vmf_reparam(mu, w, eps)
        back = vmf_reparam_vjp(g, mu, w, eps, cache)
        h = 1e-6
        for i, c in [(0, 0), (2, 1), (3, 2)]:
            E = np.zeros_like(mu)
            E[i, c] = h
            fd = (np.sum(g * vmf_reparam(mu + E, w, eps)[0])
                  - np.sum(g * vmf_reparam(mu - E, w, eps)[0])) / (2 * h)
            assert back[i, c] == pytest.approx(fd, rel=1e-5, abs=1e-8)


@pytest.fixture(scope="module")
def fitted(small_sim):
    return vi_fit(small_sim.ard, small_sim.traits, cfg=ViConfig(iterations=400, samples=2, seed=0))


class TestVi:
    def test_ascent(self, fitted):
        _, trace = fitted
        s = smooth(trace)
        assert s[-1] >= s[0]
        assert len(trace) == 400

    def test_unit_rows(self, fitted):
        est, _ = fitted
        np.testing.assert_allclose(np.linalg.norm(est.z, axis=1), 1.0)
        assert est.zeta > 0

    def test_recovers_links(self, small_sim, fitted):
        assert auc(small_sim.graph, link_matrix(fitted[0])) > 0.75

    def test_divergence_reports_state(self, small_sim):
        with pytest.raises(OptimizationError) as exc:
            vi_fit(small_sim.ard, small_sim.traits,
                   cfg=ViConfig(iterations=50, samples=1, learning_rate=1e6, seed=0))
        assert isinstance(exc.value.state, BlsmParams)

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            ViConfig(lr_final=0)

    def test_smooth_window(self):
        assert smooth(np.arange(5.0), window=2).tolist() == [0.0, 0.5, 1.5, 2.5, 3.5]


def test_half_cauchy_normalised():
    from scipy.integrate import quad
    total, _ = quad(lambda x: np.exp(log_prior_zeta(x, 2.5)), 0, np.inf)
    assert total == pytest.approx(1.0, rel=1e-8)
