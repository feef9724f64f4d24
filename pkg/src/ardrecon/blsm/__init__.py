"""Bayesian latent surface model on the unit hypersphere."""
from .diagnostics import diagnostics, ess, gelman_rubin
from .init import initialize
from .mcmc import McmcConfig, PosteriorSamples, mcmc_fit
from .model import (BlsmParams, BlsmPriors, LikelihoodSpec, ard_rate, default_priors,
                    link_matrix, link_prob, log_likelihood, log_prior, predict_links)
from .simulate import SimulatedNetwork, simulate_blsm
from .vi import ViConfig, vi_fit

__all__ = [
    "BlsmParams", "BlsmPriors", "LikelihoodSpec", "McmcConfig", "PosteriorSamples",
    "SimulatedNetwork", "ViConfig", "ard_rate", "default_priors", "diagnostics", "ess",
    "gelman_rubin", "initialize", "link_matrix", "link_prob", "log_likelihood",
    "log_prior", "mcmc_fit", "predict_links", "simulate_blsm", "vi_fit",
]
