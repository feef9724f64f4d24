import math
from dataclasses import dataclass

import numpy as np

from .._rng import as_generator
from ..ard import ArdMatrix, TraitPartition, compute_ard
from ..graphgen import Graph, _bernoulli_upper
from .init import random_sphere
from .model import BlsmParams, link_matrix


@dataclass
class SimulatedNetwork:
    params: BlsmParams
    traits: TraitPartition
    graph: Graph
    ard: ArdMatrix
    centers: np.ndarray


def geometric_traits(z, K, coverage, seed=None):
    """Trait ``k`` = the ``ceil(coverage n)`` nodes closest to a random centre ``c_k``.

    Groups overlap wherever centres are close, and every group is a spherical
    cap, so ARD counts carry information about positions.
    """
    rng = as_generator(seed)
    n, d = z.shape
    centers = random_sphere(K, d, rng)
    size = max(1, math.ceil(coverage * n))
    sims = z @ centers.T
    groups = [np.argsort(-sims[:, k], kind="stable")[:size] for k in range(K)]
    return TraitPartition(n, groups), centers


def simulate_blsm(n, p=2, K=8, coverage=0.25, zeta=6.0, v_mean=-2.5, v_sd=0.5,
                  link="logistic", seed=None):
    """Draw parameters, geometric traits, a graph and its clean ARD from the model."""
    rng = as_generator(seed)
    z = random_sphere(n, p + 1, rng)
    v = v_mean + v_sd * rng.standard_normal(n)
    params = BlsmParams(v, z, zeta)
    traits, centers = geometric_traits(z, K, coverage, rng)
    g = Graph(n, _bernoulli_upper(link_matrix(params, link), rng))
    return SimulatedNetwork(params, traits, g, compute_ard(g, traits), centers)
