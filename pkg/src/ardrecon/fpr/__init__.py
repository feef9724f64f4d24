"""Penalised regression on aggregated relational data."""
from .deviance import Deviance, huber, huber_psi, robust_scale
from .features import FeatureMap
from .federated import centralized_fixed_step, federated_fit, noise_sd, split_rows
from .penalties import Penalty, prox, soft_threshold
from .solver import (FprConfig, FprModel, cross_validate, fit, heldout_deviance, objective,
                     predict_links, predicted_rate)

__all__ = [
    "Deviance", "FeatureMap", "FprConfig", "FprModel", "Penalty", "centralized_fixed_step",
    "cross_validate", "federated_fit", "fit", "heldout_deviance", "huber", "huber_psi",
    "noise_sd", "objective", "predict_links", "predicted_rate", "prox", "robust_scale",
    "soft_threshold", "split_rows",
]
