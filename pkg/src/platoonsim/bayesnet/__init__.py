"""Discrete Bayesian networks for SLO fulfillment prediction."""

from .structure import VariableSpec, NetworkStructure
from .cpt import Cpt
from .model import SloIModel, build_model, parl_update
from .inference import DistributionSet, infer_slo, marginal_hw, query_conditional
from .serialize import model_to_text, model_from_text, model_fingerprint, structure_fingerprint

__all__ = [
    "VariableSpec",
    "NetworkStructure",
    "Cpt",
    "SloIModel",
    "build_model",
    "parl_update",
    "DistributionSet",
    "infer_slo",
    "marginal_hw",
    "query_conditional",
    "model_to_text",
    "model_from_text",
    "model_fingerprint",
    "structure_fingerprint",
]
