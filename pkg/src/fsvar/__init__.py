"""Bayesian VAR with a factor stochastic-volatility error structure and
global-local shrinkage on the coefficients, estimated by block Gibbs sampling."""

from .errors import ConfigError, DataError, FsvarError, NumericalError, ParameterError, StoreError
from .model import ChainState, McmcSettings, ModelSpec, Panel, SvPrior, assemble_sigma
from .gibbs import DrawStore, run_chain
from .analysis import impulse_response, variance_shares, factor_volatility_path

__version__ = "0.1.0"

__all__ = [
    "ChainState", "ConfigError", "DataError", "DrawStore", "FsvarError", "McmcSettings",
    "ModelSpec", "NumericalError", "Panel", "ParameterError", "StoreError", "SvPrior",
    "assemble_sigma", "factor_volatility_path", "impulse_response", "run_chain",
    "variance_shares",
]
