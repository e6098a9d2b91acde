"""Probabilistic non-negative matrix factorisation with Weibull latents.

An encoder maps each non-negative data point to per-dimension Weibull
distributions; a non-negative linear decoder turns samples (or medians)
of those distributions back into data. Multiplicative-update NMF is
included as the baseline and as the decoder's starting point.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .data_io import (
    DatasetDescriptor,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_csv,
)
from .matrix import NonNegativityError, ShapeError, relative_error
from .model import (
    DecoderWeights,
    EncoderParams,
    Model,
    ObjectiveWeights,
    backward,
    encode,
    forward,
    forward_median,
    sample_reconstructions,
)
from .nmf import NmfFactorization, factorize
from .trainer import DivergenceError, TrainConfig, evaluate, train
from .weibull import WeibullParams, inverse_cdf, kl_divergence

__version__ = "0.1.0"

__all__ = [
    "DatasetDescriptor",
    "DecoderWeights",
    "DivergenceError",
    "EncoderParams",
    "Model",
    "NmfFactorization",
    "NonNegativityError",
    "ObjectiveWeights",
    "ShapeError",
    "SyntheticSpec",
    "TrainConfig",
    "WeibullParams",
    "backward",
    "encode",
    "evaluate",
    "factorize",
    "forward",
    "forward_median",
    "generate_synthetic",
    "inverse_cdf",
    "kl_divergence",
    "load_checkpoint",
    "load_csv",
    "relative_error",
    "sample_reconstructions",
    "save_checkpoint",
    "save_csv",
]
