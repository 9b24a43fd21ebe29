"""Multi-view subspace clustering via per-view autoencoders, attention
fusion and an aligned self-representation layer."""

from .data import MultiViewDataset, SynthSpec, generate_synthetic, load_dataset, save_dataset, standardize
from .estimator import MSALAA
from .metrics import accuracy, ari, evaluate_all, hungarian, nmi, precision_recall_f
from .model import ModelConfig, ModelParams, forward, init_params, load_model, save_model
from .spectral import build_affinity, kmeans, normalized_laplacian, spectral_cluster
from .training import LossWeights, OptimizerConfig, select_best_view, train

__version__ = "0.1.0"
CONFIG_SCHEMA_VERSION = 1

__all__ = [
    "MSALAA",
    "MultiViewDataset",
    "SynthSpec",
    "ModelConfig",
    "ModelParams",
    "LossWeights",
    "OptimizerConfig",
    "accuracy",
    "ari",
    "nmi",
    "precision_recall_f",
    "evaluate_all",
    "hungarian",
    "build_affinity",
    "normalized_laplacian",
    "spectral_cluster",
    "kmeans",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
    "standardize",
    "forward",
    "init_params",
    "save_model",
    "load_model",
    "train",
    "select_best_view",
    "__version__",
]
