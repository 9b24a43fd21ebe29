"""Scikit-learn style front end for the full pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .data import standardize
from .model import ModelConfig, forward
from .spectral import build_affinity, spectral_cluster
from .training import LossWeights, OptimizerConfig, select_best_view, train

__all__ = ["MSALAA"]


class MSALAA(BaseEstimator, ClusterMixin):
    """Multi-view subspace clustering estimator.

    Trains per-view autoencoders with attention fusion and an aligned
    self-representation layer, then spectrally clusters the affinity
    matrix of the best view's coefficient matrix.

    Parameters
    ----------
    n_clusters : int
        Number of clusters for spectral clustering.
    common_dim : int, default 16
        Shared latent dimension R of all encoders.
    encoder_layers, decoder_layers : int, default 1
        Depth of each autoencoder half.
    residual : bool, default True
        Residual connections on the square latent layers.
    attention_mode : {"paper", "mixed"}, default "paper"
        "paper" scales each view's own value vectors by its alignment
        weight; "mixed" sums value vectors across views.
    beta1, beta2 : float, default 0.1
        Alignment and weight-regularizer trade-offs.
    omega_kind : {"L2", "L1"}, default "L2"
        Form of the encoder/decoder weight penalty.
    c_fro_weight : float, default 1.0
        Weight of the Frobenius penalty on the coefficient matrices.
    base_lr, lr_decay : float
        Adam learning rate and its per-epoch multiplicative decay.
    epochs : int, default 1000
    standardize : bool, default True
        Per-feature z-scoring of each view before training.
    best_view : int or None
        Override the automatic best-view selection.
    random_state : int, default 0

    Attributes
    ----------
    labels_ : (n_samples,) predicted cluster labels.
    representation_matrices_ : list of trained C^v (n_samples x n_samples).
    affinity_ : affinity matrix of the selected view.
    embeddings_ : list of attention outputs H^v (common_dim x n_samples).
    best_view_ : index of the selected view.
    report_ : per-epoch training history.
    """

    def __init__(
        self,
        n_clusters=2,
        common_dim=16,
        encoder_layers=1,
        decoder_layers=1,
        residual=True,
        attention_mode="paper",
        beta1=0.1,
        beta2=0.1,
        omega_kind="L2",
        c_fro_weight=1.0,
        base_lr=0.001,
        lr_decay=0.99,
        epochs=1000,
        standardize=True,
        best_view=None,
        random_state=0,
    ):
        self.n_clusters = n_clusters
        self.common_dim = common_dim
        self.encoder_layers = encoder_layers
        self.decoder_layers = decoder_layers
        self.residual = residual
        self.attention_mode = attention_mode
        self.beta1 = beta1
        self.beta2 = beta2
        self.omega_kind = omega_kind
        self.c_fro_weight = c_fro_weight
        self.base_lr = base_lr
        self.lr_decay = lr_decay
        self.epochs = epochs
        self.standardize = standardize
        self.best_view = best_view
        self.random_state = random_state

    def _validate_views(self, views):
        if not isinstance(views, (list, tuple)) or len(views) < 1:
            raise ValueError("expected a non-empty list of per-view arrays")
        out = []
        n = None
        for i, x in enumerate(views):
            x = np.asarray(x, dtype=np.float64)
            if x.ndim != 2:
                raise ValueError(f"view {i} must be 2-D (n_samples, n_features)")
            if not np.all(np.isfinite(x)):
                raise ValueError(f"view {i} contains non-finite values")
            if n is None:
                n = x.shape[0]
            elif x.shape[0] != n:
                raise ValueError("all views must share the sample count")
            out.append(x.T.copy())  # internal orientation: features x samples
        return out

    def fit(self, X, y=None):
        """Train on a list of per-view arrays, each (n_samples, n_features)."""
        views = self._validate_views(X)
        if self.standardize:
            views = [standardize(v)[0] for v in views]
        config = ModelConfig(
            num_views=len(views),
            feature_dims=[v.shape[0] for v in views],
            common_dim=self.common_dim,
            encoder_layers=self.encoder_layers,
            decoder_layers=self.decoder_layers,
            residual=self.residual,
            attention_mode=self.attention_mode,
        )
        weights = LossWeights(
            beta1=self.beta1,
            beta2=self.beta2,
            omega_kind=self.omega_kind,
            c_fro_weight=self.c_fro_weight,
        )
        optimizer = OptimizerConfig(base_lr=self.base_lr, decay=self.lr_decay)
        params, report = train(
            views,
            config,
            weights=weights,
            optimizer=optimizer,
            epochs=self.epochs,
            seed=self.random_state,
        )
        state = forward(views, params)
        best = select_best_view(state, override=self.best_view)
        affinity = build_affinity(params.arrays[f"C_{best}"])
        assignment = spectral_cluster(
            affinity, self.n_clusters, seed=self.random_state
        )
        self.params_ = params
        self.report_ = report
        self.best_view_ = best
        self.affinity_ = affinity
        self.embeddings_ = state.H
        self.representation_matrices_ = [
            params.arrays[f"C_{v}"] for v in range(config.num_views)
        ]
        self.labels_ = assignment.labels
        return self
