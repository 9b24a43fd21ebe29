"""The MSALAA network: per-view encoder stacks, shared attention fusion,
per-view self-representation, per-view decoder stacks.

Parameters live in a flat name -> matrix dict whose keys double as the
on-disk file stems of the model directory format: ``W1_<v>_<layer>``,
``b1_<v>_<layer>``, ``W2_1``..``W2_3``, ``C_<v>``, ``W3_<v>_<layer>``,
``b2_<v>_<layer>`` (views and layers 0-based).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .linalg import lecun_normal, load_matrix_csv, save_matrix_csv

__all__ = [
    "ModelConfig",
    "ModelParams",
    "ForwardState",
    "init_params",
    "build_forward",
    "forward",
    "save_model",
    "load_model",
]

ATTENTION_MODES = ("paper", "mixed")


@dataclass
class ModelConfig:
    num_views: int
    feature_dims: list
    common_dim: int
    encoder_layers: int = 1
    decoder_layers: int = 1
    residual: bool = True
    attention_mode: str = "paper"
    batch_norm: bool = False  # reserved; only False is accepted

    def __post_init__(self):
        if self.num_views < 1:
            raise ValueError("num_views must be >= 1")
        if len(self.feature_dims) != self.num_views:
            raise ValueError("feature_dims length must equal num_views")
        if any(f < 1 for f in self.feature_dims):
            raise ValueError("feature dimensions must be >= 1")
        if self.common_dim < 1:
            raise ValueError("common_dim must be >= 1")
        if self.encoder_layers < 1 or self.decoder_layers < 1:
            raise ValueError("layer counts must be >= 1")
        if self.attention_mode not in ATTENTION_MODES:
            raise ValueError(f"attention_mode must be one of {ATTENTION_MODES}")
        if self.batch_norm:
            raise ValueError("batch_norm is reserved and not implemented")


@dataclass
class ModelParams:
    config: ModelConfig
    arrays: dict = field(default_factory=dict)

    def copy(self):
        return ModelParams(self.config, {k: v.copy() for k, v in self.arrays.items()})


@dataclass
class ForwardState:
    """Per-view intermediates of one forward pass (plain arrays)."""

    Z: list
    Q: list
    K: list
    V: list
    a: list  # alignment weights, 1 x N each
    H: list
    H_sr: list
    X_hat: list


def init_params(config, rng):
    """LeCun-normal weights (fan_in = layer input width), zero biases,
    zero self-representation matrices. N is not known until data is
    seen, so C matrices are created by :func:`attach_selfrep`."""
    R = config.common_dim
    arrays = {}
    for v in range(config.num_views):
        F = config.feature_dims[v]
        dims_in = [F] + [R] * (config.encoder_layers - 1)
        for i, din in enumerate(dims_in):
            arrays[f"W1_{v}_{i}"] = lecun_normal(rng, R, din, din)
            arrays[f"b1_{v}_{i}"] = np.zeros((R, 1))
        l = config.decoder_layers
        for i in range(l):
            dout = R if i < l - 1 else F
            arrays[f"W3_{v}_{i}"] = lecun_normal(rng, dout, R, R)
            arrays[f"b2_{v}_{i}"] = np.zeros((dout, 1))
    for j in (1, 2, 3):
        arrays[f"W2_{j}"] = lecun_normal(rng, R, R, R)
    return ModelParams(config, arrays)


def attach_selfrep(params, num_samples):
    """Add (or re-shape-check) the zero-initialized C matrices for N samples."""
    for v in range(params.config.num_views):
        key = f"C_{v}"
        if key in params.arrays:
            if params.arrays[key].shape != (num_samples, num_samples):
                raise ValueError(
                    f"{key} has shape {params.arrays[key].shape}, "
                    f"expected {(num_samples, num_samples)}"
                )
        else:
            params.arrays[key] = np.zeros((num_samples, num_samples))
    return params


def _encode(tape, x, leaves, config, v):
    out = x
    for i in range(config.encoder_layers):
        pre = tape.add_bias(
            tape.matmul(leaves[f"W1_{v}_{i}"], out), leaves[f"b1_{v}_{i}"]
        )
        act = tape.relu(pre)
        # residual only on square (R -> R) layers
        out = tape.add(act, out) if (config.residual and i > 0) else act
    return out


def _decode(tape, h, leaves, config, v):
    out = h
    l = config.decoder_layers
    for i in range(l):
        pre = tape.add_bias(
            tape.matmul(leaves[f"W3_{v}_{i}"], out), leaves[f"b2_{v}_{i}"]
        )
        act = tape.relu(pre)
        out = tape.add(act, out) if (config.residual and i < l - 1) else act
    return out


def _attend(tape, Z, leaves, config):
    M = len(Z)
    Q = [tape.matmul(leaves["W2_1"], z) for z in Z]
    K = [tape.matmul(leaves["W2_2"], z) for z in Z]
    V = [tape.matmul(leaves["W2_3"], z) for z in Z]
    a, H = [], []
    for v in range(M):
        scores = tape.vstack(
            [tape.col_sums(tape.mul(Q[v], K[j])) for j in range(M)]
        )
        weights = tape.softmax_cols(scores)  # M x N, softmax over views
        a.append(tape.row(weights, v))
        if config.attention_mode == "paper":
            H.append(tape.scale_cols(V[v], a[v]))
        else:  # mixed: cross-view value sum
            parts = [
                tape.scale_cols(V[j], tape.row(weights, j)) for j in range(M)
            ]
            h = parts[0]
            for p in parts[1:]:
                h = tape.add(h, p)
            H.append(h)
    return Q, K, V, a, H


def build_forward(tape, views, leaves, config):
    """Record the full forward pass on a tape.

    ``views`` are leaf/constant nodes of shape F^v x N. Returns a dict of
    per-stage node lists, including the diagonal-masked C nodes actually
    used (gradients of C diagonals are exactly zero through the mask).
    """
    if len(views) != config.num_views:
        raise ValueError("number of views does not match config")
    n = views[0].value.shape[1]
    for v, x in enumerate(views):
        if x.value.shape != (config.feature_dims[v], n):
            raise ValueError(
                f"view {v} has shape {x.value.shape}, expected "
                f"{(config.feature_dims[v], n)}"
            )
    Z = [_encode(tape, views[v], leaves, config, v) for v in range(config.num_views)]
    Q, K, V, a, H = _attend(tape, Z, leaves, config)
    C_masked = [tape.zero_diag(leaves[f"C_{v}"]) for v in range(config.num_views)]
    H_sr = [tape.matmul(H[v], C_masked[v]) for v in range(config.num_views)]
    X_hat = [
        _decode(tape, H_sr[v], leaves, config, v) for v in range(config.num_views)
    ]
    return {
        "Z": Z, "Q": Q, "K": K, "V": V, "a": a,
        "H": H, "C": C_masked, "H_sr": H_sr, "X_hat": X_hat,
    }


def forward(views, params):
    """Plain-array forward pass; returns a :class:`ForwardState`."""
    from .autodiff import Tape

    config = params.config
    tape = Tape()
    view_nodes = [tape.constant(x) for x in views]
    leaves = {k: tape.leaf(v, name=k) for k, v in params.arrays.items()}
    nodes = build_forward(tape, view_nodes, leaves, config)
    pick = lambda key: [n.value.copy() for n in nodes[key]]
    return ForwardState(
        Z=pick("Z"), Q=pick("Q"), K=pick("K"), V=pick("V"), a=pick("a"),
        H=pick("H"), H_sr=pick("H_sr"), X_hat=pick("X_hat"),
    )


def save_model(model_dir, params, extra_meta=None):
    os.makedirs(model_dir, exist_ok=True)
    meta = {"config": asdict(params.config)}
    if extra_meta:
        meta.update(extra_meta)
    meta["parameters"] = sorted(params.arrays)
    with open(os.path.join(model_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    for name in sorted(params.arrays):
        save_matrix_csv(os.path.join(model_dir, f"{name}.csv"), params.arrays[name])


def load_model(model_dir):
    meta_path = os.path.join(model_dir, "meta.json")
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    config = ModelConfig(**meta["config"])
    arrays = {}
    for name in meta["parameters"]:
        arrays[name] = load_matrix_csv(os.path.join(model_dir, f"{name}.csv"))
    params = ModelParams(config, arrays)
    return params, meta
