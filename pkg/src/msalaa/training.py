"""Two-part loss, full-batch Adam training with per-epoch learning-rate
decay, diagonal-constraint enforcement, and best-view selection.

The loss splits as
  recon   = sum_v ||X^v - Xhat^v||_F^2 / (2NM) + beta2 * Omega(W1, W3)
  selfrep = sum_v [ ||H_sr^v - H^v||_F^2 / (2N) + c_fro * ||C^v||_F^2 ]
  align   = beta1 * sum_{v != w, ordered} ||C^v - C^w||_F^2 / (2N)

Omega is the L2 (sum of squares) or L1 (sum of absolute values)
penalty over encoder and decoder weight matrices only; biases and the
attention transforms are excluded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape
from .model import ModelParams, attach_selfrep, build_forward, init_params
from .linalg import rng_from_seed

__all__ = [
    "LossWeights",
    "OptimizerConfig",
    "AdamState",
    "TrainReport",
    "reconstruction_loss",
    "selfrep_loss",
    "total_loss",
    "build_loss",
    "train",
    "select_best_view",
]


@dataclass
class LossWeights:
    beta1: float = 0.1  # alignment trade-off
    beta2: float = 0.1  # encoder/decoder weight regularizer trade-off
    omega_kind: str = "L2"  # "L2" or "L1"
    c_fro_weight: float = 1.0

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("trade-off weights must be >= 0")
        if self.omega_kind not in ("L1", "L2"):
            raise ValueError("omega_kind must be 'L1' or 'L2'")
        if self.c_fro_weight < 0:
            raise ValueError("c_fro_weight must be >= 0")


@dataclass
class OptimizerConfig:
    base_lr: float = 0.001
    decay: float = 0.99
    adam_beta_a: float = 0.9
    adam_beta_b: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")

    def lr_at(self, epoch):
        return self.base_lr * self.decay**epoch


class AdamState:
    """First/second moment buffers shaped like the parameters."""

    def __init__(self, params, config):
        self.config = config
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}

    def step(self, params, grads, lr):
        cfg = self.config
        self.t += 1
        ba, bb = cfg.adam_beta_a, cfg.adam_beta_b
        for k in sorted(params.arrays):
            g = grads[k]
            self.m[k] = ba * self.m[k] + (1 - ba) * g
            self.v[k] = bb * self.v[k] + (1 - bb) * g * g
            mhat = self.m[k] / (1 - ba**self.t)
            vhat = self.v[k] / (1 - bb**self.t)
            params.arrays[k] -= lr * mhat / (np.sqrt(vhat) + cfg.adam_eps)


@dataclass
class TrainReport:
    history: list = field(default_factory=list)  # dict per epoch
    wall_time: float = 0.0
    final_epoch: int = 0
    diverged: bool = False
    stopped_early: bool = False


def _omega(weight_list, kind):
    if kind == "L2":
        return float(sum(np.sum(w * w) for w in weight_list))
    return float(sum(np.sum(np.abs(w)) for w in weight_list))


def _enc_dec_weights(params):
    cfg = params.config
    out = []
    for v in range(cfg.num_views):
        for i in range(cfg.encoder_layers):
            out.append(params.arrays[f"W1_{v}_{i}"])
        for i in range(cfg.decoder_layers):
            out.append(params.arrays[f"W3_{v}_{i}"])
    return out


def reconstruction_loss(views, x_hats, params, weights):
    M = len(views)
    n = views[0].shape[1]
    total = 0.0
    for x, xh in zip(views, x_hats):
        if x.shape != xh.shape:
            raise ValueError(f"shape mismatch: {x.shape} vs {xh.shape}")
        d = x - xh
        total += np.sum(d * d) / (2.0 * n * M)
    total += weights.beta2 * _omega(_enc_dec_weights(params), weights.omega_kind)
    return float(total)


def selfrep_loss(hs, h_srs, cs, weights):
    M = len(hs)
    n = hs[0].shape[1]
    total = 0.0
    for h, hsr, c in zip(hs, h_srs, cs):
        if np.any(np.diag(c) != 0):
            raise RuntimeError("self-representation matrix has nonzero diagonal")
        d = hsr - h
        total += np.sum(d * d) / (2.0 * n) + weights.c_fro_weight * np.sum(c * c)
    align = 0.0
    for v in range(M):
        for w in range(M):
            if v != w:
                d = cs[v] - cs[w]
                align += np.sum(d * d) / (2.0 * n)
    return float(total + weights.beta1 * align)


def total_loss(state, views, params, weights):
    cfg = params.config
    cs = [params.arrays[f"C_{v}"] for v in range(cfg.num_views)]
    val = reconstruction_loss(views, state.X_hat, params, weights) + selfrep_loss(
        state.H, state.H_sr, cs, weights
    )
    if not np.isfinite(val):
        raise FloatingPointError("total loss is non-finite")
    return val


def build_loss(tape, view_nodes, leaves, config, weights):
    """Record forward pass + loss on a tape.

    Returns (total_node, parts) where parts maps 'recon'/'selfrep'/'align'
    to scalar nodes.
    """
    nodes = build_forward(tape, view_nodes, leaves, config)
    M = config.num_views
    n = view_nodes[0].value.shape[1]

    recon_terms = []
    for v in range(M):
        diff = tape.sub(view_nodes[v], nodes["X_hat"][v])
        recon_terms.append(tape.smul(tape.frob_sq(diff), 1.0 / (2.0 * n * M)))
    if weights.beta2 > 0:
        penalty = tape.abs_sum if weights.omega_kind == "L1" else tape.frob_sq
        reg_terms = []
        for v in range(M):
            for i in range(config.encoder_layers):
                reg_terms.append(penalty(leaves[f"W1_{v}_{i}"]))
            for i in range(config.decoder_layers):
                reg_terms.append(penalty(leaves[f"W3_{v}_{i}"]))
        recon_terms.append(tape.smul(tape.sum_scalars(reg_terms), weights.beta2))
    recon = tape.sum_scalars(recon_terms)

    selfrep_terms = []
    for v in range(M):
        diff = tape.sub(nodes["H_sr"][v], nodes["H"][v])
        selfrep_terms.append(tape.smul(tape.frob_sq(diff), 1.0 / (2.0 * n)))
        if weights.c_fro_weight > 0:
            selfrep_terms.append(
                tape.smul(tape.frob_sq(nodes["C"][v]), weights.c_fro_weight)
            )
    selfrep = tape.sum_scalars(selfrep_terms)

    parts = {"recon": recon, "selfrep": selfrep}
    total = tape.add_scalar(recon, selfrep)
    if M > 1 and weights.beta1 > 0:
        align_terms = []
        for v in range(M):
            for w in range(M):
                if v != w:
                    diff = tape.sub(nodes["C"][v], nodes["C"][w])
                    align_terms.append(tape.smul(tape.frob_sq(diff), 1.0 / (2.0 * n)))
        align = tape.smul(tape.sum_scalars(align_terms), weights.beta1)
        parts["align"] = align
        total = tape.add_scalar(total, align)
    parts["forward"] = nodes
    return total, parts


def _zero_c_diagonals(params):
    for v in range(params.config.num_views):
        np.fill_diagonal(params.arrays[f"C_{v}"], 0.0)


def train(
    views,
    config,
    weights=None,
    optimizer=None,
    epochs=1000,
    seed=0,
    early_stop_tol=1e-7,
    early_stop_patience=25,
    on_epoch=None,
):
    """Full-batch training. Deterministic given the seed.

    ``on_epoch(epoch, params, record)`` runs after each update (used for
    checkpointing). On divergence the last finite-parameter state is
    returned with ``report.diverged`` set.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    weights = weights or LossWeights()
    optimizer = optimizer or OptimizerConfig()
    n = views[0].shape[1]
    rng = rng_from_seed(seed)
    params = attach_selfrep(init_params(config, rng), n)
    adam = AdamState(params, optimizer)
    report = TrainReport()

    start = time.time()
    prev_loss = None
    stall = 0
    last_finite = params.copy()
    for epoch in range(epochs):
        tape = Tape()
        view_nodes = [tape.constant(x) for x in views]
        leaves = {k: tape.leaf(v, name=k) for k, v in params.arrays.items()}
        total, parts = build_loss(tape, view_nodes, leaves, config, weights)
        loss = float(total.value)
        if not np.isfinite(loss):
            params = last_finite
            report.diverged = True
            break
        last_finite = params.copy()
        grads = tape.backward(total)
        lr = optimizer.lr_at(epoch)
        adam.step(params, grads, lr)
        _zero_c_diagonals(params)
        record = {
            "epoch": epoch,
            "lr": lr,
            "loss_total": loss,
            "loss_recon": float(parts["recon"].value),
            "loss_selfrep": float(parts["selfrep"].value),
            "loss_align": float(parts["align"].value) if "align" in parts else 0.0,
        }
        report.history.append(record)
        report.final_epoch = epoch
        if on_epoch is not None:
            on_epoch(epoch, params, record)
        if prev_loss is not None:
            if abs(prev_loss - loss) / max(1.0, abs(prev_loss)) < early_stop_tol:
                stall += 1
                if stall >= early_stop_patience:
                    report.stopped_early = True
                    prev_loss = loss
                    break
            else:
                stall = 0
        prev_loss = loss
    report.wall_time = time.time() - start
    return params, report


def select_best_view(state, override=None):
    """View with the smallest normalized self-representation residual."""
    m = len(state.H)
    if override is not None:
        if not 0 <= override < m:
            raise ValueError(f"view index {override} out of range for M={m}")
        return override
    best, best_score = 0, None
    for v in range(m):
        num = float(np.sum((state.H_sr[v] - state.H[v]) ** 2))
        den = max(1e-12, float(np.sum(state.H[v] ** 2)))
        score = num / den
        if best_score is None or score < best_score:
            best, best_score = v, score
    return best
