"""Command-line front end: synth, train, cluster, evaluate, grad-check.

Exit codes: 0 success, 2 usage/validation error, 3 numeric failure,
4 verification failure. ``MSALAA_THREADS`` caps BLAS parallelism
(0 or unset = automatic).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import CONFIG_SCHEMA_VERSION, __version__
from .autodiff import Tape, grad_check
from .data import SynthSpec, generate_synthetic, load_dataset, save_dataset, standardize
from .linalg import rng_from_seed, save_matrix_csv
from .metrics import METRIC_NAMES, evaluate_all
from .model import (
    ModelConfig,
    ModelParams,
    attach_selfrep,
    forward,
    init_params,
    load_model,
    save_model,
)
from .spectral import build_affinity, spectral_cluster
from .training import (
    LossWeights,
    OptimizerConfig,
    build_loss,
    select_best_view,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4

# flat config key set: (default, validator); None default means required
_CONFIG_KEYS = {
    "common_dim": (None, lambda v: isinstance(v, int) and v >= 1),
    "encoder_layers": (1, lambda v: isinstance(v, int) and v >= 1),
    "decoder_layers": ("=encoder", lambda v: isinstance(v, int) and v >= 1),
    "residual": (True, lambda v: isinstance(v, bool)),
    "attention_mode": ("paper", lambda v: v in ("paper", "mixed")),
    "batch_norm": (False, lambda v: v is False),
    "beta1": (0.1, lambda v: isinstance(v, (int, float)) and v >= 0),
    "beta2": (0.1, lambda v: isinstance(v, (int, float)) and v >= 0),
    "omega_kind": ("L2", lambda v: v in ("L1", "L2")),
    "c_fro_weight": (1.0, lambda v: isinstance(v, (int, float)) and v >= 0),
    "base_lr": (0.001, lambda v: isinstance(v, (int, float)) and v > 0),
    "lr_decay": (0.99, lambda v: isinstance(v, (int, float)) and 0 < v <= 1),
    "adam_beta_a": (0.9, lambda v: isinstance(v, (int, float)) and 0 <= v < 1),
    "adam_beta_b": (0.999, lambda v: isinstance(v, (int, float)) and 0 <= v < 1),
    "adam_eps": (1e-8, lambda v: isinstance(v, (int, float)) and v > 0),
    "epochs": (1000, lambda v: isinstance(v, int) and v >= 1),
    "early_stop_tol": (1e-7, lambda v: isinstance(v, (int, float)) and v >= 0),
    "early_stop_patience": (25, lambda v: isinstance(v, int) and v >= 1),
    "checkpoint_every": (100, lambda v: isinstance(v, int) and v >= 1),
    "standardize": (True, lambda v: isinstance(v, bool)),
    "best_view": (None, lambda v: v is None or (isinstance(v, int) and v >= 0)),
    "seed": (0, lambda v: isinstance(v, int) and v >= 0),
}


class ConfigError(ValueError):
    pass


def parse_run_config(raw):
    """Validate the flat JSON config; unknown keys are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for key, (default, check) in _CONFIG_KEYS.items():
        if key in raw:
            value = raw[key]
            if not check(value):
                raise ConfigError(f"config key '{key}' has invalid value {value!r}")
            cfg[key] = value
        elif default is None and key == "common_dim":
            raise ConfigError("missing required config key 'common_dim'")
        else:
            cfg[key] = default
    if cfg["decoder_layers"] == "=encoder":
        cfg["decoder_layers"] = cfg["encoder_layers"]
    return cfg


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return parse_run_config(raw)


def _model_config(cfg, dataset):
    return ModelConfig(
        num_views=dataset.num_views,
        feature_dims=[int(v.shape[0]) for v in dataset.views],
        common_dim=cfg["common_dim"],
        encoder_layers=cfg["encoder_layers"],
        decoder_layers=cfg["decoder_layers"],
        residual=cfg["residual"],
        attention_mode=cfg["attention_mode"],
    )


def _loss_weights(cfg):
    return LossWeights(
        beta1=float(cfg["beta1"]),
        beta2=float(cfg["beta2"]),
        omega_kind=cfg["omega_kind"],
        c_fro_weight=float(cfg["c_fro_weight"]),
    )


def _prepared_views(dataset, do_standardize):
    if do_standardize:
        return [standardize(v)[0] for v in dataset.views]
    return [v.copy() for v in dataset.views]


def _write_history(path, history):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("epoch,lr,loss_total,loss_recon,loss_selfrep,loss_align\n")
        for rec in history:
            f.write(
                f"{rec['epoch']},{rec['lr']!r},{rec['loss_total']!r},"
                f"{rec['loss_recon']!r},{rec['loss_selfrep']!r},"
                f"{rec['loss_align']!r}\n"
            )


def cmd_train(args):
    cfg = _load_config_file(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    dataset = load_dataset(args.data)
    views = _prepared_views(dataset, cfg["standardize"])
    config = _model_config(cfg, dataset)
    weights = _loss_weights(cfg)
    optimizer = OptimizerConfig(
        base_lr=float(cfg["base_lr"]),
        decay=float(cfg["lr_decay"]),
        adam_beta_a=float(cfg["adam_beta_a"]),
        adam_beta_b=float(cfg["adam_beta_b"]),
        adam_eps=float(cfg["adam_eps"]),
    )
    os.makedirs(args.out, exist_ok=True)
    meta = {
        "seed": cfg["seed"],
        "standardize": cfg["standardize"],
        "best_view": cfg["best_view"],
        "schema_version": CONFIG_SCHEMA_VERSION,
    }

    def on_epoch(epoch, params, record):
        if (epoch + 1) % cfg["checkpoint_every"] == 0:
            save_model(args.out, params, {**meta, "epoch": epoch, "lr": record["lr"]})

    params, report = train(
        views,
        config,
        weights=weights,
        optimizer=optimizer,
        epochs=cfg["epochs"],
        seed=cfg["seed"],
        early_stop_tol=float(cfg["early_stop_tol"]),
        early_stop_patience=cfg["early_stop_patience"],
        on_epoch=on_epoch,
    )
    save_model(args.out, params, {**meta, "epoch": report.final_epoch})
    _write_history(os.path.join(args.out, "history.csv"), report.history)
    if report.diverged:
        print("training diverged: loss became non-finite; "
              "last finite checkpoint retained", file=sys.stderr)
        return EXIT_NUMERIC
    last = report.history[-1]
    print(
        f"epochs={report.final_epoch + 1} "
        f"loss_total={last['loss_total']:.6f} "
        f"loss_recon={last['loss_recon']:.6f} "
        f"loss_selfrep={last['loss_selfrep']:.6f} "
        f"loss_align={last['loss_align']:.6f}"
    )
    return EXIT_OK


def cmd_cluster(args):
    params, meta = load_model(args.model)
    dataset = load_dataset(args.data)
    config = params.config
    if dataset.num_views != config.num_views or any(
        dataset.views[v].shape[0] != config.feature_dims[v]
        for v in range(config.num_views)
    ):
        raise ConfigError(
            "dataset dimensions do not match the model "
            f"(model expects {config.feature_dims}, data has "
            f"{[v.shape[0] for v in dataset.views]})"
        )
    expected_n = params.arrays["C_0"].shape[0]
    if dataset.num_samples != expected_n:
        raise ConfigError(
            f"model was trained on N={expected_n} samples, data has "
            f"N={dataset.num_samples}"
        )
    if not 1 <= args.k <= dataset.num_samples:
        raise ConfigError(f"k must be in [1, {dataset.num_samples}]")
    views = _prepared_views(dataset, meta.get("standardize", True))
    state = forward(views, params)
    override = args.view if args.view is not None else meta.get("best_view")
    view = select_best_view(state, override=override)
    affinity = build_affinity(params.arrays[f"C_{view}"])
    assignment = spectral_cluster(affinity, args.k, seed=args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        for lab in assignment.labels:
            f.write(f"{int(lab)}\n")
    if args.export_affinity:
        save_matrix_csv(args.export_affinity, affinity)
    if args.export_embeddings:
        os.makedirs(args.export_embeddings, exist_ok=True)
        for v, h in enumerate(state.H):
            save_matrix_csv(
                os.path.join(args.export_embeddings, f"H_{v}.csv"), h
            )
    print(f"view={view} k={args.k} labels={args.out}")
    return EXIT_OK


def _read_labels_cli(path):
    from .data import _load_labels

    return _load_labels(path)


def cmd_evaluate(args):
    pred = _read_labels_cli(args.pred)
    truth = _read_labels_cli(args.truth)
    if pred.size != truth.size:
        raise ConfigError(
            f"label files differ in length: {pred.size} vs {truth.size}"
        )
    results = evaluate_all(pred, truth, pairwise=args.pairwise)
    for name in METRIC_NAMES:
        print(f"{name}={results[name]:.4f}")
    with open(args.json, "w", encoding="utf-8") as f:
        json.dump(results, f, indent=2, sort_keys=True)
        f.write("\n")
    return EXIT_OK


def cmd_synth(args):
    try:
        with open(args.spec, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read synth spec: {e}")
    allowed = {
        "num_views", "num_clusters", "points_per_cluster",
        "ambient_dims", "subspace_dim", "noise_sigma",
    }
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown synth spec keys: {', '.join(unknown)}")
    try:
        spec = SynthSpec(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid synth spec: {e}")
    dataset = generate_synthetic(spec, args.seed)
    manifest = save_dataset(args.out, dataset)
    print(f"manifest={manifest} views={spec.num_views} "
          f"samples={dataset.num_samples}")
    return EXIT_OK


def cmd_grad_check(args):
    cfg = _load_config_file(args.config)
    # fixed toy problem; architecture hyper-parameters come from the config
    feature_dims = [5, 6, 7]
    n = 8
    config = ModelConfig(
        num_views=len(feature_dims),
        feature_dims=feature_dims,
        common_dim=cfg["common_dim"],
        encoder_layers=cfg["encoder_layers"],
        decoder_layers=cfg["decoder_layers"],
        residual=cfg["residual"],
        attention_mode=cfg["attention_mode"],
    )
    weights = _loss_weights(cfg)
    seed = args.seed if args.seed is not None else cfg["seed"]
    rng = rng_from_seed(seed)
    params = attach_selfrep(init_params(config, rng), n)
    for v in range(config.num_views):
        params.arrays[f"C_{v}"] = 0.1 * rng.normal(size=(n, n))
        np.fill_diagonal(params.arrays[f"C_{v}"], 0.0)
    for key, value in params.arrays.items():
        # generic biases keep pre-activations off the relu kink, where
        # central differences are undefined
        if key.startswith("b"):
            params.arrays[key] = 0.1 * rng.normal(size=value.shape)
    views = [rng.normal(size=(f, n)) for f in feature_dims]

    def build(tape, leaves):
        view_nodes = [tape.constant(x) for x in views]
        total, _ = build_loss(tape, view_nodes, leaves, config, weights)
        return total

    err, name, ix = grad_check(
        build, params.arrays, step=1e-6, corrupt=args.corrupt_gradient
    )
    print(f"max_relative_error={err:.3e} worst={name}{list(ix) if ix else ''}")
    if err >= 1e-4:
        print(f"gradient check failed at parameter {name}{list(ix) if ix else ''}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msalaa",
        description="Multi-view subspace clustering: train, cluster, evaluate.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"msalaa {__version__} (config schema {CONFIG_SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="dataset manifest path")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("cluster", help="cluster with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="labels output path")
    p.add_argument("--view", type=int, default=None)
    p.add_argument("--export-affinity", default=None)
    p.add_argument("--export-embeddings", default=None)
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("evaluate", help="compute the six clustering metrics")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--pairwise", action="store_true")
    p.add_argument("--json", default="metrics.json")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("grad-check", help="verify gradients on a toy problem")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--corrupt-gradient", action="store_true", help=argparse.SUPPRESS
    )  # harness self-test hook
    p.set_defaults(fn=cmd_grad_check)
    return parser


def _limit_threads():
    raw = os.environ.get("MSALAA_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"MSALAA_THREADS must be an integer, got {raw!r}")
    if cap > 0:
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(cap)
        except ImportError:  # pragma: no cover
            pass


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _limit_threads()
        return args.fn(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, RuntimeError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
