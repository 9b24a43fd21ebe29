"""Dataset ingestion, feature standardization, and the synthetic
union-of-subspaces generator used as a verification oracle.

On disk, view CSVs are rows = samples; in memory views are F^v x N
(features x samples). The manifest is JSON with fields ``name``,
``views`` (list of {"path", "features"}), ``labels_path`` and
``num_classes``; paths are relative to the manifest's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .linalg import load_matrix_csv, rng_from_seed, save_matrix_csv

__all__ = [
    "MultiViewDataset",
    "SynthSpec",
    "load_dataset",
    "save_dataset",
    "standardize",
    "generate_synthetic",
]


@dataclass
class MultiViewDataset:
    name: str
    views: list  # F^v x N arrays
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if not self.views:
            raise ValueError("dataset must have at least one view")
        n = self.views[0].shape[1]
        for v, x in enumerate(self.views):
            if x.shape[1] != n:
                raise ValueError(
                    f"view {v} has {x.shape[1]} samples, expected {n}"
                )
        if self.labels.shape != (n,):
            raise ValueError(
                f"labels length {self.labels.size} does not match N={n}"
            )
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")

    @property
    def num_views(self):
        return len(self.views)

    @property
    def num_samples(self):
        return self.views[0].shape[1]


@dataclass
class SynthSpec:
    num_views: int
    num_clusters: int
    points_per_cluster: int
    ambient_dims: list
    subspace_dim: int
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.num_views < 1 or self.num_clusters < 1:
            raise ValueError("num_views and num_clusters must be >= 1")
        if self.points_per_cluster < 1:
            raise ValueError("points_per_cluster must be >= 1")
        if len(self.ambient_dims) != self.num_views:
            raise ValueError("ambient_dims length must equal num_views")
        if self.subspace_dim < 1 or self.subspace_dim >= min(self.ambient_dims):
            raise ValueError("subspace_dim must satisfy 1 <= d < min(ambient_dims)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def _load_labels(path):
    labels = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not an integer label") from None
    if not labels:
        raise ValueError(f"{path}: empty labels file")
    return np.asarray(labels, dtype=np.int64)


def load_dataset(manifest_path):
    """Load a multi-view dataset described by a JSON manifest."""
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    for key in ("name", "views", "labels_path", "num_classes"):
        if key not in manifest:
            raise ValueError(f"{manifest_path}: missing manifest key '{key}'")
    base = os.path.dirname(os.path.abspath(manifest_path))
    views = []
    view_paths = []
    for i, entry in enumerate(manifest["views"]):
        if "path" not in entry or "features" not in entry:
            raise ValueError(
                f"{manifest_path}: view {i} needs 'path' and 'features'"
            )
        path = os.path.join(base, entry["path"])
        if not os.path.exists(path):
            raise ValueError(f"{manifest_path}: view file not found: {path}")
        raw = load_matrix_csv(path)  # rows = samples
        if raw.shape[1] != entry["features"]:
            raise ValueError(
                f"{path}: {raw.shape[1]} features, manifest says {entry['features']}"
            )
        views.append(raw.T.copy())
        view_paths.append(path)
    labels_path = os.path.join(base, manifest["labels_path"])
    if not os.path.exists(labels_path):
        raise ValueError(f"{manifest_path}: labels file not found: {labels_path}")
    labels = _load_labels(labels_path)
    n = views[0].shape[1]
    for path, x in zip(view_paths, views):
        if x.shape[1] != n:
            raise ValueError(
                f"sample-count mismatch: {path} has {x.shape[1]}, "
                f"{view_paths[0]} has {n}"
            )
    if labels.size != n:
        raise ValueError(
            f"sample-count mismatch: {labels_path} has {labels.size} labels, "
            f"{view_paths[0]} has {n} samples"
        )
    return MultiViewDataset(
        name=manifest["name"],
        views=views,
        labels=labels,
        num_classes=int(manifest["num_classes"]),
    )


def save_dataset(out_dir, dataset):
    """Write manifest + view CSVs + labels; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "name": dataset.name,
        "views": [],
        "labels_path": "labels.txt",
        "num_classes": dataset.num_classes,
    }
    for v, x in enumerate(dataset.views):
        fname = f"view_{v}.csv"
        save_matrix_csv(os.path.join(out_dir, fname), x.T)
        manifest["views"].append({"path": fname, "features": int(x.shape[0])})
    with open(os.path.join(out_dir, "labels.txt"), "w", encoding="utf-8",
              newline="\n") as f:
        for lab in dataset.labels:
            f.write(f"{int(lab)}\n")
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return manifest_path


def standardize(X):
    """Per-feature z-score across samples (population std).

    Returns (standardized matrix, mean, std); zero-variance features
    map to 0 and report std 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be a 2-D features x samples matrix")
    mean = X.mean(axis=1, keepdims=True)
    std = X.std(axis=1, keepdims=True)
    out = np.where(std > 0, (X - mean) / np.where(std > 0, std, 1.0), 0.0)
    return out, mean, std


def generate_synthetic(spec, seed):
    """Union-of-subspaces multi-view data.

    Per cluster and view: an orthonormal basis U (F^v x d) from the QR
    of a Gaussian matrix. Each sample draws one shared d-dim coordinate
    used by every view, realized as U @ y + sigma * noise. Cluster
    membership is identical across views.
    """
    rng = rng_from_seed(seed)
    bases = []  # [cluster][view]
    for _ in range(spec.num_clusters):
        row = []
        for v in range(spec.num_views):
            g = rng.normal(size=(spec.ambient_dims[v], spec.subspace_dim))
            q, r = np.linalg.qr(g)
            # fix the sign convention so the basis is seed-stable
            q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
            row.append(q)
        bases.append(row)
    views = [[] for _ in range(spec.num_views)]
    labels = []
    for c in range(spec.num_clusters):
        coords = rng.normal(size=(spec.subspace_dim, spec.points_per_cluster))
        for v in range(spec.num_views):
            x = bases[c][v] @ coords
            if spec.noise_sigma > 0:
                x = x + spec.noise_sigma * rng.normal(size=x.shape)
            views[v].append(x)
        labels.extend([c] * spec.points_per_cluster)
    return MultiViewDataset(
        name="synthetic",
        views=[np.hstack(parts) for parts in views],
        labels=np.asarray(labels, dtype=np.int64),
        num_classes=spec.num_clusters,
    )
