"""Affinity construction and normalized spectral clustering.

Pipeline: A = |C| + |C|^T, symmetric normalized Laplacian
L = I - D^{-1/2} A D^{-1/2}, embedding from the k eigenvectors with the
smallest eigenvalues, row normalization, then seeded k-means
(k-means++ init, Lloyd iterations, best inertia over restarts).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, rng_from_seed, sym_eigen

__all__ = [
    "ClusterAssignment",
    "build_affinity",
    "normalized_laplacian",
    "spectral_cluster",
    "kmeans",
]


@dataclass
class ClusterAssignment:
    labels: np.ndarray  # int labels in 0..k-1
    k: int
    inertia: float


def build_affinity(C):
    """A = |C| + |C|^T; requires diag(C) = 0."""
    C = as_matrix(C, "C")
    n, m = C.shape
    if n != m:
        raise ValueError(f"C must be square, got {n}x{m}")
    if np.any(np.diag(C) != 0):
        raise ValueError("C must have a zero diagonal")
    A = np.abs(C)
    return A + A.T


def check_affinity(A):
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError("affinity must be square")
    if np.max(np.abs(A - A.T)) > 0:
        raise ValueError("affinity must be exactly symmetric")
    if np.any(A < 0):
        raise ValueError("affinity must be entrywise nonnegative")
    return A


def normalized_laplacian(A):
    """L = I - D^{-1/2} A D^{-1/2}; degree-zero rows use 0 for D^{-1/2}."""
    A = check_affinity(A)
    d = A.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    L = np.eye(A.shape[0]) - dinv[:, None] * A * dinv[None, :]
    return (L + L.T) / 2.0


def kmeans(points, k, seed, restarts=10, max_iter=300, tol=1e-8):
    """Seeded k-means over rows of ``points``.

    k-means++ initialization; empty clusters are repaired by splitting
    the largest cluster at its farthest point; the winner over restarts
    is the (inertia, restart index) minimum, so results are
    deterministic given the seed.
    """
    points = as_matrix(points, "points")
    n = points.shape[0]
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = rng_from_seed(seed)
    best = None
    for _ in range(restarts):
        labels, inertia = _kmeans_once(points, k, rng, max_iter, tol)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return ClusterAssignment(labels=best[0], k=k, inertia=best[1])


def _plusplus_init(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r))
            idx = min(idx, n - 1)
        centers[i] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def _assign(points, centers):
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    labels = np.argmin(d2, axis=1)
    inertia = float(np.sum((points - centers[labels]) ** 2))
    return labels, inertia


def _kmeans_once(points, k, rng, max_iter, tol):
    centers = _plusplus_init(points, k, rng)
    labels, inertia = _assign(points, centers)
    for _ in range(max_iter):
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                centers[c] = points[mask].mean(axis=0)
            else:
                # split the largest cluster at its farthest point
                sizes = np.bincount(labels, minlength=k)
                big = int(np.argmax(sizes))
                members = np.flatnonzero(labels == big)
                far = members[
                    int(
                        np.argmax(
                            np.sum((points[members] - centers[big]) ** 2, axis=1)
                        )
                    )
                ]
                centers[c] = points[far]
                labels[far] = c
        new_labels, new_inertia = _assign(points, centers)
        assert new_inertia <= inertia + 1e-9, "k-means inertia increased"
        labels = new_labels
        if inertia - new_inertia <= tol:
            inertia = new_inertia
            break
        inertia = new_inertia
    return labels, inertia


def spectral_cluster(A, k, seed, restarts=10):
    """Cluster an affinity matrix into k groups (Ng-Jordan-Weiss style)."""
    A = check_affinity(A)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    L = normalized_laplacian(A)
    _, V = sym_eigen(L)
    emb = V[:, :k].copy()
    norms = np.sqrt(np.sum(emb**2, axis=1))
    nz = norms > 0
    emb[nz] /= norms[nz, None]
    return kmeans(emb, k, seed, restarts=restarts)
