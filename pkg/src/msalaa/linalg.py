"""Dense double-precision matrix substrate: seeded RNG, LeCun-normal
initialization, symmetric eigendecomposition, and the shared CSV matrix
format used by every on-disk artifact.

Matrices are plain ``numpy.ndarray`` of dtype float64, row-major. The RNG
is numpy's PCG64 (a documented, splittable, platform-stable 64-bit
generator), so identical seeds yield identical streams everywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "rng_from_seed",
    "lecun_normal",
    "sym_eigen",
    "save_matrix_csv",
    "load_matrix_csv",
    "as_matrix",
]

MAX_ASYMMETRY = 1e-9


def rng_from_seed(seed):
    """Deterministic generator (PCG64) for a 64-bit unsigned seed."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def lecun_normal(rng, rows, cols, fan_in):
    """Sample a rows x cols matrix with i.i.d. N(0, 1/fan_in) entries."""
    if fan_in < 1:
        raise ValueError("fan_in must be >= 1")
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    return rng.normal(0.0, np.sqrt(1.0 / fan_in), size=(rows, cols))


def sym_eigen(S):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues ascending, eigenvectors as columns). Ties in the
    eigenvalue ordering keep original column order (the underlying LAPACK
    ordering is already stable and ascending). The input is symmetrized
    as (S + S.T) / 2; asymmetry beyond ``MAX_ASYMMETRY`` is an error.
    """
    S = as_matrix(S, "S")
    n, m = S.shape
    if n != m:
        raise ValueError(f"sym_eigen requires a square matrix, got {n}x{m}")
    if n > 0 and np.max(np.abs(S - S.T)) > MAX_ASYMMETRY:
        raise ValueError("input is not symmetric within tolerance 1e-9")
    Ssym = (S + S.T) / 2.0
    try:
        w, V = np.linalg.eigh(Ssym)
    except np.linalg.LinAlgError as e:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"symmetric eigensolver failed to converge: {e}")
    return w, V


def save_matrix_csv(path, A):
    """Write a matrix in the shared CSV format (no header, '.' decimals,
    shortest round-trip float representation)."""
    A = as_matrix(A, "A")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in A:
            f.write(",".join(repr(float(x)) for x in row))
            f.write("\n")


def load_matrix_csv(path):
    """Read a matrix in the shared CSV format.

    Raises ValueError naming the file and 1-based line number on ragged
    rows or non-numeric cells.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} columns, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=np.float64)
