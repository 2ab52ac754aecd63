"""Principal components through a deterministic Jacobi eigensolver."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from tabnav import kernels
from tabnav.env.graph import ContractError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class PCAResult(NamedTuple):
    components: np.ndarray  # (k, cols), rows orthonormal
    projected: np.ndarray  # (rows, k)
    eigenvalues: np.ndarray  # (k,), descending
    mean: np.ndarray  # (cols,)


def symmetric_eigh(a: np.ndarray, tol: float = JACOBI_TOL,
                   max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and column eigenvectors of a symmetric matrix.

    Each eigenvector's largest-magnitude entry is made positive; ties in
    magnitude go to the lowest index.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {a.shape}")
    vals, vecs, _ = kernels.jacobi_eigh(a, tol, max_sweeps)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    for j in range(vecs.shape[1]):
        if vecs[np.argmax(np.abs(vecs[:, j])), j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def pca(x, k: int, center: bool = True) -> PCAResult:
    """Top ``k`` principal components of the rows of ``x``.

    With ``center=False`` the columns are not mean-centred, so the result is
    the eigen-decomposition of the second-moment matrix ``x.T @ x / rows``
    (the top singular directions of ``x``) and ``mean`` is zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError(f"expected a 2-D matrix, got shape {x.shape}")
    rows, cols = x.shape
    if not 1 <= k <= min(rows, cols):
        raise ContractError(f"k={k} outside [1, {min(rows, cols)}] for a {rows}x{cols} matrix")
    if not np.all(np.isfinite(x)):
        raise ContractError("matrix has non-finite entries")
    mean = x.mean(axis=0) if center else np.zeros(cols)
    centered = x - mean
    cov = centered.T @ centered / rows
    cov = 0.5 * (cov + cov.T)
    vals, vecs = symmetric_eigh(cov)
    comps = vecs[:, :k].T.copy()
    return PCAResult(comps, centered @ comps.T, vals[:k].copy(), mean)


def explained_variance_ratio(eigenvalues, total: float) -> np.ndarray:
    return np.asarray(eigenvalues) / total if total > 0 else np.zeros(len(eigenvalues))
