from __future__ import annotations

import numpy as np

from tabnav.env.graph import ContractError


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def separation_score(points, labels) -> float:
    """How much further apart communities are than their members.

    ``(mean between-label distance - mean within-label distance)`` divided
    by the mean distance over all pairs. Returns 0 when every point
    coincides.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    labels = np.asarray(labels)
    if len(labels) != len(points):
        raise ContractError(f"{len(points)} points but {len(labels)} labels")
    uniq, counts = np.unique(labels, return_counts=True)
    if len(uniq) < 2 or counts.min() < 2:
        raise ContractError("need at least two labels with at least two points each")
    d = _pairwise(points)
    iu = np.triu_indices(len(points), 1)
    dist = d[iu]
    overall = dist.mean()
    if overall == 0.0:
        return 0.0
    same = (labels[:, None] == labels[None, :])[iu]
    return float((dist[~same].mean() - dist[same].mean()) / overall)


def permutation_scores(points, labels, n_perm: int, rng: np.random.Generator) -> np.ndarray:
    """Separation scores under ``n_perm`` random relabelings."""
    labels = np.asarray(labels)
    return np.array([separation_score(points, rng.permutation(labels)) for _ in range(n_perm)])
