"""Action selection: softmax and epsilon-greedy over masked action values."""
from __future__ import annotations

import numpy as np


class PolicyError(ValueError):
    pass


def _mask(values: np.ndarray, available) -> np.ndarray:
    if available is None:
        return np.ones(len(values), dtype=bool)
    mask = np.asarray(available, dtype=bool)
    if mask.shape != (len(values),):
        raise PolicyError(f"mask shape {mask.shape} does not match {len(values)} values")
    if not mask.any():
        raise PolicyError("no available actions")
    return mask


def softmax_policy(values, beta: float, available=None) -> np.ndarray:
    """p(a) proportional to exp(beta * values[a]) over available actions."""
    values = np.asarray(values, dtype=float)
    mask = _mask(values, available)
    z = beta * values[mask]
    z = np.exp(z - z.max())
    p = np.zeros(len(values))
    p[mask] = z / z.sum()
    return p


def greedy(values, available=None) -> int:
    """Argmax over available actions, lowest index on ties."""
    values = np.asarray(values, dtype=float)
    mask = _mask(values, available)
    return int(np.argmax(np.where(mask, values, -np.inf)))


def sample(p: np.ndarray, rng: np.random.Generator) -> int:
    # side="right" never selects a zero-probability entry: its cumulative
    # value equals its predecessor's.
    c = np.cumsum(p)
    return int(np.searchsorted(c, rng.random() * c[-1], side="right"))


def epsilon_greedy(values, epsilon: float, available, rng: np.random.Generator) -> int:
    values = np.asarray(values, dtype=float)
    mask = _mask(values, available)
    if epsilon > 0 and rng.random() < epsilon:
        choices = np.flatnonzero(mask)
        return int(choices[rng.integers(len(choices))])
    return greedy(values, mask)
