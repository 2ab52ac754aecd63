"""Observation encodings, independent of the environment's dynamics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabnav.env.graph import GraphSpec
from tabnav.env.maze import ACTIONS
from tabnav.rng import derive_rng


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class OneHot:
    pass


@dataclass(frozen=True)
class WallDistance:
    """Distance to the first wall or boundary cell along N, E, S, W."""


@dataclass(frozen=True)
class SyntheticFeature:
    """Stand-in for image observations: a fixed random unit vector per state."""

    dim: int = 32
    seed: int = 0


ObservationEncoding = OneHot | WallDistance | SyntheticFeature


def observe(spec: GraphSpec, s: int, enc: ObservationEncoding = OneHot()) -> np.ndarray:
    if isinstance(enc, OneHot):
        out = np.zeros(spec.n_states)
        out[s] = 1.0
        return out
    if isinstance(enc, WallDistance):
        if spec.layout is None or spec.cells is None:
            raise EncodingError("WallDistance needs a maze-compiled graph")
        maze = spec.layout
        x0, y0 = spec.cells[s]
        out = np.empty(4)
        for a, (dx, dy) in enumerate(ACTIONS):
            k = 1
            while maze.is_free((x0 + k * dx, y0 + k * dy)):
                k += 1
            out[a] = float(k)
        return out
    if isinstance(enc, SyntheticFeature):
        if enc.dim < 1:
            raise EncodingError("SyntheticFeature dim must be positive")
        v = derive_rng(enc.seed, "synthetic-feature", s).standard_normal(enc.dim)
        return v / np.linalg.norm(v)
    raise EncodingError(f"unknown encoding {enc!r}")
