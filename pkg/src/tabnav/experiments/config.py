"""Experiment configuration and results."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from tabnav.agents.agent import ALGORITHMS, POLICY_KINDS
from tabnav.agents.state import Hyperparams
from tabnav.env.presets import preset_names

EXPERIMENTS = ("revaluation", "transfer-reward", "transfer-structure", "place-grid", "community")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun one protocol for one algorithm.

    Episodes are numbered from 1. ``edit_episode`` is the first episode
    played in the edited environment. Fields after ``replan`` only matter
    to the protocols named in their comments.
    """

    experiment: str
    algorithm: str
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    n_runs: int = 1
    n_episodes: int = 100
    max_steps_per_episode: int = 500
    edit_episode: int | None = None
    master_seed: int = 0
    environment: str = ""
    policy: str = "softmax"
    replan: str = "episode"
    # revaluation: relearning episodes, alternating between the intermediate states
    relearn_episodes: int = 20
    # transfer: episode windows (inclusive) compared by the adaptation check
    pre_window: tuple[int, int] = (0, 0)
    post_window: tuple[int, int] = (0, 0)
    adapt_ratio: float = 1.5
    # place-grid: random-walk SR training and exported maps
    sr_tol: float = 1e-3
    sr_max_steps: int = 20_000_000
    sr_power: float = 0.7
    n_place_maps: int = 9
    n_components: int = 6
    # community: predictive network on a random walk
    walk_steps: int = 50_000
    hidden_dim: int = 20
    learning_rate: float = 0.1
    init_scale: float = 0.1
    n_permutations: int = 1000

    def __post_init__(self):
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment: unknown {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.algorithm not in ALGORITHMS:
            problems.append(f"algorithm: unknown {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.policy not in POLICY_KINDS:
            problems.append(f"policy: unknown {self.policy!r}")
        if self.replan not in ("episode", "step"):
            problems.append(f"replan: unknown {self.replan!r}")
        positive = ("n_runs", "n_episodes", "max_steps_per_episode", "sr_max_steps",
                    "walk_steps", "hidden_dim", "n_components")
        for name in positive:
            if getattr(self, name) < 1:
                problems.append(f"{name}: must be at least 1, got {getattr(self, name)}")
        for name in ("relearn_episodes", "n_place_maps", "n_permutations"):
            if getattr(self, name) < 0:
                problems.append(f"{name}: must be non-negative, got {getattr(self, name)}")
        for name in ("sr_tol", "sr_power", "learning_rate", "init_scale", "adapt_ratio"):
            if not getattr(self, name) > 0:
                problems.append(f"{name}: must be positive, got {getattr(self, name)}")
        if self.edit_episode is not None and not 1 <= self.edit_episode <= self.n_episodes - 1:
            problems.append(
                f"edit_episode: must lie in [1, n_episodes - 1], got {self.edit_episode}"
            )
        if self.environment not in preset_names():
            problems.append(
                f"environment: unknown preset {self.environment!r}; choose from {', '.join(preset_names())}"
            )
        if not 0 <= self.master_seed < 1 << 64:
            problems.append("master_seed: must fit in 64 unsigned bits")
        if self.experiment == "place-grid" and self.algorithm != "TD-SR":
            problems.append("algorithm: place-grid learns its fields with TD-SR only")
        if problems:
            raise ConfigError("; ".join(problems))

    def replace(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hyperparams"] = self.hyperparams.to_dict()
        for name in ("pre_window", "post_window"):
            out[name] = list(out[name])
        return out

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


_DEFAULTS = {
    "revaluation": dict(
        algorithm="MBSR", n_runs=10, n_episodes=100, max_steps_per_episode=100,
        environment="revaluation_graph",
    ),
    "transfer-reward": dict(
        algorithm="MBV", n_runs=5, n_episodes=100, max_steps_per_episode=500,
        edit_episode=75, environment="transfer_maze_reward",
        pre_window=(60, 74), post_window=(90, 100),
    ),
    "transfer-structure": dict(
        algorithm="MBV", n_runs=5, n_episodes=100, max_steps_per_episode=500,
        edit_episode=50, environment="transfer_maze_structure",
        pre_window=(35, 49), post_window=(65, 75),
    ),
    "place-grid": dict(
        algorithm="TD-SR", n_runs=1, n_episodes=1, environment="open_field",
    ),
    "community": dict(
        algorithm="TD-SR", n_runs=1, n_episodes=1, environment="community_graph",
    ),
}


def default_config(experiment: str, **changes) -> ExperimentConfig:
    """The documented defaults for ``experiment`` with ``changes`` applied."""
    if experiment not in _DEFAULTS:
        raise ConfigError(f"experiment: unknown {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    base = dict(_DEFAULTS[experiment])
    base.update(changes)
    return ExperimentConfig(experiment=experiment, **base)


@dataclass
class ExperimentResult:
    """Output of one protocol run.

    ``records`` are flat rows whose first keys are the shared CSV columns;
    ``field_maps`` are named 2D grids; ``points`` are named point sets
    (rows are items); ``summary`` holds scalars and small lists;
    ``snapshot`` holds the final agent tables of the first run when asked for.
    """

    config: ExperimentConfig
    records: list[dict] = field(default_factory=list)
    field_maps: dict[str, np.ndarray] = field(default_factory=dict)
    points: dict[str, np.ndarray] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    metric_columns: tuple[str, ...] = ()
    snapshot: dict[str, np.ndarray] | None = None
