from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from tabnav.env.graph import Transition


class HyperparamError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.1
    alpha_w: float = 0.1
    gamma: float = 0.95
    lam: float = 0.9
    beta: float = 5.0
    epsilon: float = 0.1
    k_replay: int = 10
    vi_tol: float = 1e-4
    vi_max_iters: int = 1000

    def __post_init__(self):
        checks = {
            "alpha": 0 < self.alpha <= 1,
            "alpha_w": 0 < self.alpha_w <= 1,
            "gamma": 0 <= self.gamma < 1,
            "lam": 0 <= self.lam <= 1,
            "beta": self.beta >= 0,
            "epsilon": 0 <= self.epsilon <= 1,
            "k_replay": self.k_replay >= 0 and float(self.k_replay).is_integer(),
            "vi_tol": self.vi_tol > 0,
            "vi_max_iters": self.vi_max_iters >= 1 and float(self.vi_max_iters).is_integer(),
        }
        bad = [name for name, ok in checks.items() if not ok]
        if bad:
            raise HyperparamError(
                "out of range: " + ", ".join(f"{b}={getattr(self, b)!r}" for b in bad)
            )

    def replace(self, **changes) -> Hyperparams:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class AgentState:
    """Every learned table any algorithm may use.

    Each algorithm reads and writes only its own subset; the rest stay at
    their initial values. ``available`` mirrors the environment's action
    mask and is used wherever a max or argmax over next actions is taken.
    ``terminal`` is the agent's belief about which states end the episode,
    refreshed from every observed transition.
    """

    n_states: int
    n_actions: int
    q: np.ndarray = None
    psi: np.ndarray = None
    omega: np.ndarray = None
    v: np.ndarray = None
    h: np.ndarray = None
    e: np.ndarray = None
    counts: np.ndarray = None
    reward_sums: np.ndarray = None
    r_hat: np.ndarray = None
    r_count: np.ndarray = None
    terminal: np.ndarray = None
    available: np.ndarray = None
    buffer: list[Transition] = field(default_factory=list)

    def __post_init__(self):
        s, a = self.n_states, self.n_actions
        defaults = {
            "q": lambda: np.zeros((s, a)),
            "psi": lambda: np.zeros((s, a, s)),
            "omega": lambda: np.zeros(s),
            "v": lambda: np.zeros(s),
            "h": lambda: np.zeros((s, a)),
            "e": lambda: np.zeros((s, a)),
            "counts": lambda: np.zeros((s, a, s), dtype=np.int64),
            "reward_sums": lambda: np.zeros((s, a)),
            "r_hat": lambda: np.zeros((s, a)),
            "r_count": lambda: np.zeros((s, a), dtype=np.int64),
            "terminal": lambda: np.zeros(s, dtype=bool),
            "available": lambda: np.ones((s, a), dtype=bool),
        }
        for name, make in defaults.items():
            if getattr(self, name) is None:
                setattr(self, name, make())

    TABLES = ("q", "psi", "omega", "v", "h", "e", "counts", "reward_sums", "r_hat", "r_count")

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name).copy() for name in self.TABLES}

    def copy(self) -> AgentState:
        out = AgentState(self.n_states, self.n_actions, **self.snapshot(),
                         terminal=self.terminal.copy(), available=self.available.copy())
        out.buffer = list(self.buffer)
        return out
