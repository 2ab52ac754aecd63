"""The nine tabular algorithms behind one small stateful interface."""
from __future__ import annotations

import numpy as np

from tabnav.agents import rules
from tabnav.agents.policy import epsilon_greedy, sample, softmax_policy
from tabnav.agents.state import AgentState, Hyperparams
from tabnav.env.graph import GraphSpec, Transition, available_mask

ALGORITHMS = ("TD-Q", "TD-SR", "TD-AC", "Dyna-Q", "Dyna-SR", "Dyna-AC", "MBV", "MBSR", "QET")
POLICY_KINDS = ("softmax", "egreedy")

_BASE = {"Dyna-Q": "TD-Q", "Dyna-SR": "TD-SR", "Dyna-AC": "TD-AC"}
_VALUE_SOURCE = {
    "TD-Q": "q", "Dyna-Q": "q", "MBV": "q", "QET": "q",
    "TD-SR": "sr", "Dyna-SR": "sr", "MBSR": "sr",
    "TD-AC": "h", "Dyna-AC": "h",
}


def action_values(state: AgentState, algorithm: str, s: int) -> np.ndarray:
    source = _VALUE_SOURCE[algorithm]
    if source == "q":
        return state.q[s]
    if source == "sr":
        return rules.sr_values(state, s)
    return state.h[s]


def select_action(state: AgentState, algorithm: str, s: int, policy_kind: str,
                  hp: Hyperparams, available, rng: np.random.Generator) -> int:
    values = action_values(state, algorithm, s)
    if policy_kind == "softmax":
        return sample(softmax_policy(values, hp.beta, available), rng)
    if policy_kind == "egreedy":
        return epsilon_greedy(values, hp.epsilon, available, rng)
    raise ValueError(f"unknown policy kind {policy_kind!r}")


class Agent:
    """Learner for one of :data:`ALGORITHMS`.

    Model-based agents replan at the start of every episode and whenever a
    step surprises their model (an outcome other than the most frequent one
    recorded for the pair, or a state changing between terminal and
    non-terminal). Pass ``replan="step"`` to plan after every step instead.
    MBV's transition model also forgets a pair's history when a
    well-established pair produces a new outcome.
    """

    def __init__(self, algorithm: str, n_states: int, n_actions: int,
                 hp: Hyperparams | None = None, policy: str = "softmax",
                 rng: np.random.Generator | None = None, available=None,
                 replan: str = "episode"):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if policy not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {policy!r}")
        if replan not in ("episode", "step"):
            raise ValueError(f"unknown replan cadence {replan!r}")
        self.algorithm = algorithm
        self.hp = hp or Hyperparams()
        self.policy = policy
        self.replan = replan
        self.rng = rng if rng is not None else np.random.default_rng()
        self.state = AgentState(n_states, n_actions)
        if available is not None:
            self.state.available[:] = available
        self.n_plans = 0

    @classmethod
    def for_spec(cls, algorithm: str, spec: GraphSpec, **kwargs) -> Agent:
        return cls(algorithm, spec.n_states, spec.n_actions, available=available_mask(spec), **kwargs)

    @property
    def model_based(self) -> bool:
        return self.algorithm in ("MBV", "MBSR")

    def sync_actions(self, spec: GraphSpec) -> None:
        self.state.available[:] = available_mask(spec)

    def values(self, s: int) -> np.ndarray:
        return action_values(self.state, self.algorithm, s)

    def choice_probabilities(self, s: int, beta: float | None = None) -> np.ndarray:
        b = self.hp.beta if beta is None else beta
        return softmax_policy(self.values(s), b, self.state.available[s])

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of the learned tables, with the empirical model as ``t_hat``."""
        st = self.state
        t_hat, _ = rules.model_estimates(st)
        return {"q": st.q.copy(), "psi": st.psi.copy(), "omega": st.omega.copy(),
                "v": st.v.copy(), "h": st.h.copy(), "e": st.e.copy(), "t_hat": t_hat}

    def act(self, s: int) -> int:
        return select_action(self.state, self.algorithm, s, self.policy, self.hp,
                             self.state.available[s], self.rng)

    def plan(self) -> None:
        if self.algorithm == "MBV":
            rules.mbv_plan(self.state, self.hp)
        elif self.algorithm == "MBSR":
            rules.mbsr_plan(self.state, self.hp)
        self.n_plans += 1

    def begin_episode(self) -> None:
        if self.algorithm == "QET":
            self.state.e[:] = 0.0
        elif self.model_based and self.state.counts.any():
            self.plan()

    def update(self, t: Transition, a_next: int | None = None) -> float:
        """Learn from one real transition; returns the primary TD error."""
        st, hp, alg = self.state, self.hp, self.algorithm
        base = _BASE.get(alg, alg)
        if base == "TD-Q":
            err = rules.td_q_update(st, t, hp)
        elif base == "TD-SR":
            err = rules.td_sr_update(st, t, a_next, hp)[0]
        elif base == "TD-AC":
            err = rules.td_ac_update(st, t, hp)
        elif alg == "QET":
            err = rules.qet_update(st, t, hp)
        else:
            forget = rules.CHANGE_MIN_COUNT if alg == "MBV" else None
            surprise = rules.mbv_learn(st, t, hp, forget_after=forget)
            if alg == "MBSR":
                err = rules.omega_update(st, t, hp)
            else:
                err = t.r - st.r_hat[t.s, t.a]
            if surprise or self.replan == "step":
                self.plan()
            return err
        if alg in _BASE:
            st.buffer.append(t)
            rules.dyna_replay(st, base, hp, self.rng)
        return err
