"""Graph MDPs: definition, validation and seeded episodic dynamics."""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

if TYPE_CHECKING:
    from tabnav.env.maze import MazeSpec

PROB_TOL = 1e-9

Successors = tuple[tuple[int, float], ...]


class ContractError(ValueError):
    """A caller broke an environment precondition."""


class SpecError(ValueError):
    """An environment definition is invalid."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class Transition(NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    done: bool


@dataclass(frozen=True)
class GraphSpec:
    """Immutable graph MDP.

    ``successors[s][a]`` is a tuple of ``(next_state, probability)`` pairs; an
    empty tuple marks the action as unavailable in ``s``. Rewards are paid on
    entering a state. Entering a terminal state ends the episode.

    ``layout`` and ``cells`` are set for graphs compiled from a maze and map
    each state to its ``(x, y)`` grid cell.
    """

    n_states: int
    n_actions: int
    successors: tuple[tuple[Successors, ...], ...]
    rewards: tuple[float, ...]
    terminals: frozenset[int]
    start_states: tuple[int, ...]
    layout: MazeSpec | None = field(default=None, compare=False)
    cells: tuple[tuple[int, int], ...] | None = field(default=None, compare=False)

    @classmethod
    def build(
        cls,
        n_states: int,
        n_actions: int,
        successors,
        rewards=None,
        terminals=(),
        start_states=(0,),
        layout=None,
        cells=None,
    ) -> GraphSpec:
        """Normalise loosely typed inputs into the canonical frozen form.

        ``successors`` may be a nested list or a mapping ``(s, a) -> list``;
        an int entry is shorthand for a deterministic edge. ``rewards`` may be
        a sequence or a mapping ``state -> reward``.
        """
        if isinstance(successors, dict):
            table = [[() for _ in range(n_actions)] for _ in range(n_states)]
            for (s, a), succ in successors.items():
                table[s][a] = succ
        else:
            table = successors
        rows = []
        for s in range(n_states):
            row = []
            for a in range(n_actions):
                entry = table[s][a] if a < len(table[s]) else ()
                if isinstance(entry, (int, np.integer)):
                    entry = ((int(entry), 1.0),)
                row.append(tuple((int(n), float(p)) for n, p in entry))
            rows.append(tuple(row))
        if rewards is None:
            rew = [0.0] * n_states
        elif isinstance(rewards, dict):
            rew = [0.0] * n_states
            for s, r in rewards.items():
                rew[int(s)] = float(r)
        else:
            rew = [float(r) for r in rewards]
        return cls(
            n_states=int(n_states),
            n_actions=int(n_actions),
            successors=tuple(rows),
            rewards=tuple(rew),
            terminals=frozenset(int(t) for t in terminals),
            start_states=tuple(int(s) for s in start_states),
            layout=layout,
            cells=tuple(tuple(c) for c in cells) if cells is not None else None,
        )

    def available(self, s: int) -> np.ndarray:
        return np.array([len(succ) > 0 for succ in self.successors[s]], dtype=bool)

    def to_dict(self) -> dict:
        return {
            "type": "graph",
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "successors": [
                [[[n, p] for n, p in succ] for succ in row] for row in self.successors
            ],
            "rewards": list(self.rewards),
            "terminals": sorted(self.terminals),
            "start_states": list(self.start_states),
        }


def available_mask(spec: GraphSpec) -> np.ndarray:
    """Boolean ``(n_states, n_actions)`` table of available actions."""
    return np.array(
        [[len(succ) > 0 for succ in row] for row in spec.successors], dtype=bool
    ).reshape(spec.n_states, spec.n_actions)


def transition_tensor(spec: GraphSpec) -> np.ndarray:
    """Dense ``P[s, a, s']``; rows of unavailable actions are zero."""
    p = np.zeros((spec.n_states, spec.n_actions, spec.n_states))
    for s, row in enumerate(spec.successors):
        for a, succ in enumerate(row):
            for n, prob in succ:
                p[s, a, n] += prob
    return p


def reward_vector(spec: GraphSpec) -> np.ndarray:
    return np.asarray(spec.rewards, dtype=float)


def terminal_mask(spec: GraphSpec) -> np.ndarray:
    mask = np.zeros(spec.n_states, dtype=bool)
    mask[list(spec.terminals)] = True
    return mask


def random_policy_transitions(spec: GraphSpec) -> np.ndarray:
    """State-to-state matrix under the uniform policy over available actions.

    Terminal rows are zero: the episode ends on entry.
    """
    p = transition_tensor(spec)
    mask = available_mask(spec)
    t = np.zeros((spec.n_states, spec.n_states))
    for s in range(spec.n_states):
        if s in spec.terminals or not mask[s].any():
            continue
        t[s] = p[s, mask[s]].mean(axis=0)
    return t


def spec_hash(spec: GraphSpec) -> str:
    payload = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _reachable(spec: GraphSpec, sources: Sequence[int]) -> set[int]:
    seen = set(sources)
    queue = deque(sources)
    while queue:
        s = queue.popleft()
        if s in spec.terminals:
            continue
        for succ in spec.successors[s]:
            for n, p in succ:
                if p > 0 and 0 <= n < spec.n_states and n not in seen:
                    seen.add(n)
                    queue.append(n)
    return seen


def validate(spec: GraphSpec) -> list[str]:
    """All invariant violations of ``spec``; an empty list means valid."""
    out: list[str] = []
    n = spec.n_states
    if n < 1:
        out.append("n_states must be positive")
    if spec.n_actions < 1:
        out.append("n_actions must be positive")
    if len(spec.successors) != n:
        out.append(f"successors has {len(spec.successors)} rows, expected {n}")
    if len(spec.rewards) != n:
        out.append(f"rewards has {len(spec.rewards)} entries, expected {n}")
    for s, row in enumerate(spec.successors):
        if len(row) != spec.n_actions:
            out.append(f"state {s}: {len(row)} actions, expected {spec.n_actions}")
        for a, succ in enumerate(row):
            if not succ:
                continue
            total = sum(p for _, p in succ)
            if abs(total - 1.0) > PROB_TOL:
                out.append(f"(s={s}, a={a}): probabilities sum to {total:.12g}")
            for nxt, p in succ:
                if not 0 <= nxt < n:
                    out.append(f"(s={s}, a={a}): successor {nxt} out of range")
                if p < 0:
                    out.append(f"(s={s}, a={a}): negative probability {p}")
    for t in sorted(spec.terminals):
        if not 0 <= t < n:
            out.append(f"terminal {t} out of range")
    if not spec.start_states:
        out.append("start_states is empty")
    for s in spec.start_states:
        if not 0 <= s < n:
            out.append(f"start state {s} out of range")
        elif s in spec.terminals:
            out.append(f"start state {s} is terminal")
    if out:
        return out
    for s in spec.start_states:
        if not _reachable(spec, [s]) & spec.terminals:
            out.append(f"no terminal reachable from start state {s}")
    return out


def check(spec: GraphSpec) -> GraphSpec:
    """Return ``spec`` unchanged or raise :class:`SpecError`."""
    problems = validate(spec)
    if problems:
        raise SpecError(problems)
    return spec


def reset(spec: GraphSpec, rng: np.random.Generator) -> int:
    if len(spec.start_states) == 1:
        return spec.start_states[0]
    return spec.start_states[int(rng.integers(len(spec.start_states)))]


def step(spec: GraphSpec, s: int, a: int, rng: np.random.Generator) -> Transition:
    if s in spec.terminals:
        raise ContractError(f"step from terminal state {s}")
    if not 0 <= a < spec.n_actions:
        raise ContractError(f"action {a} out of range")
    succ = spec.successors[s][a]
    if not succ:
        raise ContractError(f"action {a} unavailable in state {s}")
    if len(succ) == 1:
        nxt = succ[0][0]
    else:
        u = rng.random()
        acc = 0.0
        nxt = succ[-1][0]
        for n, p in succ:
            acc += p
            if u < acc:
                nxt = n
                break
    return Transition(s, a, spec.rewards[nxt], nxt, nxt in spec.terminals)


def random_walk(spec: GraphSpec, n_steps: int, rng: np.random.Generator, start: int | None = None) -> np.ndarray:
    """State sequence of a uniform random walk that ignores terminal flags.

    Used to sample graph structure rather than to run episodes.
    """
    mask = available_mask(spec)
    s = reset(spec, rng) if start is None else start
    out = np.empty(n_steps + 1, dtype=np.int64)
    out[0] = s
    actions = [np.flatnonzero(mask[i]) for i in range(spec.n_states)]
    for i in range(n_steps):
        a = actions[s][int(rng.integers(len(actions[s])))]
        succ = spec.successors[s][a]
        if len(succ) == 1:
            s = succ[0][0]
        else:
            probs = np.array([p for _, p in succ])
            s = succ[int(rng.choice(len(succ), p=probs))][0]
        out[i + 1] = s
    return out
