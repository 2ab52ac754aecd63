"""Random-policy successor representation learned by TD over long walks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabnav import kernels
from tabnav.env.graph import GraphSpec, available_mask, random_policy_transitions, terminal_mask


@dataclass(frozen=True)
class WalkTables:
    """Flat arrays describing a spec for the walk kernel.

    Successors of ``(s, a)`` live at ``succ_next[succ_ptr[s*A+a]:succ_ptr[s*A+a+1]]``
    with cumulative probabilities in ``succ_cum``; the available actions of
    ``s`` are ``act_list[act_ptr[s]:act_ptr[s+1]]``.
    """

    succ_ptr: np.ndarray
    succ_next: np.ndarray
    succ_cum: np.ndarray
    act_ptr: np.ndarray
    act_list: np.ndarray
    terminal: np.ndarray
    starts: np.ndarray


def walk_tables(spec: GraphSpec) -> WalkTables:
    ptr, nxt, cum = [0], [], []
    for row in spec.successors:
        for succ in row:
            acc = 0.0
            for n, p in succ:
                acc += p
                nxt.append(n)
                cum.append(acc)
            ptr.append(len(nxt))
    mask = available_mask(spec)
    act_ptr, act_list = [0], []
    for s in range(spec.n_states):
        act_list.extend(np.flatnonzero(mask[s]).tolist())
        act_ptr.append(len(act_list))
    return WalkTables(
        succ_ptr=np.asarray(ptr, dtype=np.int64),
        succ_next=np.asarray(nxt, dtype=np.int64),
        succ_cum=np.asarray(cum, dtype=np.float64),
        act_ptr=np.asarray(act_ptr, dtype=np.int64),
        act_list=np.asarray(act_list, dtype=np.int64),
        terminal=terminal_mask(spec).astype(np.uint8),
        starts=np.asarray(spec.start_states, dtype=np.int64),
    )


@dataclass(frozen=True)
class SRSchedule:
    """Per-pair step size ``max(alpha_min, alpha0 / visits**power)``.

    Training stops after the first chunk whose root-mean-square increment
    per step falls below ``tol``, or after ``max_steps`` transitions. The
    returned estimate averages the tables at the end of each chunk over the
    later half of training, which removes most of the step-size noise of
    the final iterate.
    """

    gamma: float = 0.95
    alpha0: float = 1.0
    power: float = 0.7
    alpha_min: float = 0.0
    tol: float = 1e-3
    chunk_steps: int = 200_000
    max_steps: int = 20_000_000


@dataclass
class SRTraining:
    psi: np.ndarray
    last_psi: np.ndarray
    steps: int
    episodes: int
    last_increment: float
    converged: bool

    def state_sr(self, spec: GraphSpec) -> np.ndarray:
        return state_sr(self.psi, spec)


def state_sr(psi: np.ndarray, spec: GraphSpec) -> np.ndarray:
    """State-level SR: ``psi`` averaged over each state's available actions.

    Terminal states, which are never left, get their one-step occupancy
    (a unit diagonal entry).
    """
    mask = available_mask(spec)
    m = np.zeros((spec.n_states, spec.n_states))
    for s in range(spec.n_states):
        if s in spec.terminals or not mask[s].any():
            m[s, s] = 1.0
        else:
            m[s] = psi[s, mask[s]].mean(axis=0)
    return m


def sr_oracle(spec: GraphSpec, gamma: float) -> np.ndarray:
    """Closed-form random-policy SR, ``(I - gamma * T)^-1``."""
    t = random_policy_transitions(spec)
    return np.linalg.inv(np.eye(spec.n_states) - gamma * t)


def train_random_sr(spec: GraphSpec, rng: np.random.Generator,
                    schedule: SRSchedule | None = None) -> SRTraining:
    """TD-learn ``psi`` under the uniform random policy, episode after episode."""
    sch = schedule or SRSchedule()
    tables = walk_tables(spec)
    psi = np.zeros((spec.n_states, spec.n_actions, spec.n_states))
    visits = np.zeros((spec.n_states, spec.n_actions))
    u0 = rng.random(2)
    s = int(tables.starts[int(u0[0] * len(tables.starts))])
    lo, hi = tables.act_ptr[s], tables.act_ptr[s + 1]
    a = int(tables.act_list[lo + int(u0[1] * (hi - lo))])
    steps = episodes = 0
    rms = np.inf
    snapshots = []
    while steps < sch.max_steps:
        n = min(sch.chunk_steps, sch.max_steps - steps)
        u = rng.random(3 * n)
        s, a, _, n_eps, inc2 = kernels.sr_td_walk(
            psi, visits, tables.succ_ptr, tables.succ_next, tables.succ_cum,
            tables.act_ptr, tables.act_list, tables.terminal, tables.starts,
            s, a, n, u, sch.gamma, sch.alpha0, sch.power, sch.alpha_min,
        )
        steps += n
        episodes += int(n_eps)
        rms = float(np.sqrt(inc2 / n))
        snapshots.append(psi.copy())
        if rms < sch.tol:
            break
    tail = snapshots[len(snapshots) // 2:]
    averaged = np.sum(tail, axis=0) / len(tail)
    return SRTraining(averaged, psi, steps, episodes, rms, rms < sch.tol)
