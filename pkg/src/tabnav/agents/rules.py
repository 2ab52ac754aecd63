"""Update rules over an explicit :class:`AgentState`.

Each function mutates only the tables its algorithm owns:

========  ==========================================
TD-Q      q
TD-SR     psi, omega
TD-AC     v, h
QET       q, e
MBV       counts, reward_sums, r_hat, r_count, terminal, q
MBSR      counts, reward_sums, r_hat, r_count, terminal, omega, psi, q
========  ==========================================

Dyna variants add ``buffer`` to their base rule.
"""
from __future__ import annotations

import numpy as np

from tabnav import kernels
from tabnav.agents.policy import greedy
from tabnav.agents.state import AgentState, Hyperparams
from tabnav.env.graph import Transition

MBSR_MAX_ROUNDS = 50
# A new outcome for a pair seen at least this often counts as a change in
# the world rather than a rare outcome (its predictive probability under
# the counts is below 1/12).
CHANGE_MIN_COUNT = 10


def max_next(state: AgentState, table: np.ndarray, s: int) -> float:
    """Max of ``table[s]`` over available actions; 0 when none are."""
    mask = state.available[s]
    if not mask.any():
        return 0.0
    return float(np.max(table[s][mask]))


def td_q_update(state: AgentState, t: Transition, hp: Hyperparams) -> float:
    bootstrap = 0.0 if t.done else hp.gamma * max_next(state, state.q, t.s_next)
    delta = t.r + bootstrap - state.q[t.s, t.a]
    state.q[t.s, t.a] += hp.alpha * delta
    return delta


def sr_values(state: AgentState, s: int) -> np.ndarray:
    """Action values ``psi(s, a) . omega`` for every action in ``s``."""
    return state.psi[s] @ state.omega


def _sr_psi_step(state: AgentState, t: Transition, a_next: int, alpha: float, gamma: float) -> np.ndarray:
    row = state.psi[t.s, t.a]
    if t.done:
        # A terminal successor is occupied once and the episode ends there.
        target = np.zeros_like(row)
        target[t.s_next] = gamma
    else:
        target = gamma * state.psi[t.s_next, a_next]
    target[t.s] += 1.0
    err = target - row
    row += alpha * err
    return err


def omega_update(state: AgentState, t: Transition, hp: Hyperparams) -> float:
    w_err = t.r - state.omega[t.s_next]
    state.omega[t.s_next] += hp.alpha_w * w_err
    return w_err


def td_sr_update(state: AgentState, t: Transition, a_next: int | None, hp: Hyperparams) -> tuple[float, float]:
    """On-policy SR step plus the reward-weight step.

    Returns the Euclidean norm of the SR error vector and the reward error.
    """
    if not t.done and a_next is None:
        raise ValueError("a_next is required for non-terminal transitions")
    err = _sr_psi_step(state, t, a_next, hp.alpha, hp.gamma)
    w_err = omega_update(state, t, hp)
    return float(np.linalg.norm(err)), w_err


def td_ac_update(state: AgentState, t: Transition, hp: Hyperparams) -> float:
    bootstrap = 0.0 if t.done else hp.gamma * state.v[t.s_next]
    delta = t.r + bootstrap - state.v[t.s]
    state.v[t.s] += hp.alpha * delta
    state.h[t.s, t.a] += hp.alpha * delta
    return delta


def qet_update(state: AgentState, t: Transition, hp: Hyperparams) -> float:
    """Watkins-free Q(lambda) with accumulating traces.

    ``state.e`` must be zeroed at the start of each episode.
    """
    bootstrap = 0.0 if t.done else hp.gamma * max_next(state, state.q, t.s_next)
    delta = t.r + bootstrap - state.q[t.s, t.a]
    state.e *= hp.gamma * hp.lam
    state.e[t.s, t.a] += 1.0
    state.q += (hp.alpha * delta) * state.e
    return delta


def dyna_replay(state: AgentState, update_rule: str, hp: Hyperparams, rng: np.random.Generator) -> int:
    """Replay ``k_replay`` stored transitions through ``update_rule``.

    Replayed SR steps update psi only: the next action is completed greedily
    and reward weights are learned from real experience alone.
    """
    n = min(hp.k_replay, len(state.buffer))
    if n == 0:
        return 0
    picks = rng.integers(len(state.buffer), size=n)
    for i in picks:
        t = state.buffer[int(i)]
        if update_rule == "TD-Q":
            td_q_update(state, t, hp)
        elif update_rule == "TD-SR":
            a_next = None if t.done else greedy(sr_values(state, t.s_next), state.available[t.s_next])
            _sr_psi_step(state, t, a_next, hp.alpha, hp.gamma)
        elif update_rule == "TD-AC":
            td_ac_update(state, t, hp)
        else:
            raise ValueError(f"no replay for update rule {update_rule!r}")
    return n


def model_contradicted(state: AgentState, t: Transition) -> bool:
    """True when ``t`` disagrees with what the model has already seen.

    That is a known state switching between terminal and non-terminal, or
    a known state-action pair producing a successor never seen before.
    """
    if state.terminal[t.s_next] != t.done and state.counts[:, :, t.s_next].any():
        return True
    return bool(state.counts[t.s, t.a].any() and state.counts[t.s, t.a, t.s_next] == 0)


def model_surprised(state: AgentState, t: Transition) -> bool:
    """True when the model did not rate ``t``'s outcome as the most likely one.

    Covers every contradiction plus outcomes the model knew about but
    considered a minority, such as a wall that has been hit only a few
    times where a passage used to be.
    """
    if model_contradicted(state, t):
        return True
    row = state.counts[t.s, t.a]
    return bool(row.any() and row[t.s_next] < row.max())


def mbv_learn(state: AgentState, t: Transition, hp: Hyperparams | None = None,
              forget_after: int | None = None) -> bool:
    """Count the transition and refresh the reward model.

    ``r_hat`` is the running mean of rewards observed since the pair's last
    detected change, switching to an exponential average with rate
    ``alpha_w`` once that mean covers ``1 / alpha_w`` samples. A contradicted
    model restarts the mean for the pairs involved: those leading into a
    state whose terminal status flipped, or the pair with a new outcome.
    With ``forget_after`` set, a new outcome for a pair already observed at
    least that many times also restarts the pair's transition counts, so
    the model follows a changed world instead of averaging over it.
    Returns whether the model was surprised (see :func:`model_surprised`),
    judged before the counts are updated.
    """
    surprise = model_surprised(state, t)
    if model_contradicted(state, t):
        if state.terminal[t.s_next] != t.done:
            state.r_count[state.counts[:, :, t.s_next] > 0] = 0
        state.r_count[t.s, t.a] = 0
        row = state.counts[t.s, t.a]
        if forget_after is not None and row[t.s_next] == 0 and row.sum() >= forget_after:
            row[:] = 0
    state.counts[t.s, t.a, t.s_next] += 1
    state.reward_sums[t.s, t.a] += t.r
    state.r_count[t.s, t.a] += 1
    rate = 1.0 / state.r_count[t.s, t.a]
    if hp is not None and hp.alpha_w > rate:
        rate = hp.alpha_w
    state.r_hat[t.s, t.a] += rate * (t.r - state.r_hat[t.s, t.a])
    state.terminal[t.s_next] = t.done
    return surprise


def model_estimates(state: AgentState) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``T[s, a, s']`` and ``R[s, a]``.

    Unvisited pairs are self-loops with zero reward.
    """
    counts = state.counts.astype(float)
    n = counts.sum(axis=2)
    seen = n > 0
    t_hat = np.zeros_like(counts)
    t_hat[seen] = counts[seen] / n[seen][:, None]
    idx_s, idx_a = np.nonzero(~seen)
    t_hat[idx_s, idx_a, idx_s] = 1.0
    r_hat = np.where(seen, state.r_hat, 0.0)
    return t_hat, r_hat


def mbv_plan(state: AgentState, hp: Hyperparams) -> np.ndarray:
    """Value iteration on the learned model, from zero, written to ``q``."""
    t_hat, r_hat = model_estimates(state)
    cont = (~state.terminal).astype(float)
    q, _ = kernels.value_iteration(
        np.ascontiguousarray(t_hat), np.ascontiguousarray(r_hat), cont,
        state.available.astype(np.uint8), hp.gamma, hp.vi_tol, hp.vi_max_iters,
    )
    state.q[:] = q
    return state.q


def bellman_residual(q: np.ndarray, t_hat: np.ndarray, r_hat: np.ndarray,
                     terminal: np.ndarray, available: np.ndarray, gamma: float) -> float:
    masked = np.where(available, q, -np.inf)
    v = np.where(available.any(axis=1), masked.max(axis=1), 0.0)
    v = np.where(terminal, 0.0, v)
    return float(np.max(np.abs(r_hat + gamma * t_hat @ v - q)))


def greedy_policy(state: AgentState, values: np.ndarray) -> np.ndarray:
    return np.array([greedy(values[s], state.available[s]) if state.available[s].any() else 0
                     for s in range(state.n_states)])


def successor_matrix(t_pi: np.ndarray, gamma: float, tol: float, max_iters: int) -> np.ndarray:
    """Truncated series ``sum_i (gamma T)^i``, stopped when increments vanish."""
    n = t_pi.shape[0]
    m = np.eye(n)
    term = np.eye(n)
    for _ in range(max_iters):
        term = gamma * (t_pi @ term)
        m += term
        if np.max(np.abs(term)) < tol:
            break
    return m


def mbsr_plan(state: AgentState, hp: Hyperparams) -> np.ndarray:
    """Greedy policy iteration through a model-derived successor matrix."""
    t_hat, _ = model_estimates(state)
    nonterminal = ~state.terminal
    policy = greedy_policy(state, state.q)
    rows = np.arange(state.n_states)
    for _ in range(MBSR_MAX_ROUNDS):
        t_pi = t_hat[rows, policy] * nonterminal[:, None]
        m = successor_matrix(t_pi, hp.gamma, hp.vi_tol, hp.vi_max_iters)
        state.psi[:] = t_hat @ m
        state.q[:] = state.psi @ state.omega
        new_policy = greedy_policy(state, state.q)
        if np.array_equal(new_policy, policy):
            break
        policy = new_policy
    return state.q
