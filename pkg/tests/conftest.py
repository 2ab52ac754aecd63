"""Shared helpers and hypothesis strategies."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from tabnav.agents.state import AgentState
from tabnav.env.graph import (
    GraphSpec, available_mask, reset, reward_vector, step, terminal_mask, transition_tensor,
    validate,
)
from tabnav.env.maze import MazeSpec, flood_fill


def chain(n: int, reward: float = 10.0) -> GraphSpec:
    """0 -> 1 -> ... -> n-1 (terminal, ``reward``) with one action."""
    succ = [[s + 1] for s in range(n - 1)] + [[()]]
    return GraphSpec.build(n, 1, succ, rewards={n - 1: reward}, terminals=[n - 1])


def exact_state(spec: GraphSpec, denominator: int = 4) -> AgentState:
    """Agent state whose empirical model equals ``spec`` exactly."""
    st_ = AgentState(spec.n_states, spec.n_actions)
    p = transition_tensor(spec)
    st_.counts[:] = np.rint(p * denominator).astype(np.int64)
    st_.r_hat[:] = p @ reward_vector(spec)
    st_.terminal[:] = terminal_mask(spec)
    st_.available[:] = available_mask(spec)
    return st_


@pytest.fixture
def two_state_chain() -> GraphSpec:
    return chain(2)


@st.composite
def mazes(draw, max_side: int = 7):
    """Random mazes whose goal is reachable from the start."""
    width = draw(st.integers(2, max_side))
    height = draw(st.integers(1, max_side))
    cells = [(x, y) for y in range(height) for x in range(width)]
    start, goal = draw(st.lists(st.sampled_from(cells), min_size=2, max_size=2, unique=True))
    walls = draw(st.sets(st.sampled_from(cells), max_size=len(cells) // 2))
    walls -= {start, goal}
    maze = MazeSpec(width, height, frozenset(walls), start, goal)
    if goal not in flood_fill(maze, start):
        # Open a straight L-shaped corridor so the maze stays solvable.
        (x0, y0), (x1, y1) = start, goal
        path = {(x, y0) for x in range(min(x0, x1), max(x0, x1) + 1)}
        path |= {(x1, y) for y in range(min(y0, y1), max(y0, y1) + 1)}
        maze = maze.with_(walls=frozenset(walls - path))
    return maze


@st.composite
def small_graphs(draw, max_states: int = 8, max_actions: int = 3, stochastic: bool = True):
    """Valid graph MDPs with at most ``max_states`` states.

    Every non-terminal state has at least one available action and the last
    state is a terminal reachable from everywhere through a backbone chain.
    """
    n = draw(st.integers(2, max_states))
    n_actions = draw(st.integers(1, max_actions))
    n_term = draw(st.integers(1, max(1, min(2, n - 1))))
    terminals = list(range(n - n_term, n))
    rows = []
    for s in range(n):
        row = []
        for a in range(n_actions):
            if s in terminals:
                row.append(())
                continue
            if a == 0:
                # backbone: guarantees a path to a terminal
                row.append(((s + 1, 1.0),))
                continue
            if draw(st.booleans()):
                row.append(())
                continue
            k = draw(st.integers(1, 2 if stochastic else 1))
            nexts = draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))
            if k == 1:
                row.append(((nexts[0], 1.0),))
            else:
                p = draw(st.sampled_from([0.25, 0.5, 0.75]))
                row.append(((nexts[0], p), (nexts[1], 1.0 - p)))
        rows.append(row)
    rewards = draw(st.lists(st.sampled_from([0.0, 0.0, 1.0, 5.0, 10.0]), min_size=n, max_size=n))
    spec = GraphSpec.build(n, n_actions, rows, rewards, terminals, [0])
    assert validate(spec) == []
    return spec


def random_transitions(spec: GraphSpec, n: int, rng: np.random.Generator):
    """``n`` (transition, next action) pairs from a random walk restarting at terminals."""

    mask = available_mask(spec)
    out = []
    s = reset(spec, rng)
    a = int(rng.choice(np.flatnonzero(mask[s])))
    for _ in range(n):
        t = step(spec, s, a, rng)
        if t.done:
            out.append((t, None))
            s = reset(spec, rng)
        else:
            s = t.s_next
        a = int(rng.choice(np.flatnonzero(mask[s])))
        if not t.done:
            out.append((t, a))
    return out


# ------------------------------------------------------- acceptance reporting

_VERDICTS: dict[int, tuple[str, str, float, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
    previous = _VERDICTS.get(number)
    if previous is not None:
        # parametrised criteria: the worst status wins, durations add up
        worse = status if previous[0] == "PASS" else previous[0]
        details = "; ".join(d for d in (previous[3], detail) if d)
        status, duration, detail = worse, previous[2] + rep.duration, details
    else:
        duration = rep.duration
    _VERDICTS[number] = (status, title, duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        status, title, duration, detail = _VERDICTS[number]
        line = f"criterion {number:2d} {status}  {title} ({duration:.1f} s)"
        terminalreporter.write_line(f"{line}  {detail}" if detail else line)
