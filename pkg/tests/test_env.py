from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import chain, mazes
from tabnav.env.graph import (
    ContractError, GraphSpec, SpecError, Transition, check, random_walk, reset, step, validate,
)
from tabnav.env.io import dumps, edit_from_dict, edit_to_dict, loads, spec_from_dict, spec_to_dict
from tabnav.env.maze import OPPOSITE, MazeSpec, compile_maze, state_of
from tabnav.env.observe import EncodingError, OneHot, SyntheticFeature, WallDistance, observe
from tabnav.env.edits import MoveGoal, RewireAction, SwapRewards, ToggleWall
from tabnav.rng import derive_rng

N, E, S, W = range(4)


# ------------------------------------------------------------------ compile_maze

def test_start_equal_goal_is_rejected():
    with pytest.raises(SpecError):
        MazeSpec(1, 1, frozenset(), (0, 0), (0, 0))


def test_smallest_maze():
    spec = compile_maze(MazeSpec(2, 1, frozenset(), (0, 0), (1, 0)), goal_reward=7.0)
    assert spec.n_states == 2 and spec.n_actions == 4
    assert spec.successors[0][E] == ((1, 1.0),)
    for a in (N, S, W):
        assert spec.successors[0][a] == ((0, 1.0),)
    assert spec.terminals == {1}
    assert spec.rewards[1] == 7.0


def _flood_count(width, height, walls, origin):
    seen, queue = {origin}, deque([origin])
    while queue:
        x, y = queue.popleft()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < width and 0 <= ny < height and (nx, ny) not in walls and (nx, ny) not in seen:
                seen.add((nx, ny))
                queue.append((nx, ny))
    return seen


def test_eleven_by_eleven_with_opened_wall_row():
    walls = frozenset((x, 5) for x in range(11) if x != 4)
    maze = MazeSpec(11, 11, walls, (0, 0), (10, 10))
    spec = compile_maze(maze)
    assert spec.n_states == 121 - len(walls)
    # independent flood fill over the raw cell grid
    reached = _flood_count(11, 11, walls, (0, 0))
    assert len(reached) == spec.n_states
    assert set(spec.cells) == reached


def test_unreachable_goal_is_rejected():
    walls = frozenset((x, 1) for x in range(3))
    with pytest.raises(SpecError, match="unreachable"):
        compile_maze(MazeSpec(3, 3, walls, (0, 0), (2, 2)))


def test_ascii_round_trip_with_several_starts():
    rows = ["S..S", ".##.", "...G"]
    maze = MazeSpec.from_ascii(rows)
    assert maze.start == (0, 0) and maze.extra_starts == ((3, 0),)
    assert maze.to_ascii() == rows
    spec = compile_maze(maze)
    assert spec.start_states == (state_of(spec, (0, 0)), state_of(spec, (3, 0)))


def test_ascii_needs_one_goal():
    with pytest.raises(SpecError):
        MazeSpec.from_ascii(["S.G", "..G"])
    with pytest.raises(SpecError):
        MazeSpec.from_ascii(["S.."])


# ------------------------------------------------------------------------ reset

def test_reset_single_start():
    spec = chain(3)
    for seed in range(5):
        assert reset(spec, derive_rng(seed)) == 0


def test_reset_is_repeatable():
    spec = GraphSpec.build(3, 1, [[2], [2], [()]], terminals=[2], start_states=[0, 1])
    a = [reset(spec, derive_rng(11)) for _ in range(3)]
    b = [reset(spec, derive_rng(11)) for _ in range(3)]
    assert a == b


def test_reset_is_uniform():
    spec = GraphSpec.build(3, 1, [[2], [2], [()]], terminals=[2], start_states=[0, 1])
    rng = derive_rng(3)
    picks = np.array([reset(spec, rng) for _ in range(10_000)])
    assert abs(np.sum(picks == 0) - 5000) <= 300


# ------------------------------------------------------------------------- step

def test_step_deterministic_edge():
    spec = chain(2)
    assert step(spec, 0, 0, derive_rng(0)) == Transition(0, 0, 10.0, 1, True)


def test_step_wall_bump_is_self_loop():
    spec = compile_maze(MazeSpec(2, 1, frozenset(), (0, 0), (1, 0)))
    assert step(spec, 0, W, derive_rng(0)) == Transition(0, W, 0.0, 0, False)


def test_step_stochastic_frequency():
    spec = GraphSpec.build(3, 1, [[((1, 0.7), (2, 0.3))], [()], [()]], terminals=[1, 2])
    rng = derive_rng(5)
    hits = sum(step(spec, 0, 0, rng).s_next == 1 for _ in range(10_000))
    assert abs(hits / 10_000 - 0.7) <= 0.015


def test_step_contract_errors():
    spec = GraphSpec.build(3, 2, [[1, ()], [2, 2], [(), ()]], terminals=[2])
    with pytest.raises(ContractError):
        step(spec, 2, 0, derive_rng(0))
    with pytest.raises(ContractError):
        step(spec, 0, 1, derive_rng(0))
    with pytest.raises(ContractError):
        step(spec, 0, 5, derive_rng(0))


# ---------------------------------------------------------------------- observe

def test_onehot():
    spec = GraphSpec.build(3, 1, [[1], [2], [()]], terminals=[2])
    assert observe(spec, 1, OneHot()).tolist() == [0, 1, 0]


def test_wall_distance_all_four_sides():
    walls = frozenset({(2, 1), (1, 2), (3, 2), (2, 3)})
    spec = compile_maze(MazeSpec(5, 5, walls, (0, 0), (4, 4)))
    assert observe(spec, state_of(spec, (2, 2)), WallDistance()).tolist() == [1, 1, 1, 1]


def test_wall_distance_corridor():
    spec = compile_maze(MazeSpec.from_ascii(["#.#", "#S#", "...", "..G"]))
    assert observe(spec, state_of(spec, (1, 1)), WallDistance()).tolist() == [2, 1, 3, 1]


def test_wall_distance_open_room_center():
    spec = compile_maze(MazeSpec(5, 5, frozenset(), (0, 0), (4, 4)))
    assert observe(spec, state_of(spec, (2, 2)), WallDistance()).tolist() == [3, 3, 3, 3]


def test_wall_distance_needs_maze():
    with pytest.raises(EncodingError):
        observe(chain(2), 0, WallDistance())


def test_synthetic_feature_deterministic_unit_norm():
    spec = chain(4)
    enc = SyntheticFeature(dim=16, seed=3)
    a = observe(spec, 2, enc)
    assert np.array_equal(a, observe(spec, 2, enc))
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12
    assert not np.array_equal(a, observe(spec, 1, enc))


# --------------------------------------------------------------------- validate

def test_validate_ok():
    assert validate(chain(2)) == []


def test_validate_bad_probabilities_names_pair():
    spec = GraphSpec.build(3, 1, [[((1, 0.5), (2, 0.4))], [()], [()]], terminals=[1, 2])
    problems = validate(spec)
    assert any("s=0, a=0" in p for p in problems)


def test_validate_unreachable_terminal():
    spec = GraphSpec.build(3, 1, [[0], [2], [()]], terminals=[2])
    assert any("no terminal reachable" in p for p in validate(spec))


def test_validate_reports_every_violation():
    spec = GraphSpec.build(3, 1, [[((1, 0.5),)], [((9, 1.0),)], [()]], terminals=[2, 7],
                           start_states=[2])
    problems = validate(spec)
    assert len(problems) >= 4


def test_check_raises_with_violations():
    with pytest.raises(SpecError) as info:
        check(GraphSpec.build(2, 1, [[0], [()]], terminals=[1]))
    assert info.value.violations


# ------------------------------------------------------------------- properties

@settings(max_examples=60, deadline=None)
@given(mazes())
def test_state_count_equals_free_cells(maze):
    spec = compile_maze(maze)
    assert spec.n_states == len(maze.free_cells())


@settings(max_examples=60, deadline=None)
@given(mazes())
def test_wall_symmetry(maze):
    spec = compile_maze(maze)
    for u in range(spec.n_states):
        for a in range(4):
            v = spec.successors[u][a][0][0]
            if v != u:
                assert spec.successors[v][OPPOSITE[a]][0][0] == u


@settings(max_examples=30, deadline=None)
@given(mazes())
def test_equal_seeds_give_equal_episodes(maze):
    spec = compile_maze(maze)

    def run(seed):
        env, pol = derive_rng(seed, "env"), derive_rng(seed, "policy")
        s, out = reset(spec, env), []
        for _ in range(50):
            t = step(spec, s, int(pol.integers(4)), env)
            out.append(t)
            if t.done:
                s = reset(spec, env)
            else:
                s = t.s_next
        return out

    assert run(4) == run(4)


@settings(max_examples=20, deadline=None)
@given(mazes())
def test_encoding_never_changes_dynamics(maze):
    from tabnav.agents.agent import Agent
    from tabnav.experiments.runner import run_episode

    spec = compile_maze(maze)
    trajs = []
    for enc in (None, OneHot(), WallDistance(), SyntheticFeature(8, 1)):
        agent = Agent.for_spec("TD-Q", spec, rng=derive_rng(0, "agent"))
        ep = run_episode(agent, spec, 30, derive_rng(0, "env"), encoding=enc)
        trajs.append(ep.trajectory)
    assert all(t == trajs[0] for t in trajs)


def test_random_walk_follows_edges():
    spec = GraphSpec.build(3, 2, [[1, 2], [0, ()], [0, 1]])
    walk = random_walk(spec, 500, derive_rng(2))
    allowed = {(0, 1), (0, 2), (1, 0), (2, 0), (2, 1)}
    assert all((int(a), int(b)) in allowed for a, b in zip(walk[:-1], walk[1:]))


# ------------------------------------------------------------------ definitions

def test_maze_definition_round_trip():
    spec = compile_maze(MazeSpec.from_ascii(["S.#", "..G"], goal_reward=3.0))
    doc = spec_to_dict(spec)
    assert doc["type"] == "maze" and doc["grid"] == ["S.#", "..G"]
    assert loads(dumps(doc)) == spec


def test_graph_definition_round_trip():
    spec = GraphSpec.build(3, 2, [[1, ((1, 0.25), (2, 0.75))], [2, ()], [(), ()]],
                           rewards=[0, 1, 5], terminals=[2])
    doc = spec_to_dict(spec, {"name": "x"})
    assert doc["type"] == "graph" and doc["metadata"] == {"name": "x"}
    assert spec_from_dict(doc) == spec


def test_graph_definition_accepts_int_shorthand():
    doc = {"type": "graph", "n_states": 2, "n_actions": 1, "successors": [[1], [[]]],
           "terminals": [1], "rewards": [0, 1]}
    assert spec_from_dict(doc) == chain(2, reward=1.0)


@pytest.mark.parametrize("doc, fragment", [
    ({"type": "maze", "grid": ["S.G"], "colour": 1}, "unknown keys colour"),
    ({"type": "graph", "n_states": 2}, "missing keys"),
    ({"type": "graph", "n_states": 2, "n_actions": 1, "successors": [[1], ["x"]]}, "successors[1][0]"),
    ({"type": "hex"}, "type"),
])
def test_definition_errors(doc, fragment):
    with pytest.raises(SpecError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        spec_from_dict(doc)


@pytest.mark.parametrize("edit", [
    MoveGoal((1, 2)), ToggleWall((0, 1)), SwapRewards(3, 4),
    RewireAction(1, 0, 4), RewireAction(1, 0, ((2, 0.5), (3, 0.5))),
])
def test_edit_round_trip(edit):
    assert edit_from_dict(edit_to_dict(edit)) == edit
