from collections import deque

import pytest

from tabnav.env.edits import EditError, MoveGoal, SwapRewards, ToggleWall, apply_edit, apply_edits
from tabnav.env.graph import spec_hash, validate
from tabnav.env.maze import state_of
from tabnav.env.presets import CatalogError, load_preset, preset_names

REQUIRED = {"revaluation_graph", "community_graph", "open_field", "transfer_maze_reward",
            "transfer_maze_structure", "linear_track"}


def test_catalog_has_required_entries():
    assert REQUIRED <= set(preset_names())


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_every_preset_validates(name):
    spec, info = load_preset(name)
    assert validate(spec) == []
    assert info.citation


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_every_preset_is_solvable_within_n_states(name):
    spec, _ = load_preset(name)
    for start in spec.start_states:
        dist = {start: 0}
        queue = deque([start])
        found = None
        while queue and found is None:
            s = queue.popleft()
            for succ in spec.successors[s]:
                for n, _ in succ:
                    if n not in dist:
                        dist[n] = dist[s] + 1
                        if n in spec.terminals:
                            found = dist[n]
                        queue.append(n)
        assert found is not None and found <= spec.n_states


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_preset_edits_validate(name):
    spec, info = load_preset(name)
    for edits in info.edits.values():
        assert validate(apply_edits(spec, edits)) == []


def test_community_graph():
    spec, info = load_preset("community_graph")
    assert spec.n_states == 15
    assert len(set(info.community_labels)) == 3
    for s in range(15):
        assert sum(1 for succ in spec.successors[s] if succ) == 4
    # undirected: every edge has its reverse
    edges = {(s, succ[0][0]) for s in range(15) for succ in spec.successors[s] if succ}
    assert all((b, a) in edges for a, b in edges)


def test_open_field():
    spec, _ = load_preset("open_field")
    assert spec.layout.width == spec.layout.height == 10
    assert not spec.layout.walls
    assert validate(spec) == []


def test_unknown_preset_lists_names():
    with pytest.raises(CatalogError, match="open_field"):
        load_preset("nonexistent")


def test_load_returns_fresh_copies():
    a, _ = load_preset("open_field")
    b, _ = load_preset("open_field")
    assert a == b and a is not b


def test_move_goal_on_reward_transfer_maze():
    spec, info = load_preset("transfer_maze_reward")
    (edit,) = info.edits["transfer"]
    out = apply_edit(spec, edit)
    old_goal = state_of(spec, spec.layout.goal)
    new_goal = state_of(out, edit.cell)
    assert out.terminals == {new_goal}
    assert old_goal not in out.terminals and out.rewards[old_goal] == 0.0
    assert out.rewards[new_goal] == spec.rewards[old_goal]
    assert out.successors == spec.successors
    assert out.start_states == spec.start_states


def test_toggle_wall_is_an_involution():
    spec, _ = load_preset("open_field")
    twice = apply_edit(apply_edit(spec, ToggleWall((4, 4))), ToggleWall((4, 4)))
    assert twice == spec
    assert apply_edit(spec, ToggleWall((4, 4))).n_states == spec.n_states - 1


def test_swap_rewards_field_by_field():
    spec, _ = load_preset("revaluation_graph")
    out = apply_edit(spec, SwapRewards(3, 4))
    assert out.rewards[3] == spec.rewards[4] and out.rewards[4] == spec.rewards[3]
    for s in (0, 1, 2):
        assert out.rewards[s] == spec.rewards[s]
    assert out.successors == spec.successors
    assert out.terminals == spec.terminals and out.start_states == spec.start_states


def test_edit_is_pure():
    spec, info = load_preset("transfer_maze_structure")
    before = spec_hash(spec)
    apply_edits(spec, info.edits["transfer"])
    assert spec_hash(spec) == before


def test_invalid_edit_raises():
    spec, _ = load_preset("open_field")
    with pytest.raises(EditError):
        apply_edit(spec, MoveGoal((20, 20)))
    with pytest.raises(EditError):
        apply_edit(spec, ToggleWall(spec.layout.goal))


def test_structure_edit_blocks_only_the_left_gap():
    spec, info = load_preset("transfer_maze_structure")
    out = apply_edits(spec, info.edits["transfer"])
    below, above = state_of(spec, (2, 3)), state_of(spec, (2, 2))
    assert all(succ[0][0] != above for succ in out.successors[below])
    right_below, right_above = state_of(spec, (7, 3)), state_of(spec, (7, 2))
    assert any(succ[0][0] == right_above for succ in out.successors[right_below])
