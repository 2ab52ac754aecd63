"""Pure edits that derive a new environment from an existing one."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from tabnav.env.graph import GraphSpec, SpecError, validate
from tabnav.env.maze import Cell, compile_maze


class EditError(ValueError):
    pass


@dataclass(frozen=True)
class MoveGoal:
    cell: Cell


@dataclass(frozen=True)
class ToggleWall:
    cell: Cell


@dataclass(frozen=True)
class SwapRewards:
    s1: int
    s2: int


@dataclass(frozen=True)
class RewireAction:
    """Replace the successor list of ``(s, a)``.

    ``new_successor`` is a state (deterministic edge) or a sequence of
    ``(state, probability)`` pairs; an empty sequence removes the action.
    """

    s: int
    a: int
    new_successor: int | tuple[tuple[int, float], ...]


EnvironmentEdit = MoveGoal | ToggleWall | SwapRewards | RewireAction


def _recompile_maze(spec: GraphSpec, **changes) -> GraphSpec:
    if spec.layout is None:
        raise EditError("edit needs a graph compiled from a maze")
    try:
        return compile_maze(spec.layout.with_(**changes))
    except SpecError as exc:
        raise EditError(f"edit produces an invalid maze: {exc}") from None


def apply_edit(spec: GraphSpec, edit: EnvironmentEdit) -> GraphSpec:
    if isinstance(edit, MoveGoal):
        out = _recompile_maze(spec, goal=tuple(edit.cell))
    elif isinstance(edit, ToggleWall):
        cell = tuple(edit.cell)
        if spec.layout is None:
            raise EditError("ToggleWall needs a graph compiled from a maze")
        walls = set(spec.layout.walls)
        walls.symmetric_difference_update({cell})
        if not spec.layout.in_bounds(cell):
            raise EditError(f"cell {cell} out of bounds")
        out = _recompile_maze(spec, walls=frozenset(walls))
    elif isinstance(edit, SwapRewards):
        for s in (edit.s1, edit.s2):
            if not 0 <= s < spec.n_states:
                raise EditError(f"state {s} out of range")
        rewards = list(spec.rewards)
        rewards[edit.s1], rewards[edit.s2] = rewards[edit.s2], rewards[edit.s1]
        out = GraphSpec(
            spec.n_states, spec.n_actions, spec.successors, tuple(rewards),
            spec.terminals, spec.start_states, spec.layout, spec.cells,
        )
    elif isinstance(edit, RewireAction):
        if not (0 <= edit.s < spec.n_states and 0 <= edit.a < spec.n_actions):
            raise EditError(f"(s={edit.s}, a={edit.a}) out of range")
        succ = edit.new_successor
        if isinstance(succ, int):
            succ = ((succ, 1.0),)
        succ = tuple((int(n), float(p)) for n, p in succ)
        rows = [list(r) for r in spec.successors]
        rows[edit.s][edit.a] = succ
        # Cell coordinates stay meaningful; the wall layout no longer does.
        out = GraphSpec(
            spec.n_states, spec.n_actions, tuple(tuple(r) for r in rows), spec.rewards,
            spec.terminals, spec.start_states, None, spec.cells,
        )
    else:
        raise EditError(f"unknown edit {edit!r}")
    problems = validate(out)
    if problems:
        raise EditError("edit produces an invalid spec: " + "; ".join(problems))
    return out


def apply_edits(spec: GraphSpec, edits: Iterable[EnvironmentEdit]) -> GraphSpec:
    for edit in edits:
        spec = apply_edit(spec, edit)
    return spec
