"""JSON environment definition files (schema in docs/environment_format.md)."""
from __future__ import annotations

import json

from tabnav.env.edits import EnvironmentEdit, MoveGoal, RewireAction, SwapRewards, ToggleWall
from tabnav.env.graph import GraphSpec, SpecError, check
from tabnav.env.maze import MazeSpec, compile_maze

_MAZE_KEYS = {"type", "grid", "goal_reward", "metadata"}
_GRAPH_KEYS = {"type", "n_states", "n_actions", "successors", "rewards", "terminals",
               "start_states", "metadata"}
_GRAPH_REQUIRED = {"n_states", "n_actions", "successors"}


def _keys(doc: dict, allowed: set[str], required: set[str], kind: str) -> None:
    unknown = sorted(set(doc) - allowed)
    missing = sorted(required - set(doc))
    problems = []
    if unknown:
        problems.append(f"{kind}: unknown keys {', '.join(unknown)}")
    if missing:
        problems.append(f"{kind}: missing keys {', '.join(missing)}")
    if problems:
        raise SpecError(problems)


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError([f"{path}: expected an integer, got {value!r}"])
    return value


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError([f"{path}: expected a number, got {value!r}"])
    return float(value)


def _successor_list(entry, path: str) -> list[tuple[int, float]]:
    if isinstance(entry, int) and not isinstance(entry, bool):
        return [(entry, 1.0)]
    if not isinstance(entry, list):
        raise SpecError([f"{path}: expected a state or a list of [state, probability] pairs"])
    out = []
    for i, pair in enumerate(entry):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SpecError([f"{path}[{i}]: expected [state, probability]"])
        out.append((_int(pair[0], f"{path}[{i}][0]"), _num(pair[1], f"{path}[{i}][1]")))
    return out


def spec_from_dict(doc: dict) -> GraphSpec:
    """Build and validate the environment described by ``doc``."""
    if not isinstance(doc, dict):
        raise SpecError(["environment definition must be an object"])
    kind = doc.get("type")
    if kind == "maze":
        _keys(doc, _MAZE_KEYS, {"type", "grid"}, "maze")
        grid = doc["grid"]
        if not isinstance(grid, list) or not all(isinstance(r, str) for r in grid):
            raise SpecError(["grid: expected a list of strings"])
        reward = _num(doc.get("goal_reward", 10.0), "goal_reward")
        return check(compile_maze(MazeSpec.from_ascii(grid, goal_reward=reward)))
    if kind == "graph":
        _keys(doc, _GRAPH_KEYS, _GRAPH_REQUIRED | {"type"}, "graph")
        n = _int(doc["n_states"], "n_states")
        n_actions = _int(doc["n_actions"], "n_actions")
        rows = doc["successors"]
        if not isinstance(rows, list) or len(rows) != n:
            raise SpecError([f"successors: expected {n} rows"])
        table = []
        for s, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n_actions:
                raise SpecError([f"successors[{s}]: expected {n_actions} entries"])
            table.append([_successor_list(e, f"successors[{s}][{a}]") for a, e in enumerate(row)])
        rewards = doc.get("rewards", [0.0] * n)
        if not isinstance(rewards, list) or len(rewards) != n:
            raise SpecError([f"rewards: expected {n} numbers"])
        rewards = [_num(r, f"rewards[{i}]") for i, r in enumerate(rewards)]
        terminals = [_int(t, f"terminals[{i}]") for i, t in enumerate(doc.get("terminals", []))]
        starts = [_int(t, f"start_states[{i}]") for i, t in enumerate(doc.get("start_states", [0]))]
        return check(GraphSpec.build(n, n_actions, table, rewards, terminals, starts))
    raise SpecError([f"type: expected 'maze' or 'graph', got {kind!r}"])


def _maze_matches(spec: GraphSpec) -> bool:
    return spec.layout is not None and compile_maze(spec.layout) == spec


def spec_to_dict(spec: GraphSpec, metadata: dict | None = None) -> dict:
    """Definition of ``spec``: maze form when it is an unedited maze, else graph form."""
    if _maze_matches(spec):
        doc = {"type": "maze", "grid": spec.layout.to_ascii(), "goal_reward": spec.layout.goal_reward}
    else:
        doc = spec.to_dict()
    if metadata:
        doc["metadata"] = metadata
    return doc


def edit_to_dict(edit: EnvironmentEdit) -> dict:
    if isinstance(edit, MoveGoal):
        return {"kind": "MoveGoal", "cell": list(edit.cell)}
    if isinstance(edit, ToggleWall):
        return {"kind": "ToggleWall", "cell": list(edit.cell)}
    if isinstance(edit, SwapRewards):
        return {"kind": "SwapRewards", "s1": edit.s1, "s2": edit.s2}
    succ = edit.new_successor
    succ = succ if isinstance(succ, int) else [list(p) for p in succ]
    return {"kind": "RewireAction", "s": edit.s, "a": edit.a, "new_successor": succ}


def edit_from_dict(doc: dict) -> EnvironmentEdit:
    kind = doc.get("kind")
    if kind == "MoveGoal":
        return MoveGoal(tuple(doc["cell"]))
    if kind == "ToggleWall":
        return ToggleWall(tuple(doc["cell"]))
    if kind == "SwapRewards":
        return SwapRewards(int(doc["s1"]), int(doc["s2"]))
    if kind == "RewireAction":
        succ = doc["new_successor"]
        succ = succ if isinstance(succ, int) else tuple((int(n), float(p)) for n, p in succ)
        return RewireAction(int(doc["s"]), int(doc["a"]), succ)
    raise SpecError([f"unknown edit kind {kind!r}"])


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def loads(text: str) -> GraphSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([f"not valid JSON: {exc}"]) from None
    return spec_from_dict(doc)
