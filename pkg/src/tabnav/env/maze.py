"""Grid mazes and their compilation to graph MDPs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from tabnav.env.graph import GraphSpec, SpecError

Cell = tuple[int, int]

# N, E, S, W; y grows downwards (row index).
ACTIONS: tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))
ACTION_NAMES = ("N", "E", "S", "W")
OPPOSITE = (2, 3, 0, 1)


@dataclass(frozen=True)
class MazeSpec:
    """Grid of free and wall cells.

    ``extra_starts`` lists further start cells; episodes begin uniformly at
    random in ``start`` or one of them.
    """

    width: int
    height: int
    walls: frozenset[Cell]
    start: Cell
    goal: Cell
    goal_reward: float = 10.0
    extra_starts: tuple[Cell, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(tuple(w) for w in self.walls))
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        object.__setattr__(self, "extra_starts", tuple(tuple(c) for c in self.extra_starts))
        problems = []
        if self.width < 1 or self.height < 1:
            problems.append(f"bad maze size {self.width}x{self.height}")
        named = [("start", self.start), ("goal", self.goal)]
        named += [("extra start", c) for c in self.extra_starts]
        for name, cell in named:
            if not self.in_bounds(cell):
                problems.append(f"{name} {cell} out of bounds")
            elif cell in self.walls:
                problems.append(f"{name} {cell} is a wall")
        if self.goal in self.start_cells():
            problems.append("a start cell coincides with the goal")
        if len(set(self.start_cells())) != len(self.start_cells()):
            problems.append("duplicate start cells")
        if problems:
            raise SpecError(problems)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def start_cells(self) -> tuple[Cell, ...]:
        return (self.start,) + self.extra_starts

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.walls

    def free_cells(self) -> list[Cell]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in self.walls
        ]

    def with_(self, **changes) -> MazeSpec:
        return replace(self, **changes)

    @classmethod
    def from_ascii(cls, text: str | list[str], goal_reward: float = 10.0) -> MazeSpec:
        """Parse ``#`` wall, ``.`` free, ``S`` start, ``G`` goal rows.

        Several ``S`` cells are allowed; the first in row-major order becomes
        ``start`` and the rest ``extra_starts``.
        """
        rows = text.strip("\n").splitlines() if isinstance(text, str) else list(text)
        rows = [r.rstrip("\n") for r in rows if r.strip()]
        if not rows:
            raise SpecError(["empty maze grid"])
        width = len(rows[0])
        walls, starts, goal = set(), [], None
        for y, row in enumerate(rows):
            if len(row) != width:
                raise SpecError([f"row {y} has length {len(row)}, expected {width}"])
            for x, ch in enumerate(row):
                if ch == "#":
                    walls.add((x, y))
                elif ch == "S":
                    starts.append((x, y))
                elif ch == "G":
                    if goal is not None:
                        raise SpecError(["maze needs exactly one G"])
                    goal = (x, y)
                elif ch != ".":
                    raise SpecError([f"unknown maze character {ch!r} at {(x, y)}"])
        if not starts or goal is None:
            raise SpecError(["maze needs at least one S and exactly one G"])
        return cls(width, len(rows), frozenset(walls), starts[0], goal, goal_reward,
                   tuple(starts[1:]))

    def to_ascii(self) -> list[str]:
        out = []
        for y in range(self.height):
            chars = []
            for x in range(self.width):
                c = (x, y)
                if c in self.start_cells():
                    chars.append("S")
                elif c == self.goal:
                    chars.append("G")
                elif c in self.walls:
                    chars.append("#")
                else:
                    chars.append(".")
            out.append("".join(chars))
        return out


def move(maze: MazeSpec, cell: Cell, action: int) -> Cell:
    """Target cell of ``action``; walls and the boundary bounce back."""
    dx, dy = ACTIONS[action]
    target = (cell[0] + dx, cell[1] + dy)
    return target if maze.is_free(target) else cell


def flood_fill(maze: MazeSpec, origin: Cell) -> set[Cell]:
    seen = {origin}
    queue = deque([origin])
    while queue:
        cell = queue.popleft()
        for a in range(4):
            nxt = move(maze, cell, a)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def compile_maze(maze: MazeSpec, goal_reward: float | None = None) -> GraphSpec:
    """One state per free cell (row-major), four deterministic actions."""
    for start in maze.start_cells():
        if maze.goal not in flood_fill(maze, start):
            raise SpecError([f"goal {maze.goal} unreachable from start {start}"])
    reward = maze.goal_reward if goal_reward is None else float(goal_reward)
    if goal_reward is not None:
        maze = maze.with_(goal_reward=reward)
    cells = maze.free_cells()
    index = {c: i for i, c in enumerate(cells)}
    successors = [[((index[move(maze, c, a)], 1.0),) for a in range(4)] for c in cells]
    rewards = [0.0] * len(cells)
    rewards[index[maze.goal]] = reward
    return GraphSpec.build(
        n_states=len(cells),
        n_actions=4,
        successors=successors,
        rewards=rewards,
        terminals=[index[maze.goal]],
        start_states=sorted(index[c] for c in maze.start_cells()),
        layout=maze,
        cells=cells,
    )


def state_of(spec: GraphSpec, cell: Cell) -> int:
    if spec.cells is None:
        raise SpecError(["graph has no maze layout"])
    try:
        return spec.cells.index(tuple(cell))
    except ValueError:
        raise SpecError([f"cell {cell} is not a free cell"]) from None
