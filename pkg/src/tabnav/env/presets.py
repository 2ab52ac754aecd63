"""Named environments used by the replication protocols."""
from __future__ import annotations

from dataclasses import dataclass, field

from tabnav.env.edits import EnvironmentEdit, MoveGoal, RewireAction, SwapRewards, apply_edits
from tabnav.env.graph import GraphSpec, check
from tabnav.env.maze import MazeSpec, compile_maze, move, state_of


class CatalogError(KeyError):
    pass


@dataclass(frozen=True)
class PresetInfo:
    citation: str
    description: str = ""
    community_labels: tuple[int, ...] | None = None
    edits: dict[str, tuple[EnvironmentEdit, ...]] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)


def _revaluation_graph() -> tuple[GraphSpec, PresetInfo]:
    # s0 --L--> s1 --> s3 (terminal, 10)
    # s0 --R--> s2 --> s4 (terminal, 1)
    spec = GraphSpec.build(
        n_states=5,
        n_actions=2,
        successors=[[1, 2], [3, ()], [4, ()], [(), ()], [(), ()]],
        rewards=[0, 0, 0, 10, 1],
        terminals=[3, 4],
        start_states=[0],
    )
    info = PresetInfo(
        citation="Momennejad et al. 2017, Nature Human Behaviour (Experiment 1)",
        description="two-step choice task; relearning starts at states 1 and 2",
        edits={
            "reward": (SwapRewards(3, 4),),
            "transition": (RewireAction(1, 0, 4), RewireAction(2, 0, 3)),
        },
        notes={"choice_state": 0, "intermediate_states": (1, 2)},
    )
    return spec, info


def community_adjacency(n_communities: int = 3, size: int = 5) -> list[list[int]]:
    """Ring of cliques with every node of degree ``size - 1``.

    Each clique drops the edge between its two boundary nodes and links
    each boundary node to the neighbouring clique instead.
    """
    n = n_communities * size
    adj = [set() for _ in range(n)]
    for c in range(n_communities):
        nodes = range(c * size, (c + 1) * size)
        for i in nodes:
            adj[i].update(j for j in nodes if j != i)
        first, last = c * size, (c + 1) * size - 1
        adj[first].discard(last)
        adj[last].discard(first)
    for c in range(n_communities):
        a, b = (c + 1) * size - 1, ((c + 1) * size) % n
        adj[a].add(b)
        adj[b].add(a)
    return [sorted(x) for x in adj]


def _community_graph() -> tuple[GraphSpec, PresetInfo]:
    adj = community_adjacency()
    n = len(adj)
    goal = 7
    spec = GraphSpec.build(
        n_states=n,
        n_actions=4,
        successors=[[nb for nb in row] for row in adj],
        rewards={goal: 10.0},
        terminals=[goal],
        start_states=[s for s in range(n) if s != goal],
    )
    info = PresetInfo(
        citation="Schapiro et al. 2013, Nature Neuroscience",
        description="three five-node communities, every node of degree four",
        community_labels=tuple(s // 5 for s in range(n)),
    )
    return spec, info


def _open_field(size: int = 10) -> tuple[GraphSpec, PresetInfo]:
    maze = MazeSpec(size, size, frozenset(), (0, size - 1), (size - 1, 0), 10.0)
    return compile_maze(maze), PresetInfo(
        citation="Stachenfeld et al. 2017, Nature Neuroscience",
        description="open square room",
    )


LINEAR_TRACK_LENGTH = 6


def _linear_track(length: int = LINEAR_TRACK_LENGTH) -> tuple[GraphSpec, PresetInfo]:
    maze = MazeSpec(length, 1, frozenset(), (0, 0), (length - 1, 0), 10.0)
    return compile_maze(maze), PresetInfo(
        citation="Sutton & Barto 2018, Reinforcement Learning: An Introduction",
        description="one-row corridor",
    )


TRANSFER_REWARD_GRID = """
..........
..........
..........
G.........
..........
###....###
..........
..........
..........
S.........
"""


def _transfer_maze_reward() -> tuple[GraphSpec, PresetInfo]:
    spec = compile_maze(MazeSpec.from_ascii(TRANSFER_REWARD_GRID))
    return spec, PresetInfo(
        citation="Russek et al. 2017, PLoS Computational Biology",
        description="dividing wall with a wide central gap; the goal moves to the start side mid-run",
        edits={"transfer": (MoveGoal((7, 9)),)},
        notes={"edit_episode": 75},
    )


TRANSFER_STRUCTURE_GRID = """
....G.....
..........
..........
##.####.##
..........
..........
..........
..........
..........
S........S
"""


def barrier(spec: GraphSpec, cell_a, cell_b) -> tuple[RewireAction, RewireAction]:
    """Edits that block movement between two adjacent free cells."""
    maze = spec.layout
    cell_a, cell_b = tuple(cell_a), tuple(cell_b)
    u, v = state_of(spec, cell_a), state_of(spec, cell_b)
    out = []
    for src, dst, s_src in ((cell_a, cell_b, u), (cell_b, cell_a, v)):
        for a in range(4):
            if move(maze, src, a) == dst:
                out.append(RewireAction(s_src, a, s_src))
    if len(out) != 2:
        raise ValueError(f"cells {cell_a} and {cell_b} are not adjacent free cells")
    return tuple(out)


def _transfer_maze_structure() -> tuple[GraphSpec, PresetInfo]:
    spec = compile_maze(MazeSpec.from_ascii(TRANSFER_STRUCTURE_GRID))
    return spec, PresetInfo(
        citation="Russek et al. 2017, PLoS Computational Biology",
        description="dividing wall with two gaps and a start in each bottom corner; "
                    "the left gap is blocked mid-run",
        edits={"transfer": barrier(spec, (2, 3), (2, 2))},
        notes={"edit_episode": 50},
    )


_BUILDERS = {
    "revaluation_graph": _revaluation_graph,
    "community_graph": _community_graph,
    "open_field": _open_field,
    "linear_track": _linear_track,
    "transfer_maze_reward": _transfer_maze_reward,
    "transfer_maze_structure": _transfer_maze_structure,
}


def preset_names() -> list[str]:
    return sorted(_BUILDERS)


def load_preset(name: str) -> tuple[GraphSpec, PresetInfo]:
    """Fresh, validated copy of a named environment and its metadata."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise CatalogError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    spec, info = builder()
    return check(spec), info


def edited(name: str, key: str = "transfer") -> GraphSpec:
    spec, info = load_preset(name)
    return apply_edits(spec, info.edits[key])
