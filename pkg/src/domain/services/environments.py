"""
Desk-scale benchmark MDPs. Every constructor is deterministic.
"""
import logging
from collections import deque
from typing import Callable, Iterable, Optional

from src.domain.entities.mdp import TabularMdp
from src.domain.errors import InvalidLayout

logger = logging.getLogger(__name__)

Cell = tuple[int, int]

CHAIN_RIGHT = 0
CHAIN_LEFT = 1

# (dx, dy) for up, right, down, left
GRID_MOVES: tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))
GRID_ACTION_NAMES = ("up", "right", "down", "left")


def make_chain(n: int, gamma: float) -> TabularMdp:
    """
    States 0..n-1 with n-1 terminal. `right` moves one step and pays 1 on entering the
    terminal; `left` stays put with reward 0.
    """
    if n < 2:
        raise InvalidLayout("a chain needs at least two states")
    table = {}
    for s in range(n - 1):
        table[(s, CHAIN_RIGHT)] = [(s + 1, 1.0, 1.0 if s + 1 == n - 1 else 0.0)]
        table[(s, CHAIN_LEFT)] = [(s, 1.0, 0.0)]
    return TabularMdp.from_table(n, 2, gamma, table, terminals=[n - 1], initial=[(0, 1.0)])


def make_gridworld(
    width: int,
    height: int,
    walls: Iterable[Cell],
    goal: Cell,
    slip: float,
    step_reward: float,
    goal_reward: float,
    gamma: float,
    start: Cell = (0, 0),
) -> TabularMdp:
    """
    4-action gridworld over (x, y) cells. With probability `slip` the move goes in one of
    the two perpendicular directions instead (slip/2 each). Moves into walls or off the
    grid leave the agent in place. Wall cells get no state index.
    """
    wall_set = set(walls)
    if width < 1 or height < 1:
        raise InvalidLayout(f"grid must be at least 1x1, got {width}x{height}")
    if not 0.0 <= slip < 1.0:
        raise InvalidLayout(f"slip must lie in [0, 1), got {slip}")

    def inside(cell: Cell) -> bool:
        return 0 <= cell[0] < width and 0 <= cell[1] < height

    for cell in wall_set:
        if not inside(cell):
            raise InvalidLayout(f"wall {cell} lies outside the grid")
    for name, cell in (("goal", goal), ("start", start)):
        if not inside(cell):
            raise InvalidLayout(f"{name} {cell} lies outside the grid")
        if cell in wall_set:
            raise InvalidLayout(f"{name} {cell} is a wall")

    cells = [(x, y) for y in range(height) for x in range(width) if (x, y) not in wall_set]
    index = {cell: i for i, cell in enumerate(cells)}

    def move(cell: Cell, direction: int) -> Cell:
        dx, dy = GRID_MOVES[direction]
        target = (cell[0] + dx, cell[1] + dy)
        return target if inside(target) and target not in wall_set else cell

    table = {}
    for cell in cells:
        if cell == goal:
            continue
        s = index[cell]
        for a in range(4):
            weights: dict[int, float] = {}
            moves = [(a, 1.0 - slip)]
            if slip > 0.0:
                moves += [((a + 1) % 4, slip / 2.0), ((a + 3) % 4, slip / 2.0)]
            for direction, p in moves:
                nxt = index[move(cell, direction)]
                weights[nxt] = weights.get(nxt, 0.0) + p
            table[(s, a)] = [
                (nxt, p, goal_reward if cells[nxt] == goal else step_reward) for nxt, p in weights.items()
            ]

    unreachable = set(cells) - _reachable(start, cells, move)
    if unreachable:
        logger.warning("Gridworld has %d cells unreachable from %s", len(unreachable), start)
    if goal in unreachable:
        raise InvalidLayout(f"goal {goal} cannot be reached from {start}")

    return TabularMdp.from_table(
        len(cells), 4, gamma, table, terminals=[index[goal]], initial=[(index[start], 1.0)]
    )


def _reachable(start: Cell, cells: list[Cell], move: Callable[[Cell, int], Cell]) -> set[Cell]:
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for direction in range(4):
            nxt = move(cell, direction)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


RACETRACK_LENGTH = 6
RACETRACK_MAX_SPEED = 2


def make_ssp_racetrack_small(success: float = 0.9) -> TabularMdp:
    """
    One-dimensional racetrack as a stochastic shortest path problem.

    State (position, velocity) with position 0..5 and velocity 0..2, plus an absorbing
    goal. Actions decelerate/keep/accelerate; the velocity change succeeds with
    probability `success`, otherwise velocity is unchanged. Every move costs 1.
    """
    n_speeds = RACETRACK_MAX_SPEED + 1
    goal = RACETRACK_LENGTH * n_speeds

    def state_of(position: int, velocity: int) -> int:
        if position >= RACETRACK_LENGTH:
            return goal
        return position * n_speeds + velocity

    table = {}
    for position in range(RACETRACK_LENGTH):
        for velocity in range(n_speeds):
            s = state_of(position, velocity)
            for a in range(3):
                wanted = min(max(velocity + a - 1, 0), RACETRACK_MAX_SPEED)
                weights: dict[int, float] = {}
                for v_next, p in ((wanted, success), (velocity, 1.0 - success)):
                    nxt = state_of(position + v_next, v_next)
                    weights[nxt] = weights.get(nxt, 0.0) + p
                table[(s, a)] = [(nxt, p, -1.0) for nxt, p in weights.items() if p > 0.0]
    return TabularMdp.from_table(goal + 1, 3, 1.0, table, terminals=[goal], initial=[(0, 1.0)])


def make_split_mdp(gamma: float = 0.9) -> TabularMdp:
    """s0 --a--> {s1 (p=0.5, r=1), s2 (p=0.5, r=3)}, both terminal."""
    table = {(0, 0): [(1, 0.5, 1.0), (2, 0.5, 3.0)]}
    return TabularMdp.from_table(3, 1, gamma, table, terminals=[1, 2], initial=[(0, 1.0)])


def make_stochastic_tree() -> TabularMdp:
    """
    Two-level decision tree. At the root, action 0 leads to {1, 2} evenly (optimal
    expected value 0.9) and action 1 to {3: 0.7, 4: 0.3} (value 0.51). Level-two states
    pay a deterministic reward on their way into the shared terminal 5.
    """
    terminal = 5
    leaf_rewards = {1: (1.0, 0.2), 2: (0.8, 0.4), 3: (0.6, 0.1), 4: (0.3, 0.0)}
    table = {
        (0, 0): [(1, 0.5, 0.0), (2, 0.5, 0.0)],
        (0, 1): [(3, 0.7, 0.0), (4, 0.3, 0.0)],
    }
    for s, rewards in leaf_rewards.items():
        for a, r in enumerate(rewards):
            table[(s, a)] = [(terminal, 1.0, r)]
    return TabularMdp.from_table(6, 2, 1.0, table, terminals=[terminal], initial=[(0, 1.0)])


def make_gridworld5(slip: float = 0.1, gamma: float = 0.95) -> TabularMdp:
    return make_gridworld(5, 5, {(1, 1), (3, 2)}, (4, 4), slip, 0.0, 1.0, gamma)


BUILTIN_ENVIRONMENTS: dict[str, Callable[[], TabularMdp]] = {
    "chain3": lambda: make_chain(3, 0.9),
    "chain10": lambda: make_chain(10, 0.9),
    "split": make_split_mdp,
    "gridworld2": lambda: make_gridworld(2, 2, set(), (1, 1), 0.0, 0.0, 1.0, 0.95),
    "gridworld5": make_gridworld5,
    "racetrack": make_ssp_racetrack_small,
    "tree2": make_stochastic_tree,
}


def builtin_environment(name: str) -> Optional[TabularMdp]:
    factory = BUILTIN_ENVIRONMENTS.get(name)
    return factory() if factory is not None else None
