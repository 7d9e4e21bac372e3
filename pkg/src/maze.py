"""
Maze UPOMDP for the Dual Curriculum Design laboratory.

This module provides:
- MazeLevel: a fully specified grid level (walls, agent start, goal, block budget)
- The level-design protocol (blocks, then agent, then goal) as design_step
- Deterministic navigation dynamics with a sparse 1 - (t+1)/T_max goal reward at step t
- Exact per-level oracles: BFS shortest path and optimal value
- A plain-text level format (encode_level / decode_level)

Cells are indexed y * width + x. Facing directions are 0=E, 1=S, 2=W, 3=N and
a navigation state is cell * 4 + direction.
"""

import logging
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import InvalidInputError, LevelParseError

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

NUM_DIRECTIONS = 4
DIRECTION_OFFSETS = [(1, 0), (0, 1), (-1, 0), (0, -1)]  # E, S, W, N
DIRECTION_CHARS = "ESWN"

TURN_LEFT = 0
TURN_RIGHT = 1
FORWARD = 2
NUM_ACTIONS = 3
ACTION_NAMES = ["left", "right", "forward"]

WALL_CHAR = "#"
EMPTY_CHAR = "."
AGENT_CHAR = "A"
GOAL_CHAR = "G"


# ============================================================================
# CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class LevelTemplate:
    """Grid size and block budget shared by every generated level."""
    width: int = 8
    height: int = 8
    block_budget: int = 12

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInputError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.width * self.height < 2:
            raise InvalidInputError("grid needs room for an agent and a goal")
        if not 0 <= self.block_budget <= self.width * self.height - 2:
            raise InvalidInputError(
                f"block_budget must lie in [0, {self.width * self.height - 2}], got {self.block_budget}"
            )

    @property
    def num_cells(self) -> int:
        return self.width * self.height

    @property
    def num_states(self) -> int:
        return self.num_cells * NUM_DIRECTIONS


@dataclass(frozen=True)
class EnvConfig:
    """Episode horizon T_max and the discount used for GAE."""
    max_steps: int = 100
    gamma: float = 0.995

    def __post_init__(self):
        if self.max_steps < 1:
            raise InvalidInputError(f"max_steps must be positive, got {self.max_steps}")
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")


# ============================================================================
# LEVELS
# ============================================================================

@dataclass(frozen=True)
class MazeLevel:
    """
    A fully specified maze. Border walls are implicit.

    Attributes:
        width, height: Interior grid size
        walls: Set of walled cell indices
        agent_pos: Start cell of the agent
        agent_dir: Start facing direction (0=E, 1=S, 2=W, 3=N)
        goal: Goal cell
        block_budget: Maximum number of walls W
    """
    width: int
    height: int
    walls: FrozenSet[int]
    agent_pos: int
    agent_dir: int
    goal: int
    block_budget: int

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(int(c) for c in self.walls))
        n = self.width * self.height
        if self.width < 1 or self.height < 1:
            raise InvalidInputError("grid dimensions must be positive")
        for cell in (self.agent_pos, self.goal, *self.walls):
            if not 0 <= cell < n:
                raise InvalidInputError(f"cell {cell} outside a {self.width}x{self.height} grid")
        if not 0 <= self.agent_dir < NUM_DIRECTIONS:
            raise InvalidInputError(f"agent_dir must be 0..3, got {self.agent_dir}")
        if self.agent_pos == self.goal:
            raise InvalidInputError("agent start and goal coincide")
        if self.agent_pos in self.walls or self.goal in self.walls:
            raise InvalidInputError("agent or goal placed on a wall")
        if self.block_budget < 0 or len(self.walls) > self.block_budget:
            raise InvalidInputError(
                f"{len(self.walls)} walls exceed block budget {self.block_budget}"
            )

    @property
    def num_cells(self) -> int:
        return self.width * self.height

    @property
    def num_states(self) -> int:
        return self.num_cells * NUM_DIRECTIONS

    @property
    def start_state(self) -> int:
        return self.agent_pos * NUM_DIRECTIONS + self.agent_dir

    def cell(self, x: int, y: int) -> int:
        return y * self.width + x

    def coords(self, cell: int) -> Tuple[int, int]:
        return cell % self.width, cell // self.width

    def is_open(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height and self.cell(x, y) not in self.walls

    def neighbours(self, cell: int) -> List[int]:
        """Open 4-neighbours of a cell."""
        x, y = self.coords(cell)
        return [self.cell(x + dx, y + dy) for dx, dy in DIRECTION_OFFSETS if self.is_open(x + dx, y + dy)]


def level_key(level: MazeLevel) -> str:
    """Canonical encoding used to detect duplicate levels."""
    return encode_level(level)


def random_empty_cell(
    width: int, height: int, occupied: Iterable[int], rng: np.random.Generator
) -> int:
    """Uniformly random cell not in `occupied`."""
    blocked = set(occupied)
    free = [c for c in range(width * height) if c not in blocked]
    if not free:
        raise InvalidInputError("no empty cell left")
    return free[int(rng.integers(len(free)))]


# ============================================================================
# LEVEL DESIGN PROTOCOL
# ============================================================================

class DesignPhase(str, Enum):
    PLACING_BLOCKS = "PlacingBlocks"
    PLACING_AGENT = "PlacingAgent"
    PLACING_GOAL = "PlacingGoal"
    DONE = "Done"


@dataclass(frozen=True)
class DesignState:
    """Partial level under construction. `t` counts design steps taken."""
    template: LevelTemplate
    walls: FrozenSet[int] = frozenset()
    t: int = 0
    phase: DesignPhase = DesignPhase.PLACING_BLOCKS
    agent_pos: Optional[int] = None
    agent_dir: Optional[int] = None
    goal: Optional[int] = None

    @property
    def total_steps(self) -> int:
        return self.template.block_budget + 2

    def level(self) -> MazeLevel:
        if self.phase != DesignPhase.DONE:
            raise InvalidInputError(f"design not finished (phase {self.phase.value})")
        return MazeLevel(
            width=self.template.width,
            height=self.template.height,
            walls=self.walls,
            agent_pos=self.agent_pos,
            agent_dir=self.agent_dir,
            goal=self.goal,
            block_budget=self.template.block_budget,
        )


def initial_design_state(template: LevelTemplate) -> DesignState:
    phase = DesignPhase.PLACING_BLOCKS if template.block_budget > 0 else DesignPhase.PLACING_AGENT
    return DesignState(template=template, phase=phase)


def design_step(state: DesignState, action: int, rng: np.random.Generator) -> DesignState:
    """
    Apply one design action (a cell index).

    Blocks: a wall on an already walled cell is a no-op but still uses a step.
    Agent: a wall collision moves the agent to a random empty cell; its
    facing is drawn from rng after the cell. Goal: a collision with a wall or
    the agent moves the goal to a random empty cell.

    Raises:
        InvalidInputError: on an out-of-grid action or a finished design
    """
    template = state.template
    if state.phase == DesignPhase.DONE:
        raise InvalidInputError("design already finished")
    if not 0 <= action < template.num_cells:
        raise InvalidInputError(f"design action {action} outside the {template.num_cells}-cell grid")

    t = state.t + 1
    if state.phase == DesignPhase.PLACING_BLOCKS:
        walls = state.walls | {action}
        phase = DesignPhase.PLACING_AGENT if t >= template.block_budget else DesignPhase.PLACING_BLOCKS
        return replace(state, walls=walls, t=t, phase=phase)

    if state.phase == DesignPhase.PLACING_AGENT:
        cell = action
        if cell in state.walls:
            cell = random_empty_cell(template.width, template.height, state.walls, rng)
        direction = int(rng.integers(NUM_DIRECTIONS))
        return replace(state, t=t, phase=DesignPhase.PLACING_GOAL, agent_pos=cell, agent_dir=direction)

    cell = action
    if cell in state.walls or cell == state.agent_pos:
        cell = random_empty_cell(
            template.width, template.height, state.walls | {state.agent_pos}, rng
        )
    return replace(state, t=t, phase=DesignPhase.DONE, goal=cell)


def design_from_actions(
    template: LevelTemplate, actions: Sequence[int], rng: np.random.Generator
) -> MazeLevel:
    """Run a full design episode from a fixed action sequence."""
    state = initial_design_state(template)
    for action in actions:
        state = design_step(state, int(action), rng)
    return state.level()


# ============================================================================
# NAVIGATION DYNAMICS
# ============================================================================

class RolloutMode(str, Enum):
    TRAIN = "Train"
    EVAL = "Eval"


@dataclass
class Trajectory:
    """
    One student episode.

    values holds V(s_t) for t < T as recorded during the rollout;
    bootstrap_value is V(s_T) on truncation and 0 at a terminal state.
    """
    states: List[int]
    actions: List[int]
    rewards: List[float]
    values: List[float]
    terminal_reached: bool
    bootstrap_value: float = 0.0
    mode: RolloutMode = RolloutMode.TRAIN

    def __post_init__(self):
        n = len(self.actions)
        if len(self.rewards) != n or len(self.values) != n or len(self.states) != n + 1:
            raise InvalidInputError(
                f"inconsistent trajectory: {len(self.states)} states, {n} actions, "
                f"{len(self.rewards)} rewards, {len(self.values)} values"
            )
        if self.terminal_reached and self.bootstrap_value != 0.0:
            raise InvalidInputError("terminal trajectories bootstrap from 0")

    @property
    def length(self) -> int:
        return len(self.actions)


def rollout_return(traj: Trajectory) -> float:
    """Undiscounted episode return."""
    return float(sum(traj.rewards))


def env_step(
    level: MazeLevel, state: int, action: int, t: int, config: EnvConfig
) -> Tuple[int, float, bool]:
    """
    Advance one step from navigation state `state` at time t.

    Returns:
        (next_state, reward, done). Reaching the goal pays 1 - (t+1)/T_max;
        the step with t+1 == T_max ends the episode.
    """
    if not 0 <= t < config.max_steps:
        raise InvalidInputError(f"t={t} outside [0, {config.max_steps})")
    if action not in (TURN_LEFT, TURN_RIGHT, FORWARD):
        raise InvalidInputError(f"unknown action {action}")

    cell, direction = divmod(state, NUM_DIRECTIONS)
    if action == TURN_LEFT:
        direction = (direction - 1) % NUM_DIRECTIONS
    elif action == TURN_RIGHT:
        direction = (direction + 1) % NUM_DIRECTIONS
    else:
        x, y = level.coords(cell)
        dx, dy = DIRECTION_OFFSETS[direction]
        if level.is_open(x + dx, y + dy):
            cell = level.cell(x + dx, y + dy)

    next_state = cell * NUM_DIRECTIONS + direction
    steps = t + 1
    if cell == level.goal:
        return next_state, 1.0 - steps / config.max_steps, True
    return next_state, 0.0, steps >= config.max_steps


# ============================================================================
# ORACLES
# ============================================================================

def shortest_path_length(level: MazeLevel) -> int:
    """BFS move count from agent start to goal ignoring facing; 0 if unreachable."""
    queue = deque([(level.agent_pos, 0)])
    visited = {level.agent_pos}
    while queue:
        cell, dist = queue.popleft()
        if cell == level.goal:
            return dist
        for nxt in level.neighbours(cell):
            if nxt not in visited:
                visited.add(nxt)
                queue.append((nxt, dist + 1))
    return 0


def min_steps_to_goal(level: MazeLevel) -> Optional[int]:
    """Fewest actions (turns included) from the start state to the goal, or None."""
    start = level.start_state
    queue = deque([(start, 0)])
    visited = {start}
    while queue:
        state, dist = queue.popleft()
        cell, direction = divmod(state, NUM_DIRECTIONS)
        if cell == level.goal:
            return dist
        x, y = level.coords(cell)
        dx, dy = DIRECTION_OFFSETS[direction]
        successors = [
            cell * NUM_DIRECTIONS + (direction - 1) % NUM_DIRECTIONS,
            cell * NUM_DIRECTIONS + (direction + 1) % NUM_DIRECTIONS,
        ]
        if level.is_open(x + dx, y + dy):
            successors.append(level.cell(x + dx, y + dy) * NUM_DIRECTIONS + direction)
        for nxt in successors:
            if nxt not in visited:
                visited.add(nxt)
                queue.append((nxt, dist + 1))
    return None


def optimal_value(level: MazeLevel, config: EnvConfig) -> float:
    """Best achievable undiscounted return: 1 - L*/T_max, or 0 if unreachable in time."""
    steps = min_steps_to_goal(level)
    if steps is None or steps > config.max_steps:
        return 0.0
    return 1.0 - steps / config.max_steps


# ============================================================================
# TEXT FORMAT
# ============================================================================

def encode_level(level: MazeLevel) -> str:
    """
    Header 'width height budget', one row per grid line, then 'dir: E|S|W|N'.
    """
    lines = [f"{level.width} {level.height} {level.block_budget}"]
    for y in range(level.height):
        row = []
        for x in range(level.width):
            c = level.cell(x, y)
            if c == level.agent_pos:
                row.append(AGENT_CHAR)
            elif c == level.goal:
                row.append(GOAL_CHAR)
            elif c in level.walls:
                row.append(WALL_CHAR)
            else:
                row.append(EMPTY_CHAR)
        lines.append("".join(row))
    lines.append(f"dir: {DIRECTION_CHARS[level.agent_dir]}")
    return "\n".join(lines) + "\n"


def decode_level(text: str) -> MazeLevel:
    """
    Parse the text produced by encode_level.

    Raises:
        LevelParseError: with the 1-based line and column of the problem
    """
    lines = text.rstrip("\n").split("\n")
    header = lines[0].split()
    if len(header) != 3:
        raise LevelParseError("expected header 'width height budget'", 1)
    try:
        width, height, budget = (int(tok) for tok in header)
    except ValueError:
        raise LevelParseError("header values must be integers", 1) from None
    if width < 1 or height < 1 or budget < 0:
        raise LevelParseError("header values out of range", 1)
    if len(lines) < height + 2:
        raise LevelParseError(f"expected {height} grid rows and a dir line", len(lines) + 1)

    walls, agent, goal = set(), None, None
    for y in range(height):
        lineno = y + 2
        row = lines[y + 1].rstrip("\r")
        if len(row) != width:
            raise LevelParseError(f"expected {width} cells, got {len(row)}", lineno, min(len(row), width) + 1)
        for x, ch in enumerate(row):
            cell = y * width + x
            if ch == WALL_CHAR:
                walls.add(cell)
            elif ch == AGENT_CHAR:
                if agent is not None:
                    raise LevelParseError("second agent marker", lineno, x + 1)
                agent = cell
            elif ch == GOAL_CHAR:
                if goal is not None:
                    raise LevelParseError("second goal marker", lineno, x + 1)
                goal = cell
            elif ch != EMPTY_CHAR:
                raise LevelParseError(f"unexpected character {ch!r}", lineno, x + 1)

    dir_lineno = height + 2
    if agent is None:
        raise LevelParseError("missing agent marker", dir_lineno)
    if goal is None:
        raise LevelParseError("missing goal marker", dir_lineno)

    dir_line = lines[height + 1].strip()
    if not dir_line.startswith("dir:"):
        raise LevelParseError("expected 'dir: N|S|E|W'", dir_lineno)
    dir_char = dir_line[len("dir:"):].strip()
    if len(dir_char) != 1 or dir_char not in DIRECTION_CHARS:
        raise LevelParseError(f"bad direction {dir_char!r}", dir_lineno, len("dir: ") + 1)
    if any(line.strip() for line in lines[height + 2:]):
        raise LevelParseError("trailing content", height + 3)

    try:
        return MazeLevel(width, height, frozenset(walls), agent, DIRECTION_CHARS.index(dir_char), goal, budget)
    except InvalidInputError as e:
        raise LevelParseError(str(e), 1) from e


def render_level(level: MazeLevel) -> str:
    """Grid rows with a border, for logs and demos."""
    body = encode_level(level).splitlines()[1:-1]
    top = WALL_CHAR * (level.width + 2)
    return "\n".join([top] + [WALL_CHAR + row + WALL_CHAR for row in body] + [top])


if __name__ == "__main__":
    rng = np.random.default_rng(0)
    template = LevelTemplate()
    actions = rng.integers(template.num_cells, size=template.block_budget + 2)
    level = design_from_actions(template, actions, rng)
    print(render_level(level))
    print(f"shortest path: {shortest_path_length(level)}")
    print(f"optimal value: {optimal_value(level, EnvConfig()):.3f}")
