"""
Evaluation utilities for the Dual Curriculum Design laboratory.

This module provides:
- LZW action complexity
- Held-out evaluation suites (rooms, spiral, perfect maze, corridors)
- Solved rates under greedy or stochastic evaluation
- Level/trajectory complexity records and their summaries
- Suite manifests and the per-level evaluation table
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.agent import PolicyTable, ValueTable, collect_trajectory
from src.errors import ConfigError, InvalidInputError
from src.maze import (
    NUM_ACTIONS,
    NUM_DIRECTIONS,
    EnvConfig,
    MazeLevel,
    RolloutMode,
    Trajectory,
    decode_level,
    env_step,
    shortest_path_length,
)

logger = logging.getLogger(__name__)

EVAL_COLUMNS = ["suite", "level", "solved_rate", "block_count", "shortest_path",
                "solved_path", "action_lzw"]


# ============================================================================
# LZW COMPLEXITY
# ============================================================================

def lzw_complexity(actions: Sequence[int], alphabet_size: int = NUM_ACTIONS) -> int:
    """
    Number of codes LZW emits for an action sequence.

    The dictionary starts with every symbol of the alphabet, whether or not
    it occurs.

    Args:
        actions: Sequence of symbols in [0, alphabet_size)
        alphabet_size: Size of the initial dictionary

    Returns:
        Code count (0 for an empty sequence)
    """
    dictionary = {(s,) for s in range(alphabet_size)}
    codes = 0
    word: Tuple[int, ...] = ()
    for symbol in actions:
        if not 0 <= symbol < alphabet_size:
            raise InvalidInputError(f"symbol {symbol} outside alphabet of size {alphabet_size}")
        candidate = word + (int(symbol),)
        if candidate in dictionary:
            word = candidate
        else:
            codes += 1
            dictionary.add(candidate)
            word = (int(symbol),)
    if word:
        codes += 1
    return codes


# ============================================================================
# COMPLEXITY RECORDS
# ============================================================================

@dataclass
class ComplexityRecord:
    """Per-episode curriculum complexity. solved_path is None for failed episodes."""
    block_count: int
    shortest_path: int
    solved_path: Optional[int]
    action_lzw: int

    @property
    def solved(self) -> bool:
        return self.solved_path is not None


def complexity_record(level: MazeLevel, traj: Trajectory) -> ComplexityRecord:
    shortest = shortest_path_length(level)
    return ComplexityRecord(
        block_count=len(level.walls),
        shortest_path=shortest,
        solved_path=shortest if traj.terminal_reached else None,
        action_lzw=lzw_complexity(traj.actions),
    )


def complexity_report(episodes: Iterable[Tuple[MazeLevel, Trajectory]]) -> List[ComplexityRecord]:
    return [complexity_record(level, traj) for level, traj in episodes]


def summarize_complexity(records: Sequence[ComplexityRecord]) -> Dict[str, float]:
    """
    Means over a batch of records.

    Unsolved episodes are left out of solved_path_mean (NaN when nothing was
    solved); solved_count says how many went in.
    """
    if not records:
        return {"episodes": 0, "solved_count": 0, "block_count": np.nan,
                "shortest_path": np.nan, "solved_path_mean": np.nan, "action_lzw_mean": np.nan}
    solved = [r.solved_path for r in records if r.solved]
    return {
        "episodes": len(records),
        "solved_count": len(solved),
        "block_count": float(np.mean([r.block_count for r in records])),
        "shortest_path": float(np.mean([r.shortest_path for r in records])),
        "solved_path_mean": float(np.mean(solved)) if solved else np.nan,
        "action_lzw_mean": float(np.mean([r.action_lzw for r in records])),
    }


# ============================================================================
# EVALUATION SUITES
# ============================================================================

class SuiteKind(str, Enum):
    ROOMS = "Rooms"
    SPIRAL = "Spiral"
    PERFECT_MAZE = "PerfectMaze"
    CORRIDOR = "Corridor"


@dataclass
class EvalSuite:
    name: str
    levels: List[MazeLevel] = field(default_factory=list)
    attempts_per_level: int = 1

    def __post_init__(self):
        if not self.levels:
            raise InvalidInputError(f"suite '{self.name}' has no levels")
        if self.attempts_per_level < 1:
            raise InvalidInputError("attempts_per_level must be positive")

    def __len__(self) -> int:
        return len(self.levels)


def _finish_level(size: int, open_cells: set, agent: int, goal: int,
                  rng: np.random.Generator) -> MazeLevel:
    walls = frozenset(c for c in range(size * size) if c not in open_cells)
    return MazeLevel(size, size, walls, agent, int(rng.integers(NUM_DIRECTIONS)), goal, len(walls))


def _pick_two(cells: Sequence[int], rng: np.random.Generator) -> Tuple[int, int]:
    first, second = rng.choice(len(cells), size=2, replace=False)
    return cells[int(first)], cells[int(second)]


def _rooms_level(size: int, rng: np.random.Generator, rooms_per_side: int = 2) -> MazeLevel:
    k = rooms_per_side
    lines = [(m * (size + 1)) // k - 1 for m in range(1, k)]
    bounds = [-1] + lines + [size]
    bands = [range(bounds[i] + 1, bounds[i + 1]) for i in range(k)]

    open_cells = {y * size + x for y in range(size) for x in range(size)
                  if x not in lines and y not in lines}
    # one doorway between every pair of adjacent rooms
    for line in lines:
        for band in bands:
            y = int(rng.choice(list(band)))
            open_cells.add(y * size + line)
            x = int(rng.choice(list(band)))
            open_cells.add(line * size + x)

    agent, goal = _pick_two(sorted(open_cells), rng)
    return _finish_level(size, open_cells, agent, goal, rng)


def _transform(size: int, cell: int, rotation: int, flip: bool) -> int:
    x, y = cell % size, cell // size
    for _ in range(rotation):
        x, y = size - 1 - y, x
    if flip:
        x = size - 1 - x
    return y * size + x


def _spiral_level(size: int, rng: np.random.Generator) -> MazeLevel:
    offsets = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    x, y, direction = 0, 0, 0
    path = [(0, 0)]
    carved = {(0, 0)}

    def can_carve(nx, ny, fx, fy):
        if not (0 <= nx < size and 0 <= ny < size) or (nx, ny) in carved:
            return False
        return all((nx + dx, ny + dy) not in carved or (nx + dx, ny + dy) == (fx, fy)
                   for dx, dy in offsets)

    while True:
        for turn in (0, 1):
            d = (direction + turn) % 4
            nx, ny = x + offsets[d][0], y + offsets[d][1]
            if can_carve(nx, ny, x, y):
                x, y, direction = nx, ny, d
                carved.add((x, y))
                path.append((x, y))
                break
        else:
            break

    rotation, flip = int(rng.integers(4)), bool(rng.integers(2))
    cells = [_transform(size, py * size + px, rotation, flip) for px, py in path]
    return _finish_level(size, set(cells), cells[0], cells[-1], rng)


def _perfect_maze_level(size: int, rng: np.random.Generator) -> MazeLevel:
    nodes = [(x, y) for y in range(0, size, 2) for x in range(0, size, 2)]
    start = nodes[int(rng.integers(len(nodes)))]
    visited = {start}
    open_cells = {start[1] * size + start[0]}
    stack = [start]
    while stack:
        x, y = stack[-1]
        options = [(x + dx, y + dy) for dx, dy in ((2, 0), (0, 2), (-2, 0), (0, -2))
                   if 0 <= x + dx < size and 0 <= y + dy < size and (x + dx, y + dy) not in visited]
        if not options:
            stack.pop()
            continue
        nx, ny = options[int(rng.integers(len(options)))]
        visited.add((nx, ny))
        open_cells.add(ny * size + nx)
        open_cells.add(((y + ny) // 2) * size + (x + nx) // 2)
        stack.append((nx, ny))

    agent, goal = _pick_two(sorted(open_cells), rng)
    return _finish_level(size, open_cells, agent, goal, rng)


def _corridor_level(size: int, rng: np.random.Generator) -> MazeLevel:
    corridors = list(range(0, size, 2))
    open_cells = {x for x in range(size)}
    for x in corridors:
        open_cells.update(y * size + x for y in range(1, size))
    agent = int(rng.integers(size))
    goal = (size - 1) * size + corridors[int(rng.integers(len(corridors)))]
    return _finish_level(size, open_cells, agent, goal, rng)


_MIN_SIZE = {SuiteKind.ROOMS: 3, SuiteKind.SPIRAL: 2, SuiteKind.PERFECT_MAZE: 3, SuiteKind.CORRIDOR: 3}
_BUILDERS = {
    SuiteKind.ROOMS: _rooms_level,
    SuiteKind.SPIRAL: _spiral_level,
    SuiteKind.PERFECT_MAZE: _perfect_maze_level,
    SuiteKind.CORRIDOR: _corridor_level,
}


def build_test_suite(
    kind: Union[SuiteKind, str], size: int, seed: int, num_levels: int = 10, attempts_per_level: int = 1
) -> EvalSuite:
    """
    Procedural held-out suite on a size x size grid.

    Rooms: 2x2 rooms joined by single doorways. Spiral: one winding path.
    PerfectMaze: recursive backtracker (a spanning tree of open cells).
    Corridor: a hallway with parallel dead-end corridors, goal at the end of one.

    Raises:
        ConfigError: if the grid is too small for the kind
    """
    try:
        kind = SuiteKind(kind)
    except ValueError:
        raise ConfigError(f"unknown suite kind '{kind}'", "suite") from None
    if size < _MIN_SIZE[kind]:
        raise ConfigError(f"{kind.value} needs a grid of at least {_MIN_SIZE[kind]}, got {size}", "suite")
    if num_levels < 1:
        raise ConfigError("num_levels must be positive", "suite")

    rng = np.random.default_rng(seed)
    levels = [_BUILDERS[kind](size, rng) for _ in range(num_levels)]
    return EvalSuite(kind.value, levels, attempts_per_level)


def default_suites(size: int, seed: int, num_levels: int = 10,
                   attempts_per_level: int = 1) -> List[EvalSuite]:
    return [build_test_suite(kind, size, seed, num_levels, attempts_per_level) for kind in SuiteKind]


def load_suite_manifest(path: Union[str, Path]) -> List[EvalSuite]:
    """
    Read a suite manifest.

    Lines are `suite KIND SIZE SEED [NUM_LEVELS]` or `level RELATIVE_PATH`;
    level lines form one suite named after the manifest file. Blank lines
    and `#` comments are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"suite manifest not found: {path}")

    suites: List[EvalSuite] = []
    fixed_levels: List[MazeLevel] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if tokens[0] == "suite" and len(tokens) in (4, 5):
            try:
                size, seed = int(tokens[2]), int(tokens[3])
                num_levels = int(tokens[4]) if len(tokens) == 5 else 10
            except ValueError as e:
                raise InvalidInputError(f"{path}:{lineno}: {e}") from e
            suites.append(build_test_suite(tokens[1], size, seed, num_levels))
        elif tokens[0] == "level" and len(tokens) == 2:
            level_path = path.parent / tokens[1]
            fixed_levels.append(decode_level(level_path.read_text(encoding="utf-8")))
        else:
            raise InvalidInputError(f"{path}:{lineno}: expected 'suite KIND SIZE SEED [N]' or 'level PATH'")

    if fixed_levels:
        suites.append(EvalSuite(path.stem, fixed_levels))
    if not suites:
        raise InvalidInputError(f"{path}: manifest lists no suites")
    return suites


# ============================================================================
# SOLVED RATES
# ============================================================================

def greedy_rollout(policy: PolicyTable, level: MazeLevel, env: EnvConfig) -> Trajectory:
    """Deterministic argmax rollout in Eval mode."""
    return collect_trajectory(policy, ValueTable(), level, env, RolloutMode.EVAL, greedy=True)


def solved_rate(
    policy: PolicyTable,
    suite: EvalSuite,
    env: EnvConfig,
    rng: Optional[np.random.Generator] = None,
    greedy: bool = True,
) -> Tuple[List[float], float]:
    """
    Fraction of attempts that reach the goal, per level and averaged.

    Greedy evaluation is deterministic, so one attempt per level decides it;
    stochastic evaluation runs suite.attempts_per_level sampled episodes.

    Returns:
        (per-level rates, mean over levels)
    """
    if not greedy and rng is None:
        raise InvalidInputError("stochastic evaluation needs an rng")
    per_level = []
    for level in suite.levels:
        if greedy:
            per_level.append(1.0 if greedy_rollout(policy, level, env).terminal_reached else 0.0)
            continue
        solved = sum(
            collect_trajectory(policy, ValueTable(), level, env, RolloutMode.EVAL, rng).terminal_reached
            for _ in range(suite.attempts_per_level)
        )
        per_level.append(solved / suite.attempts_per_level)
    return per_level, float(np.mean(per_level))


def evaluate_suites(
    policy: PolicyTable,
    suites: Sequence[EvalSuite],
    env: EnvConfig,
    rng: Optional[np.random.Generator] = None,
    greedy: bool = True,
) -> pd.DataFrame:
    """
    Evaluate a frozen policy on every level of every suite.

    Returns:
        DataFrame with the eval CSV columns; complexity columns come from the
        greedy rollout of each level.
    """
    rows = []
    for suite in suites:
        rates, _ = solved_rate(policy, suite, env, rng, greedy)
        for index, (level, rate) in enumerate(zip(suite.levels, rates)):
            record = complexity_record(level, greedy_rollout(policy, level, env))
            rows.append({
                "suite": suite.name,
                "level": index,
                "solved_rate": rate,
                "block_count": record.block_count,
                "shortest_path": record.shortest_path,
                "solved_path": record.solved_path,
                "action_lzw": record.action_lzw,
            })
    return pd.DataFrame(rows, columns=EVAL_COLUMNS)


def random_policy_solve_probability(level: MazeLevel, env: EnvConfig) -> float:
    """
    Exact probability that the uniform random policy reaches the goal within T_max.

    Propagates the state distribution through the deterministic dynamics,
    removing mass as it enters the goal cell.
    """
    n = level.num_states
    transitions = np.array([[env_step(level, s, a, 0, env)[0] for a in range(NUM_ACTIONS)]
                            for s in range(n)])
    at_goal = np.array([s // NUM_DIRECTIONS == level.goal for s in range(n)])

    dist = np.zeros(n)
    dist[level.start_state] = 1.0
    solved = 0.0
    for _ in range(env.max_steps):
        nxt = np.zeros(n)
        for a in range(NUM_ACTIONS):
            np.add.at(nxt, transitions[:, a], dist / NUM_ACTIONS)
        solved += nxt[at_goal].sum()
        nxt[at_goal] = 0.0
        dist = nxt
    return float(solved)


def compare_policies(
    policies: Dict[str, PolicyTable], suites: Sequence[EvalSuite], env: EnvConfig
) -> pd.DataFrame:
    """Greedy solved rate of several policies, one row per policy and one column per suite."""
    rows = []
    for name, policy in policies.items():
        row = {"policy": name}
        for suite in suites:
            row[suite.name] = solved_rate(policy, suite, env)[1]
        row["aggregate"] = float(np.mean([row[s.name] for s in suites]))
        rows.append(row)
    return pd.DataFrame(rows)


if __name__ == "__main__":
    suites = default_suites(8, seed=0, num_levels=3)
    for suite in suites:
        lengths = [shortest_path_length(level) for level in suite.levels]
        print(f"{suite.name:12s} shortest paths {lengths}")
    print(f"LZW of [0, 0, 0, 0]: {lzw_complexity([0, 0, 0, 0])}")
