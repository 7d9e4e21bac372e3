"""
Prioritized level replay.

This module provides:
- ReplayConfig: replay rate, temperature, staleness and the scoring/prioritization choices
- Scoring functions: positive value loss, MaxMC (per-step and s0) and true regret
- LevelBuffer with the replay distribution and the score-based eviction rule
- Replay sampling and the generate/replay decision
- JSONL buffer snapshots
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from src.agent import GaeConfig, discounted_cumsum, td_errors
from src.errors import InvalidInputError
from src.maze import (
    EnvConfig,
    MazeLevel,
    Trajectory,
    decode_level,
    encode_level,
    level_key,
    optimal_value,
    rollout_return,
)

logger = logging.getLogger(__name__)

SNAPSHOT_SCHEMA_VERSION = 1


# ============================================================================
# CONFIGURATION
# ============================================================================

class Prioritization(str, Enum):
    RANK = "Rank"
    PROPORTIONAL = "Proportional"


class ScoringFunction(str, Enum):
    POSITIVE_VALUE_LOSS = "PositiveValueLoss"
    MAX_MC = "MaxMC"
    TRUE_REGRET = "TrueRegret"


class MaxMcVariant(str, Enum):
    PER_STEP = "PerStep"
    S0 = "S0"


class Decision(str, Enum):
    GENERATE = "Generate"
    REPLAY = "Replay"


@dataclass(frozen=True)
class ReplayConfig:
    replay_rate: float = 0.5
    buffer_size: int = 128
    temperature: float = 0.3
    staleness_coef: float = 0.3
    prioritization: Prioritization = Prioritization.RANK
    scoring: ScoringFunction = ScoringFunction.MAX_MC
    max_mc_variant: MaxMcVariant = MaxMcVariant.PER_STEP

    def __post_init__(self):
        object.__setattr__(self, "prioritization", Prioritization(self.prioritization))
        object.__setattr__(self, "scoring", ScoringFunction(self.scoring))
        object.__setattr__(self, "max_mc_variant", MaxMcVariant(self.max_mc_variant))
        if not 0.0 <= self.replay_rate <= 1.0:
            raise InvalidInputError(f"replay_rate must lie in [0, 1], got {self.replay_rate}")
        if self.buffer_size < 1:
            raise InvalidInputError(f"buffer_size must be positive, got {self.buffer_size}")
        if self.temperature <= 0:
            raise InvalidInputError(f"temperature must be positive, got {self.temperature}")
        if not 0.0 <= self.staleness_coef <= 1.0:
            raise InvalidInputError(f"staleness_coef must lie in [0, 1], got {self.staleness_coef}")


# ============================================================================
# SCORING
# ============================================================================

def score_positive_value_loss(traj: Trajectory, config: GaeConfig) -> float:
    """Mean over t of the clipped GAE: (1/T) sum_t max(A_t, 0)."""
    if traj.length == 0:
        raise InvalidInputError("cannot score an empty trajectory")
    gae = discounted_cumsum(td_errors(traj, config.gamma), config.gamma * config.gae_lambda)
    return float(np.maximum(gae, 0.0).mean())


def score_max_mc(traj: Trajectory, r_max: float,
                 variant: MaxMcVariant = MaxMcVariant.PER_STEP) -> float:
    """
    Gap between the best return seen on the level and the value estimates.

    PerStep averages R_max - V(s_t) over the episode; S0 uses the start value
    only. Negative results are returned as-is.
    """
    if traj.length == 0:
        raise InvalidInputError("cannot score an empty trajectory")
    values = np.asarray(traj.values, dtype=float)
    if MaxMcVariant(variant) == MaxMcVariant.S0:
        return float(r_max - values[0])
    return float(np.mean(r_max - values))


def score_true_regret(level: MazeLevel, traj: Trajectory, config: EnvConfig) -> float:
    """optimal_value(level) minus the achieved return."""
    return optimal_value(level, config) - rollout_return(traj)


# ============================================================================
# LEVEL BUFFER
# ============================================================================

@dataclass
class BufferEntry:
    level: MazeLevel
    score: float
    timestamp: int
    max_return: float = 0.0


@dataclass
class LevelBuffer:
    """
    Store of at most `capacity` distinct levels with scores and timestamps.

    episode_count is the global episode counter c used for staleness.
    """
    capacity: int
    entries: List[BufferEntry] = field(default_factory=list)
    episode_count: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidInputError(f"capacity must be positive, got {self.capacity}")
        self._index: Dict[str, int] = {level_key(e.level): i for i, e in enumerate(self.entries)}
        if len(self._index) != len(self.entries):
            raise InvalidInputError("buffer entries contain duplicate levels")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    def find(self, level: MazeLevel) -> Optional[int]:
        return self._index.get(level_key(level))

    def levels(self) -> List[MazeLevel]:
        return [e.level for e in self.entries]

    def scores(self) -> np.ndarray:
        return np.array([e.score for e in self.entries], dtype=float)

    def timestamps(self) -> np.ndarray:
        return np.array([e.timestamp for e in self.entries], dtype=float)

    def mean_score(self) -> float:
        return float(self.scores().mean()) if self.entries else 0.0

    def max_return(self, level: MazeLevel) -> float:
        index = self.find(level)
        return self.entries[index].max_return if index is not None else 0.0

    def _rebuild_index(self):
        self._index = {level_key(e.level): i for i, e in enumerate(self.entries)}


def _score_weights(scores: np.ndarray, config: ReplayConfig) -> np.ndarray:
    if config.prioritization == Prioritization.RANK:
        # stable sort: on equal scores the earlier entry ranks higher
        order = np.argsort(-scores, kind="stable")
        ranks = np.empty(len(scores))
        ranks[order] = np.arange(1, len(scores) + 1)
        log_h = -np.log(ranks) / config.temperature
        weights = np.exp(log_h - log_h.max())
        return weights / weights.sum()

    h = np.clip(scores, 0.0, None)
    if not np.any(h > 0):
        return np.full(len(scores), 1.0 / len(scores))
    with np.errstate(divide="ignore"):
        log_h = np.where(h > 0, np.log(h), -np.inf) / config.temperature
    weights = np.exp(log_h - log_h.max())
    return weights / weights.sum()


def replay_distribution(buffer: LevelBuffer, config: ReplayConfig, c: Optional[int] = None) -> np.ndarray:
    """
    P_replay = (1 - rho) P_S + rho P_C.

    P_S is proportional to h(S_i)^(1/beta) with h = 1/rank (Rank) or the
    score clamped at 0 (Proportional). P_C is proportional to c - C_i, and
    uniform when every level was scored at c.

    Raises:
        InvalidInputError: on an empty buffer
    """
    if not buffer.entries:
        raise InvalidInputError("replay distribution of an empty buffer")
    c = buffer.episode_count if c is None else c

    p_s = _score_weights(buffer.scores(), config)
    staleness = np.clip(c - buffer.timestamps(), 0.0, None)
    total = staleness.sum()
    p_c = staleness / total if total > 0 else np.full(len(buffer), 1.0 / len(buffer))

    rho = config.staleness_coef
    probs = (1.0 - rho) * p_s + rho * p_c
    return probs / probs.sum()


def update_buffer(
    buffer: LevelBuffer,
    level: MazeLevel,
    score: float,
    c: int,
    config: ReplayConfig,
    episode_return: Optional[float] = None,
) -> bool:
    """
    Insert or refresh a level.

    A level already in the buffer gets its score and timestamp replaced in
    place. Otherwise it is inserted while there is room; a full buffer
    evicts its lowest-P_replay entry (lowest index on ties) only when that
    entry's score is below the incoming one.

    Returns:
        True if the level is in the buffer afterwards
    """
    if not np.isfinite(score):
        raise InvalidInputError(f"score must be finite, got {score}")
    buffer.episode_count = max(buffer.episode_count, c)

    index = buffer.find(level)
    if index is not None:
        entry = buffer.entries[index]
        entry.score = float(score)
        entry.timestamp = c
        if episode_return is not None:
            entry.max_return = max(entry.max_return, episode_return)
        return True

    new_entry = BufferEntry(level, float(score), c,
                            episode_return if episode_return is not None else 0.0)
    if not buffer.is_full:
        buffer.entries.append(new_entry)
        buffer._index[level_key(level)] = len(buffer.entries) - 1
        return True

    probs = replay_distribution(buffer, config, c)
    victim = int(np.argmin(probs))
    if buffer.entries[victim].score >= score:
        return False
    logger.debug("evicting level with score %.4f for score %.4f", buffer.entries[victim].score, score)
    buffer.entries[victim] = new_entry
    buffer._rebuild_index()
    return True


def sample_replay(buffer: LevelBuffer, config: ReplayConfig, c: int,
                  rng: np.random.Generator) -> MazeLevel:
    probs = replay_distribution(buffer, config, c)
    return buffer.entries[int(rng.choice(len(buffer), p=probs))].level


def sample_decision(p: float, rng: np.random.Generator) -> Decision:
    """Replay with probability p, otherwise Generate."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"replay probability must lie in [0, 1], got {p}")
    return Decision.REPLAY if rng.random() < p else Decision.GENERATE


# ============================================================================
# SNAPSHOTS
# ============================================================================

def buffer_snapshot(buffer: LevelBuffer) -> List[dict]:
    """Header record then one record per entry."""
    records = [{
        "capacity": buffer.capacity,
        "episode_count": buffer.episode_count,
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
    }]
    for e in buffer.entries:
        records.append({
            "level": encode_level(e.level),
            "score": e.score,
            "timestamp": e.timestamp,
            "max_return": e.max_return,
        })
    return records


def save_buffer(buffer: LevelBuffer, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in buffer_snapshot(buffer):
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_buffer(path: Union[str, Path]) -> LevelBuffer:
    with open(path, "r", encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    if not records or "capacity" not in records[0]:
        raise InvalidInputError(f"{path}: missing snapshot header")
    header = records[0]
    if header.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
        raise InvalidInputError(f"{path}: unsupported schema_version {header.get('schema_version')}")
    entries = [
        BufferEntry(decode_level(r["level"]), float(r["score"]), int(r["timestamp"]),
                    float(r.get("max_return", 0.0)))
        for r in records[1:]
    ]
    if len(entries) > header["capacity"]:
        raise InvalidInputError(f"{path}: {len(entries)} entries exceed capacity {header['capacity']}")
    return LevelBuffer(int(header["capacity"]), entries, int(header["episode_count"]))
