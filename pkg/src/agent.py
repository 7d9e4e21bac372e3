"""
Tabular actor-critic student.

This module provides:
- PolicyTable / ValueTable: softmax logits and state values keyed by state index
- Action sampling (act) and greedy evaluation (greedy_action)
- Trajectory collection in Train or Eval (stop-gradient) mode
- GAE advantages and value targets
- The vanilla policy-gradient + value-regression update
- Text checkpoints for both tables
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.errors import ContractViolationError, InvalidInputError
from src.maze import (
    NUM_ACTIONS,
    NUM_DIRECTIONS,
    EnvConfig,
    MazeLevel,
    RolloutMode,
    Trajectory,
    env_step,
)

logger = logging.getLogger(__name__)


# ============================================================================
# CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class GaeConfig:
    """Discount gamma and GAE lambda (defaults 0.995 / 0.95)."""
    gamma: float = 0.995
    gae_lambda: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise InvalidInputError(f"gae_lambda must lie in [0, 1], got {self.gae_lambda}")


@dataclass(frozen=True)
class AgentConfig:
    policy_lr: float = 0.1
    value_lr: float = 0.1

    def __post_init__(self):
        if self.policy_lr <= 0 or not 0.0 < self.value_lr <= 1.0:
            raise InvalidInputError("policy_lr must be positive and value_lr in (0, 1]")


# ============================================================================
# TABLES
# ============================================================================

def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


class PolicyTable:
    """Softmax policy; states without a row behave as all-zero logits."""

    def __init__(self, num_actions: int = NUM_ACTIONS, learning_rate: float = 0.1):
        self.num_actions = num_actions
        self.learning_rate = learning_rate
        self.logits: Dict[int, np.ndarray] = {}

    def row(self, state: int) -> np.ndarray:
        row = self.logits.get(state)
        return row if row is not None else np.zeros(self.num_actions)

    def probabilities(self, state: int) -> np.ndarray:
        return softmax(self.row(state))

    def set_row(self, state: int, values) -> None:
        row = np.asarray(values, dtype=float)
        if row.shape != (self.num_actions,) or not np.all(np.isfinite(row)):
            raise InvalidInputError(f"logit row for state {state} must be {self.num_actions} finite values")
        self.logits[state] = row

    def param_hash(self) -> str:
        """Digest of all logits; unchanged iff no parameter moved."""
        digest = hashlib.sha256()
        for state in sorted(self.logits):
            digest.update(str(state).encode())
            digest.update(self.logits[state].tobytes())
        return digest.hexdigest()

    def copy(self) -> "PolicyTable":
        other = PolicyTable(self.num_actions, self.learning_rate)
        other.logits = {s: row.copy() for s, row in self.logits.items()}
        return other


class ValueTable:
    """State-value estimates V(s), zero for unseen states."""

    def __init__(self, learning_rate: float = 0.1):
        self.learning_rate = learning_rate
        self.values: Dict[int, float] = {}

    def get(self, state: int) -> float:
        return self.values.get(state, 0.0)

    def set(self, state: int, value: float) -> None:
        if not np.isfinite(value):
            raise InvalidInputError(f"non-finite value for state {state}")
        self.values[state] = float(value)

    def copy(self) -> "ValueTable":
        other = ValueTable(self.learning_rate)
        other.values = dict(self.values)
        return other


# ============================================================================
# ACTING AND ROLLOUTS
# ============================================================================

def act(policy: PolicyTable, state: int, rng: np.random.Generator) -> int:
    """Sample an action from softmax(logits[state])."""
    return int(rng.choice(policy.num_actions, p=policy.probabilities(state)))


def greedy_action(policy: PolicyTable, state: int) -> int:
    """Argmax action, ties to the lowest index."""
    return int(np.argmax(policy.row(state)))


def collect_trajectory(
    policy: PolicyTable,
    value_table: ValueTable,
    level: MazeLevel,
    config: EnvConfig,
    mode: RolloutMode,
    rng: Optional[np.random.Generator] = None,
    greedy: bool = False,
) -> Trajectory:
    """
    Roll out one episode, recording V(s_t) from the current value table.

    Args:
        policy: Student policy (never modified here)
        value_table: Value estimates to record
        level: Level to play
        config: Horizon T_max
        mode: Train or Eval; recorded so updates can refuse Eval rollouts
        rng: Needed unless greedy
        greedy: Use argmax actions instead of sampling

    Returns:
        Trajectory with at most T_max steps
    """
    if rng is None and not greedy:
        raise InvalidInputError("stochastic rollouts need an rng")

    state = level.start_state
    states, actions, rewards, values = [state], [], [], []
    terminal = False
    for t in range(config.max_steps):
        values.append(value_table.get(state))
        action = greedy_action(policy, state) if greedy else act(policy, state, rng)
        state, reward, done = env_step(level, state, action, t, config)
        states.append(state)
        actions.append(action)
        rewards.append(reward)
        if done:
            terminal = state // NUM_DIRECTIONS == level.goal
            break

    bootstrap = 0.0 if terminal else value_table.get(state)
    return Trajectory(states, actions, rewards, values, terminal, bootstrap, RolloutMode(mode))


# ============================================================================
# ADVANTAGES
# ============================================================================

def td_errors(traj: Trajectory, gamma: float) -> np.ndarray:
    """delta_t = r_t + gamma V(s_{t+1}) - V(s_t), with the recorded bootstrap at the end."""
    values = np.append(np.asarray(traj.values, dtype=float), traj.bootstrap_value)
    rewards = np.asarray(traj.rewards, dtype=float)
    return rewards + gamma * values[1:] - values[:-1]


def discounted_cumsum(deltas: np.ndarray, factor: float) -> np.ndarray:
    out = np.zeros_like(deltas)
    running = 0.0
    for t in reversed(range(len(deltas))):
        running = deltas[t] + factor * running
        out[t] = running
    return out


def gae_advantages(traj: Trajectory, config: GaeConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates and value targets.

    A_t = sum_{k >= t} (gamma lambda)^{k-t} delta_k, targets = A + V.
    """
    advantages = discounted_cumsum(td_errors(traj, config.gamma), config.gamma * config.gae_lambda)
    return advantages, advantages + np.asarray(traj.values, dtype=float)


# ============================================================================
# UPDATES
# ============================================================================

def log_likelihood(policy: PolicyTable, traj: Trajectory, advantages: np.ndarray) -> float:
    """Advantage-weighted log-likelihood sum_t A_t log pi(a_t | s_t)."""
    total = 0.0
    for state, action, adv in zip(traj.states, traj.actions, advantages):
        total += adv * np.log(policy.probabilities(state)[action])
    return float(total)


def policy_gradient(
    policy: PolicyTable, traj: Trajectory, advantages: np.ndarray
) -> Dict[int, np.ndarray]:
    """Gradient of log_likelihood w.r.t. each visited logit row."""
    grads: Dict[int, np.ndarray] = {}
    for state, action, adv in zip(traj.states, traj.actions, advantages):
        g = -policy.probabilities(state)
        g[action] += 1.0
        grads[state] = grads.get(state, 0.0) + adv * g
    return grads


def update_actor_critic(
    policy: PolicyTable,
    value_table: ValueTable,
    traj: Trajectory,
    advantages: np.ndarray,
    targets: np.ndarray,
    lr: Optional[float] = None,
) -> None:
    """
    One policy-gradient ascent step plus value regression toward the targets.

    The gradient is taken at the pre-update logits. Each visited state's
    value moves toward the mean of its targets by value_table.learning_rate.

    Raises:
        ContractViolationError: if the trajectory was collected in Eval mode
    """
    if traj.mode == RolloutMode.EVAL:
        raise ContractViolationError("refusing to update on a stop-gradient (Eval) trajectory")
    if len(advantages) != traj.length or len(targets) != traj.length:
        raise InvalidInputError("advantages/targets length must equal trajectory length")

    lr = policy.learning_rate if lr is None else lr
    for state, grad in policy_gradient(policy, traj, advantages).items():
        if np.any(grad != 0.0):
            policy.set_row(state, policy.row(state) + lr * grad)

    by_state: Dict[int, List[float]] = {}
    for state, target in zip(traj.states, targets):
        by_state.setdefault(state, []).append(float(target))
    lr_v = value_table.learning_rate
    for state, state_targets in by_state.items():
        current = value_table.get(state)
        value_table.set(state, current + lr_v * (np.mean(state_targets) - current))


@dataclass
class StudentAgent:
    """A policy/value pair plus its update counter."""
    policy: PolicyTable = field(default_factory=PolicyTable)
    values: ValueTable = field(default_factory=ValueTable)
    updates: int = 0

    @classmethod
    def from_config(cls, config: AgentConfig) -> "StudentAgent":
        return cls(PolicyTable(learning_rate=config.policy_lr), ValueTable(config.value_lr))

    def rollout(self, level: MazeLevel, env: EnvConfig, mode: RolloutMode,
                rng: np.random.Generator) -> Trajectory:
        return collect_trajectory(self.policy, self.values, level, env, mode, rng)

    def train(self, traj: Trajectory, gae: GaeConfig) -> None:
        advantages, targets = gae_advantages(traj, gae)
        update_actor_critic(self.policy, self.values, traj, advantages, targets)
        self.updates += 1


# ============================================================================
# CHECKPOINTS
# ============================================================================

def save_tables(policy: PolicyTable, values: ValueTable, path: Union[str, Path]) -> None:
    """Write '# policy' and '# value' sections of 'state v0 v1 ...' rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# policy num_actions={policy.num_actions} learning_rate={policy.learning_rate!r}"]
    for state in sorted(policy.logits):
        lines.append(" ".join([str(state)] + [repr(float(v)) for v in policy.logits[state]]))
    lines.append(f"# value learning_rate={values.learning_rate!r}")
    for state in sorted(values.values):
        lines.append(f"{state} {values.values[state]!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("saved checkpoint %s (%d policy rows)", path, len(policy.logits))


def _parse_options(line: str) -> Dict[str, str]:
    return dict(tok.split("=", 1) for tok in line.split()[2:] if "=" in tok)


def load_tables(path: Union[str, Path]) -> Tuple[PolicyTable, ValueTable]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")

    policy, values, section = None, None, None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# policy"):
            opts = _parse_options(line)
            policy = PolicyTable(int(opts.get("num_actions", NUM_ACTIONS)),
                                 float(opts.get("learning_rate", 0.1)))
            section = "policy"
            continue
        if line.startswith("# value"):
            values = ValueTable(float(_parse_options(line).get("learning_rate", 0.1)))
            section = "value"
            continue
        try:
            tokens = line.split()
            state, numbers = int(tokens[0]), [float(tok) for tok in tokens[1:]]
        except (ValueError, IndexError) as e:
            raise InvalidInputError(f"{path}:{lineno}: {e}") from e
        if section == "policy":
            policy.set_row(state, numbers)
        elif section == "value" and len(numbers) == 1:
            values.set(state, numbers[0])
        else:
            raise InvalidInputError(f"{path}:{lineno}: row outside a section or malformed")

    if policy is None or values is None:
        raise InvalidInputError(f"{path}: missing '# policy' or '# value' section")
    return policy, values
