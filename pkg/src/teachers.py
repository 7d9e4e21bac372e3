"""
Level generators and Dual Curriculum Design loops.

This module provides:
- Random level design (domain randomization)
- GeneratorPolicy: tabular REINFORCE generator over design actions
- PAIRED-style regret estimates
- DcdRunner / run_dcd: DR, PLR, Robust PLR, PAIRED, REPAIRED and Minimax
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.agent import AgentConfig, GaeConfig, StudentAgent, softmax
from src.curation import (
    Decision,
    LevelBuffer,
    ReplayConfig,
    ScoringFunction,
    sample_decision,
    sample_replay,
    score_max_mc,
    score_positive_value_loss,
    score_true_regret,
    update_buffer,
)
from src.errors import ConfigError, ContractViolationError, InvalidInputError
from src.evaluation import (
    ComplexityRecord,
    EvalSuite,
    complexity_record,
    complexity_report,
    default_suites,
    greedy_rollout,
    solved_rate,
    summarize_complexity,
)
from src.maze import (
    DesignState,
    EnvConfig,
    LevelTemplate,
    MazeLevel,
    RolloutMode,
    Trajectory,
    design_step,
    initial_design_state,
    rollout_return,
)
from src.monitoring import COUNTER_NAMES, MetricsRow, RunMonitor, RunReport

logger = logging.getLogger(__name__)


# ============================================================================
# RANDOM GENERATOR
# ============================================================================

def generate_random_design(rng: np.random.Generator, template: LevelTemplate) -> MazeLevel:
    """W uniform block actions, then agent and goal placement, all through design_step."""
    state = initial_design_state(template)
    for _ in range(template.block_budget + 2):
        state = design_step(state, int(rng.integers(template.num_cells)), rng)
    return state.level()


# ============================================================================
# LEARNED GENERATOR
# ============================================================================

Context = Tuple[int, int]


@dataclass
class DesignTrajectory:
    """(context, action) per design step; context = (step, walls placed so far)."""
    contexts: List[Context] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.actions)


class GeneratorPolicy:
    """
    Softmax policy over the grid's cells, conditioned on the design step
    and on the number of walls placed so far.
    """

    def __init__(self, num_actions: int, learning_rate: float = 0.05, entropy_coef: float = 0.0):
        if num_actions < 1:
            raise InvalidInputError("generator needs at least one action")
        self.num_actions = num_actions
        self.learning_rate = learning_rate
        self.entropy_coef = entropy_coef
        self.logits: Dict[Context, np.ndarray] = {}

    @staticmethod
    def context(state: DesignState) -> Context:
        return state.t, len(state.walls)

    def row(self, context: Context) -> np.ndarray:
        row = self.logits.get(context)
        return row if row is not None else np.zeros(self.num_actions)

    def probabilities(self, context: Context) -> np.ndarray:
        return softmax(self.row(context))

    def sample(self, context: Context, rng: np.random.Generator) -> int:
        return int(rng.choice(self.num_actions, p=self.probabilities(context)))


def design_level(
    gen: GeneratorPolicy, rng: np.random.Generator, template: LevelTemplate
) -> Tuple[MazeLevel, DesignTrajectory]:
    """Roll the generator through one full design episode."""
    if gen.num_actions != template.num_cells:
        raise InvalidInputError(f"generator has {gen.num_actions} actions, grid has {template.num_cells} cells")
    state = initial_design_state(template)
    traj = DesignTrajectory()
    for _ in range(state.total_steps):
        ctx = gen.context(state)
        action = gen.sample(ctx, rng)
        traj.contexts.append(ctx)
        traj.actions.append(action)
        state = design_step(state, action, rng)
    return state.level(), traj


def _entropy(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return float(-(nz * np.log(nz)).sum())


def generator_objective(gen: GeneratorPolicy, traj: DesignTrajectory, reward: float) -> float:
    """reward * sum_t log p(a_t | c_t) + entropy_coef * sum_t H(p(. | c_t))."""
    total = 0.0
    for ctx, action in zip(traj.contexts, traj.actions):
        probs = gen.probabilities(ctx)
        total += reward * np.log(probs[action]) + gen.entropy_coef * _entropy(probs)
    return float(total)


def generator_gradient(
    gen: GeneratorPolicy, traj: DesignTrajectory, reward: float
) -> Dict[Context, np.ndarray]:
    """Analytic gradient of generator_objective with respect to each visited logit row."""
    grads: Dict[Context, np.ndarray] = {}
    for ctx, action in zip(traj.contexts, traj.actions):
        probs = gen.probabilities(ctx)
        g = -reward * probs
        g[action] += reward
        if gen.entropy_coef:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_p = np.where(probs > 0, np.log(probs), 0.0)
            g += gen.entropy_coef * (-probs * (log_p + _entropy(probs)))
        grads[ctx] = grads.get(ctx, 0.0) + g
    return grads


def update_generator(gen: GeneratorPolicy, traj: DesignTrajectory, episode_reward: float) -> None:
    """One REINFORCE ascent step with entropy bonus."""
    for ctx, grad in generator_gradient(gen, traj, episode_reward).items():
        if np.any(grad != 0.0):
            gen.logits[ctx] = gen.row(ctx) + gen.learning_rate * grad


def estimate_regret_paired(return_a: float, return_b: float) -> float:
    """Antagonist return minus protagonist return (unclipped)."""
    return return_b - return_a


# ============================================================================
# CONFIGURATION
# ============================================================================

class Algorithm(str, Enum):
    DR = "DR"
    PLR = "PLR"
    ROBUST_PLR = "RobustPLR"
    PAIRED = "PAIRED"
    REPAIRED = "REPAIRED"
    MINIMAX = "Minimax"


@dataclass(frozen=True)
class GeneratorConfig:
    learning_rate: float = 0.05
    entropy_coef: float = 0.0


@dataclass(frozen=True)
class DcdConfig:
    algorithm: Algorithm = Algorithm.ROBUST_PLR
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    gae: GaeConfig = field(default_factory=GaeConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    template: LevelTemplate = field(default_factory=LevelTemplate)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    budget: int = 1000
    seed: int = 0
    eval_interval: int = 0
    eval_levels: int = 10
    eval_attempts: int = 1
    eval_suites: Tuple[str, ...] = ("Rooms", "Spiral", "PerfectMaze", "Corridor")
    checkpoint_interval: int = 0
    check_invariants: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        except ValueError:
            raise ConfigError(f"unknown algorithm '{self.algorithm}'", "algorithm") from None
        if self.budget < 1:
            raise ConfigError("budget must be positive", "budget")
        if self.eval_interval < 0:
            raise ConfigError("eval_interval must be nonnegative", "eval-interval")
        if self.algorithm == Algorithm.REPAIRED and self.replay.scoring != ScoringFunction.MAX_MC:
            raise ConfigError("REPAIRED scores levels with MaxMC", "scoring")
        if self.eval_suites and self.template.width != self.template.height:
            raise ConfigError("evaluation suites need a square grid", "width")

    @property
    def uses_buffer(self) -> bool:
        return self.algorithm in (Algorithm.PLR, Algorithm.ROBUST_PLR, Algorithm.REPAIRED)

    @property
    def uses_generator(self) -> bool:
        return self.algorithm in (Algorithm.PAIRED, Algorithm.REPAIRED, Algorithm.MINIMAX)

    def to_dict(self) -> Dict:
        """JSON-ready echo with enums as their values."""
        def plain(value):
            if isinstance(value, Enum):
                return value.value
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [plain(v) for v in value]
            return value
        return plain(asdict(self))


# ============================================================================
# ORCHESTRATION
# ============================================================================

STREAMS = ("env", "agent", "buffer", "teacher", "eval")


class DcdRunner:
    """
    One training run. Owns the students, buffers and generator.

    Every random stream is a child of SeedSequence(seed) so the level
    generator, student rollouts, replay decisions, teacher sampling and
    evaluation never share draws.
    """

    def __init__(
        self,
        config: DcdConfig,
        suites: Optional[Sequence[EvalSuite]] = None,
        monitor: Optional[RunMonitor] = None,
        progress: bool = False,
    ):
        self.config = config
        children = np.random.SeedSequence(config.seed).spawn(len(STREAMS))
        self.rngs = {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}

        self.student = StudentAgent.from_config(config.agent)
        self.antagonist: Optional[StudentAgent] = None
        if config.algorithm in (Algorithm.PAIRED, Algorithm.REPAIRED):
            self.antagonist = StudentAgent.from_config(config.agent)

        self.buffer: Optional[LevelBuffer] = None
        self.antagonist_buffer: Optional[LevelBuffer] = None
        if config.uses_buffer:
            self.buffer = LevelBuffer(config.replay.buffer_size)
        if config.algorithm == Algorithm.REPAIRED:
            self.antagonist_buffer = LevelBuffer(config.replay.buffer_size)

        self.generator: Optional[GeneratorPolicy] = None
        if config.uses_generator:
            self.generator = GeneratorPolicy(
                config.template.num_cells, config.generator.learning_rate, config.generator.entropy_coef
            )

        if suites is None and config.eval_suites:
            suites = [
                s for s in default_suites(config.template.width, config.seed, config.eval_levels,
                                          config.eval_attempts)
                if s.name in config.eval_suites
            ]
        self.suites: List[EvalSuite] = list(suites or [])
        self.monitor = monitor
        self.progress = progress

        self.counters: Dict[str, int] = {name: 0 for name in COUNTER_NAMES}
        self.metrics: List[MetricsRow] = []
        self._curriculum: List[ComplexityRecord] = []

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    @property
    def episode(self) -> int:
        return self.counters["episodes"]

    def _train(self, student: StudentAgent, traj: Trajectory, counter: str) -> None:
        student.train(traj, self.config.gae)
        self.counters[counter] += 1

    def _rollout(self, student: StudentAgent, level: MazeLevel, mode: RolloutMode) -> Trajectory:
        return student.rollout(level, self.config.env, mode, self.rngs["agent"])

    def _score(self, buffer: LevelBuffer, level: MazeLevel, traj: Trajectory) -> float:
        replay = self.config.replay
        if replay.scoring == ScoringFunction.POSITIVE_VALUE_LOSS:
            return score_positive_value_loss(traj, self.config.gae)
        if replay.scoring == ScoringFunction.TRUE_REGRET:
            return score_true_regret(level, traj, self.config.env)
        r_max = max(buffer.max_return(level), rollout_return(traj))
        return score_max_mc(traj, r_max, replay.max_mc_variant)

    def _update(self, buffer: LevelBuffer, level: MazeLevel, traj: Trajectory) -> None:
        score = self._score(buffer, level, traj)
        update_buffer(buffer, level, score, self.episode, self.config.replay, rollout_return(traj))

    def _decide(self, *buffers: LevelBuffer) -> Decision:
        decision = sample_decision(self.config.replay.replay_rate, self.rngs["buffer"])
        if decision == Decision.REPLAY and any(len(b) == 0 for b in buffers):
            logger.debug("episode %d: replay with an empty buffer, generating instead", self.episode)
            self.counters["fallback_episodes"] += 1
            decision = Decision.GENERATE
        self.counters["replay_episodes" if decision == Decision.REPLAY else "generate_episodes"] += 1
        return decision

    def _random_level(self) -> MazeLevel:
        return generate_random_design(self.rngs["env"], self.config.template)

    def _designed_level(self) -> Tuple[MazeLevel, DesignTrajectory]:
        return design_level(self.generator, self.rngs["teacher"], self.config.template)

    def _update_generator(self, design: DesignTrajectory, reward: float) -> None:
        update_generator(self.generator, design, reward)
        self.counters["generator_updates"] += 1

    def _hashes(self) -> Tuple[str, ...]:
        students = [self.student] + ([self.antagonist] if self.antagonist else [])
        return tuple(s.policy.param_hash() for s in students)

    def _record(self, level: MazeLevel, traj: Trajectory) -> None:
        self._curriculum.append(complexity_record(level, traj))

    # ------------------------------------------------------------------
    # one episode per algorithm
    # ------------------------------------------------------------------

    def _dr_episode(self) -> None:
        level = self._random_level()
        traj = self._rollout(self.student, level, RolloutMode.TRAIN)
        self._train(self.student, traj, "student_updates")
        self.counters["generate_episodes"] += 1
        self._record(level, traj)

    def _plr_episode(self, robust: bool) -> None:
        if self._decide(self.buffer) == Decision.REPLAY:
            level = sample_replay(self.buffer, self.config.replay, self.episode, self.rngs["buffer"])
            traj = self._rollout(self.student, level, RolloutMode.TRAIN)
            self._train(self.student, traj, "student_updates")
            self._update(self.buffer, level, traj)
            self._record(level, traj)
            return

        level = self._random_level()
        if robust:
            # stop-gradient: score the fresh level without learning from it
            before = self._hashes() if self.config.check_invariants else None
            traj = self._rollout(self.student, level, RolloutMode.EVAL)
            self._update(self.buffer, level, traj)
            if before is not None and self._hashes() != before:
                raise ContractViolationError(f"student parameters changed on generate episode {self.episode}")
        else:
            traj = self._rollout(self.student, level, RolloutMode.TRAIN)
            self._train(self.student, traj, "student_updates")
            self._update(self.buffer, level, traj)
        self._record(level, traj)

    def _paired_episode(self) -> None:
        level, design = self._designed_level()
        traj_a = self._rollout(self.student, level, RolloutMode.TRAIN)
        traj_b = self._rollout(self.antagonist, level, RolloutMode.TRAIN)
        self._train(self.student, traj_a, "student_updates")
        self._train(self.antagonist, traj_b, "antagonist_updates")
        regret = estimate_regret_paired(rollout_return(traj_a), rollout_return(traj_b))
        self._update_generator(design, regret)
        self.counters["generate_episodes"] += 1
        self._record(level, traj_a)

    def _repaired_episode(self) -> None:
        if self._decide(self.buffer, self.antagonist_buffer) == Decision.REPLAY:
            for student, buffer, counter in (
                (self.student, self.buffer, "student_updates"),
                (self.antagonist, self.antagonist_buffer, "antagonist_updates"),
            ):
                level = sample_replay(buffer, self.config.replay, self.episode, self.rngs["buffer"])
                traj = self._rollout(student, level, RolloutMode.TRAIN)
                self._train(student, traj, counter)
                self._update(buffer, level, traj)
                if student is self.student:
                    self._record(level, traj)
            return

        before = self._hashes() if self.config.check_invariants else None
        level, design = self._designed_level()
        traj_a = self._rollout(self.student, level, RolloutMode.EVAL)
        traj_b = self._rollout(self.antagonist, level, RolloutMode.EVAL)
        self._update_generator(design, estimate_regret_paired(rollout_return(traj_a), rollout_return(traj_b)))
        self._update(self.buffer, level, traj_a)
        self._update(self.antagonist_buffer, level, traj_b)
        if before is not None and self._hashes() != before:
            raise ContractViolationError(f"student parameters changed on generate episode {self.episode}")
        self._record(level, traj_a)

    def _minimax_episode(self) -> None:
        level, design = self._designed_level()
        traj = self._rollout(self.student, level, RolloutMode.TRAIN)
        self._train(self.student, traj, "student_updates")
        self._update_generator(design, -rollout_return(traj))
        self.counters["generate_episodes"] += 1
        self._record(level, traj)

    def step(self) -> None:
        """Run one episode of the configured algorithm."""
        self.counters["episodes"] += 1
        algorithm = self.config.algorithm
        if algorithm == Algorithm.DR:
            self._dr_episode()
        elif algorithm == Algorithm.PLR:
            self._plr_episode(robust=False)
        elif algorithm == Algorithm.ROBUST_PLR:
            self._plr_episode(robust=True)
        elif algorithm == Algorithm.PAIRED:
            self._paired_episode()
        elif algorithm == Algorithm.REPAIRED:
            self._repaired_episode()
        else:
            self._minimax_episode()

    # ------------------------------------------------------------------
    # evaluation and the main loop
    # ------------------------------------------------------------------

    def evaluate(self) -> Dict[str, float]:
        """Metrics rows for the curriculum since the last call and for every suite."""
        buffer_size = len(self.buffer) if self.buffer is not None else 0
        buffer_score = self.buffer.mean_score() if self.buffer is not None else None
        base = {"episode": self.episode, "updates": self.counters["student_updates"],
                "buffer_size": buffer_size, "mean_buffer_score": buffer_score}

        train = summarize_complexity(self._curriculum)
        solved = train["solved_count"] / train["episodes"] if train["episodes"] else None
        self.metrics.append(MetricsRow(
            suite="train", solved_rate=solved, block_count=train["block_count"],
            shortest_path=train["shortest_path"], solved_path_mean=train["solved_path_mean"],
            action_lzw_mean=train["action_lzw_mean"], **base,
        ))
        self._curriculum = []

        rates = {}
        for suite in self.suites:
            # more than one attempt per level samples actions from the eval stream
            _, rate = solved_rate(self.student.policy, suite, self.config.env, self.rngs["eval"],
                                  greedy=suite.attempts_per_level == 1)
            records = complexity_report(
                (level, greedy_rollout(self.student.policy, level, self.config.env)) for level in suite.levels
            )
            summary = summarize_complexity(records)
            self.metrics.append(MetricsRow(
                suite=suite.name, solved_rate=rate, block_count=summary["block_count"],
                shortest_path=summary["shortest_path"], solved_path_mean=summary["solved_path_mean"],
                action_lzw_mean=summary["action_lzw_mean"], **base,
            ))
            rates[suite.name] = rate
        if rates:
            rates["aggregate"] = float(np.mean(list(rates.values())))
            logger.info("episode %d: aggregate solved rate %.3f", self.episode, rates["aggregate"])
        return rates

    def _save_artifacts(self) -> None:
        if self.monitor is None:
            return
        self.monitor.save_checkpoint("student", self.student, self.episode)
        if self.antagonist is not None:
            self.monitor.save_checkpoint("antagonist", self.antagonist, self.episode)
        if self.buffer is not None:
            self.monitor.save_buffer("student", self.buffer, self.episode)
        if self.antagonist_buffer is not None:
            self.monitor.save_buffer("antagonist", self.antagonist_buffer, self.episode)

    def run(self) -> RunReport:
        config = self.config
        logger.info("starting %s run: budget=%d seed=%d", config.algorithm.value, config.budget, config.seed)
        start = time.perf_counter()
        checkpoint_every = config.checkpoint_interval or config.eval_interval

        episodes = range(config.budget)
        if self.progress:
            episodes = tqdm(episodes, desc=config.algorithm.value, unit="ep")
        for _ in episodes:
            self.step()
            if config.eval_interval and self.episode % config.eval_interval == 0 and self.episode < config.budget:
                self.evaluate()
            if checkpoint_every and self.episode % checkpoint_every == 0:
                self._save_artifacts()

        final = self.evaluate()
        if self.monitor is not None:
            self.monitor.save_final_checkpoint("student", self.student)
            if self.antagonist is not None:
                self.monitor.save_final_checkpoint("antagonist", self.antagonist)

        report = RunReport(
            config=config.to_dict(),
            counters=dict(self.counters),
            metrics=list(self.metrics),
            final_solved_rates=final,
            wall_clock=time.perf_counter() - start,
        )
        logger.info("finished %s run: %s", config.algorithm.value, self.counters)
        if self.monitor is not None:
            self.monitor.close(report)
        return report


def run_dcd(
    config: DcdConfig,
    suites: Optional[Sequence[EvalSuite]] = None,
    output_dir: Optional[Union[str, Path]] = None,
    progress: bool = False,
) -> RunReport:
    """
    Train a student with the configured curriculum algorithm.

    Args:
        config: Validated run configuration
        suites: Held-out suites (built from the config when omitted)
        output_dir: When given, checkpoints, buffer snapshots, report.json and
            metrics.csv are written there
        progress: Show a tqdm progress bar

    Returns:
        RunReport with counters, per-interval metrics and final solved rates
    """
    monitor = RunMonitor(output_dir) if output_dir is not None else None
    return DcdRunner(config, suites, monitor, progress).run()


if __name__ == "__main__":
    small = DcdConfig(
        algorithm=Algorithm.ROBUST_PLR,
        template=LevelTemplate(5, 5, 4),
        env=EnvConfig(max_steps=30),
        budget=200,
        eval_levels=3,
    )
    report = run_dcd(small)
    print(report.counters)
    print(report.final_solved_rates)
