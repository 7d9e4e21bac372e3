"""
Dual Curriculum Design laboratory - Source Package
"""

from src.errors import (
    DcdError,
    InvalidInputError,
    LevelParseError,
    SolverError,
    PreconditionError,
    ContractViolationError,
    ConfigError,
)
from src.game_core import (
    PayoffGame,
    MixedStudent,
    MixedTeacher,
    TeacherObjective,
    ObjectiveKind,
    DualGameSpec,
    Profile,
    BaseGame,
    worst_case_regret,
    minimax_regret_solve,
    nash_gap,
    theorem1_bound_check,
    excess_regret_check,
    regret_pair_check,
    build_table1_game,
    verify_game_suite,
)
from src.maze import (
    MazeLevel,
    LevelTemplate,
    EnvConfig,
    Trajectory,
    RolloutMode,
    env_step,
    design_step,
    shortest_path_length,
    encode_level,
    decode_level,
)
from src.agent import PolicyTable, ValueTable, StudentAgent, gae_advantages, update_actor_critic
from src.curation import LevelBuffer, ReplayConfig, ScoringFunction, update_buffer, sample_replay
from src.evaluation import (
    lzw_complexity,
    solved_rate,
    build_test_suite,
    complexity_report,
    evaluate_suites,
)
from src.monitoring import RunReport, aggregate_reports
from src.teachers import Algorithm, DcdConfig, DcdRunner, run_dcd
from src.config import parse_config

__version__ = "1.0.0"
__all__ = [
    # Errors
    "DcdError",
    "InvalidInputError",
    "LevelParseError",
    "SolverError",
    "PreconditionError",
    "ContractViolationError",
    "ConfigError",
    # Finite game
    "PayoffGame",
    "MixedStudent",
    "MixedTeacher",
    "TeacherObjective",
    "ObjectiveKind",
    "DualGameSpec",
    "Profile",
    "BaseGame",
    "worst_case_regret",
    "minimax_regret_solve",
    "nash_gap",
    "theorem1_bound_check",
    "excess_regret_check",
    "regret_pair_check",
    "build_table1_game",
    "verify_game_suite",
    # Maze
    "MazeLevel",
    "LevelTemplate",
    "EnvConfig",
    "Trajectory",
    "RolloutMode",
    "env_step",
    "design_step",
    "shortest_path_length",
    "encode_level",
    "decode_level",
    # Student
    "PolicyTable",
    "ValueTable",
    "StudentAgent",
    "gae_advantages",
    "update_actor_critic",
    # Curation
    "LevelBuffer",
    "ReplayConfig",
    "ScoringFunction",
    "update_buffer",
    "sample_replay",
    # Evaluation
    "lzw_complexity",
    "solved_rate",
    "build_test_suite",
    "complexity_report",
    "evaluate_suites",
    # Runs
    "RunReport",
    "aggregate_reports",
    "Algorithm",
    "DcdConfig",
    "DcdRunner",
    "run_dcd",
    "parse_config",
]
