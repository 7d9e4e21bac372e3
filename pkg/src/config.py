"""
Run configuration for the Dual Curriculum Design laboratory.

This module provides:
- RunSettings: flat, validated pydantic model with one field per knob
- parse_config: defaults < key=value config file < command-line flags
- RunConfig: the resolved configuration handed to the runner
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.agent import AgentConfig, GaeConfig
from src.curation import MaxMcVariant, Prioritization, ReplayConfig, ScoringFunction
from src.errors import ConfigError, InvalidInputError
from src.evaluation import SuiteKind
from src.maze import EnvConfig, LevelTemplate
from src.teachers import Algorithm, DcdConfig, GeneratorConfig

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "DCD_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "runs"


def flag_name(key: str) -> str:
    return key.replace("_", "-")


def field_name(key: str) -> str:
    return key.strip().replace("-", "_")


class RunSettings(BaseModel):
    """Every tunable knob. Defaults follow the MiniGrid hyperparameters at desk scale."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    # Curriculum
    algorithm: Algorithm = Algorithm.ROBUST_PLR
    replay_rate: float = Field(default=0.5, ge=0.0, le=1.0)
    buffer_size: int = Field(default=128, ge=1)
    temperature: float = Field(default=0.3, gt=0.0)
    staleness: float = Field(default=0.3, ge=0.0, le=1.0)
    scoring: ScoringFunction = ScoringFunction.MAX_MC
    prioritization: Prioritization = Prioritization.RANK
    max_mc_variant: MaxMcVariant = MaxMcVariant.PER_STEP

    # Student
    gamma: float = Field(default=0.995, gt=0.0, le=1.0)
    gae_lambda: float = Field(default=0.95, ge=0.0, le=1.0)
    policy_lr: float = Field(default=0.1, gt=0.0)
    value_lr: float = Field(default=0.1, gt=0.0, le=1.0)

    # Generator
    generator_lr: float = Field(default=0.05, gt=0.0)
    generator_entropy: float = Field(default=0.0, ge=0.0)

    # Environment
    width: int = Field(default=8, ge=2, le=32)
    height: int = Field(default=8, ge=2, le=32)
    block_budget: int = Field(default=12, ge=0)
    max_steps: int = Field(default=100, ge=1)

    # Run
    budget: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    eval_interval: int = Field(default=0, ge=0)
    eval_levels: int = Field(default=10, ge=1)
    eval_attempts: int = Field(default=1, ge=1)
    eval_suites: Tuple[str, ...] = ("Rooms", "Spiral", "PerfectMaze", "Corridor")
    suite_manifest: Optional[str] = None
    checkpoint_interval: int = Field(default=0, ge=0)
    check_invariants: bool = True
    output: Optional[str] = None

    @field_validator("eval_suites", mode="before")
    @classmethod
    def _split_suites(cls, value):
        if isinstance(value, str):
            return tuple(s.strip() for s in value.split(",") if s.strip())
        return value

    @field_validator("eval_suites")
    @classmethod
    def _known_suites(cls, value):
        unknown = [s for s in value if s not in {k.value for k in SuiteKind}]
        if unknown:
            raise ValueError(f"unknown suite kinds {unknown}")
        return value


@dataclass(frozen=True)
class RunConfig:
    """A complete, validated configuration."""
    dcd: DcdConfig
    output_dir: Path
    suite_manifest: Optional[Path]
    settings: RunSettings

    @property
    def run_dir(self) -> Path:
        return self.output_dir / f"{self.dcd.algorithm.value}-seed{self.dcd.seed}"


def default_output_dir() -> str:
    load_dotenv()
    return os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Flat key=value file; keys may use dashes or underscores."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", "config")
    return {field_name(k): v for k, v in dotenv_values(path).items() if v is not None}


def _to_config_error(error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    key = flag_name(str(first["loc"][0])) if first.get("loc") else "config"
    if first.get("type") == "extra_forbidden":
        return ConfigError(f"unknown key '{key}'", key)
    return ConfigError(f"{key}: {first['msg']} (got {first.get('input')!r})", key)


def build_dcd_config(settings: RunSettings) -> DcdConfig:
    """Turn validated settings into the typed configuration records."""
    if settings.block_budget > settings.width * settings.height - 2:
        raise ConfigError(
            f"block budget {settings.block_budget} leaves no room for agent and goal "
            f"on a {settings.width}x{settings.height} grid",
            "block-budget",
        )
    try:
        return DcdConfig(
            algorithm=settings.algorithm,
            replay=ReplayConfig(
                replay_rate=settings.replay_rate,
                buffer_size=settings.buffer_size,
                temperature=settings.temperature,
                staleness_coef=settings.staleness,
                prioritization=settings.prioritization,
                scoring=settings.scoring,
                max_mc_variant=settings.max_mc_variant,
            ),
            env=EnvConfig(max_steps=settings.max_steps, gamma=settings.gamma),
            gae=GaeConfig(gamma=settings.gamma, gae_lambda=settings.gae_lambda),
            agent=AgentConfig(policy_lr=settings.policy_lr, value_lr=settings.value_lr),
            template=LevelTemplate(settings.width, settings.height, settings.block_budget),
            generator=GeneratorConfig(settings.generator_lr, settings.generator_entropy),
            budget=settings.budget,
            seed=settings.seed,
            eval_interval=settings.eval_interval,
            eval_levels=settings.eval_levels,
            eval_attempts=settings.eval_attempts,
            eval_suites=settings.eval_suites,
            checkpoint_interval=settings.checkpoint_interval,
            check_invariants=settings.check_invariants,
        )
    except InvalidInputError as e:
        raise ConfigError(str(e), "config") from e


def parse_config(
    flags: Optional[Dict[str, Any]] = None, config_file: Optional[Union[str, Path]] = None
) -> RunConfig:
    """
    Resolve a RunConfig with precedence flags > file > defaults.

    Args:
        flags: Explicitly set options (None values are ignored)
        config_file: Optional flat key=value file

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: naming the offending key in flag form
    """
    merged: Dict[str, Any] = {}
    if config_file is not None:
        merged.update(read_config_file(config_file))
    for key, value in (flags or {}).items():
        if value is not None:
            merged[field_name(key)] = value

    try:
        settings = RunSettings(**merged)
    except ValidationError as e:
        raise _to_config_error(e) from None

    dcd = build_dcd_config(settings)
    output_dir = Path(settings.output or default_output_dir())
    manifest = Path(settings.suite_manifest) if settings.suite_manifest else None
    logger.debug("resolved config: %s", settings.model_dump())
    return RunConfig(dcd=dcd, output_dir=output_dir, suite_manifest=manifest, settings=settings)
