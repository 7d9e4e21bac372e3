"""
Run monitoring for the Dual Curriculum Design laboratory.

This module provides:
- RunReport: config echo, counters, per-interval metrics, final solved rates
- Metrics CSV and report JSON writers/readers
- RunMonitor: artifact writer for one training run (checkpoints, buffer snapshots)
- Multi-seed report aggregation (mean, median, quartiles)
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.agent import StudentAgent, save_tables
from src.curation import LevelBuffer, save_buffer
from src.errors import InvalidInputError

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

METRICS_COLUMNS = [
    "episode",
    "updates",
    "suite",
    "solved_rate",
    "block_count",
    "shortest_path",
    "solved_path_mean",
    "action_lzw_mean",
    "buffer_size",
    "mean_buffer_score",
]

COUNTER_NAMES = [
    "episodes",
    "student_updates",
    "antagonist_updates",
    "generator_updates",
    "replay_episodes",
    "generate_episodes",
    "fallback_episodes",
]


def _clean(value: Any) -> Any:
    """NaN becomes None so reports stay strict JSON."""
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _clean(value.item())
    return value


@dataclass
class MetricsRow:
    """One evaluation point for one suite (or the training curriculum, suite='train')."""
    episode: int
    updates: int
    suite: str
    solved_rate: Optional[float]
    block_count: Optional[float]
    shortest_path: Optional[float]
    solved_path_mean: Optional[float]
    action_lzw_mean: Optional[float]
    buffer_size: int
    mean_buffer_score: Optional[float]

    def __post_init__(self):
        for name in METRICS_COLUMNS:
            setattr(self, name, _clean(getattr(self, name)))


@dataclass
class RunReport:
    """Outcome of one run. wall_clock is excluded from equality."""
    config: Dict[str, Any] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=lambda: {name: 0 for name in COUNTER_NAMES})
    metrics: List[MetricsRow] = field(default_factory=list)
    final_solved_rates: Dict[str, float] = field(default_factory=dict)
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "counters": dict(self.counters),
            "final_solved_rates": {k: _clean(v) for k, v in self.final_solved_rates.items()},
            "metrics": [asdict(row) for row in self.metrics],
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        version = data.get("schema_version")
        if version != REPORT_SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported report schema_version {version}")
        return cls(
            config=data.get("config", {}),
            counters={k: int(v) for k, v in data.get("counters", {}).items()},
            metrics=[MetricsRow(**row) for row in data.get("metrics", [])],
            final_solved_rates=dict(data.get("final_solved_rates", {})),
            wall_clock=float(data.get("wall_clock", 0.0)),
        )

    def metrics_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.metrics], columns=METRICS_COLUMNS)


# ============================================================================
# FILE FORMATS
# ============================================================================

def write_metrics_csv(report: RunReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.metrics_frame().to_csv(path, index=False)
    return path


def read_metrics_csv(path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns) != METRICS_COLUMNS:
        raise InvalidInputError(f"{path}: unexpected metrics header {list(frame.columns)}")
    return frame


def write_report_json(report: RunReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, ensure_ascii=False, indent=2)
    return path


def load_report_json(path: Union[str, Path]) -> RunReport:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}: {e}") from e
    return RunReport.from_dict(data)


# ============================================================================
# RUN MONITOR
# ============================================================================

class RunMonitor:
    """
    Writes the artifacts of one training run into a single directory.

    Layout:
        report.json, metrics.csv
        checkpoints/<tag>-ep<episode>.txt
        buffers/<tag>-ep<episode>.jsonl
    """

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def save_checkpoint(self, tag: str, student: StudentAgent, episode: int) -> Path:
        path = self.output_dir / "checkpoints" / f"{tag}-ep{episode}.txt"
        save_tables(student.policy, student.values, path)
        self.written.append(path)
        return path

    def save_final_checkpoint(self, tag: str, student: StudentAgent) -> Path:
        path = self.output_dir / "checkpoints" / f"{tag}-final.txt"
        save_tables(student.policy, student.values, path)
        self.written.append(path)
        return path

    def save_buffer(self, tag: str, buffer: LevelBuffer, episode: int) -> Path:
        path = self.output_dir / "buffers" / f"{tag}-ep{episode}.jsonl"
        save_buffer(buffer, path)
        self.written.append(path)
        return path

    def close(self, report: RunReport) -> Dict[str, Path]:
        """Write report.json and metrics.csv."""
        paths = {
            "report": write_report_json(report, self.output_dir / "report.json"),
            "metrics": write_metrics_csv(report, self.output_dir / "metrics.csv"),
        }
        self.written.extend(paths.values())
        logger.info("wrote %s and %s", paths["report"], paths["metrics"])
        return paths


# ============================================================================
# AGGREGATION
# ============================================================================

def report_metrics(report: RunReport) -> Dict[str, float]:
    """Flat scalar view of a report used for cross-seed aggregation."""
    values = {f"solved_rate/{suite}": rate for suite, rate in report.final_solved_rates.items()}
    values.update({f"counter/{name}": float(v) for name, v in report.counters.items()})
    return values


def aggregate_reports(reports: Sequence[RunReport]) -> pd.DataFrame:
    """
    One row per metric across runs.

    Returns:
        DataFrame with columns metric, runs, mean, median, q25, q75, iqr
    """
    if not reports:
        raise InvalidInputError("no reports to aggregate")
    frame = pd.DataFrame([report_metrics(r) for r in reports])
    rows = []
    for metric in frame.columns:
        series = frame[metric].dropna()
        if series.empty:
            continue
        q25, q75 = series.quantile(0.25), series.quantile(0.75)
        rows.append({
            "metric": metric,
            "runs": int(series.size),
            "mean": float(series.mean()),
            "median": float(series.median()),
            "q25": float(q25),
            "q75": float(q75),
            "iqr": float(q75 - q25),
        })
    return pd.DataFrame(rows, columns=["metric", "runs", "mean", "median", "q25", "q75", "iqr"])
