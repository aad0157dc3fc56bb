"""
Results CSV: one row per trial, then an aggregate block of mean / sd per
(scenario, method, n).

Numbers are written in decimal notation with 6 significant digits. Aggregates are computed
from the written (rounded) values, so reading a file back and
re-aggregating reproduces the stored block exactly.
"""
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.bench.experiment import TrialResult
from src.utils.exceptions import DataParseError, ResultsWriteError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

COLUMNS = ("scenario", "method", "n", "seed", "eps", "objective", "gen_error", "wallclock_ms")
AGGREGATE_COLUMNS = (
    "scenario", "method", "n", "count",
    "objective_mean", "objective_sd", "gen_error_mean", "gen_error_sd", "eps_mean",
)
AGGREGATE_SENTINEL = "# aggregate"


def fmt(value: float) -> str:
    """6 significant digits in plain decimal notation; integers print without a decimal point."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if value == 0.0:
        return "0"
    return np.format_float_positional(value, precision=6, unique=False, fractional=False, trim="-")


def rounded(value: float) -> float:
    return float(fmt(value))


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    method: str
    n: int
    count: int
    objective_mean: float
    objective_sd: float
    gen_error_mean: float
    gen_error_sd: float
    eps_mean: float

    def cells(self) -> List[str]:
        return [
            self.scenario, self.method, str(self.n), str(self.count),
            fmt(self.objective_mean), fmt(self.objective_sd),
            fmt(self.gen_error_mean), fmt(self.gen_error_sd), fmt(self.eps_mean),
        ]


def _mean_sd(values: np.ndarray):
    if values.size == 0:
        return math.nan, math.nan
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), sd


@dataclass
class ResultsTable:
    trials: List[TrialResult] = field(default_factory=list)
    # aggregate block as read from a file, empty for in-memory tables
    stored_aggregates: List[AggregateRow] = field(default_factory=list)

    def rows(self) -> List[List[str]]:
        return [
            [t.scenario, t.method, str(t.n), str(t.seed), fmt(t.eps),
             fmt(t.objective), fmt(t.gen_error), fmt(t.wallclock_ms)]
            for t in self.trials
        ]

    def aggregates(self) -> List[AggregateRow]:
        """Mean / sample sd per (scenario, method, n) over finite trials, in first-seen order."""
        groups = {}
        for t in self.trials:
            groups.setdefault((t.scenario, t.method, t.n), []).append(t)
        out = []
        for (scenario, method, n), trials in groups.items():
            ok = [t for t in trials if math.isfinite(rounded(t.objective))]
            objective = np.array([rounded(t.objective) for t in ok])
            gen_error = np.array([rounded(t.gen_error) for t in ok])
            eps = np.array([rounded(t.eps) for t in ok])
            obj_mean, obj_sd = _mean_sd(objective)
            gen_mean, gen_sd = _mean_sd(gen_error)
            eps_mean = float(np.mean(eps)) if eps.size else math.nan
            out.append(AggregateRow(scenario, method, n, len(ok), obj_mean, obj_sd, gen_mean, gen_sd, eps_mean))
        return out

    def to_csv(self) -> str:
        lines = [",".join(COLUMNS)]
        lines.extend(",".join(row) for row in self.rows())
        if self.trials:
            lines.append(AGGREGATE_SENTINEL)
            lines.append(",".join(AGGREGATE_COLUMNS))
            lines.extend(",".join(a.cells()) for a in self.aggregates())
        return "\n".join(lines) + "\n"


def write_results(table: ResultsTable, path) -> None:
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.to_csv(), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ResultsWriteError(f"cannot write results ({exc.strerror})", path) from exc
    logger.info("wrote %d trial rows to %s", len(table.trials), path)


def _read_block(text: str, expected: Sequence[str], path) -> pd.DataFrame:
    frame = pd.read_csv(
        io.StringIO(text), dtype={"scenario": str, "method": str},
        keep_default_na=False, na_values=["nan"], float_precision="round_trip",
    )
    if tuple(frame.columns) != tuple(expected):
        raise DataParseError(f"{path}: unexpected columns {list(frame.columns)}", row=1)
    return frame


def read_results(path) -> ResultsTable:
    """
    Parse a results file written by ``write_results``; the aggregate block
    lands in ``stored_aggregates`` (empty for a header-only file).
    """
    path = Path(path)
    if not path.is_file():
        raise DataParseError(f"no such results file: {path}")
    text = path.read_text(encoding="utf-8")
    trial_text, _, aggregate_text = text.partition(AGGREGATE_SENTINEL + "\n")

    trials_frame = _read_block(trial_text, COLUMNS, path)
    trials = [
        TrialResult(r.scenario, r.method, int(r.n), int(r.seed), float(r.eps),
                    float(r.objective), float(r.gen_error), float(r.wallclock_ms))
        for r in trials_frame.itertuples(index=False)
    ]
    aggregates = []
    if aggregate_text.strip():
        frame = _read_block(aggregate_text, AGGREGATE_COLUMNS, path)
        aggregates = [
            AggregateRow(r.scenario, r.method, int(r.n), int(r.count), float(r.objective_mean),
                         float(r.objective_sd), float(r.gen_error_mean), float(r.gen_error_sd), float(r.eps_mean))
            for r in frame.itertuples(index=False)
        ]
    return ResultsTable(trials, aggregates)
