import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.utils.exceptions import ConfigurationError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

WORKERS_ENV = "PDRO_WORKERS"


class RunConfig(BaseModel):
    """Every key of a run configuration file, with its default."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    # experiment
    scenario: Literal["BetaPortfolio", "QuadraticBall", "Shifted", "Misspecified", "Contextual"] = "BetaPortfolio"
    methods: List[str] = ["empirical-erm", "beta-erm", "beta-dro-chi2"]
    n_grid: List[int] = Field(default=[25, 50, 100, 200], min_length=1)
    seeds: int = Field(default=50, ge=1)
    master_seed: int = Field(default=0, ge=0)
    monte_carlo_ratio: int = Field(default=50, ge=1)

    # ambiguity radius
    eps_mode: Literal["cv", "rule"] = "cv"
    eps_grid: List[float] = Field(default=[0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0], min_length=1)
    split_fraction: float = Field(default=0.8, gt=0, lt=1)
    comp_theta: Optional[float] = Field(default=None, ge=0)
    alpha: float = Field(default=0.5, gt=0)
    e_apx: float = Field(default=0.0, ge=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    eps_multiplier: float = Field(default=1.0, ge=1)

    # cost and decision set
    dim: int = Field(default=10, ge=1)
    gamma: float = Field(default=2.0, ge=1)
    tau: float = Field(default=2.0, ge=0)
    mu: float = 1.0
    r: float = Field(default=1.0, gt=0)
    ball_radius: float = Field(default=10.0, gt=0)
    lam: float = Field(default=0.2, gt=0)

    # contextual scenario
    context_dim: int = Field(default=3, ge=1)
    snr: Literal["high", "low"] = "high"
    misspecified: bool = True
    noise_std: float = Field(default=0.1, ge=0)
    n_test_contexts: int = Field(default=3, ge=1)
    covariates_csv: Optional[str] = None
    covariates_percent: bool = True

    # shift / misspecification noise
    shift_c: Optional[float] = Field(default=None, ge=-1, le=1)
    perturb_noise: float = Field(default=2.0, ge=0)
    misspecification_noise: float = Field(default=2.0, ge=0)

    # oracle and evaluation
    oracle_budget: int = Field(default=500_000, ge=1)
    oracle_restarts: int = Field(default=5, ge=1)
    oracle_max_iter: int = Field(default=1000, ge=1)
    eval_budget: int = Field(default=200_000, ge=1)

    # outer solver
    max_iter: int = Field(default=500, ge=1)
    step_c: Optional[float] = Field(default=None, gt=0)
    tol: float = Field(default=1e-6, gt=0)
    averaging: bool = False

    # bound coverage
    coverage_seeds: int = Field(default=100, ge=1)
    coverage_kind: Literal["w1", "chi2"] = "w1"
    coverage_estimator: str = "normal"
    coverage_n: Optional[int] = Field(default=None, ge=1)

    # execution and output
    workers: int = Field(default=1, ge=1)
    record_wallclock: bool = False
    output: str = "results.csv"
    log_dir: Optional[str] = None

    @field_validator("n_grid")
    @classmethod
    def _positive_sizes(cls, value):
        if any(n < 1 for n in value):
            raise ValueError("sample sizes must be >= 1")
        return value

    @field_validator("eps_grid")
    @classmethod
    def _nonnegative_radii(cls, value):
        if any(not 0 <= e < float("inf") for e in value):
            raise ValueError("radii must be finite and >= 0")
        return value

    @field_validator("methods")
    @classmethod
    def _some_methods(cls, value):
        if not value:
            raise ValueError("at least one method is required")
        return value


_LIST_KEYS = {name for name, f in RunConfig.model_fields.items() if "List" in str(f.annotation)}
_NONE_WORDS = {"", "none", "null"}


def parse_flat_config(text: str):
    """
    Parse ``key = value`` lines; ``#`` starts a comment, lists are comma
    separated.

    Returns:
        Tuple[dict, list]: raw values and every syntax problem found
    """
    values: Dict[str, Any] = {}
    problems: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            problems.append(f"line {lineno}: missing key")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        if key in _LIST_KEYS:
            values[key] = [item.strip() for item in value.split(",") if item.strip()]
        elif value.lower() in _NONE_WORDS:
            values[key] = None
        else:
            values[key] = value
    return values, problems


class ConfigManager:
    """Loads a run configuration file over the defaults."""

    DEFAULT_CONFIG = RunConfig().model_dump()

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else None
        self._config = self._load_config()

    def _load_config(self) -> RunConfig:
        custom, problems = {}, []
        if self.path is not None:
            if not self.path.is_file():
                raise ConfigurationError(f"config file not found: {self.path}")
            custom, problems = parse_flat_config(self.path.read_text(encoding="utf-8"))

        workers = os.environ.get(WORKERS_ENV)
        if workers:
            logger.info("%s=%s overrides the configured worker count", WORKERS_ENV, workers)
            custom["workers"] = workers

        merged = self._merge_configs(self.DEFAULT_CONFIG, custom)
        try:
            config = RunConfig(**merged)
        except ValidationError as exc:
            problems.extend(
                f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
            )
            config = None
        if problems:
            raise ConfigurationError(f"invalid configuration {self.path or '<defaults>'}", problems)
        return config

    @staticmethod
    def _merge_configs(default: dict, custom: dict) -> dict:
        result = default.copy()
        result.update(custom)
        return result

    @property
    def config(self) -> RunConfig:
        return self._config

    def get_config(self, key: str, default: Any = None) -> Any:
        return getattr(self._config, key, default)


def load_config(path) -> RunConfig:
    """Validated run configuration; every violation is listed in one error."""
    return ConfigManager(path).config
