from enum import Enum
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..constants import (
    DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_GRID_POINTS,
    DEFAULT_MC_SAMPLES,
    DEFAULT_N_CAP,
    MIN_PREDICTIVE_TRIALS,
    SERIES_MAX_TERMS,
    SERIES_REL_TOL,
)


class Command(str, Enum):
    CONFIDENCE = "confidence"
    SOLVE_N = "solve-n"
    MIN_FOLD = "min-fold"
    CONTOUR = "contour"
    SDS = "sds"
    WIN_ODDS = "win-odds"
    REPRODUCE = "reproduce"


class StrictModel(BaseModel):
    """Config section that rejects keys it does not declare."""
    model_config = ConfigDict(extra="forbid")


class EvaluationConfig(StrictModel):
    method: Literal["closed_form", "convolution_quadrature", "monte_carlo", "normal_approx"] = "convolution_quadrature"
    grid_points: int = DEFAULT_GRID_POINTS
    mc_samples: int = DEFAULT_MC_SAMPLES
    series_rel_tol: float = Field(default=SERIES_REL_TOL, gt=0)
    series_max_terms: int = Field(default=SERIES_MAX_TERMS, ge=1)


class DesignConfig(StrictModel):
    n_cap: int = Field(default=DEFAULT_N_CAP, ge=1)
    workers: int = Field(default=1, ge=1)
    min_events: int = Field(default=0, ge=0)
    count_mode: Literal["plug_in", "predictive"] = "plug_in"
    predictive_trials: int = Field(default=10_000, ge=MIN_PREDICTIVE_TRIALS)


class BootstrapConfig(StrictModel):
    replicates: int = Field(default=DEFAULT_BOOTSTRAP_REPLICATES, ge=1)


class OutputConfig(StrictModel):
    format: Literal["csv", "json"] = "csv"
    directory: str = "."


class LoggingConfig(StrictModel):
    debug: bool = False
    output_mode: Literal["standard", "verbose", "silent"] = "standard"
    log_dir: Optional[str] = None


class Settings(StrictModel):
    """Everything a config file may hold, after defaults are merged in."""
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    design: DesignConfig = Field(default_factory=DesignConfig)
    bootstrap: BootstrapConfig = Field(default_factory=BootstrapConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    scenario: Dict[str, Dict[str, Any]] = Field(default_factory=dict)


class RunConfig(BaseModel):
    """A fully resolved invocation: command, validated parameters, and settings."""
    command: Command
    params: Dict[str, Any] = Field(default_factory=dict)
    settings: Settings = Field(default_factory=Settings)
    output_path: Optional[str] = None
    config_path: Optional[str] = None

    def echo(self) -> Dict[str, Any]:
        """Flat provenance record written into every report."""
        settings = self.settings.model_dump(mode="json", exclude={"scenario", "logging"})
        return {
            "command": self.command.value,
            "params": self.params,
            "settings": settings,
            "config_path": self.config_path,
        }
