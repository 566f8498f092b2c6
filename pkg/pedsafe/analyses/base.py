import logging
import traceback
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, ClassVar, Dict, Type

from pydantic import BaseModel, ConfigDict, ValidationError

from .. import __version__
from ..core.config import usage_error_from
from ..core.errors import UsageError
from ..core.models import Command, RunConfig
from ..core.reporting import Report
from ..montecarlo import RngStream
from ..posteriors import EvalMethod

logger = logging.getLogger("Pedsafe.Analysis")


class AnalysisParams(BaseModel):
    """Scenario keys accepted by one subcommand; unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")


class BaseAnalysis(ABC):
    command: ClassVar[Command]
    params_model: ClassVar[Type[AnalysisParams]] = AnalysisParams

    def __init__(self, config: RunConfig):
        self.config = config
        self.settings = config.settings
        self.params = self.parse_params(config.params)

    @classmethod
    def parse_params(cls, raw: Dict[str, Any]) -> AnalysisParams:
        try:
            return cls.params_model(**raw)
        except ValidationError as e:
            raise usage_error_from(e) from None

    def run(self) -> Report:
        """Execute the analysis and return its report."""
        name = self.command.value
        logger.info(f"Starting analysis {name}")

        try:
            self.validate_prerequisites()
            report = Report(
                version=__version__,
                command=name,
                seed=self.settings.seed,
                config=self.config.echo(),
            )
            self.execute(report)
            logger.info(f"Analysis {name} completed with {len(report.rows)} row(s)")
            return report

        except Exception as e:
            logger.error(f"Analysis {name} failed: {e}")
            if self.settings.logging.debug or self.settings.logging.output_mode == "verbose":
                logger.debug(traceback.format_exc())
            raise

    def validate_prerequisites(self) -> None:
        """
        Check inputs that the parameter model cannot check on its own.
        Raise UsageError if prerequisites are not met.
        """
        pass

    @abstractmethod
    def execute(self, report: Report) -> None:
        """Fill ``report`` with result rows."""
        pass

    # helpers shared by the concrete analyses

    def eval_method(self) -> EvalMethod:
        try:
            return EvalMethod.from_config(self.settings.evaluation, self.settings.seed)
        except ValidationError as e:
            raise usage_error_from(e, prefix="evaluation") from None

    def rng(self, stream_id: int = 0) -> RngStream:
        if self.settings.seed is None:
            raise UsageError("this analysis draws random numbers and needs a seed (--seed or PEDSAFE_SEED)", key="seed")
        return RngStream(seed=self.settings.seed, stream_id=stream_id)

    def output_dir(self) -> Path:
        path = Path(self.settings.output.directory)
        path.mkdir(parents=True, exist_ok=True)
        return path
