import logging
from typing import Literal, Optional

from pydantic import Field, ValidationError, model_validator

from ..core.errors import UsageError
from ..core.models import Command
from ..core.reporting import Report
from ..posteriors import EvalMethod
from ..precision import (
    CountMode,
    DesignScenario,
    scenario_arm_sizes,
    scenario_confidence,
    solve_sample_size,
)
from .base import AnalysisParams, BaseAnalysis
from .confidence import build_query, build_reference
from .params import first_message, parse_allocation, resolve_prior

logger = logging.getLogger("Pedsafe.Analysis.SolveN")


class SolveNParams(AnalysisParams):
    mode: Literal["margin", "fold"]
    control_rate: float = 0.0
    treat_rate: Optional[float] = None
    difference: Optional[float] = None
    ref_diff: Optional[float] = None
    ref_rate: Optional[float] = None
    margin: Optional[float] = None
    fold: Optional[float] = None
    target: float = Field(default=0.8)
    allocation: str = "1:1"
    prior_treat: Optional[str] = None
    prior_control: Optional[str] = None
    near_zero: Optional[float] = None
    n_total: Optional[int] = None
    count_mode: Optional[Literal["plug_in", "predictive"]] = None
    ae_id: str = ""

    @model_validator(mode="after")
    def _complete(self) -> "SolveNParams":
        if self.mode == "fold" and self.fold is None:
            raise UsageError("required in fold mode", key="fold")
        if self.mode == "margin" and self.margin is None:
            raise UsageError("required in margin mode", key="margin")
        if (self.treat_rate is None) == (self.difference is None):
            raise UsageError("give exactly one of treat_rate or difference", key="treat_rate")
        if self.ref_diff is not None and self.ref_rate is not None:
            raise UsageError("give at most one of ref_diff or ref_rate", key="ref_rate")
        return self

    @property
    def assumed_treat_rate(self) -> float:
        if self.treat_rate is not None:
            return self.treat_rate
        return self.control_rate + self.difference


def build_scenario(p: SolveNParams, method: EvalMethod, count_mode: str, min_events: int = 0) -> DesignScenario:
    """Design scenario from solve-n parameters; the reference defaults to the assumed difference."""
    treat_rate = p.assumed_treat_rate
    ref_diff = p.ref_diff
    if p.ref_rate is None and ref_diff is None:
        ref_diff = treat_rate - p.control_rate
    reference = build_reference(ref_diff, p.ref_rate, p.ae_id)
    query = build_query(p.mode, reference, p.margin, p.fold, method)
    try:
        return DesignScenario(
            treat_rate=treat_rate,
            control_rate=p.control_rate,
            allocation_ratio=parse_allocation(p.allocation),
            prior_treat=resolve_prior(p.prior_treat, p.near_zero, "prior_treat"),
            prior_control=resolve_prior(p.prior_control, p.near_zero, "prior_control"),
            target_C=p.target,
            query=query,
            count_mode=CountMode(count_mode),
            n_total=p.n_total,
            min_events=min_events,
        )
    except ValidationError as e:
        loc = e.errors()[0]["loc"]
        key = {"target_C": "target"}.get(str(loc[0]), str(loc[0])) if loc else None
        raise UsageError(first_message(e), key=key) from None


class SolveNAnalysis(BaseAnalysis):
    """Smallest pediatric database meeting a consistency target, or the confidence at a given size."""
    command = Command.SOLVE_N
    params_model = SolveNParams

    def execute(self, report: Report) -> None:
        p = self.params
        design = self.settings.design
        count_mode = p.count_mode or design.count_mode
        scenario = build_scenario(p, self.eval_method(), count_mode, design.min_events)
        echo = dict(
            ae_id=p.ae_id,
            mode=p.mode,
            control_rate=scenario.control_rate,
            treat_rate=scenario.treat_rate,
            reference=scenario.query.reference.value,
            threshold=scenario.query.threshold,
            target=scenario.target_C,
            count_mode=count_mode,
        )

        if p.n_total is not None:
            result = scenario_confidence(scenario, p.n_total, rng=self.rng() if count_mode == "predictive" else None,
                                         trials=design.predictive_trials)
            n_treat, n_control = scenario_arm_sizes(scenario, p.n_total)
            report.add_row(**echo, n_total=p.n_total, n_treat=n_treat, n_control=n_control,
                           C=result.C, meets_target=result.C >= scenario.target_C, method=result.method,
                           **{k: v for k, v in result.diagnostics.items() if k not in ("n_treat", "n_control")})
            return

        if count_mode != "plug_in":
            raise UsageError("predictive mode evaluates a fixed design; pass n_total", key="n_total")
        solution = solve_sample_size(scenario, n_cap=design.n_cap, workers=design.workers)
        report.add_row(**echo, **solution.model_dump(), method=scenario.query.method.kind.value)
