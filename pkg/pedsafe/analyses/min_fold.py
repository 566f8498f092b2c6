from typing import Optional

from pydantic import Field

from ..core.errors import UsageError
from ..core.models import Command
from ..core.reporting import Report
from ..posteriors import ArmCounts, update_beta
from ..precision import confidence_fold_single_arm, min_fold
from .base import AnalysisParams, BaseAnalysis
from .confidence import build_reference
from .params import resolve_prior


class MinFoldParams(AnalysisParams):
    events: int = Field(ge=0)
    n: int = Field(ge=0)
    ref_rate: float
    target: float = Field(default=0.8, ge=0, le=1)
    prior: Optional[str] = None
    near_zero: Optional[float] = None
    ae_id: str = ""


class MinFoldAnalysis(BaseAnalysis):
    """Smallest fold increase over the reference rate ruled out at the target probability."""
    command = Command.MIN_FOLD
    params_model = MinFoldParams

    def validate_prerequisites(self) -> None:
        if self.params.events > self.params.n:
            raise UsageError(f"cannot exceed n ({self.params.n})", key="events")

    def execute(self, report: Report) -> None:
        p = self.params
        counts = ArmCounts(events=p.events, n=p.n)
        prior = resolve_prior(p.prior, p.near_zero, "prior")
        reference = build_reference(None, p.ref_rate, p.ae_id)
        f_c = min_fold(counts, prior, reference, p.target)
        achieved = confidence_fold_single_arm(counts, prior, reference, f_c)
        report.add_row(
            ae_id=p.ae_id,
            events=p.events,
            n=p.n,
            ref_rate=p.ref_rate,
            target=p.target,
            f_C=f_c,
            rate_bound=f_c * p.ref_rate,
            C=achieved.C,
            posterior=str(update_beta(prior, counts)),
            method=achieved.method,
        )
