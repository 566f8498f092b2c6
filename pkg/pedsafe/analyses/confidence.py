import logging
from typing import Literal, Optional

from pydantic import model_validator

from ..core.errors import UsageError
from ..core.models import Command
from ..core.reporting import Report
from ..posteriors import ArmLabel
from ..precision import ConsistencyQuery, Hypothesis, ReferenceEstimate, ReferenceKind, confidence
from .base import AnalysisParams, BaseAnalysis
from .params import first_message, parse_counts, resolve_prior

logger = logging.getLogger("Pedsafe.Analysis.Confidence")


class ConfidenceParams(AnalysisParams):
    mode: Literal["margin", "fold"]
    treat: str
    control: Optional[str] = None
    ref_diff: Optional[float] = None
    ref_rate: Optional[float] = None
    margin: Optional[float] = None
    fold: Optional[float] = None
    prior_treat: Optional[str] = None
    prior_control: Optional[str] = None
    near_zero: Optional[float] = None
    ae_id: str = ""

    @model_validator(mode="after")
    def _required_for_mode(self) -> "ConfidenceParams":
        if self.mode == "fold" and self.fold is None:
            raise UsageError("required in fold mode", key="fold")
        if self.mode == "margin" and self.margin is None:
            raise UsageError("required in margin mode", key="margin")
        if (self.ref_diff is None) == (self.ref_rate is None):
            raise UsageError("give exactly one of ref_diff (two-arm) or ref_rate (single-arm)", key="ref_diff")
        if self.ref_diff is not None and self.control is None:
            raise UsageError("two-arm confidence needs control counts", key="control")
        return self


def build_query(mode: str, reference: ReferenceEstimate, margin: Optional[float], fold: Optional[float], method) -> ConsistencyQuery:
    try:
        return ConsistencyQuery(
            hypothesis=Hypothesis(mode),
            reference=reference,
            margin=margin if mode == "margin" else None,
            fold=fold if mode == "fold" else None,
            method=method,
        )
    except ValueError as e:
        key = "fold" if mode == "fold" else "margin"
        raise UsageError(first_message(e), key=key) from None


def build_reference(ref_diff: Optional[float], ref_rate: Optional[float], ae_id: str) -> ReferenceEstimate:
    try:
        if ref_rate is not None:
            return ReferenceEstimate(value=ref_rate, kind=ReferenceKind.PROPORTION, ae_id=ae_id)
        return ReferenceEstimate(value=ref_diff, kind=ReferenceKind.DIFFERENCE, ae_id=ae_id)
    except ValueError as e:
        key = "ref_rate" if ref_rate is not None else "ref_diff"
        raise UsageError(first_message(e), key=key) from None


class ConfidenceAnalysis(BaseAnalysis):
    """Posterior probability that observed pediatric data are consistent with the reference."""
    command = Command.CONFIDENCE
    params_model = ConfidenceParams

    def execute(self, report: Report) -> None:
        p = self.params
        treat = parse_counts(p.treat, "treat", ArmLabel.ITX)
        control = parse_counts(p.control, "control", ArmLabel.CX) if p.control is not None else None
        priors = (
            resolve_prior(p.prior_treat, p.near_zero, "prior_treat"),
            resolve_prior(p.prior_control, p.near_zero, "prior_control"),
        )
        reference = build_reference(p.ref_diff, p.ref_rate, p.ae_id)
        query = build_query(p.mode, reference, p.margin, p.fold, self.eval_method())

        result = confidence(query, treat, control, priors)
        report.add_row(
            ae_id=p.ae_id,
            mode=p.mode,
            treat=str(treat),
            control=str(control) if control else "",
            reference=reference.value,
            reference_kind=reference.kind.value,
            margin=p.margin if p.mode == "margin" else None,
            fold=p.fold if p.mode == "fold" else None,
            threshold=result.threshold_used,
            C=result.C,
            method=result.method,
            **result.diagnostics,
        )
