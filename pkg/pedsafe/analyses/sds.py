import logging
from typing import Optional

from pydantic import Field

from ..core.errors import SchemaError
from ..core.models import Command
from ..core.reporting import Report
from ..development import (
    DEFAULT_SCHEME,
    MaxChangeModel,
    SdsSample,
    bin_label,
    max_change_confidence,
    samples_by_time,
    sds_changes,
    sds_mean_for_confidence,
    sds_threshold_confidence,
    shift_table,
)
from ..tables import TableSchema, load_table
from .base import AnalysisParams, BaseAnalysis

logger = logging.getLogger("Pedsafe.Analysis.Sds")


class SdsParams(AnalysisParams):
    input: str
    tau: float = Field(gt=0)
    target: Optional[float] = Field(default=None, gt=0, lt=1)
    baseline_label: Optional[str] = None


def _header(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.readline()


class SdsAnalysis(BaseAnalysis):
    """
    Threshold confidence for the mean ΔSDS.

    A single-column ``delta`` file is treated as one sample. A long-format
    ``subject_id,time_label,sds_value`` file gives one row per follow-up time,
    a max-over-time row and the SD-group shift table.
    """
    command = Command.SDS
    params_model = SdsParams

    def execute(self, report: Report) -> None:
        p = self.params
        header = [c.strip() for c in _header(p.input).split(",")]
        if header == ["delta"]:
            deltas = [rec.delta for rec in load_table(p.input, TableSchema.DELTAS)]
            self._sample_row(report, "all", SdsSample.from_values(deltas))
            return

        records = load_table(p.input, TableSchema.SDS)
        changes = sds_changes(records, p.baseline_label)
        if not changes:
            raise SchemaError("no follow-up records with a matching baseline")

        samples = samples_by_time(changes)
        for label, sample in samples.items():
            self._sample_row(report, label, sample)

        if len(samples) >= 2:
            model = MaxChangeModel.from_time_point_means([s.mean for s in samples.values()])
            result = max_change_confidence(model, p.tau)
            report.add_row(kind="max_change", time_label="max", tau=p.tau, C=result.C,
                           method=result.method, **result.diagnostics)

        table = shift_table(changes, DEFAULT_SCHEME)
        for i in range(table.shape[0]):
            for j in range(table.shape[1]):
                report.add_row(
                    kind="shift",
                    baseline_group=bin_label(i + 1, DEFAULT_SCHEME.baseline_edges),
                    change_group=bin_label(j + 1, DEFAULT_SCHEME.change_edges),
                    count=int(table[i, j]),
                )

    def _sample_row(self, report: Report, label: str, sample: SdsSample) -> None:
        p = self.params
        result = sds_threshold_confidence(sample, p.tau)
        row = report.add_row(
            kind="mean_change",
            time_label=label,
            n=sample.n,
            mean=sample.mean,
            s_sq=sample.s_sq,
            tau=p.tau,
            C=result.C,
            method=result.method,
            df=result.diagnostics["df"],
            scale=result.diagnostics["scale"],
        )
        if p.target is not None:
            row["target"] = p.target
            row["mean_needed"] = sds_mean_for_confidence(sample.n, sample.s_sq ** 0.5, p.tau, p.target)
