"""
Developmental-safety analytics on standard deviation scores (SDS).

The mean change ΔSDS from baseline has, under the reference prior 1/σ², a
location-scale Student t posterior with n − 1 degrees of freedom, location x̄
and scale √(s²/n). The maximum change across time points is handled under an
i.i.d. normal assumption, and SD-group shift tables bin baseline values and
changes on fixed edge vectors.
"""
import logging
import math
from bisect import bisect_left
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import BASELINE_EDGES, CHANGE_EDGES
from .core.errors import DomainError
from .precision import ConfidenceResult
from .specfun import normal_cdf, normal_pdf, student_t_cdf, student_t_quantile

logger = logging.getLogger("Pedsafe.Development")

CONSISTENCY_TOL = 1e-10


class SdsSample(BaseModel):
    """Summary of observed ΔSDS values: size, mean and sample variance."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    mean: float
    s_sq: float = Field(gt=0)
    values: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def _matches_values(self) -> "SdsSample":
        if self.values is None:
            return self
        data = np.asarray(self.values, dtype=float)
        if len(data) != self.n:
            raise ValueError(f"n={self.n} but {len(data)} values supplied")
        if abs(float(data.mean()) - self.mean) > CONSISTENCY_TOL or abs(float(data.var(ddof=1)) - self.s_sq) > CONSISTENCY_TOL:
            raise ValueError("stored mean/variance do not match the supplied values")
        return self

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "SdsSample":
        data = np.asarray(values, dtype=float)
        if data.size < 2:
            raise DomainError(f"an SDS sample needs at least 2 values, got {data.size}")
        s_sq = float(data.var(ddof=1))
        if not s_sq > 0.0:
            raise DomainError("ΔSDS values have zero variance")
        return cls(n=int(data.size), mean=float(data.mean()), s_sq=s_sq, values=tuple(data.tolist()))

    @property
    def scale(self) -> float:
        return math.sqrt(self.s_sq / self.n)


def sds_change(baseline: float, followup: float) -> float:
    return followup - baseline


def sds_threshold_confidence(sample: SdsSample, tau: float) -> ConfidenceResult:
    """C = P(μ > −τ | data) under the location-scale t posterior of the mean change."""
    if not tau > 0.0:
        raise DomainError(f"tau must be positive, got {tau}")
    df = sample.n - 1
    t = (sample.mean + tau) / sample.scale
    return ConfidenceResult(
        C=student_t_cdf(t, df),
        threshold_used=-tau,
        method="student_t",
        diagnostics={"df": df, "location": sample.mean, "scale": sample.scale, "t": t},
    )


def sds_mean_for_confidence(n: int, s: float, tau: float, target_C: float) -> float:
    """Observed mean ΔSDS at which sds_threshold_confidence equals target_C."""
    if n < 2 or not s > 0.0 or not tau > 0.0:
        raise DomainError("need n >= 2, s > 0 and tau > 0")
    return -tau + s / math.sqrt(n) * student_t_quantile(target_C, n - 1)


class MaxChangeModel(BaseModel):
    """Maximum of n i.i.d. N(mu, sigma²) mean changes across assessment times."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    mu: float
    sigma: float = Field(gt=0)

    @classmethod
    def from_time_point_means(cls, means: Sequence[float]) -> "MaxChangeModel":
        data = np.asarray(means, dtype=float)
        if data.size < 2:
            raise DomainError("at least two time-point means are needed to estimate sigma")
        sigma = float(data.std(ddof=1))
        if not sigma > 0.0:
            raise DomainError("time-point means have zero spread")
        return cls(n=int(data.size), mu=float(data.mean()), sigma=sigma)


def max_change_pdf(model: MaxChangeModel, x: float) -> float:
    z = (x - model.mu) / model.sigma
    return model.n / model.sigma * normal_pdf(z) * normal_cdf(z) ** (model.n - 1)


def max_change_cdf(model: MaxChangeModel, x: float) -> float:
    return normal_cdf((x - model.mu) / model.sigma) ** model.n


def max_change_confidence(model: MaxChangeModel, tau: float) -> ConfidenceResult:
    """P(max change > −τ) = 1 − Φ((−τ − μ)/σ)ⁿ."""
    if not tau > 0.0:
        raise DomainError(f"tau must be positive, got {tau}")
    return ConfidenceResult(
        C=1.0 - max_change_cdf(model, -tau),
        threshold_used=-tau,
        method="max_normal",
        diagnostics={"time_points": model.n, "mu": model.mu, "sigma": model.sigma},
    )


class BinScheme(BaseModel):
    model_config = ConfigDict(frozen=True)

    baseline_edges: Tuple[float, ...] = BASELINE_EDGES
    change_edges: Tuple[float, ...] = CHANGE_EDGES

    @field_validator("baseline_edges", "change_edges")
    @classmethod
    def _strictly_increasing(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("bin edges must be strictly increasing")
        return v

    @property
    def baseline_bins(self) -> int:
        return len(self.baseline_edges) - 1

    @property
    def change_bins(self) -> int:
        return len(self.change_edges) - 1


DEFAULT_SCHEME = BinScheme()


def _bin(value: float, edges: Tuple[float, ...]) -> int:
    # Bin j (1-based) is (edges[j-1], edges[j]]; a value on an edge goes to the lower bin.
    if math.isnan(value):
        raise DomainError("cannot bin NaN")
    return min(max(bisect_left(edges, value), 1), len(edges) - 1)


def bin_baseline(sds: float, scheme: BinScheme = DEFAULT_SCHEME) -> int:
    return _bin(sds, scheme.baseline_edges)


def bin_change(delta: float, scheme: BinScheme = DEFAULT_SCHEME) -> int:
    return _bin(delta, scheme.change_edges)


def bin_label(index: int, edges: Tuple[float, ...]) -> str:
    return f"({edges[index - 1]}, {edges[index]}]"


class SdsRecord(BaseModel):
    subject_id: str = Field(min_length=1)
    time_label: str = Field(min_length=1)
    sds_value: float

    @field_validator("sds_value")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("sds_value must be finite")
        return v


class SubjectChange(NamedTuple):
    subject_id: str
    time_label: str
    baseline: float
    followup: float
    delta: float


def sds_changes(records: Iterable[SdsRecord], baseline_label: Optional[str] = None) -> List[SubjectChange]:
    """
    Changes from baseline for every subject and follow-up time.

    Time labels are ordered by first appearance; the baseline label defaults
    to the first one. Subjects without a baseline record are skipped.
    """
    schedule: List[str] = []
    by_subject: Dict[str, Dict[str, float]] = {}
    for rec in records:
        if rec.time_label not in schedule:
            schedule.append(rec.time_label)
        visits = by_subject.setdefault(rec.subject_id, {})
        if rec.time_label in visits:
            raise DomainError(f"duplicate record for subject '{rec.subject_id}' at '{rec.time_label}'")
        visits[rec.time_label] = rec.sds_value

    if not schedule:
        return []
    baseline_label = baseline_label or schedule[0]
    if baseline_label not in schedule:
        raise DomainError(f"baseline label '{baseline_label}' does not occur in the data")

    changes = []
    for subject_id, visits in by_subject.items():
        if baseline_label not in visits:
            logger.warning(f"Subject {subject_id} has no '{baseline_label}' record; skipped")
            continue
        base = visits[baseline_label]
        for label in schedule:
            if label != baseline_label and label in visits:
                changes.append(SubjectChange(subject_id, label, base, visits[label], sds_change(base, visits[label])))
    return changes


def samples_by_time(changes: Iterable[SubjectChange]) -> Dict[str, SdsSample]:
    """Per-time-point ΔSDS samples, for time points with enough data to estimate a variance."""
    grouped: Dict[str, List[float]] = {}
    for change in changes:
        grouped.setdefault(change.time_label, []).append(change.delta)
    samples = {}
    for label, deltas in grouped.items():
        if len(deltas) >= 2 and np.var(deltas) > 0.0:
            samples[label] = SdsSample.from_values(deltas)
        else:
            logger.warning(f"Time point '{label}' has too few distinct changes for a posterior; skipped")
    return samples


def shift_table(changes: Iterable[SubjectChange], scheme: BinScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Counts of (baseline SD group, change SD group); row i is baseline bin i + 1."""
    table = np.zeros((scheme.baseline_bins, scheme.change_bins), dtype=np.int64)
    for change in changes:
        table[bin_baseline(change.baseline, scheme) - 1, bin_change(change.delta, scheme) - 1] += 1
    return table
