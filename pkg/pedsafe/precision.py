"""
Decision layer: how precisely can a pediatric safety database rule out an
inconsistent adverse-event rate relative to a reference (adult) estimate.

Two-arm questions work on the placebo-corrected difference ϑ and go through
``posteriors``; single-arm questions on a proportion θ are exact incomplete
beta evaluations. Sample-size, minimum-fold, contour and win-odds
computations are built on top.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import brentq

from .constants import (
    BOOTSTRAP_LOWER_QUANTILE,
    BOOTSTRAP_UPPER_QUANTILE,
    CANDIDATES_PER_WORKER,
    DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_N_CAP,
    MIN_FOLD_XTOL,
)
from .core.errors import DegenerateError, DomainError, NonConvergenceError, UnsatisfiableError
from .montecarlo import RngStream, predictive_confidence
from .posteriors import (
    DEFAULT_METHOD,
    UNIFORM_PRIOR,
    ArmCounts,
    ArmLabel,
    BetaDifference,
    BetaParams,
    EvalMethod,
    Method,
    diff_cdf_detailed,
    posterior_difference,
    update_beta,
)
from .specfun import reg_inc_beta

logger = logging.getLogger("Pedsafe.Precision")


class ReferenceKind(str, Enum):
    DIFFERENCE = "difference"
    PROPORTION = "proportion"


class ReferenceEstimate(BaseModel):
    """Reference-population estimate, treated as a known constant."""
    model_config = ConfigDict(frozen=True)

    value: float
    kind: ReferenceKind = ReferenceKind.DIFFERENCE
    ae_id: str = ""

    @model_validator(mode="after")
    def _value_in_range(self) -> "ReferenceEstimate":
        if self.kind == ReferenceKind.PROPORTION and not 0.0 < self.value < 1.0:
            raise ValueError(f"a proportion reference must lie in (0, 1), got {self.value}")
        if self.kind == ReferenceKind.DIFFERENCE and not -1.0 < self.value < 1.0:
            raise ValueError(f"a difference reference must lie in (-1, 1), got {self.value}")
        return self


class Hypothesis(str, Enum):
    MARGIN = "margin"
    FOLD = "fold"


class ConsistencyQuery(BaseModel):
    model_config = ConfigDict(frozen=True)

    hypothesis: Hypothesis
    reference: ReferenceEstimate
    margin: Optional[float] = Field(default=None, ge=0)
    fold: Optional[float] = Field(default=None, gt=1)
    method: EvalMethod = DEFAULT_METHOD

    @model_validator(mode="after")
    def _parameter_for_hypothesis(self) -> "ConsistencyQuery":
        if self.hypothesis == Hypothesis.MARGIN and self.margin is None:
            raise ValueError("margin hypothesis requires a margin")
        if self.hypothesis == Hypothesis.FOLD and self.fold is None:
            raise ValueError("fold hypothesis requires a fold")
        return self

    @property
    def threshold(self) -> float:
        if self.hypothesis == Hypothesis.MARGIN:
            return self.reference.value + self.margin
        return self.fold * self.reference.value


class ConfidenceResult(BaseModel):
    C: float = Field(ge=0, le=1)
    threshold_used: float
    method: str
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class CountMode(str, Enum):
    PLUG_IN = "plug_in"
    PREDICTIVE = "predictive"


class DesignScenario(BaseModel):
    """Assumed true rates and consistency target for a planned pediatric study."""
    model_config = ConfigDict(frozen=True)

    treat_rate: float = Field(ge=0, le=1)
    control_rate: float = Field(default=0.0, ge=0, le=1)
    allocation_ratio: float = Field(default=1.0, gt=0)
    prior_treat: BetaParams = UNIFORM_PRIOR
    prior_control: BetaParams = UNIFORM_PRIOR
    target_C: float = Field(ge=0, lt=1)
    query: ConsistencyQuery
    count_mode: CountMode = CountMode.PLUG_IN
    n_total: Optional[int] = Field(default=None, ge=1)
    # Plug-in events every arm with a positive rate must expect before the solver scans.
    min_events: int = Field(default=0, ge=0)

    @property
    def single_arm(self) -> bool:
        return self.query.reference.kind == ReferenceKind.PROPORTION


class DesignSolution(BaseModel):
    n_total: int
    n_treat: int
    n_control: int
    r_treat: int
    r_control: int
    achieved_C: float
    evaluations: int


class CurvePoint(BaseModel):
    n_total: int
    n_treat: int
    n_control: int
    r_treat: Optional[int] = None
    r_control: Optional[int] = None
    C: float


def _check_kind(reference: ReferenceEstimate, kind: ReferenceKind) -> None:
    if reference.kind != kind:
        raise DomainError(f"reference must be of kind '{kind.value}', got '{reference.kind.value}'")


def _evaluate(d: BetaDifference, threshold: float, method: EvalMethod, **diagnostics: Any) -> ConfidenceResult:
    """P(ϑ < threshold), retrying on the convolution path when the closed form does not converge."""
    used = method
    try:
        ev = diff_cdf_detailed(d, threshold, method)
    except NonConvergenceError as e:
        if method.kind != Method.CLOSED_FORM:
            raise
        logger.warning(f"Closed form did not converge ({e}); retrying with convolution quadrature")
        used = method.model_copy(update={"kind": Method.CONVOLUTION})
        ev = diff_cdf_detailed(d, threshold, used)
        diagnostics["fallback"] = Method.CONVOLUTION.value

    error_key = "mc_se" if used.kind == Method.MONTE_CARLO else "numerical_error"
    diagnostics[error_key] = ev.error
    diagnostics["posterior_treat"] = str(d.treat)
    diagnostics["posterior_control"] = str(d.control)
    return ConfidenceResult(C=ev.value, threshold_used=threshold, method=used.kind.value, diagnostics=diagnostics)


def confidence_margin(
    treat: ArmCounts,
    control: ArmCounts,
    priors: Tuple[BetaParams, BetaParams],
    reference: ReferenceEstimate,
    epsilon: float,
    method: EvalMethod = DEFAULT_METHOD,
) -> ConfidenceResult:
    """C = P(ϑ < ϑ̂_ref + ε): probability of ruling out more than an ε absolute increase."""
    _check_kind(reference, ReferenceKind.DIFFERENCE)
    if epsilon < 0:
        raise DomainError(f"margin must be nonnegative, got {epsilon}")
    d = posterior_difference(treat, control, priors)
    return _evaluate(d, reference.value + epsilon, method)


def confidence_fold_two_arm(
    treat: ArmCounts,
    control: ArmCounts,
    priors: Tuple[BetaParams, BetaParams],
    reference: ReferenceEstimate,
    fold: float,
    method: EvalMethod = DEFAULT_METHOD,
) -> ConfidenceResult:
    """C = P(ϑ < f·ϑ̂_ref): probability of ruling out an f-fold increase."""
    _check_kind(reference, ReferenceKind.DIFFERENCE)
    if not fold > 1.0:
        raise DomainError(f"fold must exceed 1, got {fold}")
    d = posterior_difference(treat, control, priors)
    threshold = fold * reference.value
    branch = "nonnegative" if threshold >= 0.0 else "negative"
    return _evaluate(d, threshold, method, branch=branch)


def _single_arm(treat: ArmCounts, prior: BetaParams, threshold: float) -> ConfidenceResult:
    post = update_beta(prior, treat)
    return ConfidenceResult(
        C=reg_inc_beta(post.a, post.b, min(max(threshold, 0.0), 1.0)),
        threshold_used=threshold,
        method="incomplete_beta",
        diagnostics={"posterior": str(post)},
    )


def confidence_fold_single_arm(
    treat: ArmCounts,
    prior: BetaParams,
    reference: ReferenceEstimate,
    fold: float,
) -> ConfidenceResult:
    """C = P(θ < f·θ̂_ref) for a single-arm proportion, exact to incomplete-beta accuracy."""
    _check_kind(reference, ReferenceKind.PROPORTION)
    if not fold > 0.0:
        raise DomainError(f"fold must be positive, got {fold}")
    threshold = fold * reference.value
    if threshold > 1.0:
        raise DomainError(f"fold × reference must not exceed 1, got {threshold}")
    return _single_arm(treat, prior, threshold)


def confidence(
    query: ConsistencyQuery,
    treat: ArmCounts,
    control: Optional[ArmCounts] = None,
    priors: Tuple[BetaParams, BetaParams] = (UNIFORM_PRIOR, UNIFORM_PRIOR),
) -> ConfidenceResult:
    """Dispatch a consistency query to the two-arm or single-arm computation."""
    if query.reference.kind == ReferenceKind.PROPORTION:
        if query.hypothesis == Hypothesis.FOLD:
            return confidence_fold_single_arm(treat, priors[0], query.reference, query.fold)
        return _single_arm(treat, priors[0], query.threshold)

    if control is None:
        raise DomainError("a difference reference needs control-arm counts")
    if query.hypothesis == Hypothesis.MARGIN:
        return confidence_margin(treat, control, priors, query.reference, query.margin, query.method)
    return confidence_fold_two_arm(treat, control, priors, query.reference, query.fold, query.method)


# ---------------------------------------------------------------------------
# Design
# ---------------------------------------------------------------------------

def plug_in_count(rate: float, n: int) -> int:
    """Expected event count round(rate·n), ties rounded up."""
    return int((Decimal(repr(rate)) * n).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def allocation_units(ratio: float) -> Tuple[int, int]:
    """Smallest integer treat:control pair for an allocation ratio."""
    frac = Fraction(ratio).limit_denominator(1000)
    return frac.numerator, frac.denominator


def scenario_arm_sizes(scenario: DesignScenario, n_total: int) -> Tuple[int, int]:
    if scenario.single_arm:
        return n_total, 0
    p, q = allocation_units(scenario.allocation_ratio)
    n_treat = plug_in_count(p / (p + q), n_total)
    return n_treat, n_total - n_treat


def counts_confidence(
    scenario: DesignScenario,
    r_treat: int,
    n_treat: int,
    r_control: int = 0,
    n_control: int = 0,
) -> ConfidenceResult:
    """Confidence for the scenario's query at the given observed counts."""
    treat = ArmCounts(events=r_treat, n=n_treat, arm_label=ArmLabel.ITX)
    control = None if scenario.single_arm else ArmCounts(events=r_control, n=n_control, arm_label=ArmLabel.CX)
    return confidence(scenario.query, treat, control, (scenario.prior_treat, scenario.prior_control))


def scenario_confidence(
    scenario: DesignScenario,
    n_total: Optional[int] = None,
    rng: Optional[RngStream] = None,
    trials: int = 10_000,
) -> ConfidenceResult:
    """
    Confidence for a planned study of ``n_total`` participants.

    In plug-in mode counts are round(rate·n_arm); in predictive mode the
    returned C is the probability over simulated trials of meeting target_C.
    """
    n = n_total if n_total is not None else scenario.n_total
    if n is None:
        raise DomainError("scenario confidence needs n_total")
    n_treat, n_control = scenario_arm_sizes(scenario, n)

    if scenario.count_mode == CountMode.PREDICTIVE:
        if rng is None:
            raise DomainError("predictive mode needs a seeded random stream")
        estimate = predictive_confidence(scenario, rng, trials, n_total=n)
        return ConfidenceResult(
            C=estimate.p,
            threshold_used=scenario.query.threshold,
            method=CountMode.PREDICTIVE.value,
            diagnostics={"mc_se": estimate.se, "trials": trials, "n_treat": n_treat, "n_control": n_control},
        )

    r_treat = plug_in_count(scenario.treat_rate, n_treat)
    r_control = plug_in_count(scenario.control_rate, n_control)
    result = counts_confidence(scenario, r_treat, n_treat, r_control, n_control)
    result.diagnostics.update(n_treat=n_treat, n_control=n_control, r_treat=r_treat, r_control=r_control)
    return result


def _unit_size(scenario: DesignScenario) -> int:
    if scenario.single_arm:
        return 1
    p, q = allocation_units(scenario.allocation_ratio)
    return p + q


@contextmanager
def _evaluator(workers: int) -> Iterator[Callable[..., Iterable[Any]]]:
    """``map`` in this process, or the ``map`` of a process pool when workers > 1."""
    if workers <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield pool.map


def _plug_in_confidence(scenario: DesignScenario, n_total: int) -> float:
    return scenario_confidence(scenario, n_total).C


def _scan_floor(scenario: DesignScenario, unit: int, max_units: int) -> Optional[int]:
    """First allocation unit at which every arm with a positive rate expects ``min_events`` events."""
    for units in range(1, max_units + 1):
        n_treat, n_control = scenario_arm_sizes(scenario, units * unit)
        arms = [(scenario.treat_rate, n_treat)]
        if not scenario.single_arm:
            arms.append((scenario.control_rate, n_control))
        if all(rate == 0.0 or plug_in_count(rate, n) >= scenario.min_events for rate, n in arms):
            return units
    return None


def solve_sample_size(
    scenario: DesignScenario,
    n_cap: int = DEFAULT_N_CAP,
    workers: int = 1,
) -> DesignSolution:
    """
    Smallest n_total whose plug-in confidence meets ``scenario.target_C``.

    n_total runs over whole allocation units (multiples of p + q for a p:q
    ratio). Rounding of the plug-in counts makes C non-monotone in n, so every
    unit from the floor upward is evaluated in order and the first one that
    meets the target is returned. With ``workers`` > 1 consecutive candidates
    are evaluated in batches on a process pool; the answer does not change.

    Raises:
        UnsatisfiableError: if no n_total <= n_cap meets the target.
    """
    if scenario.count_mode != CountMode.PLUG_IN:
        raise DomainError("solve_sample_size searches plug-in confidence; evaluate predictive mode at a fixed n_total")

    unit = _unit_size(scenario)
    max_units = n_cap // unit
    if max_units < 1:
        raise UnsatisfiableError(f"n_cap {n_cap} is below one allocation unit ({unit})")
    first = _scan_floor(scenario, unit, max_units)
    if first is None:
        raise UnsatisfiableError(f"no n_total <= {n_cap} gives {scenario.min_events} expected events per arm")

    batch = 1 if workers <= 1 else workers * CANDIDATES_PER_WORKER
    evaluate_at = partial(_plug_in_confidence, scenario)
    evaluations = 0
    best = (0, -math.inf)
    with _evaluator(workers) as evaluate:
        for start in range(first, max_units + 1, batch):
            candidates = [units * unit for units in range(start, min(start + batch, max_units + 1))]
            for n_total, C in zip(candidates, evaluate(evaluate_at, candidates)):
                evaluations += 1
                logger.debug(f"n_total={n_total}: C={C!r}")
                if C >= scenario.target_C:
                    return _design_solution(scenario, n_total, C, evaluations)
                if C > best[1]:
                    best = (n_total, C)

    raise UnsatisfiableError(
        f"target C={scenario.target_C} not reached with n_total <= {n_cap} "
        f"(best C={best[1]:.4f} at n_total={best[0]})"
    )


def _design_solution(scenario: DesignScenario, n_total: int, C: float, evaluations: int) -> DesignSolution:
    n_treat, n_control = scenario_arm_sizes(scenario, n_total)
    solution = DesignSolution(
        n_total=n_total,
        n_treat=n_treat,
        n_control=n_control,
        r_treat=plug_in_count(scenario.treat_rate, n_treat),
        r_control=plug_in_count(scenario.control_rate, n_control),
        achieved_C=C,
        evaluations=evaluations,
    )
    logger.info(f"Solved sample size: n_total={n_total} (C={C:.4f}, {evaluations} evaluations)")
    return solution


def _curve_point(scenario: DesignScenario, trials: int, job: Tuple[int, Optional[RngStream]]) -> CurvePoint:
    n_total, stream = job
    result = scenario_confidence(scenario, n_total, rng=stream, trials=trials)
    d = result.diagnostics
    return CurvePoint(
        n_total=n_total,
        n_treat=d["n_treat"],
        n_control=d["n_control"],
        r_treat=d.get("r_treat"),
        r_control=d.get("r_control"),
        C=result.C,
    )


def confidence_curve(
    scenario: DesignScenario,
    n_values: Sequence[int],
    rng: Optional[RngStream] = None,
    trials: int = 10_000,
    workers: int = 1,
) -> List[CurvePoint]:
    """
    Confidence along a range of total sample sizes.

    Plug-in scenarios give the deterministic C at each n. Predictive scenarios
    need ``rng``; the point at position i draws from its own child stream, so
    the curve is the same whatever the order or the number of workers.
    """
    if scenario.count_mode == CountMode.PREDICTIVE:
        if rng is None:
            raise DomainError("a predictive curve needs a seeded random stream")
        streams: List[Optional[RngStream]] = list(rng.spawn(len(n_values)))
    else:
        streams = [None] * len(n_values)
    with _evaluator(workers) as evaluate:
        return list(evaluate(partial(_curve_point, scenario, trials), zip(n_values, streams)))


def min_fold(
    treat: ArmCounts,
    prior: BetaParams,
    reference: ReferenceEstimate,
    target_C: float,
) -> float:
    """
    Smallest fold f >= 1 that can be ruled out at posterior probability target_C.

    Raises:
        UnsatisfiableError: if even the threshold 1 (f = 1/θ̂_ref) misses the target.
    """
    _check_kind(reference, ReferenceKind.PROPORTION)
    if not 0.0 <= target_C <= 1.0:
        raise DomainError(f"target_C must lie in [0, 1], got {target_C}")
    post = update_beta(prior, treat)
    theta = reference.value
    f_max = 1.0 / theta

    def gap(f: float) -> float:
        return reg_inc_beta(post.a, post.b, min(f * theta, 1.0)) - target_C

    if gap(f_max) < 0.0:
        raise UnsatisfiableError(f"target C={target_C} is not reachable for {post}")
    if gap(1.0) >= 0.0:
        return 1.0

    f = brentq(gap, 1.0, f_max, xtol=MIN_FOLD_XTOL)
    while gap(f) < 0.0:
        f = min(f + MIN_FOLD_XTOL, f_max)
    return f


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------

class ContourQuantity(str, Enum):
    CONFIDENCE = "confidence"
    AT_LEAST_R = "at-least-r"
    EXACTLY_R = "exactly-r"


class ContourGrid(BaseModel):
    """Dense (n, r) grid of one contour quantity; ``values[i, j]`` belongs to (n_values[i], r_values[j])."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_values: List[int]
    r_values: List[int]
    values: np.ndarray
    quantity: ContourQuantity

    @field_validator("values")
    @classmethod
    def _two_dimensional(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2:
            raise ValueError("contour values must be a 2-D array")
        return v

    def cells(self) -> List[Tuple[int, int, float]]:
        return [
            (n, r, float(self.values[i, j]))
            for i, n in enumerate(self.n_values)
            for j, r in enumerate(self.r_values)
        ]

    def value_at(self, n: int, r: int) -> float:
        return float(self.values[self.n_values.index(n), self.r_values.index(r)])


def at_least_r(rate: float, n: int, r: int) -> float:
    """Binomial P(R >= r) for R ~ Bin(n, rate)."""
    if r <= 0:
        return 1.0
    if r > n or rate == 0.0:
        return 0.0
    if rate == 1.0:
        return 1.0
    return reg_inc_beta(r, n - r + 1, rate)


def exactly_r(rate: float, n: int, r: int) -> float:
    """Binomial P(R = r) for R ~ Bin(n, rate)."""
    if r < 0 or r > n:
        return 0.0
    if rate == 0.0:
        return 1.0 if r == 0 else 0.0
    if rate == 1.0:
        return 1.0 if r == n else 0.0
    ln_choose = math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)
    return math.exp(ln_choose + r * math.log(rate) + (n - r) * math.log1p(-rate))


def _contour_row(
    quantity: ContourQuantity,
    prior: BetaParams,
    rate: Optional[float],
    reference: Optional[ReferenceEstimate],
    fold: float,
    r_values: Sequence[int],
    n: int,
) -> List[float]:
    row = []
    for r in r_values:
        if quantity == ContourQuantity.CONFIDENCE:
            if r > n:
                row.append(math.nan)
            else:
                row.append(confidence_fold_single_arm(ArmCounts(events=r, n=n), prior, reference, fold).C)
        elif quantity == ContourQuantity.AT_LEAST_R:
            row.append(at_least_r(rate, n, r))
        else:
            row.append(exactly_r(rate, n, r))
    return row


def contour_grid(
    n_values: Sequence[int],
    r_values: Sequence[int],
    quantity: ContourQuantity = ContourQuantity.CONFIDENCE,
    prior: BetaParams = UNIFORM_PRIOR,
    rate: Optional[float] = None,
    reference: Optional[ReferenceEstimate] = None,
    fold: float = 1.0,
    workers: int = 1,
) -> ContourGrid:
    """
    Evaluate a contour quantity on every (n, r) cell.

    ``confidence`` is the single-arm C at ``fold × reference`` (NaN where r > n);
    ``at-least-r`` and ``exactly-r`` are binomial probabilities at the true ``rate``.
    Rows (one per n) go to a process pool when ``workers`` > 1.
    """
    quantity = ContourQuantity(quantity)
    if quantity == ContourQuantity.CONFIDENCE:
        if reference is None:
            raise DomainError("confidence contours need a proportion reference")
    elif rate is None or not 0.0 <= rate <= 1.0:
        raise DomainError(f"binomial contours need a true rate in [0, 1], got {rate}")
    if any(n < 0 for n in n_values) or any(r < 0 for r in r_values):
        raise DomainError("contour axes must be nonnegative")

    row = partial(_contour_row, quantity, prior, rate, reference, fold, list(r_values))
    with _evaluator(workers) as evaluate:
        rows = list(evaluate(row, n_values))
    values = np.array(rows, dtype=float).reshape(len(n_values), len(r_values))
    return ContourGrid(n_values=list(n_values), r_values=list(r_values), values=values, quantity=quantity)


# ---------------------------------------------------------------------------
# Win odds
# ---------------------------------------------------------------------------

class WinOddsTable(BaseModel):
    """Per-subject outcome rows for arms A (test) and B (control), components in priority order."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    arm_a: np.ndarray
    arm_b: np.ndarray
    larger_is_better: Tuple[bool, ...]

    @model_validator(mode="after")
    def _consistent_shapes(self) -> "WinOddsTable":
        for name, arm in (("arm_a", self.arm_a), ("arm_b", self.arm_b)):
            if arm.ndim != 2 or arm.shape[0] < 1:
                raise ValueError(f"{name} needs at least one subject row")
        if self.arm_a.shape[1] != self.arm_b.shape[1]:
            raise ValueError("both arms need the same number of outcome components")
        if len(self.larger_is_better) != self.arm_a.shape[1]:
            raise ValueError("one direction flag is needed per outcome component")
        return self

    @classmethod
    def from_rows(
        cls,
        arm_a: Sequence[Sequence[float]],
        arm_b: Sequence[Sequence[float]],
        larger_is_better: Optional[Sequence[bool]] = None,
    ) -> "WinOddsTable":
        a = np.asarray(arm_a, dtype=float)
        b = np.asarray(arm_b, dtype=float)
        if larger_is_better is None:
            larger_is_better = (True,) * (a.shape[1] if a.ndim == 2 else 0)
        return cls(arm_a=a, arm_b=b, larger_is_better=tuple(larger_is_better))

    def swapped(self) -> "WinOddsTable":
        return WinOddsTable(arm_a=self.arm_b, arm_b=self.arm_a, larger_is_better=self.larger_is_better)


class WinOddsResult(BaseModel):
    """``psi_hat`` is exact, so swapping the arms gives its reciprocal."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    wins: int
    losses: int
    ties: int
    psi_hat: Fraction
    win_ratio: Optional[float]
    win_proportion: float
    ci_low: float
    ci_high: float
    margin: float
    reject: bool
    replicates: int


def pair_outcomes(table: WinOddsTable) -> np.ndarray:
    """(n_A, n_B) matrix of +1 (A wins), −1 (A loses) and 0 (tie) decided by the first differing component."""
    direction = np.where(np.asarray(table.larger_is_better), 1.0, -1.0)
    signs = np.sign(table.arm_a[:, None, :] - table.arm_b[None, :, :]) * direction
    outcome = np.zeros(signs.shape[:2])
    for k in range(signs.shape[2]):
        outcome = np.where(outcome == 0.0, signs[:, :, k], outcome)
    return outcome.astype(np.int8)


def _counts(outcome: np.ndarray) -> Tuple[int, int, int]:
    wins = int(np.count_nonzero(outcome > 0))
    losses = int(np.count_nonzero(outcome < 0))
    return wins, losses, outcome.size - wins - losses


def _psi(wins: int, losses: int, ties: int) -> float:
    denominator = 2 * losses + ties
    if denominator == 0:
        return math.inf
    return (2 * wins + ties) / denominator


def win_odds(
    table: WinOddsTable,
    margin: float,
    rng: RngStream,
    replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
) -> WinOddsResult:
    """
    Win odds Ψ̂ = (wins + ties/2)/(losses + ties/2) over all (A, B) subject pairs.

    The non-inferiority null Ψ <= ψ₀ is rejected when the 2.5% bootstrap
    quantile exceeds ψ₀. Each replicate resamples subjects within each arm.

    Raises:
        DegenerateError: if losses + ties/2 = 0.
    """
    if not 0.0 < margin <= 1.0:
        raise DomainError(f"win-odds margin must lie in (0, 1], got {margin}")
    if replicates < 1:
        raise DomainError(f"replicates must be positive, got {replicates}")

    outcome = pair_outcomes(table)
    wins, losses, ties = _counts(outcome)
    if 2 * losses + ties == 0:
        raise DegenerateError(f"win odds undefined: {wins} wins against no losses or ties")
    psi_hat = Fraction(2 * wins + ties, 2 * losses + ties)

    gen = rng.generator()
    n_a, n_b = outcome.shape
    boot = np.empty(replicates)
    for i in range(replicates):
        ia = gen.integers(0, n_a, n_a)
        ib = gen.integers(0, n_b, n_b)
        boot[i] = _psi(*_counts(outcome[np.ix_(ia, ib)]))

    ci_low = float(np.quantile(boot, BOOTSTRAP_LOWER_QUANTILE, method="lower"))
    ci_high = float(np.quantile(boot, BOOTSTRAP_UPPER_QUANTILE, method="higher"))
    result = WinOddsResult(
        wins=wins,
        losses=losses,
        ties=ties,
        psi_hat=psi_hat,
        win_ratio=wins / losses if losses else None,
        win_proportion=(wins + 0.5 * ties) / outcome.size,
        ci_low=ci_low,
        ci_high=ci_high,
        margin=margin,
        reject=ci_low > margin,
        replicates=replicates,
    )
    logger.info(f"Win odds {float(psi_hat):.4f} [{ci_low:.4f}, {ci_high:.4f}] vs margin {margin}: reject={result.reject}")
    return result
