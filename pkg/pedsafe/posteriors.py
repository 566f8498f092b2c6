"""
Conjugate beta updating and the distribution of the placebo-corrected
incidence proportion, the difference of two independent beta posteriors.

Three evaluation paths are provided for the difference:

* ``convolution_quadrature`` (default): one-dimensional integrals of beta
  densities against beta distribution functions, composite Simpson rule on a
  sin² node map. Shapes below one put an integrable singularity at an
  endpoint; its leading term is integrated exactly and the remainder on a
  power map.
* ``closed_form``: the piecewise Appell-F1 expression, used as a cross-check
  where its double series converges. It raises NonConvergenceError instead
  of returning a value the series cannot resolve.
* ``monte_carlo`` and ``normal_approx`` for large-sample or verification use.
"""
import logging
import math
from enum import Enum
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import simpson
from scipy.optimize import brentq

from .constants import (
    CLOSED_FORM_NODES,
    CLOSED_FORM_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_MC_SAMPLES,
    MIN_GRID_POINTS,
    MIN_MC_SAMPLES,
    SEED_LIMIT,
)
from .core.errors import DomainError, NonConvergenceError
from .core.models import EvaluationConfig
from .specfun import (
    DEFAULT_SERIES,
    SeriesControl,
    appell_f1,
    ln_beta,
    normal_cdf,
    normal_pdf,
    reg_inc_beta,
)

logger = logging.getLogger("Pedsafe.Posteriors")

HALF_PI = 0.5 * math.pi

# Integration windows extend this many standard deviations either side of the mean.
WINDOW_SDS = 40.0


class ArmLabel(str, Enum):
    ITX = "iTx"
    CX = "Cx"


class ArmCounts(BaseModel):
    """Observed events out of n patients in one arm."""
    model_config = ConfigDict(frozen=True)

    events: int = Field(ge=0)
    n: int = Field(ge=0)
    arm_label: ArmLabel = ArmLabel.ITX

    @model_validator(mode="after")
    def _events_within_n(self) -> "ArmCounts":
        if self.events > self.n:
            raise ValueError(f"events ({self.events}) cannot exceed n ({self.n})")
        return self

    @classmethod
    def parse(cls, text: str, arm_label: ArmLabel = ArmLabel.ITX) -> "ArmCounts":
        """Parse an ``events/n`` pair such as ``4/100``."""
        parts = str(text).strip().split("/")
        if len(parts) != 2:
            raise ValueError(f"expected counts as 'events/n', got '{text}'")
        try:
            events, n = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"counts must be integers, got '{text}'") from None
        return cls(events=events, n=n, arm_label=arm_label)

    def __str__(self) -> str:
        return f"{self.events}/{self.n}"


class BetaParams(BaseModel):
    """Shapes of a beta prior or posterior."""
    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0)
    b: float = Field(gt=0)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        total = self.a + self.b
        return self.a * self.b / (total * total * (total + 1.0))

    def __str__(self) -> str:
        return f"Beta({self.a!r}, {self.b!r})"


UNIFORM_PRIOR = BetaParams(a=1.0, b=1.0)


class NearZeroPriorSpec(BaseModel):
    """Weight p_a² of the near-zero informative prior Beta(p_a²/(1−p_a²), 1)."""
    model_config = ConfigDict(frozen=True)

    p_a_sq: float = Field(gt=0, lt=1)


class BetaDifference(BaseModel):
    """ϑ = θ_treat − θ_control for independent beta posteriors, supported on (−1, 1)."""
    model_config = ConfigDict(frozen=True)

    treat: BetaParams
    control: BetaParams

    def swapped(self) -> "BetaDifference":
        return BetaDifference(treat=self.control, control=self.treat)


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    CONVOLUTION = "convolution_quadrature"
    MONTE_CARLO = "monte_carlo"
    NORMAL_APPROX = "normal_approx"


class EvalMethod(BaseModel):
    """How a beta-difference probability is evaluated."""
    model_config = ConfigDict(frozen=True)

    kind: Method = Method.CONVOLUTION
    grid_points: int = DEFAULT_GRID_POINTS
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: Optional[int] = None
    series: SeriesControl = DEFAULT_SERIES

    @field_validator("grid_points")
    @classmethod
    def _odd_grid(cls, v: int) -> int:
        if v < MIN_GRID_POINTS or v % 2 == 0:
            raise ValueError(f"grid_points must be odd and >= {MIN_GRID_POINTS}, got {v}")
        return v

    @field_validator("mc_samples")
    @classmethod
    def _enough_samples(cls, v: int) -> int:
        if v < MIN_MC_SAMPLES:
            raise ValueError(f"mc_samples must be >= {MIN_MC_SAMPLES}, got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and not 0 <= v < SEED_LIMIT:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def _seed_for_monte_carlo(self) -> "EvalMethod":
        if self.kind == Method.MONTE_CARLO and self.seed is None:
            raise ValueError("monte_carlo evaluation requires an explicit seed")
        return self

    @classmethod
    def from_config(cls, evaluation: EvaluationConfig, seed: Optional[int] = None) -> "EvalMethod":
        return cls(
            kind=Method(evaluation.method),
            grid_points=evaluation.grid_points,
            mc_samples=evaluation.mc_samples,
            seed=seed,
            series=SeriesControl(rel_tol=evaluation.series_rel_tol, max_terms=evaluation.series_max_terms),
        )


DEFAULT_METHOD = EvalMethod()


class Evaluation(NamedTuple):
    """A computed probability or density with its numerical error estimate."""
    value: float
    error: float


def update_beta(prior: BetaParams, data: ArmCounts) -> BetaParams:
    """Conjugate update: Beta(a + events, b + n − events)."""
    return BetaParams(a=prior.a + data.events, b=prior.b + data.n - data.events)


def near_zero_prior(spec: Union[NearZeroPriorSpec, float]) -> BetaParams:
    """The near-zero informative prior Beta(p_a²/(1−p_a²), 1)."""
    if not isinstance(spec, NearZeroPriorSpec):
        if not 0.0 < float(spec) < 1.0:
            raise DomainError(f"p_a_sq must lie in (0, 1), got {spec}")
        spec = NearZeroPriorSpec(p_a_sq=float(spec))
    return BetaParams(a=spec.p_a_sq / (1.0 - spec.p_a_sq), b=1.0)


def posterior_difference(
    treat: ArmCounts,
    control: ArmCounts,
    priors: Tuple[BetaParams, BetaParams] = (UNIFORM_PRIOR, UNIFORM_PRIOR),
) -> BetaDifference:
    """Update both arms and pair the posteriors as treat − control."""
    return BetaDifference(
        treat=update_beta(priors[0], treat),
        control=update_beta(priors[1], control),
    )


def beta_pdf(params: BetaParams, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        return 0.0
    if x in (0.0, 1.0):
        edge_shape = params.a if x == 0.0 else params.b
        if edge_shape < 1.0:
            return math.inf
        if edge_shape > 1.0:
            return 0.0
        return math.exp(-ln_beta(params.a, params.b))
    return math.exp(
        (params.a - 1.0) * math.log(x) + (params.b - 1.0) * math.log1p(-x) - ln_beta(params.a, params.b)
    )


def beta_cdf(params: BetaParams, x: float) -> float:
    return reg_inc_beta(params.a, params.b, min(max(x, 0.0), 1.0))


def diff_moments(d: BetaDifference) -> Tuple[float, float]:
    """Mean and variance of ϑ."""
    return d.treat.mean - d.control.mean, d.treat.variance + d.control.variance


def _xlogy(c: float, v: np.ndarray) -> np.ndarray:
    if c == 0.0:
        return np.zeros_like(v)
    return c * np.log(v)


def _support_window(params: BetaParams) -> Tuple[float, float]:
    sd = math.sqrt(params.variance)
    return max(0.0, params.mean - WINDOW_SDS * sd), min(1.0, params.mean + WINDOW_SDS * sd)


# Exponent of the power map used next to a singular endpoint after the
# constant term is subtracted; the remainder then behaves like w**(MAP_ORDER - 1).
MAP_ORDER = 3


def _simpson_with_error(values: np.ndarray, nodes: np.ndarray) -> Evaluation:
    full = float(simpson(values, x=nodes))
    coarse = float(simpson(values[::2], x=nodes[::2]))
    return Evaluation(full, abs(full - coarse) / 15.0)


LogRegular = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _endpoint_half(
    regular: Callable[[np.ndarray], np.ndarray],
    half: float,
    exponent: float,
    grid_points: int,
) -> Evaluation:
    """
    ∫_0^half R(s) s^exponent ds for exponent > −1, R smooth.

    For a negative exponent R(0) is integrated exactly and only
    (R(s) − R(0)) s^exponent goes through Simpson, on the map s = half·w^p
    with p·(exponent + 2) = MAP_ORDER, where the transformed integrand starts
    like w**(MAP_ORDER − 1).
    """
    w = np.linspace(0.0, 1.0, grid_points)
    scale = half ** (exponent + 1.0)
    if exponent < 0.0:
        p = MAP_ORDER / (exponent + 2.0)
        base = float(regular(np.zeros(1))[0])
        values = (regular(half * np.power(w, p)) - base) * scale * p * np.power(w, p * (exponent + 1.0) - 1.0)
        body = _simpson_with_error(np.nan_to_num(values, posinf=0.0, neginf=0.0), w)
        return Evaluation(body.value + base * scale / (exponent + 1.0), body.error)
    values = regular(half * w * w) * scale * 2.0 * np.power(w, 2.0 * exponent + 1.0)
    return _simpson_with_error(np.nan_to_num(values), w)


def _singular_simpson(
    log_regular: LogRegular,
    lo: float,
    hi: float,
    alpha: float,
    beta: float,
    grid_points: int,
) -> Evaluation:
    """
    ∫_lo^hi R(y) (y − lo)^alpha (hi − y)^beta dy for alpha, beta > −1.

    ``log_regular(y, y − lo, hi − y)`` returns ln R on the nodes. With both
    exponents nonnegative the map y = lo + (hi − lo) sin²(t) is used; a
    negative exponent splits the interval in half and each half goes through
    ``_endpoint_half``.
    """
    length = hi - lo
    if length <= 0.0:
        return Evaluation(0.0, 0.0)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if alpha >= 0.0 and beta >= 0.0:
            t = np.linspace(0.0, HALF_PI, grid_points)
            s, c = np.sin(t), np.cos(t)
            d_lo = length * s * s
            d_hi = length * c * c
            regular = np.exp(log_regular(lo + d_lo, d_lo, d_hi))
            weight = 2.0 * length ** (alpha + beta + 1.0) * np.power(s, 2.0 * alpha + 1.0) * np.power(c, 2.0 * beta + 1.0)
            return _simpson_with_error(np.nan_to_num(regular * weight), t)

        def from_lo(s: np.ndarray) -> np.ndarray:
            return np.exp(log_regular(lo + s, s, length - s)) * np.power(length - s, beta)

        def from_hi(s: np.ndarray) -> np.ndarray:
            return np.exp(log_regular(hi - s, length - s, s)) * np.power(length - s, alpha)

        half = 0.5 * length
        left = _endpoint_half(from_lo, half, alpha, grid_points)
        right = _endpoint_half(from_hi, half, beta, grid_points)
    return Evaluation(left.value + right.value, left.error + right.error)


def _pdf_convolution(d: BetaDifference, x: float, grid_points: int) -> Evaluation:
    """p(x) = ∫ f_treat(x + y) f_control(y) dy over the overlap of both supports."""
    tx, cy = d.treat, d.control
    t_lo, t_hi = _support_window(tx)
    c_lo, c_hi = _support_window(cy)
    lo = max(0.0, -x, c_lo, t_lo - x)
    hi = min(1.0, 1.0 - x, c_hi, t_hi - x)
    if lo >= hi:
        return Evaluation(0.0, 0.0)

    c_lo_sing = lo == 0.0
    c_hi_sing = hi == 1.0
    t_lo_sing = lo == -x
    t_hi_sing = hi == 1.0 - x
    alpha = (cy.a - 1.0) * c_lo_sing + (tx.a - 1.0) * t_lo_sing
    beta = (cy.b - 1.0) * c_hi_sing + (tx.b - 1.0) * t_hi_sing
    if alpha <= -1.0 or beta <= -1.0:
        return Evaluation(math.inf, 0.0)

    ln_norm = -ln_beta(tx.a, tx.b) - ln_beta(cy.a, cy.b)

    def log_regular(y: np.ndarray, d_lo: np.ndarray, d_hi: np.ndarray) -> np.ndarray:
        out = np.full_like(y, ln_norm)
        if not c_lo_sing:
            out += _xlogy(cy.a - 1.0, y)
        if not c_hi_sing:
            out += _xlogy(cy.b - 1.0, 1.0 - y)
        if not t_lo_sing:
            out += _xlogy(tx.a - 1.0, x + y)
        if not t_hi_sing:
            out += _xlogy(tx.b - 1.0, 1.0 - x - y)
        return out

    return _singular_simpson(log_regular, lo, hi, alpha, beta, grid_points)


def _prob_below(dens: BetaParams, cdf_arm: BetaParams, shift: float, grid_points: int) -> Evaluation:
    """P(C < D + shift) = ∫ f_D(y) F_C(y + shift) dy, with D ~ dens and C ~ cdf_arm."""
    w_lo, w_hi = _support_window(dens)
    lo = max(0.0, -shift, w_lo)
    hi = min(1.0, 1.0 - shift, w_hi)
    tail = 1.0 - beta_cdf(dens, 1.0 - shift) if shift > 0.0 else 0.0
    if lo >= hi:
        return Evaluation(tail, 0.0)

    lo_sing = lo == 0.0
    hi_sing = hi == 1.0
    # F_C vanishes like (y − lo)^a_C when lo is where C's support starts.
    cdf_edge = lo == -shift
    alpha = (dens.a - 1.0 if lo_sing else 0.0) + (cdf_arm.a if cdf_edge else 0.0)
    beta = dens.b - 1.0 if hi_sing else 0.0
    ln_norm = -ln_beta(dens.a, dens.b)
    ln_edge = -math.log(cdf_arm.a) - ln_beta(cdf_arm.a, cdf_arm.b)

    def log_regular(y: np.ndarray, d_lo: np.ndarray, d_hi: np.ndarray) -> np.ndarray:
        out = np.full_like(y, ln_norm)
        if not lo_sing:
            out += _xlogy(dens.a - 1.0, y)
        if not hi_sing:
            out += _xlogy(dens.b - 1.0, 1.0 - y)
        if cdf_edge:
            inner = reg_inc_beta(cdf_arm.a, cdf_arm.b, np.clip(d_lo, 0.0, 1.0))
            return out + np.where(d_lo > 0.0, np.log(inner) - cdf_arm.a * np.log(d_lo), ln_edge)
        inner = reg_inc_beta(cdf_arm.a, cdf_arm.b, np.clip(y + shift, 0.0, 1.0))
        return out + np.log(inner)

    body = _singular_simpson(log_regular, lo, hi, alpha, beta, grid_points)
    return Evaluation(body.value + tail, body.error)


def _cdf_convolution(d: BetaDifference, x: float, grid_points: int) -> Evaluation:
    # The arm with the larger minimum shape has the smoother density and serves
    # as the integration variable.
    tx, cy = d.treat, d.control
    if min(tx.a, tx.b) > min(cy.a, cy.b):
        ev = _prob_below(dens=tx, cdf_arm=cy, shift=-x, grid_points=grid_points)
        return Evaluation(1.0 - ev.value, ev.error)
    return _prob_below(dens=cy, cdf_arm=tx, shift=x, grid_points=grid_points)


def _pdf_closed_form(d: BetaDifference, x: float, ctl: SeriesControl) -> float:
    """
    Piecewise closed form of the beta-difference density via Appell's F1.

    Raises:
        NonConvergenceError: when the series fails or the result is negative or not finite.
    """
    a1, b1 = d.treat.a, d.treat.b
    a2, b2 = d.control.a, d.control.b
    ln_a = ln_beta(a1, b1) + ln_beta(a2, b2)
    total = a1 + a2 + b1 + b2 - 2.0

    if x > 0.0:
        series = appell_f1(b1, total, 1.0 - a1, b1 + a2, 1.0 - x, 1.0 - x * x, ctl)
        ln_front = ln_beta(a2, b1) - ln_a + (b1 + b2 - 1.0) * math.log(x) + (a2 + b1 - 1.0) * math.log1p(-x)
    elif x < 0.0:
        series = appell_f1(b2, 1.0 - a2, total, a1 + b2, 1.0 - x * x, 1.0 + x, ctl)
        ln_front = ln_beta(a1, b2) - ln_a + (b1 + b2 - 1.0) * math.log(-x) + (a1 + b2 - 1.0) * math.log1p(x)
    else:
        if a1 + a2 > 1.0 and b1 + b2 > 1.0:
            return math.exp(ln_beta(a1 + a2 - 1.0, b1 + b2 - 1.0) - ln_a)
        return math.inf

    value = math.exp(ln_front) * series
    if not math.isfinite(value) or value < 0.0:
        raise NonConvergenceError(f"closed-form density at x={x} evaluated to {value!r}")
    return value


def _closed_form_rule(d: BetaDifference, lo: float, length: float, nodes: int, ctl: SeriesControl) -> float:
    """Gauss–Legendre on the sin² map of [lo, lo + length]."""
    roots, weights = np.polynomial.legendre.leggauss(nodes)
    t = HALF_PI * 0.5 * (roots + 1.0)
    tw = HALF_PI * 0.5 * weights
    s = np.sin(t)
    points = lo + length * s * s
    jac = length * np.sin(2.0 * t)
    return float(sum(w * j * _pdf_closed_form(d, float(p), ctl) for p, w, j in zip(points, tw, jac)))


def _cdf_closed_form(d: BetaDifference, x: float, ctl: SeriesControl) -> Evaluation:
    """
    Integrates the closed-form density on one side of zero.

    The rule is run at CLOSED_FORM_NODES and at half as many nodes; their
    difference is the reported error.

    Raises:
        NonConvergenceError: if a density value fails, the two rules disagree
            by more than CLOSED_FORM_TOL, or the result leaves [0, 1].
    """
    lo, hi = (x, 1.0) if x >= 0.0 else (-1.0, x)
    fine = _closed_form_rule(d, lo, hi - lo, CLOSED_FORM_NODES, ctl)
    coarse = _closed_form_rule(d, lo, hi - lo, CLOSED_FORM_NODES // 2, ctl)
    error = abs(fine - coarse)
    if error > CLOSED_FORM_TOL:
        raise NonConvergenceError(f"closed-form integral at x={x} unresolved (rule difference {error:.2e})")
    value = 1.0 - fine if x >= 0.0 else fine
    if not -CLOSED_FORM_TOL <= value <= 1.0 + CLOSED_FORM_TOL:
        raise NonConvergenceError(f"closed-form probability at x={x} evaluated to {value!r}")
    return Evaluation(min(max(value, 0.0), 1.0), error)


def diff_pdf(d: BetaDifference, x: float, method: EvalMethod = DEFAULT_METHOD) -> float:
    """
    Density of ϑ = θ_treat − θ_control at x in (−1, 1).

    Raises:
        DomainError: for x outside (−1, 1), or a Monte-Carlo method.
        NonConvergenceError: from the closed form; retry with the convolution path.
    """
    if not -1.0 < x < 1.0:
        raise DomainError(f"diff_pdf is defined on (-1, 1), got {x}")
    if method.kind == Method.CLOSED_FORM:
        return _pdf_closed_form(d, x, method.series)
    if method.kind == Method.NORMAL_APPROX:
        mean, var = diff_moments(d)
        sd = math.sqrt(var)
        return normal_pdf((x - mean) / sd) / sd
    if method.kind == Method.MONTE_CARLO:
        raise DomainError("monte_carlo evaluation provides probabilities, not densities")
    return max(_pdf_convolution(d, x, method.grid_points).value, 0.0)


def diff_cdf_detailed(d: BetaDifference, x: float, method: EvalMethod = DEFAULT_METHOD) -> Evaluation:
    """P(ϑ < x) with a numerical error estimate (quadrature error or Monte-Carlo standard error)."""
    if x <= -1.0:
        return Evaluation(0.0, 0.0)
    if x >= 1.0:
        return Evaluation(1.0, 0.0)

    if method.kind == Method.MONTE_CARLO:
        from .montecarlo import RngStream, mc_diff_probability

        estimate = mc_diff_probability(d, x, RngStream(seed=method.seed), method.mc_samples)
        return Evaluation(estimate.p, estimate.se)
    if method.kind == Method.NORMAL_APPROX:
        mean, var = diff_moments(d)
        return Evaluation(normal_cdf((x - mean) / math.sqrt(var)), math.nan)
    if method.kind == Method.CLOSED_FORM:
        return _cdf_closed_form(d, x, method.series)

    ev = _cdf_convolution(d, x, method.grid_points)
    return Evaluation(min(max(ev.value, 0.0), 1.0), ev.error)


def diff_cdf(d: BetaDifference, x: float, method: EvalMethod = DEFAULT_METHOD) -> float:
    """P(ϑ < x); clamps to 0 below −1 and 1 above 1."""
    return diff_cdf_detailed(d, x, method).value


def diff_quantile(d: BetaDifference, p: float, method: EvalMethod = DEFAULT_METHOD) -> float:
    """Smallest x with P(ϑ < x) = p, by bracketing root search on (−1, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"diff_quantile requires 0 < p < 1, got {p}")
    return brentq(lambda x: diff_cdf(d, x, method) - p, -1.0, 1.0, xtol=1e-12)
