"""
Special-function kernel used by every probability computation in pedsafe.

Gamma and beta arithmetic is carried out in log space because posterior shape
parameters grow with the sample size (hundreds to thousands) and direct gamma
evaluation would overflow. The incomplete beta function accepts numpy arrays
for its argument so quadrature rules can evaluate whole node vectors at once.
"""
import math
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .constants import (
    BETACF_EPS,
    BETACF_MAX_ITER,
    BOUNDARY_LIMIT,
    CANCELLATION_LIMIT,
    FPMIN,
    SERIES_MAX_TERMS,
    SERIES_REL_TOL,
    STABILITY_WINDOW,
)
from .core.errors import DomainError, NonConvergenceError

ArrayLike = Union[float, np.ndarray]

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

_erfc = np.vectorize(math.erfc, otypes=[float])


class SeriesControl(BaseModel):
    """Truncation settings for hypergeometric series."""
    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=SERIES_REL_TOL, gt=0)
    max_terms: int = Field(default=SERIES_MAX_TERMS, ge=1)


DEFAULT_SERIES = SeriesControl()


def _require_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (value > 0):
            raise DomainError(f"{name} must be positive, got {value}")


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    _require_positive(x=x)
    return math.lgamma(x)


def ln_beta(a: float, b: float) -> float:
    """ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b)."""
    _require_positive(a=a, b=b)
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta_fn(a: float, b: float) -> float:
    """Complete beta function B(a, b), evaluated through ln_beta."""
    return math.exp(ln_beta(a, b))


def _betacf(a: float, b: float, x: np.ndarray) -> np.ndarray:
    """Continued fraction for I_x(a, b), modified Lentz method, vectorized over x.

    Entries that have converged are frozen while the rest keep iterating.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < FPMIN, FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)

    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)

        active &= np.abs(delta - 1.0) > BETACF_EPS
        if not active.any():
            return h

    raise NonConvergenceError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b} "
        f"after {BETACF_MAX_ITER} iterations"
    )


def reg_inc_beta(a: float, b: float, x: ArrayLike) -> ArrayLike:
    """
    Regularized incomplete beta function I_x(a, b).

    Uses the continued fraction on whichever side of the mean converges fast,
    with I_x(a, b) = 1 − I_{1−x}(b, a) on the other side.

    Args:
        a: First shape, a > 0.
        b: Second shape, b > 0.
        x: Point or numpy array of points in [0, 1].

    Returns:
        A float for scalar input, otherwise an array shaped like ``x``.
    """
    _require_positive(a=a, b=b)
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.isnan(xs)) or np.any(xs < 0.0) or np.any(xs > 1.0):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")

    out = np.empty_like(xs)
    out[xs <= 0.0] = 0.0
    out[xs >= 1.0] = 1.0
    mid = (xs > 0.0) & (xs < 1.0)

    if mid.any():
        xm = xs[mid]
        ln_front = a * np.log(xm) + b * np.log1p(-xm) - ln_beta(a, b)
        direct = xm < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xm)
        if direct.any():
            xd = xm[direct]
            res[direct] = np.exp(ln_front[direct]) * _betacf(a, b, xd) / a
        if (~direct).any():
            xr = xm[~direct]
            res[~direct] = 1.0 - np.exp(ln_front[~direct]) * _betacf(b, a, 1.0 - xr) / b
        out[mid] = np.clip(res, 0.0, 1.0)

    if scalar:
        return float(out[0])
    return out.reshape(np.shape(x))


def _check_series_args(w: float, *xs: float) -> None:
    if w <= 0 and float(w).is_integer():
        raise DomainError(f"w must not be a nonpositive integer, got {w}")
    for x in xs:
        if not abs(x) < 1.0:
            raise DomainError(f"series argument must satisfy |x| < 1, got {x}")


def _check_cancellation(name: str, total: float, peak: float) -> float:
    if peak > CANCELLATION_LIMIT * abs(total):
        raise NonConvergenceError(
            f"{name} series lost precision to cancellation (largest term {peak:.3g}, sum {total:.3g})"
        )
    return total


def gauss_2f1(u: float, v: float, w: float, x: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Gauss hypergeometric function ₂F₁(u, v; w; x) by its power series."""
    _check_series_args(w, x)
    total = 1.0
    term = 1.0
    peak = 1.0
    quiet = 0
    for k in range(ctl.max_terms):
        term *= (u + k) * (v + k) / ((w + k) * (k + 1)) * x
        total += term
        peak = max(peak, abs(term))
        if not math.isfinite(total):
            raise NonConvergenceError(f"2F1 series overflowed at term {k + 1}")
        if abs(term) <= ctl.rel_tol * abs(total):
            quiet += 1
            if quiet >= STABILITY_WINDOW:
                return _check_cancellation("2F1", total, peak)
        else:
            quiet = 0
    raise NonConvergenceError(f"2F1 series did not converge within {ctl.max_terms} terms")


def appell_f1(
    u: float,
    v1: float,
    v2: float,
    w: float,
    x1: float,
    x2: float,
    ctl: SeriesControl = DEFAULT_SERIES,
) -> float:
    """
    Appell's first hypergeometric function F1(u, v1, v2; w; x1, x2).

    The double series is accumulated along anti-diagonals i + j = d, since
    individual terms are not monotone. Summation stops once three consecutive
    anti-diagonal sums fall below ``rel_tol`` times the partial sum. The
    largest single term is tracked as well: when it exceeds the sum by more
    than ``CANCELLATION_LIMIT`` the digits left in the sum are noise.

    Raises:
        DomainError: if |x1| >= 1 or |x2| >= 1.
        NonConvergenceError: near the boundary of the unit bidisk, on overflow,
            on catastrophic cancellation, or when ``max_terms`` is exhausted.
            Callers fall back to quadrature.
    """
    _check_series_args(w, x1, x2)
    if abs(x1) > BOUNDARY_LIMIT or abs(x2) > BOUNDARY_LIMIT:
        raise NonConvergenceError(
            f"F1 arguments ({x1}, {x2}) too close to the unit boundary for series summation"
        )

    d_max = int((math.sqrt(8.0 * ctl.max_terms + 1.0) - 1.0) / 2.0)
    left = np.zeros(d_max + 1)   # (v1)_i x1^i / i!
    right = np.zeros(d_max + 1)  # (v2)_j x2^j / j!
    left[0] = right[0] = 1.0
    lead = 1.0                   # (u)_d / (w)_d
    total = 0.0
    peak = 0.0
    used = 0
    quiet = 0

    for d in range(d_max + 1):
        if d > 0:
            left[d] = left[d - 1] * (v1 + d - 1) * x1 / d
            right[d] = right[d - 1] * (v2 + d - 1) * x2 / d
            lead *= (u + d - 1) / (w + d - 1)
        terms = left[: d + 1] * right[d::-1]
        diagonal = lead * float(terms.sum())
        peak = max(peak, abs(lead) * float(np.abs(terms).max()))
        total += diagonal
        used += d + 1
        if not (math.isfinite(total) and math.isfinite(peak)):
            raise NonConvergenceError(f"F1 series overflowed on anti-diagonal {d}")
        if abs(diagonal) <= ctl.rel_tol * abs(total):
            quiet += 1
            if quiet >= STABILITY_WINDOW:
                return _check_cancellation("F1", total, peak)
        else:
            quiet = 0
        if used >= ctl.max_terms:
            break

    raise NonConvergenceError(f"F1 series did not converge within {ctl.max_terms} terms")


def normal_pdf(z: ArrayLike) -> ArrayLike:
    """Standard normal density φ(z)."""
    zs = np.asarray(z, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * zs * zs)
    return float(out) if out.ndim == 0 else out


def normal_cdf(z: ArrayLike) -> ArrayLike:
    """Standard normal distribution function Φ(z) = erfc(−z/√2)/2."""
    zs = np.asarray(z, dtype=float)
    out = 0.5 * _erfc(-zs / SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def normal_quantile(p: float) -> float:
    """Inverse of normal_cdf for 0 < p < 1."""
    from scipy.optimize import brentq

    if not 0.0 < p < 1.0:
        raise DomainError(f"normal_quantile requires 0 < p < 1, got {p}")
    return brentq(lambda z: normal_cdf(z) - p, -40.0, 40.0, xtol=1e-14, rtol=1e-15)


def student_t_cdf(t: float, df: float) -> float:
    """
    Central Student t distribution function, via the incomplete beta function.

    For t² < df the complementary form I_{t²/(df+t²)}(1/2, df/2) keeps the
    argument away from 1, which matters for very large df.
    """
    _require_positive(df=df)
    if t == 0.0:
        return 0.5
    t2 = t * t
    if t2 < df:
        tail = 0.5 * (1.0 - reg_inc_beta(0.5, 0.5 * df, t2 / (df + t2)))
    else:
        tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, df / (df + t2))
    return 1.0 - tail if t > 0 else tail


def student_t_pdf(t: float, df: float) -> float:
    """Central Student t density."""
    _require_positive(df=df)
    ln_norm = -0.5 * math.log(df) - ln_beta(0.5, 0.5 * df)
    return math.exp(ln_norm - 0.5 * (df + 1.0) * math.log1p(t * t / df))


def student_t_quantile(p: float, df: float) -> float:
    """Inverse of student_t_cdf for 0 < p < 1."""
    from scipy.optimize import brentq

    if not 0.0 < p < 1.0:
        raise DomainError(f"student_t_quantile requires 0 < p < 1, got {p}")
    bound = 10.0
    while student_t_cdf(bound, df) < p or student_t_cdf(-bound, df) > p:
        bound *= 2.0
        if bound > 1e12:
            raise NonConvergenceError(f"cannot bracket t quantile p={p}, df={df}")
    return brentq(lambda t: student_t_cdf(t, df) - p, -bound, bound, xtol=1e-12, rtol=1e-14)
