"""
Seeded stochastic oracle: posterior samplers and predictive probability
estimators.

Every draw comes from an ``RngStream``. A stream is a (seed, stream_id, path)
triple fed to numpy's ``SeedSequence``, so equal triples give bit-identical
draws and ``spawn`` yields independent children without shared state.
"""
import logging
import math
from typing import TYPE_CHECKING, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .constants import MIN_MC_SAMPLES, MIN_PREDICTIVE_TRIALS, SEED_LIMIT
from .core.errors import DomainError
from .posteriors import BetaDifference, BetaParams

if TYPE_CHECKING:
    from .development import MaxChangeModel
    from .precision import DesignScenario

logger = logging.getLogger("Pedsafe.MonteCarlo")


class RngStream(BaseModel):
    """Handle on one reproducible PCG64 substream."""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=SEED_LIMIT)
    stream_id: int = Field(default=0, ge=0)
    path: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, k: int) -> List["RngStream"]:
        """k child streams, disjoint from each other and from this stream."""
        return [self.model_copy(update={"path": (*self.path, i)}) for i in range(k)]

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(seed=self.seed, stream_id=stream_id)


class McEstimate(NamedTuple):
    p: float
    se: float
    count: int


def _binomial_se(p: float, count: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / count)


def sample_beta(params: BetaParams, rng: RngStream, count: int) -> np.ndarray:
    """
    I.i.d. beta variates as G1 / (G1 + G2) with G1 ~ Gamma(a), G2 ~ Gamma(b).

    numpy's gamma sampler is a squeeze/rejection method valid for any shape,
    including shapes below one.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    gen = rng.generator()
    g1 = gen.standard_gamma(params.a, count)
    g2 = gen.standard_gamma(params.b, count)
    total = g1 + g2
    # Both gammas can underflow to zero for tiny shapes; fall back to the limiting two-point law.
    zero = total == 0.0
    if zero.any():
        fallback = (gen.random(int(zero.sum())) < params.mean).astype(float)
        total[zero] = 1.0
        g1[zero] = fallback
    return g1 / total


def mc_diff_probability(d: BetaDifference, threshold: float, rng: RngStream, count: int) -> McEstimate:
    """Fraction of paired posterior draws with θ_treat − θ_control < threshold."""
    if count < MIN_MC_SAMPLES:
        raise DomainError(f"count must be >= {MIN_MC_SAMPLES}, got {count}")
    treat_rng, control_rng = rng.spawn(2)
    treat = sample_beta(d.treat, treat_rng, count)
    control = sample_beta(d.control, control_rng, count)
    p = float(np.count_nonzero(treat - control < threshold)) / count
    return McEstimate(p, _binomial_se(p, count), count)


def sample_max_change(model: "MaxChangeModel", rng: RngStream, count: int) -> np.ndarray:
    """Maxima of ``model.n`` i.i.d. N(mu, sigma²) variates, one per replicate."""
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    draws = rng.generator().standard_normal((count, model.n))
    return model.mu + model.sigma * draws.max(axis=1)


def predictive_confidence(
    scenario: "DesignScenario",
    rng: RngStream,
    trials: int,
    n_total: Optional[int] = None,
) -> McEstimate:
    """
    Probability over simulated trials that the posterior confidence meets target.

    Event counts are drawn binomially at the scenario's assumed true rates for
    the arm sizes implied by ``n_total`` (or ``scenario.n_total``). Confidence
    is computed once per distinct count pair.
    """
    from .precision import counts_confidence, scenario_arm_sizes

    if trials < MIN_PREDICTIVE_TRIALS:
        raise DomainError(f"trials must be >= {MIN_PREDICTIVE_TRIALS}, got {trials}")
    n = n_total if n_total is not None else scenario.n_total
    if n is None:
        raise DomainError("predictive confidence needs n_total")

    n_treat, n_control = scenario_arm_sizes(scenario, n)
    treat_rng, control_rng = rng.spawn(2)
    r_treat = treat_rng.generator().binomial(n_treat, scenario.treat_rate, trials)
    if n_control:
        r_control = control_rng.generator().binomial(n_control, scenario.control_rate, trials)
    else:
        r_control = np.zeros(trials, dtype=np.int64)

    cache: Dict[Tuple[int, int], bool] = {}
    met = 0
    for rt, rc in zip(r_treat.tolist(), r_control.tolist()):
        key = (rt, rc)
        if key not in cache:
            result = counts_confidence(scenario, rt, n_treat, rc, n_control)
            cache[key] = result.C >= scenario.target_C
        met += cache[key]

    logger.debug(f"Predictive confidence: {len(cache)} distinct count pairs over {trials} trials")
    p = met / trials
    return McEstimate(p, _binomial_se(p, trials), trials)
