"""Seeded synthetic instances shaped like a survey-driven renewal project.

Every quantity comes from one ``numpy.random.default_rng(seed)`` stream in a
fixed order, so a seed reproduces the same instance everywhere.  The
default distributions are invented configuration, not survey data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from recondiv.errors import ParameterError
from recondiv.model import (
    DEFAULT_THRESHOLD,
    SURVEY_CHARACTERISTICS,
    Additive,
    CharacteristicSpace,
    Instance,
    Multiplicative,
    adjust_influences,
    influence_to_factor,
    normalize_multiplicative,
    ownership_from_beta,
)

__all__ = ["GeneratorConfig", "Population", "sample_population", "population_to_instance", "generate_instance"]

MODELS = ("additive", "multiplicative")


@dataclass(frozen=True)
class GeneratorConfig:
    """Sampling distributions.

    Influences (percentage points) are normal with ``influence_mean`` (a
    scalar or one value per characteristic) and ``influence_sd``.  Sizes
    and prices per square metre are uniform on their ranges; each
    characteristic is present on an apartment, and in a respondent's own
    home, with probability ``presence``.
    """

    influence_mean: float | Sequence[float] = 4.0
    influence_sd: float = 8.0
    size_range: tuple[float, float] = (60.0, 140.0)
    price_range: tuple[float, float] = (20_000.0, 40_000.0)
    presence: float = 0.5
    characteristics: CharacteristicSpace = field(default=SURVEY_CHARACTERISTICS)

    def __post_init__(self):
        if not self.influence_sd >= 0:
            raise ParameterError("influence_sd must be nonnegative")
        for name in ("size_range", "price_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ParameterError(f"{name} must satisfy 0 < low <= high")
        if not 0 <= self.presence <= 1:
            raise ParameterError("presence must be a probability")
        if not np.isscalar(self.influence_mean) and len(self.influence_mean) != len(self.characteristics):
            raise ParameterError("influence_mean needs one entry per characteristic")


@dataclass(frozen=True)
class Population:
    """Raw sampled data before any valuation transform.

    ``beta`` is ``|T| x 2n`` (old apartments first); ``survey_owned[i]`` is
    the set of characteristics respondent ``i`` owned when surveyed.
    """

    influences: np.ndarray
    survey_owned: tuple[frozenset, ...]
    beta: np.ndarray
    base_price: np.ndarray
    config: GeneratorConfig

    @property
    def n(self) -> int:
        return self.influences.shape[0]

    def adjusted_influences(self, significance: float | None = None) -> np.ndarray:
        """Influences shifted by the endowment coefficients where ownership changed."""
        coef = self.config.characteristics.coefficients(significance)
        now = ownership_from_beta(self.beta.tolist(), range(self.n))
        return np.array(adjust_influences(self.influences.tolist(), self.survey_owned, now, coef))


def sample_population(agents: int, seed: int | None, config: GeneratorConfig | None = None) -> Population:
    if not isinstance(agents, int) or agents < 1:
        raise ParameterError("agents must be a positive integer")
    config = config or GeneratorConfig()
    rng = np.random.default_rng(seed)
    t, n = len(config.characteristics), agents
    beta = (rng.random((t, 2 * n)) < config.presence).astype(int)
    size = rng.uniform(*config.size_range, size=2 * n)
    price = rng.uniform(*config.price_range, size=2 * n)
    mean = np.broadcast_to(np.asarray(config.influence_mean, dtype=float), (t,))
    influences = rng.normal(mean, config.influence_sd, size=(n, t))
    owned = rng.random((n, t)) < config.presence
    survey = tuple(frozenset(np.flatnonzero(row).tolist()) for row in owned)
    return Population(influences, survey, beta, np.round(size * price, 2), config)


def population_to_instance(pop: Population, model: str = "multiplicative", endowment: bool = False,
                           normalize: float | None = DEFAULT_THRESHOLD,
                           significance: float | None = None) -> Instance:
    """Turn sampled data into an instance.

    Multiplicative factors are ``max(1 + X/100, 1e-5)``, then normalized at
    ``normalize`` (``None`` skips it).  Additive scores are ``X/100`` of the
    mean base price, floored at zero.
    """
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    x = pop.adjusted_influences(significance) if endowment else pop.influences
    beta = pop.beta.tolist()
    if model == "multiplicative":
        rho = [[influence_to_factor(v) for v in row] for row in x.tolist()]
        valuation = Multiplicative(rho, beta, pop.base_price.tolist())
        if normalize is not None:
            valuation = normalize_multiplicative(valuation, normalize)
    else:
        reference = float(pop.base_price.mean())
        valuation = Additive((reference * np.maximum(x, 0.0) / 100.0).tolist(), beta)
    n = pop.n
    return Instance(
        tuple(f"o{i + 1}" for i in range(n)),
        tuple(f"a{i + 1}" for i in range(n)),
        valuation,
        characteristics=pop.config.characteristics,
    )


def generate_instance(agents: int, seed: int | None, model: str = "multiplicative", *,
                      endowment: bool = False, normalize: float | None = DEFAULT_THRESHOLD,
                      significance: float | None = None, config: GeneratorConfig | None = None) -> Instance:
    """Sample a synthetic instance; identical arguments give identical instances."""
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    pop = sample_population(agents, seed, config)
    return population_to_instance(pop, model, endowment, normalize, significance)
