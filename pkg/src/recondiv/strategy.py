"""Manipulation analysis for the minimum-disproportionality mechanism.

A :class:`Misreport` changes one agent's reported scores.  A
:class:`Scenario` fills in what the manipulator cannot observe: the other
agents' scores and the characteristics (and base prices) of the new
apartments.  Gains always compare the manipulator's *true* utility
``v_i(A_i) + p_i`` under the misreported and the truthful run of the
mechanism in the same scenario, and every verdict is relative to the
scenario set it was computed on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from recondiv.errors import DomainError, NoManipulationError, ParameterError
from recondiv.model import (
    Additive,
    DirectMatrix,
    Instance,
    Multiplicative,
    Number,
    as_fraction,
    validate,
)
from recondiv.proportionality import (
    MechanismOutcome,
    minimum_disproportionality_mechanism,
    payment_components,
)

__all__ = [
    "PROFITABLE_AND_SAFE",
    "PROFITABLE_UNSAFE",
    "UNPROFITABLE",
    "Misreport",
    "Scenario",
    "ScenarioResult",
    "ManipulationVerdict",
    "RatGainTerms",
    "evaluate_scenario",
    "true_utility_under_report",
    "classify_manipulation",
    "build_rat_adversarial_scenario",
    "rat_gain_terms",
    "naive_value_manipulation_demo",
    "enumerate_beta_scenarios",
    "random_scenarios",
    "random_direct_scenarios",
]

PROFITABLE_AND_SAFE = "profitable-and-safe"
PROFITABLE_UNSAFE = "profitable-unsafe"
UNPROFITABLE = "unprofitable"


# ---------------------------------------------------------------------------
# Misreports
# ---------------------------------------------------------------------------

def _key_index(instance: Instance, key) -> int:
    """Characteristic index (characteristic models) or value-table column (direct)."""
    val = instance.valuation
    if isinstance(val, DirectMatrix):
        if isinstance(key, str):
            return instance.column(key)
        limit = 2 * instance.n
    else:
        if isinstance(key, str):
            if instance.characteristics is None:
                raise DomainError(f"instance has no characteristic names, cannot resolve {key!r}")
            return instance.characteristics.index(key)
        limit = len(val.beta)
    if not isinstance(key, int) or not 0 <= key < limit:
        raise DomainError(f"unknown characteristic or column {key!r}")
    return key


@dataclass(frozen=True)
class Misreport:
    """Per-characteristic changes to one agent's report.

    Additive scores and direct values take signed offsets; multiplicative
    factors are scaled by positive ratios.  Keys are characteristic ids or
    indices (direct mode: apartment ids or table columns).
    """

    agent: int
    changes: tuple[tuple[object, Number], ...]

    def __init__(self, agent: int, changes: Mapping | Iterable = ()):
        items = changes.items() if isinstance(changes, Mapping) else changes
        object.__setattr__(self, "agent", agent)
        object.__setattr__(self, "changes", tuple((k, v) for k, v in items))

    @staticmethod
    def neutral(instance: Instance) -> Number:
        return 1 if isinstance(instance.valuation, Multiplicative) else 0

    def resolve(self, instance: Instance) -> dict[int, Number]:
        out: dict[int, Number] = {}
        for key, delta in self.changes:
            idx = _key_index(instance, key)
            if idx in out:
                raise DomainError(f"characteristic {key!r} changed twice")
            if isinstance(instance.valuation, Multiplicative) and not delta > 0:
                raise DomainError(f"multiplicative change for {key!r} must be a positive factor")
            out[idx] = delta
        return out

    def partition(self, instance: Instance) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        """``(T+, T-, T0)``: raised, lowered and unchanged characteristics."""
        changes = self.resolve(instance)
        neutral = self.neutral(instance)
        size = 2 * instance.n if isinstance(instance.valuation, DirectMatrix) else len(instance.valuation.beta)
        plus = tuple(t for t in range(size) if changes.get(t, neutral) > neutral)
        minus = tuple(t for t in range(size) if changes.get(t, neutral) < neutral)
        zero = tuple(t for t in range(size) if t not in plus and t not in minus)
        return plus, minus, zero

    def is_identity(self, instance: Instance) -> bool:
        plus, minus, _ = self.partition(instance)
        return not plus and not minus

    def apply(self, instance: Instance) -> Instance:
        """The instance with the agent's row replaced by the misreport."""
        i = self.agent
        if not isinstance(i, int) or not 0 <= i < instance.n:
            raise DomainError(f"unknown agent {i!r}")
        changes = self.resolve(instance)
        if instance.exact:
            changes = {k: as_fraction(d) for k, d in changes.items()}
        val = instance.valuation
        if isinstance(val, Multiplicative):
            rows = [list(r) for r in val.rho]
            for t, f in changes.items():
                rows[i][t] = rows[i][t] * f
            new = Multiplicative(rows, val.beta, val.base_price)
        elif isinstance(val, Additive):
            rows = [list(r) for r in val.alpha]
            for t, d in changes.items():
                rows[i][t] = rows[i][t] + d
            new = Additive(rows, val.beta)
        else:
            rows = [list(r) for r in val.values]
            for c, d in changes.items():
                rows[i][c] = rows[i][c] + d
            new = DirectMatrix(rows)
        out = instance.with_valuation(new)
        problems = validate(out)
        if problems:
            raise DomainError("misreport leaves the model bounds: " + "; ".join(problems))
        return out


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Unknowns filled in for one evaluation; ``None`` keeps the instance's own data.

    ``others`` lists score rows (value rows in direct mode) for every agent
    except the manipulator, in agent order.  ``new_beta`` is ``|T| x n``
    over the new apartments; ``new_base_price`` has one entry per new
    apartment.  Old-apartment data is never replaced.
    """

    others: tuple[tuple[Number, ...], ...] | None = None
    new_beta: tuple[tuple[int, ...], ...] | None = None
    new_base_price: tuple[Number, ...] | None = None
    label: str = "as given"

    def __post_init__(self):
        if self.others is not None:
            object.__setattr__(self, "others", tuple(tuple(r) for r in self.others))
        if self.new_beta is not None:
            object.__setattr__(self, "new_beta", tuple(tuple(r) for r in self.new_beta))
        if self.new_base_price is not None:
            object.__setattr__(self, "new_base_price", tuple(self.new_base_price))

    def embed(self, instance: Instance, agent: int) -> Instance:
        n = instance.n
        val = instance.valuation

        def rows(current):
            if self.others is None:
                return current
            if len(self.others) != n - 1:
                raise DomainError(f"scenario has {len(self.others)} other agents, expected {n - 1}")
            others = iter(self.others)
            return [current[i] if i == agent else next(others) for i in range(n)]

        def beta(current):
            if self.new_beta is None:
                return current
            if len(self.new_beta) != len(current) or any(len(r) != n for r in self.new_beta):
                raise DomainError("scenario new_beta must be |T| x n")
            return [tuple(old[:n]) + tuple(new) for old, new in zip(current, self.new_beta)]

        if isinstance(val, DirectMatrix):
            if self.new_beta is not None or self.new_base_price is not None:
                raise DomainError("direct valuations have no characteristics to vary")
            new = DirectMatrix(rows(val.values))
        elif isinstance(val, Additive):
            new = Additive(rows(val.alpha), beta(val.beta))
        else:
            price = val.base_price
            if self.new_base_price is not None:
                if len(self.new_base_price) != n:
                    raise DomainError("scenario new_base_price must have n entries")
                price = price[:n] + self.new_base_price
            new = Multiplicative(rows(val.rho), beta(val.beta), price)
        out = instance.with_valuation(new)
        problems = validate(out)
        if problems:
            raise DomainError(f"scenario {self.label!r} is invalid: " + "; ".join(problems))
        return out


# ---------------------------------------------------------------------------
# Evaluation and classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioResult:
    label: str
    truthful: MechanismOutcome
    manipulated: MechanismOutcome
    truthful_utility: Number
    manipulated_utility: Number

    @property
    def gain(self) -> Number:
        return self.manipulated_utility - self.truthful_utility


@dataclass(frozen=True)
class ManipulationVerdict:
    """Outcome of a misreport over a named scenario set.

    ``profit_witnesses`` and ``loss_witnesses`` index scenarios with gain
    above ``tol`` and below ``-tol``.
    """

    classification: str
    gains: tuple[Number, ...]
    labels: tuple[str, ...]
    profit_witnesses: tuple[int, ...]
    loss_witnesses: tuple[int, ...]
    assignment_changed: tuple[bool, ...]
    payment_deltas: tuple[Number, ...]
    scenario_set: str
    tol: float

    @property
    def profitable(self) -> bool:
        return bool(self.profit_witnesses)

    @property
    def safe(self) -> bool:
        return not self.loss_witnesses


def _check_agent(instance: Instance, agent: int, misreport: Misreport):
    if not isinstance(agent, int) or not 0 <= agent < instance.n:
        raise DomainError(f"unknown agent {agent!r}")
    if misreport.agent != agent:
        raise DomainError(f"misreport is for agent {misreport.agent}, not {agent}")


def evaluate_scenario(instance: Instance, agent: int, misreport: Misreport,
                      scenario: Scenario | None = None) -> ScenarioResult:
    """Run the mechanism truthfully and under the misreport in one scenario."""
    _check_agent(instance, agent, misreport)
    scenario = scenario or Scenario()
    world = scenario.embed(instance, agent)
    reported = misreport.apply(world)
    truthful = minimum_disproportionality_mechanism(world)
    manipulated = minimum_disproportionality_mechanism(reported)
    values = world.new_values[agent]

    def utility(outcome):
        alloc = outcome.allocation
        return values[alloc.assignment[agent]] + alloc.payments[agent]

    return ScenarioResult(scenario.label, truthful, manipulated, utility(truthful), utility(manipulated))


def true_utility_under_report(instance: Instance, agent: int, misreport: Misreport,
                              scenario: Scenario | None = None) -> Number:
    """True utility ``v_i(A'_i) + p'_i`` of the outcome produced by the misreport."""
    return evaluate_scenario(instance, agent, misreport, scenario).manipulated_utility


def _default_tol(instance: Instance) -> float:
    if instance.exact:
        return 0
    scale = max((abs(float(x)) for row in instance.values for x in row), default=1.0)
    return 1e-9 * max(1.0, scale)


def classify_manipulation(instance: Instance, agent: int, misreport: Misreport,
                          scenarios: Sequence[Scenario], tol: float | None = None,
                          scenario_set: str = "explicit") -> ManipulationVerdict:
    """Classify a misreport as profitable-and-safe, profitable-unsafe or unprofitable.

    Profitable means the gain exceeds ``tol`` in some scenario; safe means
    no scenario has a gain below ``-tol``.  ``tol`` defaults to 0 for exact
    instances and to ``1e-9`` times the largest value otherwise.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ParameterError("scenario set is empty")
    if tol is None:
        tol = _default_tol(instance)
    results = [evaluate_scenario(instance, agent, misreport, s) for s in scenarios]
    gains = tuple(r.gain for r in results)
    profit = tuple(k for k, g in enumerate(gains) if g > tol)
    loss = tuple(k for k, g in enumerate(gains) if g < -tol)
    if profit and not loss:
        cls = PROFITABLE_AND_SAFE
    elif profit:
        cls = PROFITABLE_UNSAFE
    else:
        cls = UNPROFITABLE
    return ManipulationVerdict(
        classification=cls,
        gains=gains,
        labels=tuple(r.label for r in results),
        profit_witnesses=profit,
        loss_witnesses=loss,
        assignment_changed=tuple(r.truthful.allocation.assignment != r.manipulated.allocation.assignment
                                 for r in results),
        payment_deltas=tuple(r.manipulated.allocation.payments[agent] - r.truthful.allocation.payments[agent]
                             for r in results),
        scenario_set=scenario_set,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Adversarial construction
# ---------------------------------------------------------------------------

def build_rat_adversarial_scenario(instance: Instance, agent: int, misreport: Misreport) -> Scenario:
    """A scenario in which the misreport flips the assignment and costs the manipulator.

    New apartment ``a_1`` (index 0) carries every raised characteristic and
    no lowered one; the others are identical, carrying every lowered
    characteristic and no raised one.  All other agents share a valuation
    that sits strictly between the manipulator's true and reported
    preference for ``a_1`` over the rest (interval midpoints), so the
    truthful run gives ``a_1`` away and the misreport takes it.

    Multiplicative instances additionally put every unchanged characteristic
    with factor above 1 on all new apartments and choose a common new base
    price large enough that the payment gained on the old apartments cannot
    outweigh the payment lost on the new ones.
    """
    _check_agent(instance, agent, misreport)
    val = instance.valuation
    n = instance.n
    if n < 2:
        raise DomainError("the construction needs at least two agents")
    if isinstance(val, DirectMatrix):
        raise DomainError("the construction needs a characteristic-based valuation")
    plus, minus, zero = misreport.partition(instance)
    if not plus and not minus:
        raise NoManipulationError("misreport changes no characteristic")
    changes = misreport.resolve(instance)
    size = len(val.beta)
    mine = val.scores[agent]

    if isinstance(val, Additive):
        shared = []
        for t in range(size):
            if t in plus or t in minus:
                shared.append(mine[t] + (as_fraction(changes[t]) if instance.exact else changes[t]) / 2)
            else:
                shared.append(mine[t])
        first = {t for t in plus}
        rest = {t for t in minus}
        beta = [[1 if t in first else 0] + [1 if t in rest else 0] * (n - 1) for t in range(size)]
        return Scenario([shared] * (n - 1), beta, None, label="adversarial")

    boost = {t for t in zero if mine[t] > 1}
    shared = []
    for t in range(size):
        if t in plus or t in minus:
            shared.append(mine[t] * (1 + changes[t]) / 2)
        else:
            shared.append(mine[t])
    first = set(plus) | boost
    rest = set(minus) | boost
    beta = [[1 if t in first else 0] + [1 if t in rest else 0] * (n - 1) for t in range(size)]

    w_first = math.prod(mine[t] for t in first)
    w_rest = math.prod(mine[t] for t in rest)
    old = instance.values[agent][:n]
    own = old[agent]
    others_mean = sum(old[j] for j in range(n) if j != agent) / (n - 1)
    phi = max(own / w_first, others_mean / w_rest, max(val.base_price))

    # generalized loss condition for arbitrary old apartments: phi * K <= R
    z = math.prod(changes[t] for t in plus)
    y = math.prod(changes[t] for t in minus)
    k = (y - 1) * w_rest - (z - 1) * w_first

    def factor(col):
        return math.prod(changes[t] for t in changes if val.beta[t][col])

    r = (sum((factor(j) - 1) * old[j] for j in range(n) if j != agent) / (n - 1)
         - (factor(agent) - 1) * own)
    if k < 0 and r / k > phi:
        phi = r / k
    return Scenario([shared] * (n - 1), beta, [phi] * n, label="adversarial")


@dataclass(frozen=True)
class RatGainTerms:
    """Decomposition of the manipulator's gain into payment and value parts.

    ``delta_a`` / ``delta_o`` are the changes in the new- and old-apartment
    payment contributions, ``delta_v`` the change in true value, and
    ``gain = (delta_a - delta_o) / n**2 + delta_v``.  ``matching_term``
    and ``loss_term`` re-derive ``delta_a + n**2 delta_v - delta_o`` in
    closed form from the values on the two apartments involved.
    """

    delta_a: Number
    delta_v: Number
    delta_o: Number
    gain: Number
    matching_term: Number
    loss_term: Number

    @property
    def closed_form_gain(self):
        return self.matching_term + self.loss_term


def rat_gain_terms(instance: Instance, agent: int, misreport: Misreport, scenario: Scenario) -> RatGainTerms:
    """Gain decomposition for a scenario where the misreport moves the manipulator."""
    n = instance.n
    world = scenario.embed(instance, agent)
    reported = misreport.apply(world)
    res = evaluate_scenario(instance, agent, misreport, scenario)
    a_true = res.truthful.allocation.assignment
    a_fake = res.manipulated.allocation.assignment
    pa, po = payment_components(world, a_true)
    pa2, po2 = payment_components(reported, a_fake)
    delta_a = pa2[agent] - pa[agent]
    delta_o = po2[agent] - po[agent]
    v1, v1r = world.values[agent], reported.values[agent]
    got, had = n + a_fake[agent], n + a_true[agent]
    delta_v = v1[got] - v1[had]

    # closed form: the other agent who held the manipulated-into apartment stands for all others
    other = a_true.index(a_fake[agent])
    v2 = world.values[other]
    matching = n * ((v2[had] - v2[got]) + (v1[got] - v1[had]))
    star = [j for j in range(n) if j != agent]
    o_star = sum(v1[j] for j in star) / (n - 1)
    o_star_r = sum(v1r[j] for j in star) / (n - 1)
    closed_o = (n - 1) ** 2 * ((o_star_r - o_star) - (v1r[agent] - v1[agent]))
    loss = (n - 1) ** 2 * ((v1r[had] - v1[had]) - (v1r[got] - v1[got])) - closed_o
    return RatGainTerms(delta_a, delta_v, delta_o, res.gain, matching / n ** 2, loss / n ** 2)


# ---------------------------------------------------------------------------
# Direct elicitation
# ---------------------------------------------------------------------------

def naive_value_manipulation_demo(instance: Instance, agent: int, amount: Number,
                                  scenarios: Sequence[Scenario] | None = None) -> ManipulationVerdict:
    """Raise the agent's reported value of its own old apartment by ``amount``.

    With direct elicitation this never moves the assignment and raises the
    agent's payment by ``amount * (n-1)**2 / n**2`` in every scenario.
    """
    if not isinstance(instance.valuation, DirectMatrix):
        raise DomainError("the demo applies to direct valuation matrices")
    misreport = Misreport(agent, {agent: amount})
    return classify_manipulation(instance, agent, misreport, scenarios or [Scenario()],
                                 scenario_set="explicit" if scenarios else "as given")


# ---------------------------------------------------------------------------
# Scenario sets
# ---------------------------------------------------------------------------

def _free_characteristics(size: int, forced_absent, forced_present) -> list[int]:
    fixed = set(forced_absent) | set(forced_present)
    return [t for t in range(size) if t not in fixed]


def _resolve_all(instance: Instance, keys) -> set[int]:
    return {_key_index(instance, k) for k in keys}


def enumerate_beta_scenarios(instance: Instance, characteristics: Iterable | None = None,
                             forced_absent: Iterable = (), forced_present: Iterable = (),
                             limit: int = 4096) -> list[Scenario]:
    """Every indicator pattern of the free characteristics over the new apartments.

    Characteristics outside ``characteristics`` keep the instance's new-apartment
    indicators.  Others' scores are unchanged.
    """
    val = instance.valuation
    if isinstance(val, DirectMatrix):
        raise DomainError("direct valuations have no characteristics to vary")
    n, size = instance.n, len(val.beta)
    absent, present = _resolve_all(instance, forced_absent), _resolve_all(instance, forced_present)
    pool = range(size) if characteristics is None else sorted(_resolve_all(instance, characteristics))
    free = [t for t in pool if t not in absent and t not in present]
    if 2 ** (len(free) * n) > limit:
        raise ParameterError(f"{2 ** (len(free) * n)} patterns exceed the limit of {limit}")
    base = [list(row[n:]) for row in val.beta]
    for t in absent:
        base[t] = [0] * n
    for t in present:
        base[t] = [1] * n
    out = []
    for bits in itertools.product((0, 1), repeat=len(free) * n):
        beta = [list(r) for r in base]
        for k, t in enumerate(free):
            beta[t] = list(bits[k * n:(k + 1) * n])
        out.append(Scenario(None, beta, None, label="beta:" + "".join(map(str, bits))))
    return out


def _random_scores(instance: Instance, rng: np.random.Generator, count: int):
    val = instance.valuation
    exact = instance.exact
    if isinstance(val, Multiplicative):
        return np.exp(rng.normal(0.0, 0.2, size=(count, len(val.beta)))).tolist()
    top = max((float(x) for row in val.alpha for x in row), default=1.0) or 1.0
    if exact:
        ints = rng.integers(0, 2 * math.ceil(top) + 1, size=(count, len(val.beta)))
        return [[Fraction(int(x)) for x in row] for row in ints]
    return rng.uniform(0.0, 2 * top, size=(count, len(val.beta))).tolist()


def random_scenarios(instance: Instance, agent: int, count: int, seed: int | None = None,
                     forced_absent: Iterable = (), forced_present: Iterable = (),
                     resample_others: bool = True) -> list[Scenario]:
    """Random new-apartment indicators (fair coin flips) and, optionally, random other agents.

    Characteristics in ``forced_absent`` / ``forced_present`` are pinned on
    every new apartment.
    """
    val = instance.valuation
    if isinstance(val, DirectMatrix):
        raise DomainError("use random_direct_scenarios for direct valuations")
    rng = np.random.default_rng(seed)
    n, size = instance.n, len(val.beta)
    absent, present = _resolve_all(instance, forced_absent), _resolve_all(instance, forced_present)
    out = []
    for k in range(count):
        beta = rng.integers(0, 2, size=(size, n))
        beta[list(absent), :] = 0
        beta[list(present), :] = 1
        others = _random_scores(instance, rng, n - 1) if resample_others else None
        out.append(Scenario(others, beta.tolist(), None, label=f"random:{k}"))
    return out


def random_direct_scenarios(instance: Instance, agent: int, count: int, seed: int | None = None,
                            high: float | None = None) -> list[Scenario]:
    """Other agents' value rows drawn uniformly from ``[0, high]`` (integers in exact mode)."""
    if not isinstance(instance.valuation, DirectMatrix):
        raise DomainError("direct scenarios need a direct valuation matrix")
    rng = np.random.default_rng(seed)
    n = instance.n
    if high is None:
        high = max(float(x) for row in instance.values for x in row) or 1.0
    out = []
    for k in range(count):
        if instance.exact:
            rows = [[Fraction(int(x)) for x in row]
                    for row in rng.integers(0, math.ceil(high) + 1, size=(n - 1, 2 * n))]
        else:
            rows = rng.uniform(0.0, high, size=(n - 1, 2 * n)).tolist()
        out.append(Scenario(rows, None, None, label=f"random:{k}"))
    return out
