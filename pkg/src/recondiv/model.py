"""Domain model: instances, valuation sources, and valuation transforms.

An instance has ``n`` agents, ``n`` old apartments (agent ``i`` owns old
apartment ``i``) and ``n`` new apartments.  Every valuation source exposes
the same ``n x 2n`` value table whose columns are the old apartments
followed by the new apartments.

Numbers are plain Python numbers: ``float`` by default, or
``fractions.Fraction`` for exact arithmetic (see :func:`to_exact`).  All
algorithms downstream only add, subtract, multiply, divide and compare, so
they run unchanged in either mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Iterable, Sequence, Union

from recondiv.errors import DomainError, ParameterError

Number = Union[float, Fraction]

DEFAULT_TOL = 1e-9
FACTOR_FLOOR = 1e-5
DEFAULT_THRESHOLD = 2.0


# ---------------------------------------------------------------------------
# Characteristics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Characteristic:
    id: str
    name: str = ""
    endowment: float | None = None
    p_value: float | None = None


@dataclass(frozen=True)
class CharacteristicSpace:
    characteristics: tuple[Characteristic, ...]

    def __post_init__(self):
        object.__setattr__(self, "characteristics", tuple(self.characteristics))

    def __len__(self):
        return len(self.characteristics)

    def __iter__(self):
        return iter(self.characteristics)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.characteristics)

    def index(self, ident: str) -> int:
        try:
            return self.ids.index(ident)
        except ValueError:
            raise DomainError(f"unknown characteristic {ident!r}") from None

    def coefficients(self, significance: float | None = None) -> tuple[float, ...]:
        """Endowment coefficients in percentage points.

        With ``significance`` set, coefficients whose p-value is not below
        the cutoff are zeroed.
        """
        out = []
        for c in self.characteristics:
            if c.endowment is None:
                raise ParameterError(f"characteristic {c.id!r} has no endowment coefficient")
            if significance is not None and (c.p_value is None or c.p_value >= significance):
                out.append(0.0)
            else:
                out.append(c.endowment)
        return tuple(out)

    def violations(self) -> list[str]:
        out = []
        if len(set(self.ids)) != len(self.ids):
            out.append("characteristics: identifiers must be distinct")
        for c in self.characteristics:
            if c.endowment is not None and not math.isfinite(c.endowment):
                out.append(f"characteristics: endowment coefficient of {c.id!r} is not finite")
        return out


# Survey characteristics with endowment-effect coefficients (percentage points)
# and their p-values.
_SURVEY_TABLE = (
    ("renovated", "Renovated apartment", -15.57018, 0.0840),
    ("balcony", "Balcony", -7.406832, 0.1281),
    ("garden", "Garden apartment", 10.00000, 0.1639),
    ("parking", "Registered parking", -6.18254, 0.1995),
    ("storage", "Storage", 1.92547, 0.6444),
    ("safe_room", "Safe Room", -7.27941, 0.2720),
    ("air_conditioning", "Air conditioning", -9.92424, 0.3789),
    ("high_floor", "High floor", -10.93750, 0.0440),
    ("low_floor", "Low floor", -6.53509, 0.1359),
    ("elevator", "Elevator", 0.17081, 0.9742),
    ("accessible", "Accessible", 0.27941, 0.9579),
    ("rooms_gt4", "More than 4 rooms", -13.36765, 0.1298),
    ("rooms_lt4", "Less than 4 rooms", -4.30000, 0.4628),
    ("spacious", "Spacious living/kitchen", -10.02381, 0.2170),
    ("building_rights", "Building rights", -11.25926, 0.2557),
    ("view", "View-facing apartment", 12.65839, 0.0266),
    ("road", "Road-facing apartment", -6.11888, 0.5410),
    ("air_directions", "3+ air directions", 1.63235, 0.7796),
    ("natural_light", "Natural light", 14.36275, 0.1536),
)

SURVEY_CHARACTERISTICS = CharacteristicSpace(
    tuple(Characteristic(i, name, coef, p) for i, name, coef, p in _SURVEY_TABLE)
)


# ---------------------------------------------------------------------------
# Valuation sources
# ---------------------------------------------------------------------------

def _freeze(matrix) -> tuple[tuple, ...]:
    return tuple(tuple(row) for row in matrix)


@dataclass(frozen=True)
class DirectMatrix:
    """Explicit values: ``values[i]`` lists agent i's value for o_1..o_n, a_1..a_n."""

    values: tuple[tuple[Number, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))

    def table(self, n: int):
        return self.values


@dataclass(frozen=True)
class Additive:
    """``v_i(a) = sum_t alpha[i][t] * beta[t][a]``."""

    alpha: tuple[tuple[Number, ...], ...]
    beta: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", _freeze(self.alpha))
        object.__setattr__(self, "beta", _freeze(self.beta))

    @property
    def scores(self):
        return self.alpha

    def table(self, n: int):
        cols = range(2 * n)
        out = []
        for row in self.alpha:
            zero = row[0] * 0 if row else 0
            out.append(tuple(sum((a for a, b in zip(row, self.beta) if b[c]), zero) for c in cols))
        return tuple(out)


@dataclass(frozen=True)
class Multiplicative:
    """``v_i(a) = base_price[a] * prod_t rho[i][t] ** beta[t][a]``."""

    rho: tuple[tuple[float, ...], ...]
    beta: tuple[tuple[int, ...], ...]
    base_price: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "rho", _freeze(self.rho))
        object.__setattr__(self, "beta", _freeze(self.beta))
        object.__setattr__(self, "base_price", tuple(self.base_price))

    @property
    def scores(self):
        return self.rho

    def products(self) -> tuple[tuple[float, ...], ...]:
        """``w[i][a] = prod_t rho[i][t] ** beta[t][a]`` (the base-price-free factor)."""
        cols = range(len(self.base_price))
        return tuple(
            tuple(math.prod(r for r, b in zip(row, self.beta) if b[c]) for c in cols)
            for row in self.rho
        )

    def table(self, n: int):
        return tuple(
            tuple(phi * w for phi, w in zip(self.base_price, row)) for row in self.products()
        )


ValuationSource = Union[DirectMatrix, Additive, Multiplicative]

MODEL_TAGS = {DirectMatrix: "direct", Additive: "additive", Multiplicative: "multiplicative"}


def model_tag(valuation: ValuationSource) -> str:
    return MODEL_TAGS[type(valuation)]


# ---------------------------------------------------------------------------
# Instances and allocations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Instance:
    old_apartments: tuple[str, ...]
    new_apartments: tuple[str, ...]
    valuation: ValuationSource
    agents: tuple[str, ...] | None = None
    characteristics: CharacteristicSpace | None = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "old_apartments", tuple(self.old_apartments))
        object.__setattr__(self, "new_apartments", tuple(self.new_apartments))
        if self.agents is None:
            names = tuple(str(i + 1) for i in range(len(self.old_apartments)))
            object.__setattr__(self, "agents", names)
        else:
            object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def n(self) -> int:
        return len(self.old_apartments)

    @property
    def model(self) -> str:
        return model_tag(self.valuation)

    @cached_property
    def values(self) -> tuple[tuple[Number, ...], ...]:
        """Full ``n x 2n`` value table (old apartments first)."""
        return self.valuation.table(self.n)

    @cached_property
    def old_values(self) -> tuple[tuple[Number, ...], ...]:
        """``old_values[i][j] = v_i(o_j)``."""
        n = self.n
        return tuple(row[:n] for row in self.values)

    @cached_property
    def new_values(self) -> tuple[tuple[Number, ...], ...]:
        """``new_values[i][j] = v_i(a_j)``."""
        n = self.n
        return tuple(row[n:] for row in self.values)

    @cached_property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for row in self.values for x in row)

    def column(self, apartment: str) -> int:
        """Column of an apartment identifier in the value table."""
        if apartment in self.old_apartments:
            return self.old_apartments.index(apartment)
        if apartment in self.new_apartments:
            return self.n + self.new_apartments.index(apartment)
        raise DomainError(f"unknown apartment {apartment!r}")

    def with_valuation(self, valuation: ValuationSource) -> "Instance":
        return replace(self, valuation=valuation)


@dataclass(frozen=True)
class Allocation:
    """An assignment (``assignment[i]`` = index of agent i's new apartment) with payments."""

    assignment: tuple[int, ...]
    payments: tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        object.__setattr__(self, "payments", tuple(self.payments))


def resolve_tol(exact: bool, tol: float | None) -> Number:
    if tol is not None:
        return tol
    return 0 if exact else DEFAULT_TOL


def check_assignment(instance: Instance, assignment: Sequence[int]) -> tuple[int, ...]:
    """Return ``assignment`` as a tuple, raising :class:`DomainError` unless it is a bijection."""
    assignment = tuple(assignment)
    n = instance.n
    if len(assignment) != n:
        raise DomainError(f"assignment has {len(assignment)} entries, expected {n}")
    if sorted(assignment) != list(range(n)):
        raise DomainError(f"assignment {assignment} is not a bijection onto the new apartments")
    return assignment


def parse_assignment(instance: Instance, text: str | Sequence) -> tuple[int, ...]:
    """Accept ``"a2,a1"`` (apartment ids, in agent order) or a sequence of ids/indices."""
    items = text.split(",") if isinstance(text, str) else list(text)
    out = []
    for item in items:
        if isinstance(item, str):
            item = item.strip()
            if item in instance.new_apartments:
                out.append(instance.new_apartments.index(item))
            elif item.isdigit():
                out.append(int(item))
            else:
                raise DomainError(f"unknown new apartment {item!r}")
        else:
            out.append(int(item))
    return check_assignment(instance, out)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _agent(instance: Instance, agent: int) -> int:
    if not isinstance(agent, int) or not 0 <= agent < instance.n:
        raise DomainError(f"unknown agent {agent!r}")
    return agent


def value(instance: Instance, agent: int, apartment: str) -> Number:
    """Agent's value for an old or new apartment."""
    return instance.values[_agent(instance, agent)][instance.column(apartment)]


def improvement(instance: Instance, agent: int, apartment: str, old: str, payment: Number = 0) -> Number:
    """``v_i(apartment) - v_i(old) + payment``."""
    if apartment not in instance.new_apartments:
        raise DomainError(f"{apartment!r} is not a new apartment")
    if old not in instance.old_apartments:
        raise DomainError(f"{old!r} is not an old apartment")
    return value(instance, agent, apartment) - value(instance, agent, old) + payment


def average_new_value(instance: Instance) -> Number:
    """Mean of ``v_i(a)`` over all agents and all new apartments."""
    n = instance.n
    return sum(sum(row) for row in instance.new_values) / (n * n)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _is_number(x) -> bool:
    return isinstance(x, Real) and not isinstance(x, bool) and math.isfinite(x)


def _shape(matrix, rows: int, cols: int, name: str) -> list[str]:
    if len(matrix) != rows:
        return [f"{name}: expected {rows} rows, got {len(matrix)}"]
    bad = [r for r, row in enumerate(matrix) if len(row) != cols]
    if bad:
        return [f"{name}: row {bad[0]} should have {cols} entries"]
    return []


def validate(instance: Instance) -> list[str]:
    """Return a list of invariant violations; empty iff the instance is well formed."""
    out: list[str] = []
    n = instance.n
    if n < 1:
        out.append("agents: at least one agent is required")
    if len(instance.new_apartments) != n:
        out.append(f"new_apartments: expected {n} entries, got {len(instance.new_apartments)}")
    if len(set(instance.old_apartments)) != len(instance.old_apartments):
        out.append("old_apartments: identifiers must be distinct")
    if len(set(instance.new_apartments)) != len(instance.new_apartments):
        out.append("new_apartments: identifiers must be distinct")
    if set(instance.old_apartments) & set(instance.new_apartments):
        out.append("apartments: old and new identifiers overlap")
    if len(instance.agents) != n:
        out.append(f"agents: expected {n} names, got {len(instance.agents)}")
    if out:
        return out

    val = instance.valuation
    cols = 2 * n
    if isinstance(val, DirectMatrix):
        out += _shape(val.values, n, cols, "values")
        if not out:
            for i, row in enumerate(val.values):
                for c, x in enumerate(row):
                    if not _is_number(x):
                        out.append(f"values[{i}][{c}]: not a finite number")
                    elif x < 0:
                        out.append(f"values[{i}][{c}]: nonnegativity violated ({x})")
        return out

    n_char = len(val.beta)
    if instance.characteristics is not None:
        out += instance.characteristics.violations()
        if len(instance.characteristics) != n_char:
            out.append("characteristics: count does not match beta rows")
    out += _shape(val.beta, n_char, cols, "beta")
    for t, row in enumerate(val.beta):
        if any(b not in (0, 1) or isinstance(b, float) for b in row):
            out.append(f"beta[{t}]: entries must be 0 or 1")
    scores = val.scores
    name = "alpha" if isinstance(val, Additive) else "rho"
    out += _shape(scores, n, n_char, name)
    if out:
        return out
    for i, row in enumerate(scores):
        for t, x in enumerate(row):
            if not _is_number(x):
                out.append(f"{name}[{i}][{t}]: not a finite number")
            elif isinstance(val, Additive) and x < 0:
                out.append(f"alpha[{i}][{t}]: nonnegativity violated ({x})")
            elif isinstance(val, Multiplicative) and x <= 0:
                out.append(f"rho[{i}][{t}]: must be positive ({x})")
    if isinstance(val, Multiplicative):
        if len(val.base_price) != cols:
            out.append(f"base_price: expected {cols} entries, got {len(val.base_price)}")
        for c, phi in enumerate(val.base_price):
            if not _is_number(phi) or phi <= 0:
                out.append(f"base_price[{c}]: must be a positive finite number")
    if not out:
        for i, row in enumerate(instance.values):
            if any(not math.isfinite(x) for x in row):
                out.append(f"values[{i}]: evaluation overflowed")
    return out


# ---------------------------------------------------------------------------
# Exact arithmetic
# ---------------------------------------------------------------------------

def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def to_exact(instance: Instance) -> Instance:
    """Convert a direct or additive instance to rational arithmetic."""
    val = instance.valuation
    if isinstance(val, DirectMatrix):
        new = DirectMatrix([[as_fraction(x) for x in row] for row in val.values])
    elif isinstance(val, Additive):
        new = Additive([[as_fraction(x) for x in row] for row in val.alpha], val.beta)
    else:
        raise DomainError("exact mode is only available for direct and additive valuations")
    return instance.with_valuation(new)


def direct(old_values, new_values, *, exact: bool = False, agents=None) -> Instance:
    """Build a direct-matrix instance from ``n x n`` tables ``v_i(o_j)`` and ``v_i(a_j)``."""
    n = len(old_values)
    table = [list(o) + list(a) for o, a in zip(old_values, new_values)]
    inst = Instance(
        tuple(f"o{i + 1}" for i in range(n)),
        tuple(f"a{i + 1}" for i in range(n)),
        DirectMatrix(table),
        agents=agents,
    )
    return to_exact(inst) if exact else inst


# ---------------------------------------------------------------------------
# Experiment-pipeline transforms
# ---------------------------------------------------------------------------

def influence_to_factor(x: float) -> float:
    """Percentage influence to multiplicative factor, clamped at :data:`FACTOR_FLOOR`."""
    return max(1.0 + x / 100.0, FACTOR_FLOOR)


def factor_to_influence(rho: float) -> float:
    return (rho - 1.0) * 100.0


def normalize_multiplicative(valuation: Multiplicative, threshold: float = DEFAULT_THRESHOLD,
                             rel_tol: float = 1e-12) -> Multiplicative:
    """Log-rescale each agent's factors so that every apartment product lies in [1/W, W].

    For an agent whose largest product ``w_max`` exceeds ``W`` every factor is
    replaced by ``exp(log(rho) * log(W) / log(w_max))``; the lower bound is
    then enforced the same way against ``w_min``.  Agents already within
    bounds are returned unchanged.
    """
    if not threshold > 1:
        raise ParameterError(f"normalization threshold must exceed 1, got {threshold}")
    log_w = math.log(threshold)
    products = valuation.products()
    rho = []
    for row, w in zip(valuation.rho, products):
        if any(r <= 0 for r in row):
            raise DomainError("multiplicative factors must be positive")
        w_max = max(w)
        if w_max > threshold * (1 + rel_tol):
            e = log_w / math.log(w_max)
            row = tuple(math.exp(math.log(r) * e) for r in row)
            w = tuple(x ** e for x in w)
        w_min = min(w)
        if w_min < (1 - rel_tol) / threshold:
            e = -log_w / math.log(w_min)
            row = tuple(math.exp(math.log(r) * e) for r in row)
        rho.append(tuple(row))
    return Multiplicative(rho, valuation.beta, valuation.base_price)


def _owned(sets: Sequence[Iterable[int]], n: int) -> list[frozenset]:
    if len(sets) != n:
        raise DomainError(f"ownership sets: expected {n}, got {len(sets)}")
    return [frozenset(s) for s in sets]


def adjust_influences(influences: Sequence[Sequence[float]], owned_then, owned_now,
                      coefficients: Sequence[float | None]) -> list[list[float]]:
    """Shift percentage-point influences by the endowment coefficient where ownership changed.

    Gaining a characteristic adds its coefficient, losing it subtracts it.
    """
    n = len(influences)
    then, now = _owned(owned_then, n), _owned(owned_now, n)
    out = []
    for i, row in enumerate(influences):
        if len(row) != len(coefficients):
            raise DomainError("influence row length does not match coefficient count")
        new_row = []
        for t, x in enumerate(row):
            gained, lost = t in now[i] and t not in then[i], t in then[i] and t not in now[i]
            if (gained or lost) and coefficients[t] is None:
                raise ParameterError(f"no endowment coefficient for characteristic {t}")
            if gained:
                x = x + coefficients[t]
            elif lost:
                x = x - coefficients[t]
            new_row.append(x)
        out.append(new_row)
    return out


def apply_endowment_adjustment(valuation, owned_then, owned_now, coefficients):
    """Endowment-adjust a characteristic valuation (or a raw influence table).

    Multiplicative factors are converted to percentage influence, shifted,
    and converted back with the factor floor.  Additive scores are shifted
    directly and floored at zero.  A raw table is shifted and returned as is.
    """
    if isinstance(valuation, Multiplicative):
        infl = [[factor_to_influence(r) for r in row] for row in valuation.rho]
        adj = adjust_influences(infl, owned_then, owned_now, coefficients)
        rho = []
        for old_row, new_row, adj_row in zip(valuation.rho, infl, adj):
            # untouched entries keep their exact factor
            rho.append([r if a == x else influence_to_factor(a)
                        for r, x, a in zip(old_row, new_row, adj_row)])
        return Multiplicative(rho, valuation.beta, valuation.base_price)
    if isinstance(valuation, Additive):
        adj = adjust_influences(valuation.alpha, owned_then, owned_now, coefficients)
        alpha = [[x if x == a else max(a, 0) for x, a in zip(old, row)]
                 for old, row in zip(valuation.alpha, adj)]
        return Additive(alpha, valuation.beta)
    if isinstance(valuation, DirectMatrix):
        raise DomainError("endowment adjustment needs a characteristic-based valuation")
    return adjust_influences(valuation, owned_then, owned_now, coefficients)


def ownership_from_beta(beta: Sequence[Sequence[int]], columns: Sequence[int]) -> list[frozenset]:
    """Characteristic sets of the apartments at the given table columns."""
    return [frozenset(t for t, row in enumerate(beta) if row[c]) for c in columns]
