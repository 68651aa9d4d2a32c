"""Disproportionality accounting and the minimum-disproportionality mechanism.

Agent ``i`` regards the outcome as proportional when its improvement is at
least ``1/n`` of the sum of the improvements it sees for everyone.  The
shortfall ``DP_i`` sums to a payment-invariant ``DP_N(A)``; the mechanism
picks a welfare-maximizing assignment (which minimizes ``DP_N``) and
equalizes every ``DP_i`` at ``DP_N / n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from recondiv.errors import ParameterError
from recondiv.graphs import max_weight_perfect_matching
from recondiv.model import (
    Allocation,
    Instance,
    Number,
    average_new_value,
    check_assignment,
    resolve_tol,
)

__all__ = [
    "DisproportionalityReport",
    "MechanismOutcome",
    "PropDecision",
    "improvement_totals",
    "disproportionality_report",
    "base_disproportionality",
    "min_disprop_payments",
    "payment_components",
    "utilitarian_assignment",
    "minimum_disproportionality_mechanism",
    "decide_prop_able",
    "exhaustive_min_dp_sum",
]


@dataclass(frozen=True)
class DisproportionalityReport:
    """``total[i]`` is the payment-free sum of improvements agent ``i`` sees.

    ``dp[i] = total[i]/n + mean(p) - d_i(A_i, o_i, p_i)``; the mean-payment
    term is zero for balanced payments and keeps ``sum(dp) == dp_sum`` for
    unbalanced ones.
    """

    total: tuple[Number, ...]
    dp: tuple[Number, ...]
    dp_sum: Number
    max_dp: Number
    witness: int
    average_value: Number

    @property
    def normalized_max_dp(self) -> float:
        return float(self.max_dp) / float(self.average_value) if self.average_value else float("nan")

    def is_proportional(self, tol: float = 0) -> bool:
        return self.max_dp <= tol


@dataclass(frozen=True)
class MechanismOutcome:
    allocation: Allocation
    report: DisproportionalityReport


@dataclass(frozen=True)
class PropDecision:
    """``allocation`` is a proportional outcome when one exists, else ``None``.

    ``min_max_dp`` is the smallest achievable maximum disproportionality over
    all assignments and payments, so a positive value proves non-existence.
    """

    prop_able: bool
    min_max_dp: Number
    allocation: Allocation | None
    outcome: MechanismOutcome

    def __bool__(self):
        return self.prop_able


def _zero(instance: Instance):
    return Fraction(0) if instance.exact else 0.0


def improvement_totals(instance: Instance) -> tuple[Number, ...]:
    """``sum_j (v_i(a_j) - v_i(o_j))``; independent of the assignment."""
    zero = _zero(instance)
    return tuple(sum(new, zero) - sum(old, zero)
                 for new, old in zip(instance.new_values, instance.old_values))


def base_disproportionality(instance: Instance, assignment: Sequence[int]) -> tuple[Number, ...]:
    """``DP_i(A)`` with zero payments."""
    assignment = check_assignment(instance, assignment)
    n = instance.n
    return tuple(t / n - (instance.new_values[i][assignment[i]] - instance.old_values[i][i])
                 for i, t in enumerate(improvement_totals(instance)))


def disproportionality_report(instance: Instance, allocation: Allocation) -> DisproportionalityReport:
    n = instance.n
    p = allocation.payments
    mean_p = sum(p, _zero(instance)) / n
    base = base_disproportionality(instance, allocation.assignment)
    dp = tuple(b + mean_p - pi for b, pi in zip(base, p))
    witness = max(range(n), key=lambda i: dp[i])
    return DisproportionalityReport(
        total=improvement_totals(instance),
        dp=dp,
        dp_sum=sum(base, _zero(instance)),
        max_dp=dp[witness],
        witness=witness,
        average_value=average_new_value(instance),
    )


def min_disprop_payments(instance: Instance, assignment: Sequence[int]) -> tuple[Number, ...]:
    """``p_i = DP_i(A) - DP_N(A)/n``: balanced, and leaves every ``DP_i`` at ``DP_N(A)/n``.

    >>> from recondiv.model import direct
    >>> inst = direct([[2, 3], [1, 2]], [[10, 18], [8, 16]], exact=True)
    >>> [str(x) for x in min_disprop_payments(inst, (1, 0))]
    ['-9/2', '9/2']
    """
    base = base_disproportionality(instance, assignment)
    share = sum(base, _zero(instance)) / instance.n
    return tuple(b - share for b in base)


def payment_components(instance: Instance, assignment: Sequence[int]) -> tuple[tuple, tuple]:
    """Split the payment rule into new- and old-apartment contributions.

    Returns ``(pA, pO)`` with ``p_i = (pA[i] - pO[i]) / n**2``, each part
    written out term by term from the valuation table.  Used as an
    independent check on :func:`min_disprop_payments`.
    """
    assignment = check_assignment(instance, assignment)
    n = instance.n
    new, old = instance.new_values, instance.old_values
    zero = _zero(instance)

    def part(value):  # value(i, j): agent i's value for the bundle held by agent j
        out = []
        for i in range(n):
            others = [j for j in range(n) if j != i]
            s = (n - 1) * sum((value(i, j) for j in others), zero) - (n - 1) ** 2 * value(i, i)
            s -= sum((value(j, k) for j in others for k in range(n) if k != j), zero)
            s += sum(((n - 1) * value(j, j) for j in others), zero)
            out.append(s)
        return tuple(out)

    p_a = part(lambda i, j: new[i][assignment[j]])
    p_o = part(lambda i, j: old[i][j])
    return p_a, p_o


def utilitarian_assignment(instance: Instance) -> tuple[int, ...]:
    """Welfare-maximizing assignment, lexicographically smallest among ties."""
    return max_weight_perfect_matching(instance.new_values).assignment


def minimum_disproportionality_mechanism(instance: Instance) -> MechanismOutcome:
    assignment = utilitarian_assignment(instance)
    allocation = Allocation(assignment, min_disprop_payments(instance, assignment))
    return MechanismOutcome(allocation, disproportionality_report(instance, allocation))


def decide_prop_able(instance: Instance, tol: float | None = None) -> PropDecision:
    """Decide whether some assignment and payments make every agent's outcome proportional."""
    outcome = minimum_disproportionality_mechanism(instance)
    best = outcome.report.max_dp
    ok = best <= resolve_tol(instance.exact, tol)
    return PropDecision(ok, best, outcome.allocation if ok else None, outcome)


def exhaustive_min_dp_sum(instance: Instance, max_n: int = 8) -> tuple[tuple[int, ...], Number]:
    """Brute-force ``argmin_A DP_N(A)`` over all assignments (small instances only)."""
    n = instance.n
    if n > max_n:
        raise ParameterError(f"exhaustive search over {n}! assignments refused (max_n={max_n})")
    zero = _zero(instance)
    best = None
    for perm in itertools.permutations(range(n)):
        s = sum(base_disproportionality(instance, perm), zero)
        if best is None or s < best[1]:
            best = (perm, s)
    return best
