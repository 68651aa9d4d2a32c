"""Envy graphs, envy accounting, EF-ability and min-max-envy payments.

Envy is measured on *improvements*: agent ``i`` compares its own
``d_i(A_i, o_i, p_i)`` with ``d_i(A_j, o_j, p_j)`` for every other agent
``j``, i.e. what it would gain by swapping both the new apartment and the
old endowment with ``j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from recondiv.errors import DomainError, NotEFAbleError, ParameterError
from recondiv.graphs import (
    CycleCertificate,
    DenseDigraph,
    has_positive_cycle,
    max_cost_paths_from_all,
    max_mean_cycle,
)
from recondiv.model import DEFAULT_TOL, Allocation, Instance, Number, check_assignment, resolve_tol

__all__ = [
    "EnvyGraphBundle",
    "EnvyReport",
    "EFAbility",
    "MinMaxEnvy",
    "PermutationCheck",
    "build_envy_graphs",
    "envy_report",
    "is_ef_able",
    "ef_payments",
    "min_max_envy_payments",
    "exhaustive_min_macc_assignment",
    "check_permutation_condition",
]


@dataclass(frozen=True)
class EnvyGraphBundle:
    g_a: DenseDigraph
    g_o: DenseDigraph
    g_diff: DenseDigraph


@dataclass(frozen=True)
class EnvyReport:
    """``envy[i] = max_{j != i} d_i(A_j, o_j, p_j) - d_i(A_i, o_i, p_i)``.

    ``witness`` is the pair ``(i, j)`` attaining ``max_envy`` (``None`` when n = 1).
    """

    envy: tuple[Number, ...]
    max_envy: Number
    witness: tuple[int, int] | None

    def is_envy_free(self, tol: float = 0) -> bool:
        return self.max_envy <= tol


@dataclass(frozen=True)
class EFAbility:
    ef_able: bool
    cycle: CycleCertificate | None = None

    def __bool__(self):
        return self.ef_able


@dataclass(frozen=True)
class MinMaxEnvy:
    """Optimal payments for a fixed assignment; ``cycle`` certifies that ``value`` cannot be beaten."""

    assignment: tuple[int, ...]
    payments: tuple[Number, ...]
    value: Number
    cycle: CycleCertificate | None

    @property
    def allocation(self) -> Allocation:
        return Allocation(self.assignment, self.payments)


@dataclass(frozen=True)
class PermutationCheck:
    holds: bool
    witness: tuple[int, ...] | None = None

    def __bool__(self):
        return self.holds


def _zero(instance: Instance):
    return Fraction(0) if instance.exact else 0.0


def _payments(instance: Instance, payments) -> tuple:
    if payments is None:
        return (_zero(instance),) * instance.n
    payments = tuple(payments)
    if len(payments) != instance.n:
        raise DomainError(f"payment vector has {len(payments)} entries, expected {instance.n}")
    return payments


def _diff_cost(instance: Instance, assignment: Sequence[int]):
    n = instance.n
    new, old = instance.new_values, instance.old_values
    zero = _zero(instance)
    rows = []
    for i in range(n):
        own = new[i][assignment[i]] - old[i][i]
        rows.append(tuple(zero if i == j else new[i][assignment[j]] - old[i][j] - own
                          for j in range(n)))
    return tuple(rows)


def build_envy_graphs(instance: Instance, assignment: Sequence[int], payments=None) -> EnvyGraphBundle:
    """The new-apartment, old-apartment and difference envy graphs of an allocation."""
    assignment = check_assignment(instance, assignment)
    p = _payments(instance, payments)
    n = instance.n
    new, old = instance.new_values, instance.old_values
    zero = _zero(instance)
    g_a, g_o = [], []
    for i in range(n):
        mine = new[i][assignment[i]] + p[i]
        g_a.append([zero if i == j else new[i][assignment[j]] + p[j] - mine for j in range(n)])
        g_o.append([zero if i == j else old[i][j] - old[i][i] for j in range(n)])
    g_diff = [[a - o for a, o in zip(ra, ro)] for ra, ro in zip(g_a, g_o)]
    return EnvyGraphBundle(DenseDigraph(g_a), DenseDigraph(g_o), DenseDigraph(g_diff))


def envy_report(instance: Instance, allocation: Allocation) -> EnvyReport:
    graphs = build_envy_graphs(instance, allocation.assignment, allocation.payments)
    n = instance.n
    if n == 1:
        return EnvyReport((_zero(instance),), _zero(instance), None)
    cost = graphs.g_diff.cost
    envy, best = [], None
    for i in range(n):
        j = max((j for j in range(n) if j != i), key=lambda j: cost[i][j])
        envy.append(cost[i][j])
        if best is None or cost[i][j] > cost[best[0]][best[1]]:
            best = (i, j)
    return EnvyReport(tuple(envy), cost[best[0]][best[1]], best)


def _diff_graph(instance: Instance, assignment) -> DenseDigraph:
    return DenseDigraph(_diff_cost(instance, check_assignment(instance, assignment)))


def is_ef_able(instance: Instance, assignment: Sequence[int], tol: float | None = None) -> EFAbility:
    """Whether some payment vector makes the assignment envy-free.

    This holds exactly when the difference graph has no positive-cost
    cycle; otherwise the offending cycle is returned.

    >>> from recondiv.model import direct
    >>> inst = direct([[2, 1], [1, 4]], [[5, 5], [5, 5]], exact=True)
    >>> check = is_ef_able(inst, (0, 1))
    >>> bool(check), check.cycle.nodes
    (False, (0, 1))
    """
    graph = _diff_graph(instance, assignment)
    check = has_positive_cycle(graph, resolve_tol(instance.exact, tol))
    return EFAbility(not check.found, check.cycle)


def _potential_payments(graph: DenseDigraph, tol) -> tuple:
    ell = max_cost_paths_from_all(graph, tol)
    mean = sum(ell, graph.zero()) / len(ell)
    return tuple(x - mean for x in ell)


def ef_payments(instance: Instance, assignment: Sequence[int], tol: float | None = None) -> tuple[Number, ...]:
    """Balanced payments making an EF-able assignment envy-free.

    ``p_i = l_i - mean(l)`` where ``l_i`` is the longest path from ``i`` in
    the difference graph.  Raises :class:`NotEFAbleError` with the
    positive cycle otherwise.
    """
    tol = resolve_tol(instance.exact, tol)
    if instance.n == 1:
        return (_zero(instance),)
    graph = _diff_graph(instance, assignment)
    check = has_positive_cycle(graph, tol)
    if check:
        raise NotEFAbleError("assignment is not EF-able", witness=check.cycle)
    return _potential_payments(graph, tol)


def min_max_envy_payments(instance: Instance, assignment: Sequence[int]) -> MinMaxEnvy:
    """Balanced payments minimizing the maximum envy for a fixed assignment.

    The optimum equals the maximum mean cycle cost ``c*`` of the difference
    graph: every cycle's cost is payment-invariant, so some agent on the
    best cycle always envies by at least ``c*``.  Shifting every arc by
    ``-c*`` removes all positive cycles, and potential payments on the
    shifted graph hold every envy at or below ``c*``.
    """
    assignment = check_assignment(instance, assignment)
    if instance.n == 1:
        return MinMaxEnvy(assignment, (_zero(instance),), _zero(instance), None)
    graph = _diff_graph(instance, assignment)
    cert = max_mean_cycle(graph)
    shifted = graph.shifted(cert.mean_cost)
    # the shifted graph's best cycle has mean 0 up to rounding
    slack = 0 if instance.exact else DEFAULT_TOL * max(1.0, graph.scale()) * graph.n
    payments = _potential_payments(shifted, slack)
    return MinMaxEnvy(assignment, payments, cert.mean_cost, cert)


def exhaustive_min_macc_assignment(instance: Instance, max_n: int = 8) -> MinMaxEnvy:
    """Search all ``n!`` assignments for the one whose optimal max envy is smallest.

    Ties go to the lexicographically first assignment.  Refuses instances
    with more than ``max_n`` agents.
    """
    n = instance.n
    if n > max_n:
        raise ParameterError(f"exhaustive search over {n}! assignments refused (max_n={max_n})")
    if n == 1:
        return min_max_envy_payments(instance, (0,))
    best, best_value = None, None
    for perm in itertools.permutations(range(n)):
        value = max_mean_cycle(DenseDigraph(_diff_cost(instance, perm))).mean_cost
        if best_value is None or value < best_value:
            best, best_value = perm, value
    return min_max_envy_payments(instance, best)


def check_permutation_condition(instance: Instance, assignment: Sequence[int], tol: float | None = None,
                                max_n: int = 8) -> PermutationCheck:
    """Check that no permutation of the (new, old) bundles raises the total improvement.

    A failing permutation is returned as the witness.  Factorial cost, so
    refused above ``max_n`` agents; it exists to cross-check :func:`is_ef_able`.
    """
    assignment = check_assignment(instance, assignment)
    n = instance.n
    if n > max_n:
        raise ParameterError(f"permutation check over {n}! permutations refused (max_n={max_n})")
    tol = resolve_tol(instance.exact, tol)
    new, old = instance.new_values, instance.old_values
    gain = [[new[i][assignment[j]] - old[i][j] for j in range(n)] for i in range(n)]
    base = sum(gain[i][i] for i in range(n))
    for perm in itertools.permutations(range(n)):
        if sum(gain[i][perm[i]] for i in range(n)) - base > tol:
            return PermutationCheck(False, perm)
    return PermutationCheck(True)
