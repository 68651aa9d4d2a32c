"""Exact graph primitives on complete weighted digraphs and bipartite weight matrices.

Every routine only uses ring operations and comparisons on the matrix
entries, so it works on ``float`` and on ``fractions.Fraction`` alike.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from recondiv.errors import DomainError, PreconditionError
from recondiv.model import DEFAULT_TOL, Number

__all__ = [
    "DenseDigraph",
    "CycleCertificate",
    "PositiveCycleCheck",
    "Matching",
    "cycle_mean",
    "max_mean_cycle",
    "has_positive_cycle",
    "max_cost_paths_from_all",
    "max_weight_perfect_matching",
]


@dataclass(frozen=True)
class DenseDigraph:
    """Complete digraph; ``cost[i][j]`` is the cost of arc (i, j).  The diagonal is ignored."""

    cost: tuple[tuple[Number, ...], ...]

    def __post_init__(self):
        cost = tuple(tuple(row) for row in self.cost)
        n = len(cost)
        if any(len(row) != n for row in cost):
            raise DomainError("cost matrix must be square")
        for i, row in enumerate(cost):
            for j, x in enumerate(row):
                if i != j and isinstance(x, float) and not math.isfinite(x):
                    raise DomainError(f"arc ({i}, {j}) has non-finite cost")
        object.__setattr__(self, "cost", cost)

    @property
    def n(self) -> int:
        return len(self.cost)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for i, row in enumerate(self.cost)
                   for j, x in enumerate(row) if i != j)

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def shifted(self, c: Number) -> "DenseDigraph":
        """Copy with every off-diagonal arc cost decreased by ``c``."""
        z = self.zero()
        return DenseDigraph(
            tuple(tuple(z if i == j else x - c for j, x in enumerate(row))
                  for i, row in enumerate(self.cost))
        )

    def scale(self) -> float:
        return max((abs(float(x)) for i, row in enumerate(self.cost)
                    for j, x in enumerate(row) if i != j), default=0.0)


@dataclass(frozen=True)
class CycleCertificate:
    """A directed cycle ``nodes[0] -> nodes[1] -> ... -> nodes[0]`` and its mean arc cost."""

    nodes: tuple[int, ...]
    mean_cost: Number

    @property
    def length(self) -> int:
        return len(self.nodes)

    @property
    def total_cost(self) -> Number:
        return self.mean_cost * len(self.nodes)

    def arcs(self) -> list[tuple[int, int]]:
        r = len(self.nodes)
        return [(self.nodes[k], self.nodes[(k + 1) % r]) for k in range(r)]

    def verify(self, graph: DenseDigraph, tol: float = DEFAULT_TOL) -> bool:
        if len(self.nodes) < 2 or len(set(self.nodes)) != len(self.nodes):
            return False
        return abs(cycle_mean(graph, self.nodes) - self.mean_cost) <= tol


@dataclass(frozen=True)
class PositiveCycleCheck:
    found: bool
    cycle: CycleCertificate | None = None

    def __bool__(self):
        return self.found


@dataclass(frozen=True)
class Matching:
    assignment: tuple[int, ...]
    total: Number


def _canonical(nodes: Sequence[int]) -> tuple[int, ...]:
    k = nodes.index(min(nodes))
    return tuple(nodes[k:]) + tuple(nodes[:k])


def cycle_total(graph: DenseDigraph, nodes: Sequence[int]) -> Number:
    r = len(nodes)
    return sum((graph.cost[nodes[k]][nodes[(k + 1) % r]] for k in range(r)), graph.zero())


def cycle_mean(graph: DenseDigraph, nodes: Sequence[int]) -> Number:
    return cycle_total(graph, nodes) / len(nodes)


def _walk_cycles(walk: Sequence[int]) -> list[tuple[int, ...]]:
    """Decompose a walk into the simple cycles closed along it."""
    stack: list[int] = []
    pos: dict[int, int] = {}
    cycles = []
    for v in walk:
        if v in pos:
            p = pos[v]
            cycles.append(tuple(stack[p:]))
            for u in stack[p + 1:]:
                del pos[u]
            del stack[p + 1:]
        else:
            pos[v] = len(stack)
            stack.append(v)
    return cycles


def _tight_cycle(graph: DenseDigraph, lam: Number, tol: float) -> tuple[int, ...]:
    """Find a cycle of mean ``lam`` as a cycle of tight arcs under longest-walk potentials."""
    n = graph.n
    shifted = graph.shifted(lam).cost
    pot = [graph.zero()] * n
    for _ in range(n):
        for u in range(n):
            for v in range(n):
                if u != v and pot[u] + shifted[u][v] > pot[v]:
                    pot[v] = pot[u] + shifted[u][v]
    succ = [[v for v in range(n) if v != u and pot[u] + shifted[u][v] >= pot[v] - tol]
            for u in range(n)]
    color = [0] * n
    for root in range(n):
        if color[root]:
            continue
        path, stack = [root], [iter(succ[root])]
        color[root] = 1
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                stack.pop()
            elif color[nxt] == 1:
                return tuple(path[path.index(nxt):])
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append(iter(succ[nxt]))
    raise RuntimeError("no tight cycle found")  # unreachable for complete digraphs


def max_mean_cycle(graph: DenseDigraph) -> CycleCertificate:
    """Maximum mean cycle with a witness, by Karp's path-length recurrence.

    ``D[k][v]`` is the largest cost of a walk with exactly ``k`` arcs ending
    at ``v``; the optimum is ``max_v min_k (D[n][v] - D[k][v]) / (n - k)``.
    The witness is a cycle on the optimal ``n``-arc walk, falling back to a
    cycle of tight arcs if rounding spoils that walk.
    """
    n = graph.n
    if n < 2:
        raise DomainError("a cycle needs at least two nodes")
    c = graph.cost
    zero = graph.zero()
    D = [[zero] * n]
    pred: list[list[int]] = [[-1] * n]
    for _ in range(n):
        prev = D[-1]
        row, arg = [], []
        for v in range(n):
            best, b = None, -1
            for u in range(n):
                if u != v:
                    x = prev[u] + c[u][v]
                    if best is None or x > best:
                        best, b = x, u
            row.append(best)
            arg.append(b)
        D.append(row)
        pred.append(arg)

    lam, v_star = None, 0
    for v in range(n):
        lv = min((D[n][v] - D[k][v]) / (n - k) for k in range(n))
        if lam is None or lv > lam:
            lam, v_star = lv, v

    walk = [v_star]
    for k in range(n, 0, -1):
        walk.append(pred[k][walk[-1]])
    walk.reverse()
    tol = 0 if graph.exact else DEFAULT_TOL * max(1.0, graph.scale())
    best = max(_walk_cycles(walk), key=lambda cyc: cycle_mean(graph, cyc))
    if cycle_mean(graph, best) < lam - tol:
        best = _tight_cycle(graph, lam, tol)
    best = _canonical(best)
    return CycleCertificate(best, cycle_mean(graph, best))


def has_positive_cycle(graph: DenseDigraph, tol: float | None = None) -> PositiveCycleCheck:
    """Whether some cycle has positive cost, i.e. the maximum cycle mean exceeds ``tol / n``.

    ``tol`` defaults to 0 for rational graphs and 1e-9 otherwise.
    """
    if graph.n < 2:
        return PositiveCycleCheck(False)
    if tol is None:
        tol = 0 if graph.exact else DEFAULT_TOL
    cert = max_mean_cycle(graph)
    if cert.mean_cost > tol / graph.n:
        return PositiveCycleCheck(True, cert)
    return PositiveCycleCheck(False)


def max_cost_paths_from_all(graph: DenseDigraph, tol: float | None = None) -> tuple[Number, ...]:
    """``l_i`` = largest cost of a path starting at ``i`` (the empty path counts, so ``l_i >= 0``).

    Floyd-Warshall in the (max, +) semiring.  Raises
    :class:`PreconditionError` carrying a witness cycle if the graph has a
    positive-cost cycle.
    """
    n = graph.n
    if tol is None:
        tol = 0 if graph.exact else DEFAULT_TOL
    zero = graph.zero()
    d = [list(row) for row in graph.cost]
    for i in range(n):
        d[i][i] = zero
    for k in range(n):
        dk = d[k]
        for i in range(n):
            di = d[i]
            dik = di[k]
            for j in range(n):
                x = dik + dk[j]
                if x > di[j]:
                    di[j] = x
    if any(d[i][i] > tol for i in range(n)):
        check = has_positive_cycle(graph, 0)
        raise PreconditionError("graph has a positive-cost cycle", witness=check.cycle)
    return tuple(max(row) for row in d)


# ---------------------------------------------------------------------------
# Assignment
# ---------------------------------------------------------------------------

def _hungarian_min(a):
    """Min-cost perfect matching with optimal duals (shortest augmenting paths, O(n^3))."""
    n = len(a)
    inf = math.inf
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = inf, 0
            row = a[i0 - 1]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[p[j] - 1] = j - 1
    return assignment, u[1:], v[1:]


def _lexicographic_min(tight: list[list[bool]], assignment: list[int]) -> list[int]:
    """Lexicographically smallest perfect matching of the tight graph, starting from one."""
    n = len(assignment)
    row_of = [0] * n
    for r, c in enumerate(assignment):
        row_of[c] = r
    fixed_row = [False] * n
    fixed_col = [False] * n

    for i in range(n):
        fixed_row[i] = True
        for j in range(n):
            if fixed_col[j] or not tight[i][j]:
                continue
            if assignment[i] == j:
                break
            # row k loses column j; look for an alternating path from k to i's old column
            k, target = row_of[j], assignment[i]
            parent = {}
            seen = {k}
            queue = deque([k])
            end = None
            while queue and end is None:
                r = queue.popleft()
                for c in range(n):
                    if fixed_col[c] or c == j or c in parent or not tight[r][c]:
                        continue
                    parent[c] = r
                    if c == target:
                        end = c
                        break
                    nxt = row_of[c]
                    if nxt not in seen and not fixed_row[nxt]:
                        seen.add(nxt)
                        queue.append(nxt)
            if end is None:
                continue
            c = end
            while True:
                r = parent[c]
                prev = assignment[r]
                assignment[r] = c
                row_of[c] = r
                if r == k:
                    break
                c = prev
            assignment[i] = j
            row_of[j] = i
            break
        fixed_col[assignment[i]] = True
    return assignment


def max_weight_perfect_matching(weights: Sequence[Sequence[Number]], tol: float | None = None) -> Matching:
    """Maximum-weight perfect matching; among optima, the lexicographically smallest assignment.

    Ties are resolved exactly for rational input and up to ``tol`` (default
    ``1e-9`` times the largest weight magnitude) for floats.
    """
    w = [list(row) for row in weights]
    n = len(w)
    if any(len(row) != n for row in w):
        raise DomainError("weight matrix must be square")
    exact = all(isinstance(x, Fraction) for row in w for x in row)
    for row in w:
        for x in row:
            if isinstance(x, float) and not math.isfinite(x):
                raise DomainError("weights must be finite")
    if n == 0:
        return Matching((), 0)
    cost = [[-x for x in row] for row in w]
    assignment, u, v = _hungarian_min(cost)
    if tol is None:
        tol = 0 if exact else DEFAULT_TOL * max(1.0, max(abs(float(x)) for row in w for x in row))
    tight = [[cost[i][j] - u[i] - v[j] <= tol for j in range(n)] for i in range(n)]
    assignment = _lexicographic_min(tight, assignment)
    total = sum((w[i][assignment[i]] for i in range(n)), w[0][0] * 0)
    return Matching(tuple(assignment), total)
