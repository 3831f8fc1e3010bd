"""Minimum-cut balanced partitions whose parts are intervals of a vertex ordering."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import GridGraph, Partition, VertexOrdering, cut_count

__all__ = [
    "BalanceMode",
    "Infeasible",
    "DpResult",
    "dynamic_partition",
    "brute_force_consistent",
    "incremental_delta",
    "interval_violations",
]

# weight comparisons are made with this relative slack on the average part weight
REL_TOL = 1e-9


@dataclass(frozen=True)
class BalanceMode:
    """Per-part weight window around the average ``A``.

    Two-sided: ``(1-eps)A <= w <= (1+eps)A``.  Upper-only drops the lower test.
    """

    eps: float
    two_sided: bool = True

    def __post_init__(self):
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be finite and nonnegative, got {self.eps}")

    @classmethod
    def upper_only(cls, eps: float) -> "BalanceMode":
        return cls(eps, two_sided=False)

    def bounds(self, average: float) -> tuple[float, float]:
        lo = (1.0 - self.eps) * average if self.two_sided else -math.inf
        return lo, (1.0 + self.eps) * average


@dataclass(frozen=True)
class Infeasible:
    """No consistent partition satisfies the balance window.

    ``reach[t]`` is the longest prefix length that can be split into ``t``
    feasible parts (-1 when none can).
    """

    k: int
    reach: tuple[int, ...]
    n_vertices: int

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        t = next((t for t in range(1, self.k + 1) if self.reach[t] < 0), None)
        if t is None:
            return (f"infeasible: {self.k} parts reach only the first "
                    f"{self.reach[self.k]} of {self.n_vertices} vertices")
        return f"infeasible: no prefix splits into {t} balanced parts (tightest prefix for {t - 1}: {self.reach[t - 1]})"


@dataclass
class DpResult:
    partition: Partition
    boundaries: np.ndarray  # start position (0-based) of every part in the ordering
    cut: int

    def __bool__(self) -> bool:
        return True


def _tolerance(average: float) -> float:
    return REL_TOL * max(abs(average), 1e-300)


def solve_window(graph: GridGraph, ordering: VertexOrdering, k: int, weights: np.ndarray,
                 lo: float, hi: float, tol: float):
    """Run the sweep with explicit weight bounds; returns ``DpResult`` or ``Infeasible``."""
    order = ordering.order
    if order.size != graph.n_vertices:
        raise ValueError("ordering does not cover the grid")
    if not 1 <= k <= graph.n_vertices:
        raise ValueError(f"k must be in [1, {graph.n_vertices}]")
    w_ord = np.ascontiguousarray(weights[order], dtype=np.float64)
    cut, back = _kernels.dp_sweep(order, graph.nbrs, graph.degree, w_ord, k,
                                  float(lo), float(hi), float(tol))
    n = order.size
    if cut[n, k] >= _kernels.INF_CUT:
        reach = []
        for t in range(k + 1):
            ok = np.flatnonzero(cut[:, t] < _kernels.INF_CUT)
            reach.append(int(ok[-1]) if ok.size else -1)
        return Infeasible(k, tuple(reach), n)
    starts = np.empty(k, np.int64)
    s = n
    for t in range(k, 0, -1):
        j = int(back[s, t])
        starts[t - 1] = j - 1
        s = j - 1
    labels = np.empty(n, np.int64)
    ends = np.append(starts[1:], n)
    for part, (a, b) in enumerate(zip(starts, ends)):
        labels[order[a:b]] = part
    partition = Partition(graph.with_weights(weights) if weights is not graph.weights else graph,
                          labels, k)
    return DpResult(partition, starts, int(cut[n, k]))


def dynamic_partition(graph: GridGraph, ordering: VertexOrdering, k: int, mode: BalanceMode,
                      weights=None):
    """Optimal consistent partition of ``ordering`` into ``k`` balanced intervals.

    ``weights`` overrides the graph's own weights (same length) for the balance
    test; the returned partition then carries those weights.  Among parts with
    equal cut the shortest final interval is preferred, so results are
    deterministic.
    """
    w = graph.weights if weights is None else np.asarray(weights, dtype=np.float64)
    total = float(np.sum(w))
    if total <= 0:
        raise ValueError("total weight must be positive")
    average = total / k
    lo, hi = mode.bounds(average)
    return solve_window(graph, ordering, k, w, lo, hi, _tolerance(average))


def brute_force_consistent(graph: GridGraph, ordering: VertexOrdering, k: int, mode: BalanceMode,
                           limit: int = 10**6):
    """Exhaustive search over all interval splits; a reference for small inputs."""
    n = graph.n_vertices
    if math.comb(n - 1, k - 1) > limit:
        raise ValueError(f"C({n - 1}, {k - 1}) splits exceed the limit {limit}")
    w = graph.weights
    total = float(np.sum(w))
    if total <= 0:
        raise ValueError("total weight must be positive")
    average = total / k
    lo, hi = mode.bounds(average)
    tol = _tolerance(average)
    order = ordering.order
    w_ord = w[order]
    best = None
    labels = np.empty(n, np.int64)
    for cuts in itertools.combinations(range(1, n), k - 1):
        edges = (0,) + cuts + (n,)
        feasible = True
        for a, b in zip(edges[:-1], edges[1:]):
            # sum from the back, as the sweep does
            part = 0.0
            for q in range(b - 1, a - 1, -1):
                part += w_ord[q]
            if part > hi + tol or part < lo - tol:
                feasible = False
                break
        if not feasible:
            continue
        for part, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            labels[order[a:b]] = part
        value = cut_count(graph, labels)
        if best is None or value < best[0]:
            best = (value, labels.copy(), np.array(edges[:-1]))
    if best is None:
        return Infeasible(k, tuple([-1] * (k + 1)), n)
    value, lab, starts = best
    return DpResult(Partition(graph, lab, k), starts, value)


def incremental_delta(graph: GridGraph, ordering: VertexOrdering, j: int, s: int) -> int:
    """Edges between the prefix ``order[:j]`` and the window ``order[j:s]`` (0-based, half-open).

    Computed the way the sweep does it: the window grows leftward from ``s``
    one vertex at a time, adjusting the count by that vertex's edges.
    """
    n = len(ordering)
    if not 0 <= j < s <= n:
        raise ValueError(f"need 0 <= j < s <= {n}, got j={j}, s={s}")
    pos = ordering.positions()
    delta = 0
    for q in range(s - 1, j - 1, -1):
        v = ordering.order[q]
        for u in graph.neighbor_ids(v):
            p = pos[u]
            if p < q:
                delta += 1
            elif p < s:
                delta -= 1
    return delta


def interval_violations(graph: GridGraph, ordering: VertexOrdering, min_length: int = 1,
                        max_length: int | None = None) -> list[tuple[int, int]]:
    """Intervals ``[a, b)`` of the ordering, with lengths in the given range, that induce
    disconnected subgraphs.  Intended for auditing small custom orderings."""
    n = len(ordering)
    max_length = n if max_length is None else max_length
    pos = ordering.positions()
    order = ordering.order
    bad = []
    for a in range(n):
        # union-find over the growing interval
        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = 0
        for b in range(a, min(n, a + max_length)):
            v = order[b]
            parent[v] = v
            comps += 1
            for u in graph.neighbor_ids(v):
                if a <= pos[u] < b:
                    ru, rv = find(u), find(v)
                    if ru != rv:
                        parent[ru] = rv
                        comps -= 1
            if b - a + 1 >= min_length and comps > 1:
                bad.append((a, b + 1))
    return bad
