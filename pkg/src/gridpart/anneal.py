"""Simulated annealing over contiguity- and balance-preserving boundary moves.

Each iteration draws one move uniformly at random from the current
neighbourhood, then accepts it with the Metropolis rule ``exp(-delta/T)``.
Uniform draws come from rejection sampling: a random cut edge picks a
(vertex, target part) pair, the pair is thinned to be uniform, a connected
run rooted at that vertex is chosen, and invalid moves are redrawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from ._accel import NUMBA_ENABLED
from .grid import GridGraph, Partition, balance_report, is_contiguous

__all__ = [
    "Neighborhood",
    "AnnealConfig",
    "Move",
    "AnnealResult",
    "acceptance_probability",
    "one_swap_candidates",
    "combinatorial_candidates",
    "apply_move",
    "anneal",
]

MAX_RUN_LIMIT = 5


class Neighborhood(str, Enum):
    ONE_SWAP = "one_swap"
    COMBINATORIAL = "combinatorial"


@dataclass(frozen=True)
class AnnealConfig:
    temperature: float = 0.5
    eps: float = 0.05
    seed: int = 0
    neighborhood: Neighborhood = Neighborhood.COMBINATORIAL
    max_run: int = 4
    max_iters: int | None = None  # default 50 |V|
    no_improve_window: int | None = None  # default 5 |V|
    cooling: float = 1.0
    max_attempts: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "neighborhood", Neighborhood(self.neighborhood))
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.neighborhood is Neighborhood.COMBINATORIAL and not 2 <= self.max_run <= MAX_RUN_LIMIT:
            raise ValueError(f"max_run must be in [2, {MAX_RUN_LIMIT}]")
        if not 0 < self.cooling <= 1:
            raise ValueError("cooling must lie in (0, 1]")
        for name in ("max_iters", "no_improve_window"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def run_length(self) -> int:
        return 1 if self.neighborhood is Neighborhood.ONE_SWAP else self.max_run


@dataclass(frozen=True, order=True)
class Move:
    vertices: tuple[int, ...]
    source: int
    target: int


@dataclass
class AnnealResult:
    best: Partition
    final: Partition
    trace: np.ndarray  # rows of (iteration, cut) after every accepted move, starting at 0
    iterations: int
    accepted: int

    @property
    def initial_cut(self) -> int:
        return int(self.trace[0, 1])


def acceptance_probability(z_new: float, z_old: float, temperature: float) -> float:
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if z_new <= z_old:
        return 1.0
    return math.exp(-(z_new - z_old) / temperature)


def _bounds(graph: GridGraph, k: int, eps: float):
    avg = graph.total_weight / k
    if avg <= 0:
        raise ValueError("total weight must be positive")
    return (1 - eps) * avg, (1 + eps) * avg, 1e-9 * avg


def _donor_ok(graph: GridGraph, labels: np.ndarray, part: int, removed: set) -> bool:
    rest = [v for v in np.flatnonzero(labels == part) if v not in removed]
    if not rest:
        return False
    todo = set(rest)
    stack = [todo.pop()]
    while stack:
        u = stack.pop()
        for w in graph.neighbor_ids(u):
            if w in todo:
                todo.remove(w)
                stack.append(w)
    return not todo


def _valid(graph, partition, move_vertices, i, j, lo, hi, tol) -> bool:
    w = float(graph.weights[list(move_vertices)].sum())
    pw = partition.part_weights
    if pw[i] - w < lo - tol or pw[j] + w > hi + tol:
        return False
    return _donor_ok(graph, partition.labels, i, set(move_vertices))


def one_swap_candidates(graph: GridGraph, partition: Partition, eps: float) -> list[Move]:
    """Single boundary vertices that can change part while keeping both parts
    connected and every part within ``(1 +- eps)`` of the average weight."""
    return combinatorial_candidates(graph, partition, eps, 1)


def combinatorial_candidates(graph: GridGraph, partition: Partition, eps: float,
                             max_run: int) -> list[Move]:
    """Connected runs of 1..max_run vertices of part ``i``, each touching part
    ``j``, moved together from ``i`` to ``j``; filtered like single swaps."""
    if max_run < 1:
        raise ValueError("max_run must be positive")
    lo, hi, tol = _bounds(graph, partition.k, eps)
    labels = partition.labels
    layers: dict[tuple[int, int], set] = {}
    for u, v in graph.edges:
        a, b = int(labels[u]), int(labels[v])
        if a != b:
            layers.setdefault((a, b), set()).add(int(u))
            layers.setdefault((b, a), set()).add(int(v))
    moves = []
    for (i, j), layer in sorted(layers.items()):
        level = {frozenset([x]) for x in layer}
        found = set(level)
        for _ in range(max_run - 1):
            grown = set()
            for S in level:
                for x in S:
                    for y in graph.neighbor_ids(x):
                        y = int(y)
                        if y in layer and y not in S:
                            grown.add(S | {y})
            grown -= found
            found |= grown
            level = grown
        for S in found:
            if _valid(graph, partition, S, i, j, lo, hi, tol):
                moves.append(Move(tuple(sorted(S)), i, j))
    moves.sort(key=lambda mv: (len(mv.vertices), mv.vertices, mv.target))
    return moves


def apply_move(partition: Partition, move: Move) -> Partition:
    labels = partition.labels.copy()
    if np.any(labels[list(move.vertices)] != move.source):
        raise ValueError("move vertices are not all in the source part")
    labels[list(move.vertices)] = move.target
    return Partition(partition.graph, labels, partition.k)


def _max_rooted(graph: GridGraph, max_run: int) -> int:
    m, n = graph.rows, graph.cols
    rows = range(max(0, m // 2 - max_run), min(m, m // 2 + max_run + 1))
    cols = range(max(0, n // 2 - max_run), min(n, n // 2 + max_run + 1))
    cand = np.array([r * n + c for r in rows for c in cols], dtype=np.int64)
    return int(_kernels.max_rooted_count(graph.nbrs, graph.degree, graph.n_vertices, cand, max_run))


def _seed32(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def anneal(graph: GridGraph, initial: Partition, cfg: AnnealConfig) -> AnnealResult:
    """Refine ``initial`` by annealing on the cut count; returns the best state seen."""
    if initial.graph.n_vertices != graph.n_vertices:
        raise ValueError("partition does not match the graph")
    if not np.all(is_contiguous(graph, initial)):
        raise ValueError("initial partition has a disconnected part")
    initial = Partition(graph, initial.labels, initial.k)
    if not balance_report(graph, initial, cfg.eps).within:
        raise ValueError(f"initial partition is not balanced within eps={cfg.eps}")
    lo, hi, tol = _bounds(graph, initial.k, cfg.eps)
    nv = graph.n_vertices
    max_iters = cfg.max_iters if cfg.max_iters is not None else 50 * nv
    window = cfg.no_improve_window if cfg.no_improve_window is not None else 5 * nv
    run = cfg.run_length
    cmax = _max_rooted(graph, run) if run > 1 else 1
    args = (initial.labels, graph.nbrs, graph.degree, graph.edges, graph.weights, initial.k,
            lo, hi, tol, float(cfg.temperature), float(cfg.cooling), int(max_iters), int(window),
            run, cmax, int(cfg.max_attempts), _seed32(cfg.seed))
    if NUMBA_ENABLED:
        out = _kernels.anneal_kernel(*args)
    else:
        # the plain-Python kernel seeds numpy's global stream; leave it as found
        state = np.random.get_state()
        try:
            out = _kernels.anneal_kernel(*args)
        finally:
            np.random.set_state(state)
    best, final, best_cut, cut, t_it, t_cut, iters, accepted = out
    trace = np.stack([t_it, t_cut], axis=1)
    return AnnealResult(Partition(graph, best, initial.k), Partition(graph, final, initial.k),
                        trace, int(iters), int(accepted))
