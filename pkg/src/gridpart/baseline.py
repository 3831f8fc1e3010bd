"""Weighted k-means on the grid's planar embedding.

This is the unconstrained baseline: parts minimise the weighted squared
distance to their centres and may come out unbalanced or disconnected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridGraph, Partition

__all__ = ["KMeansConfig", "LloydRun", "kmeans_pp", "lloyd", "weighted_kmeans"]


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 100
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


@dataclass
class LloydRun:
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    history: list[float]  # objective after every assignment step


def _sq_dists(pos: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((pos[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _draw(rng: np.random.Generator, mass: np.ndarray) -> int:
    total = mass.sum()
    if not total > 0:
        return -1
    return int(rng.choice(mass.size, p=mass / total))


def kmeans_pp(pos: np.ndarray, weights: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding with the vertex weights as sampling masses."""
    n = len(pos)
    chosen = []
    first = _draw(rng, weights)
    chosen.append(first if first >= 0 else int(rng.integers(n)))
    d2 = ((pos - pos[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        idx = _draw(rng, weights * d2)
        if idx < 0:
            # all remaining mass sits on chosen points; fall back to plain distance
            idx = _draw(rng, d2)
        if idx < 0:
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        d2 = np.minimum(d2, ((pos - pos[idx]) ** 2).sum(axis=1))
    return pos[chosen].astype(np.float64)


def _objective(d: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    return float((weights * d[np.arange(len(labels)), labels]).sum())


def lloyd(pos: np.ndarray, weights: np.ndarray, centers: np.ndarray, max_iters: int) -> LloydRun:
    """Alternate nearest-centre assignment and weighted-centroid updates.

    An empty cluster is reseeded at the vertex with the largest weighted
    squared distance to its centre, which cannot raise the objective.
    """
    centers = centers.copy()
    k = len(centers)
    history = []
    labels = None
    for _ in range(max_iters):
        d = _sq_dists(pos, centers)
        new = np.argmin(d, axis=1)
        history.append(_objective(d, new, weights))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        mass = np.bincount(labels, weights=weights, minlength=k)
        for c in range(k):
            members = labels == c
            if counts[c] == 0:
                continue
            if mass[c] > 0:
                centers[c] = (weights[members, None] * pos[members]).sum(axis=0) / mass[c]
            else:
                centers[c] = pos[members].mean(axis=0)
        for c in np.flatnonzero(counts == 0):
            cost = weights * d[np.arange(len(labels)), labels]
            v = int(np.argmax(cost))
            centers[c] = pos[v]
            d[:, c] = ((pos - pos[v]) ** 2).sum(axis=1)
            labels[v] = c
    d = _sq_dists(pos, centers)
    labels = np.argmin(d, axis=1)
    _fill_empty(labels, d, weights, k)
    return LloydRun(labels, centers, _objective(d, labels, weights), history)


def _fill_empty(labels: np.ndarray, d: np.ndarray, weights: np.ndarray, k: int):
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        cost = weights * d[np.arange(len(labels)), labels]
        cost = np.where(counts[labels] > 1, cost, -np.inf)
        # fall back to raw distance when every donor vertex has zero weight
        if not np.isfinite(cost).any() or cost.max() <= 0:
            cost = np.where(counts[labels] > 1, d[np.arange(len(labels)), labels], -np.inf)
        labels[int(np.argmax(cost))] = c


def weighted_kmeans(graph: GridGraph, cfg: KMeansConfig) -> Partition:
    """Best of ``cfg.restarts`` seeded Lloyd runs on the cell centres."""
    if cfg.k > graph.n_vertices:
        raise ValueError(f"k={cfg.k} exceeds the number of vertices {graph.n_vertices}")
    pos = graph.cell_centers()
    w = np.asarray(graph.weights, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    best = None
    for _ in range(cfg.restarts):
        run = lloyd(pos, w, kmeans_pp(pos, w, cfg.k, rng), cfg.max_iters)
        if best is None or run.objective < best.objective:
            best = run
    return Partition(graph, best.labels.astype(np.int64), cfg.k)
