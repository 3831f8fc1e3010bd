"""Grid graphs, partitions, vertex orderings and the shared cut/balance metrics.

Vertices are addressed externally as ``(row, col)`` and internally by their
row-major index ``row * cols + col``.  Hexagonal grids use the "odd-q"
vertical-offset layout: odd columns sit half a cell lower than even ones.
Part labels are 0-based in the Python API; the file formats are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Topology",
    "GridGraph",
    "Partition",
    "VertexOrdering",
    "BalanceReport",
    "cut_count",
    "perimeter_of_part",
    "part_perimeters",
    "is_contiguous",
    "balance_report",
    "snake_ordering",
]


class Topology(str, Enum):
    SQUARE = "square"
    HEX = "hex"

    @property
    def full_degree(self) -> int:
        return 4 if self is Topology.SQUARE else 6


def _neighbor_offsets(kind: Topology, col: int) -> list[tuple[int, int]]:
    if kind is Topology.SQUARE:
        return [(-1, 0), (0, -1), (0, 1), (1, 0)]
    if col % 2 == 0:
        return [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, 0)]
    return [(-1, 0), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


class GridGraph:
    """An ``rows x cols`` square or hex grid with nonnegative vertex weights.

    Adjacency is materialised once as a padded ``nbrs`` array (``-1`` marks an
    absent slot) plus a sorted ``edges`` list, which is what the kernels use.
    Every edge has unit cost.
    """

    def __init__(self, kind, rows: int, cols: int, weights=None):
        kind = Topology(kind)
        if rows < 1 or cols < 1:
            raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
        self.kind = kind
        self.rows = int(rows)
        self.cols = int(cols)
        n = self.rows * self.cols
        if weights is None:
            w = np.ones(n, dtype=np.float64)
        else:
            w = np.asarray(weights, dtype=np.float64).reshape(-1).copy()
            if w.size != n:
                raise ValueError(f"expected {n} weights, got {w.size}")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and nonnegative")
        w.flags.writeable = False
        self.weights = w
        self.nbrs, self.degree = self._build_adjacency()
        self.nbrs.flags.writeable = False
        self.degree.flags.writeable = False
        u = np.repeat(np.arange(n), self.nbrs.shape[1])
        v = self.nbrs.reshape(-1)
        keep = v > u
        self.edges = np.stack([u[keep], v[keep]], axis=1)
        self.edges.flags.writeable = False

    def _build_adjacency(self):
        m, n = self.rows, self.cols
        maxdeg = self.kind.full_degree
        nbrs = np.full((m * n, maxdeg), -1, dtype=np.int64)
        deg = np.zeros(m * n, dtype=np.int64)
        for r in range(m):
            for c in range(n):
                v = r * n + c
                found = []
                for dr, dc in _neighbor_offsets(self.kind, c):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < m and 0 <= cc < n:
                        found.append(rr * n + cc)
                found.sort()
                nbrs[v, : len(found)] = found
                deg[v] = len(found)
        return nbrs, deg

    @property
    def n_vertices(self) -> int:
        return self.rows * self.cols

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def boundary_length(self) -> int:
        """Number of cell sides lying on the outer boundary of the grid."""
        return int(np.sum(self.kind.full_degree - self.degree))

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"vertex ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(int(v), self.cols)

    def neighbors(self, row: int, col: int) -> list[tuple[int, int]]:
        """Adjacent cells of ``(row, col)`` in row-major order."""
        v = self.index(row, col)
        return [self.coords(u) for u in self.nbrs[v, : self.degree[v]]]

    def neighbor_ids(self, v: int) -> np.ndarray:
        return self.nbrs[v, : self.degree[v]]

    def with_weights(self, weights) -> "GridGraph":
        return GridGraph(self.kind, self.rows, self.cols, weights)

    def cell_centers(self) -> np.ndarray:
        """Planar embedding: unit square lattice, or unit-spaced flat-top hexes."""
        r, c = np.divmod(np.arange(self.n_vertices), self.cols)
        if self.kind is Topology.SQUARE:
            return np.stack([c.astype(float), r.astype(float)], axis=1)
        x = c * (np.sqrt(3.0) / 2.0)
        y = r + 0.5 * (c % 2)
        return np.stack([x, y], axis=1)

    def __repr__(self) -> str:
        return f"GridGraph({self.kind.value!r}, {self.rows}, {self.cols})"


def cut_count(graph: GridGraph, labels) -> int:
    """Edges whose endpoints carry different labels (each edge counted once)."""
    labels = np.asarray(labels)
    e = graph.edges
    return int(np.count_nonzero(labels[e[:, 0]] != labels[e[:, 1]]))


@dataclass
class Partition:
    """Assignment of every vertex to one of ``k`` nonempty parts.

    ``part_weights`` and ``cut_edges`` are derived on construction; ``check``
    recomputes them from scratch.
    """

    graph: GridGraph
    labels: np.ndarray
    k: int
    part_weights: np.ndarray = field(init=False)
    cut_edges: int = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.size != self.graph.n_vertices:
            raise ValueError(f"expected {self.graph.n_vertices} labels, got {labels.size}")
        if self.k < 1:
            raise ValueError("k must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        sizes = np.bincount(labels, minlength=self.k)
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise ValueError(f"parts {empty.tolist()} are empty")
        self.labels = labels
        self.part_weights = np.bincount(labels, weights=self.graph.weights, minlength=self.k)
        self.cut_edges = cut_count(self.graph, labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def matrix(self) -> np.ndarray:
        return self.labels.reshape(self.graph.rows, self.graph.cols)

    def members(self, part: int) -> np.ndarray:
        return np.flatnonzero(self.labels == part)

    def check(self) -> None:
        """Raise if the cached metrics disagree with a from-scratch recount."""
        w = np.bincount(self.labels, weights=self.graph.weights, minlength=self.k)
        if not np.allclose(w, self.part_weights, rtol=1e-12, atol=1e-12):
            raise AssertionError("cached part weights are stale")
        if cut_count(self.graph, self.labels) != self.cut_edges:
            raise AssertionError("cached cut count is stale")


def part_perimeters(graph: GridGraph, partition: Partition) -> np.ndarray:
    """Dual-graph perimeter of every part: its cut edges plus its grid-boundary sides."""
    labels = partition.labels
    e = graph.edges
    crossing = labels[e[:, 0]] != labels[e[:, 1]]
    per = np.bincount(labels[e[crossing, 0]], minlength=partition.k)
    per += np.bincount(labels[e[crossing, 1]], minlength=partition.k)
    per += np.bincount(labels, weights=graph.kind.full_degree - graph.degree,
                       minlength=partition.k).astype(np.int64)
    return per.astype(np.int64)


def perimeter_of_part(graph: GridGraph, partition: Partition, part: int) -> int:
    if not 0 <= part < partition.k:
        raise ValueError(f"part {part} out of range for k={partition.k}")
    if not np.any(partition.labels == part):
        raise ValueError(f"part {part} is empty")
    return int(part_perimeters(graph, partition)[part])


def is_contiguous(graph: GridGraph, partition: Partition) -> np.ndarray:
    """Boolean per part: does the part induce a connected subgraph?"""
    labels = partition.labels
    e = graph.edges
    same = labels[e[:, 0]] == labels[e[:, 1]]
    n = graph.n_vertices
    adj = coo_matrix((np.ones(int(same.sum())), (e[same, 0], e[same, 1])), shape=(n, n))
    _, comp = connected_components(adj, directed=False)
    # a part is connected iff all its vertices share one component id
    pairs = np.unique(np.stack([labels, comp], axis=1), axis=0)
    ncomp = np.bincount(pairs[:, 0], minlength=partition.k)
    return ncomp == 1


@dataclass(frozen=True)
class BalanceReport:
    average: float
    max_dev: float
    within: bool


def balance_report(graph: GridGraph, partition: Partition, eps: float) -> BalanceReport:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    avg = graph.total_weight / partition.k
    if avg <= 0:
        raise ValueError("average part weight is zero; balance is undefined")
    dev = float(np.max(np.abs(partition.part_weights - avg)) / avg)
    return BalanceReport(avg, dev, dev <= eps + 1e-12)


@dataclass(frozen=True)
class VertexOrdering:
    order: np.ndarray
    stripe_height: int | None = None

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64).reshape(-1)
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise ValueError("ordering must be a permutation of the vertices")
        order.flags.writeable = False
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return self.order.size

    def positions(self) -> np.ndarray:
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(self.order.size)
        return pos


def snake_ordering(graph: GridGraph, stripe_height: int) -> VertexOrdering:
    """Column-major striping order with snake turns between stripes.

    Stripes of ``stripe_height`` rows (the last may be shorter) are visited
    top to bottom.  Each column of a stripe is read top to bottom; even
    stripes sweep columns left to right, odd stripes right to left, so the
    path drops straight down the end column into the next stripe.
    """
    m, n = graph.rows, graph.cols
    if not 1 <= stripe_height <= m:
        raise ValueError(f"stripe height must be in [1, {m}], got {stripe_height}")
    order = []
    for j, top in enumerate(range(0, m, stripe_height)):
        rows = np.arange(top, min(top + stripe_height, m))
        cols = range(n) if j % 2 == 0 else range(n - 1, -1, -1)
        for c in cols:
            order.extend((rows * n + c).tolist())
    return VertexOrdering(np.array(order, dtype=np.int64), stripe_height)
