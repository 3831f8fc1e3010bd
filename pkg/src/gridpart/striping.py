"""Golden-ratio cautious striping for unit-weight rectangular grids, and the
closed-form perimeter bounds that go with it.

The grid is cut into horizontal strips of height ``a = isqrt(A)`` or
``a + 1`` which are filled column by column, top to bottom, leaving roughly
``phi * a`` columns at the right end of every strip.  Those leftovers form a
narrow region that is filled row by row, and an optional bottom strip is
filled by a column snake running right to left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridGraph, Partition, Topology, is_contiguous

__all__ = [
    "PHI",
    "StripePlan",
    "StripingResult",
    "min_perimeter_square",
    "min_perimeter_hex",
    "ceil_two_sqrt",
    "cut_lower_bound",
    "stripe_plan",
    "phi_cautious_striping",
    "lemma_uniform_check",
]

PHI = (1.0 + math.sqrt(5.0)) / 2.0


def ceil_two_sqrt(A: int) -> int:
    """Exact integer ceil(2*sqrt(A))."""
    if A < 1:
        raise ValueError("A must be a positive integer")
    return math.isqrt(4 * A - 1) + 1


def min_perimeter_square(A: int) -> int:
    """Smallest perimeter of a polyomino with ``A`` cells."""
    if A < 1:
        raise ValueError("A must be a positive integer")
    return 2 * ceil_two_sqrt(A)


def min_perimeter_hex(A: int) -> int:
    """Smallest perimeter of a polyhex with ``A`` cells."""
    if A < 1:
        raise ValueError("A must be a positive integer")
    x = 12 * A - 3
    r = math.isqrt(x)
    return 2 * (r if r * r == x else r + 1)


def cut_lower_bound(m: int, n: int, k: int) -> int:
    """Lower bound on interior cut edges of any partition into ``k`` parts of size >= floor(mn/k)."""
    if min(m, n, k) < 1 or k > m * n:
        raise ValueError("need positive m, n, k with k <= m*n")
    A = (m * n) // k
    return max(0, k * ceil_two_sqrt(A) - 2 * (m + n))


def lemma_uniform_check(A: int, h: int) -> bool:
    """Whether ``A/h + h <= ceil(2 sqrt A)`` for a strip height ``h`` in ``{a, a+1}``."""
    a = math.isqrt(A)
    if A < 1 or a * a == A:
        raise ValueError(f"A must be a positive non-square, got {A}")
    if h not in (a, a + 1):
        raise ValueError(f"h must be {a} or {a + 1}, got {h}")
    # A/h + h <= q  <=>  A + h^2 <= q h
    return A + h * h <= ceil_two_sqrt(A) * h


@dataclass(frozen=True)
class StripePlan:
    m: int
    n: int
    k: int
    A: int
    extras: int
    a: int
    d: int
    r: int
    strip_heights: tuple[int, ...]
    s2_height: int

    @property
    def lo_cols(self) -> int:
        return math.floor(self.a / PHI)

    @property
    def hi_cols(self) -> int:
        return math.ceil(PHI * self.a)


def _check_dims(m: int, n: int, k: int):
    if min(m, n, k) < 1:
        raise ValueError("m, n and k must be positive")
    if k > m * n:
        raise ValueError(f"k={k} exceeds the number of cells {m * n}")
    A = (m * n) // k
    a = math.isqrt(A)
    if m > n:
        raise ValueError(f"need n >= m (got m={m}, n={n}); transpose first")
    if m < a:
        raise ValueError(f"need m >= a = isqrt(A) = {a}, got m={m}")
    return A, a


def stripe_plan(m: int, n: int, k: int) -> StripePlan:
    """Split ``m`` rows into full-width strips of height ``a``/``a+1`` plus an optional bottom strip."""
    A, a = _check_dims(m, n, k)
    d, r = divmod(m, a)
    lo = math.floor(a / PHI)
    if r <= d:
        heights = (a + 1,) * r + (a,) * (d - r)
        s2 = 0
    elif r > lo:
        heights = (a,) * d
        s2 = r
    else:
        heights = (a,) * (d - 1)
        s2 = a + r
    return StripePlan(m, n, k, A, (m * n) % k, a, d, r, heights, s2)


@dataclass
class StripingResult:
    partition: Partition
    plan: StripePlan
    used_fallback: bool


class _Builder:
    def __init__(self, plan: StripePlan):
        self.plan = plan
        m, n, k = plan.m, plan.n, plan.k
        self.labels = np.full((m, n), -1, dtype=np.int64)
        self.sizes = [plan.A + 1 if p < plan.extras else plan.A for p in range(k)]
        self.part = 0
        self.need = self.sizes[0]

    def take(self, r: int, c: int):
        self.labels[r, c] = self.part
        self.need -= 1
        if self.need == 0:
            self.part += 1
            self.need = self.sizes[self.part] if self.part < len(self.sizes) else 0

    @property
    def fresh(self) -> bool:
        return self.part < len(self.sizes) and self.need == self.sizes[self.part]


def _fill_strips(b: _Builder):
    p = b.plan
    top = 0
    for h in p.strip_heights:
        cells = [(top + rr, c) for c in range(p.n) for rr in range(h)]
        pos = 0
        while b.fresh:
            # complete columns still free in this strip
            free = (p.n * h - pos) // h
            if free <= p.hi_cols:
                break
            after = (p.n * h - pos - b.need) // h
            if after < p.lo_cols:
                break
            for _ in range(b.need):
                b.take(*cells[pos])
                pos += 1
        top += h
    return top


LEFTOVER_BUDGET = 20000


def _fill_leftover(b: _Builder, rows: int, first_dir: int) -> bool:
    """Row-wise striping of the unassigned cells in the top ``rows`` rows.

    Directions alternate per part (+1 reads rows left to right, -1 right to
    left).  A part that comes out disconnected is redone in the other
    direction, and if neither works the previous parts are revisited
    depth-first.  Returns False when no direction sequence is found within
    ``LEFTOVER_BUDGET`` part placements.
    """
    lab = b.labels
    # each frame: state before the part, its preferred direction, attempts made
    stack = [((lab.copy(), b.part, b.need), first_dir, 0)]
    budget = LEFTOVER_BUDGET
    while stack:
        snapshot, direction, tried = stack.pop()
        lab[:] = snapshot[0]
        b.part, b.need = snapshot[1], snapshot[2]
        if b.part >= len(b.sizes) or not np.any(lab[:rows] < 0):
            return True
        if tried == 2 or budget == 0:
            continue
        budget -= 1
        attempt = direction if tried == 0 else -direction
        stack.append((snapshot, direction, tried + 1))
        part = b.part
        _stripe_rows(b, rows, attempt)
        if _connected_cells(np.argwhere(lab == part)):
            stack.append(((lab.copy(), b.part, b.need), -attempt, 0))
    return False


def _stripe_rows(b: _Builder, rows: int, direction: int):
    part = b.part
    lab = b.labels
    for r in range(rows):
        free = np.flatnonzero(lab[r] < 0)
        if free.size == 0:
            continue
        seq = free if direction > 0 else free[::-1]
        for c in seq:
            b.take(r, int(c))
            if b.part != part:
                return


def _connected_cells(cells: np.ndarray) -> bool:
    if len(cells) == 0:
        return True
    todo = {tuple(x) for x in cells.tolist()}
    stack = [todo.pop()]
    while stack:
        r, c = stack.pop()
        for q in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if q in todo:
                todo.remove(q)
                stack.append(q)
    return not todo


def _fill_bottom(b: _Builder, top: int) -> bool:
    """Column snake through the bottom strip, right to left, starting top-right."""
    p = b.plan
    spill = None if b.fresh else b.part
    if spill is not None and b.labels[top - 1, p.n - 1] != spill:
        # the unfinished part must touch the snake's first cell
        return False
    rows = list(range(top, p.m))
    for j, c in enumerate(range(p.n - 1, -1, -1)):
        for r in (rows if j % 2 == 0 else rows[::-1]):
            b.take(r, c)
    return True


def _snake_chop(plan: StripePlan) -> np.ndarray:
    from .grid import snake_ordering

    g = GridGraph(Topology.SQUARE, plan.m, plan.n)
    order = snake_ordering(g, max(1, plan.a)).order
    sizes = [plan.A + 1 if p < plan.extras else plan.A for p in range(plan.k)]
    labels = np.repeat(np.arange(plan.k), sizes)
    out = np.empty(plan.m * plan.n, np.int64)
    out[order] = labels
    return out.reshape(plan.m, plan.n)


def _stripe_labels(plan: StripePlan):
    for first_dir in (-1, 1):
        b = _Builder(plan)
        top = _fill_strips(b)
        if not _fill_leftover(b, top, first_dir):
            continue
        if plan.s2_height and not _fill_bottom(b, top):
            continue
        lab = b.labels
        if np.any(lab < 0):
            continue
        g = GridGraph(Topology.SQUARE, plan.m, plan.n)
        if np.all(is_contiguous(g, Partition(g, lab.reshape(-1), plan.k))):
            return lab, False
    return _snake_chop(plan), True


def phi_cautious_striping(m: int, n: int, k: int, kind=Topology.SQUARE) -> StripingResult:
    """Partition an ``m x n`` unit-weight grid into ``k`` contiguous parts of size A or A+1.

    Inputs with ``m > n`` are solved transposed.  The first ``mn mod k``
    parts created get the extra cell.  If the strip construction cannot keep
    every part connected (in random trials only when isqrt(A) <= 3) the result falls
    back to chopping a column snake, and ``used_fallback`` is set.  ``kind``
    only selects the adjacency of the returned partition's graph.
    """
    if min(m, n, k) < 1:
        raise ValueError("m, n and k must be positive")
    transpose = m > n
    mm, nn = (n, m) if transpose else (m, n)
    plan = stripe_plan(mm, nn, k)
    lab, fallback = _stripe_labels(plan)
    if transpose:
        lab = lab.T
    g = GridGraph(kind, m, n)
    return StripingResult(Partition(g, np.ascontiguousarray(lab).reshape(-1), k), plan, fallback)
