"""Contiguous, balanced, minimum-cut partitioning of square and hexagonal grids."""

from .grid import (
    BalanceReport,
    GridGraph,
    Partition,
    Topology,
    VertexOrdering,
    balance_report,
    cut_count,
    is_contiguous,
    part_perimeters,
    perimeter_of_part,
    snake_ordering,
)

__version__ = "0.1.0"
