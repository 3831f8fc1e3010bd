"""Plain-text instance and partition files.

Instance::

    GRID <square|hex> <m> <n> [k=<int>] [eps=<float>]
    <m rows of n space-separated weights>
    DISTS                      (optional)
    v <row> <col>
    atom <value> <prob>
    ...

Partition::

    PARTITION <m> <n> <k> [key=value ...]
    <m rows of n part ids, 1-based>

Floats are written with ``repr`` so every file parses back to the exact
values it was written from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridGraph, Topology
from .stochastic import WeightDistribution

__all__ = [
    "FormatError",
    "Instance",
    "PartitionFile",
    "format_instance",
    "parse_instance",
    "read_instance",
    "write_instance",
    "format_partition",
    "parse_partition",
    "read_partition",
    "write_partition",
]


class FormatError(ValueError):
    pass


def _num(x: float) -> str:
    return repr(float(x))


def _float(tok: str, where: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise FormatError(f"{where}: not a number: {tok!r}") from None
    if not math.isfinite(val):
        raise FormatError(f"{where}: non-finite value {tok!r}")
    return val


def _int(tok: str, where: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"{where}: not an integer: {tok!r}") from None


@dataclass
class Instance:
    kind: Topology
    weights: np.ndarray  # m x n
    k: int | None = None
    eps: float | None = None
    dists: list[WeightDistribution] | None = None  # row-major

    def __post_init__(self):
        self.kind = Topology(self.kind)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or 0 in self.weights.shape:
            raise ValueError("weights must be a nonempty m x n matrix")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if self.dists is not None and len(self.dists) != self.weights.size:
            raise ValueError(f"need {self.weights.size} distributions, got {len(self.dists)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def graph(self) -> GridGraph:
        m, n = self.shape
        return GridGraph(self.kind, m, n, self.weights.reshape(-1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        same_dists = (self.dists is None) == (other.dists is None) and (
            self.dists is None or all(a == b for a, b in zip(self.dists, other.dists)))
        return (self.kind == other.kind and self.k == other.k and self.eps == other.eps
                and np.array_equal(self.weights, other.weights) and same_dists)


def format_instance(inst: Instance) -> str:
    m, n = inst.shape
    head = ["GRID", inst.kind.value, str(m), str(n)]
    if inst.k is not None:
        head.append(f"k={inst.k}")
    if inst.eps is not None:
        head.append(f"eps={_num(inst.eps)}")
    lines = [" ".join(head)]
    lines += [" ".join(_num(x) for x in row) for row in inst.weights]
    if inst.dists is not None:
        lines.append("DISTS")
        for v, d in enumerate(inst.dists):
            lines.append(f"v {v // n} {v % n}")
            lines += [f"atom {_num(x)} {_num(p)}" for x, p in zip(d.values, d.probs)]
    return "\n".join(lines) + "\n"


def _content_lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line.split()


def parse_instance(text: str) -> Instance:
    lines = list(_content_lines(text))
    if not lines or lines[0][1][0] != "GRID":
        raise FormatError("instance must start with a GRID header")
    no, head = lines[0]
    if len(head) < 4:
        raise FormatError(f"line {no}: expected GRID <kind> <m> <n>")
    try:
        kind = Topology(head[1])
    except ValueError:
        raise FormatError(f"line {no}: unknown topology {head[1]!r}") from None
    m, n = _int(head[2], f"line {no}"), _int(head[3], f"line {no}")
    if m < 1 or n < 1:
        raise FormatError(f"line {no}: grid dimensions must be positive")
    k = eps = None
    for tok in head[4:]:
        key, _, val = tok.partition("=")
        if key == "k":
            k = _int(val, f"line {no}")
        elif key == "eps":
            eps = _float(val, f"line {no}")
        else:
            raise FormatError(f"line {no}: unknown header field {tok!r}")
    if len(lines) < 1 + m:
        raise FormatError(f"expected {m} weight rows, found {len(lines) - 1}")
    rows = []
    for no, toks in lines[1:1 + m]:
        if len(toks) != n:
            raise FormatError(f"line {no}: expected {n} weights, found {len(toks)}")
        rows.append([_float(t, f"line {no}") for t in toks])
    weights = np.array(rows)
    if np.any(weights < 0):
        raise FormatError("weights must be nonnegative")
    rest = lines[1 + m:]
    dists = None
    if rest:
        no, toks = rest[0]
        if toks != ["DISTS"]:
            raise FormatError(f"line {no}: expected DISTS or end of file")
        dists = _parse_dists(rest[1:], m, n)
    try:
        return Instance(kind, weights, k, eps, dists)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _parse_dists(lines, m: int, n: int) -> list[WeightDistribution]:
    atoms: dict[int, tuple[list, list]] = {}
    cur = None
    for no, toks in lines:
        if toks[0] == "v" and len(toks) == 3:
            r, c = _int(toks[1], f"line {no}"), _int(toks[2], f"line {no}")
            if not (0 <= r < m and 0 <= c < n):
                raise FormatError(f"line {no}: cell ({r}, {c}) outside the grid")
            cur = r * n + c
            if cur in atoms:
                raise FormatError(f"line {no}: cell ({r}, {c}) listed twice")
            atoms[cur] = ([], [])
        elif toks[0] == "atom" and len(toks) == 3:
            if cur is None:
                raise FormatError(f"line {no}: atom before any v line")
            atoms[cur][0].append(_float(toks[1], f"line {no}"))
            atoms[cur][1].append(_float(toks[2], f"line {no}"))
        else:
            raise FormatError(f"line {no}: expected 'v <row> <col>' or 'atom <value> <prob>'")
    if len(atoms) != m * n:
        raise FormatError(f"DISTS covers {len(atoms)} of {m * n} cells")
    out = []
    for v in range(m * n):
        vals, probs = atoms[v]
        try:
            out.append(WeightDistribution(vals, probs))
        except ValueError as exc:
            raise FormatError(f"cell ({v // n}, {v % n}): {exc}") from None
    return out


def read_instance(path) -> Instance:
    return parse_instance(Path(path).read_text())


def write_instance(inst: Instance, path):
    Path(path).write_text(format_instance(inst))


@dataclass
class PartitionFile:
    labels: np.ndarray  # m x n, 0-based in memory
    k: int
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 2 or 0 in self.labels.shape:
            raise ValueError("labels must be a nonempty m x n matrix")
        if self.k < 1 or self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ValueError(f"part ids must lie in 1..{self.k}")
        for key, val in self.meta.items():
            if not key or any(ch.isspace() or ch == "=" for ch in key) or any(ch.isspace() for ch in val):
                raise ValueError(f"bad metadata entry {key!r}={val!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionFile):
            return NotImplemented
        return self.k == other.k and self.meta == other.meta and np.array_equal(self.labels, other.labels)


def format_partition(pf: PartitionFile) -> str:
    m, n = pf.labels.shape
    head = ["PARTITION", str(m), str(n), str(pf.k)] + [f"{k}={v}" for k, v in pf.meta.items()]
    lines = [" ".join(head)]
    lines += [" ".join(str(int(x) + 1) for x in row) for row in pf.labels]
    return "\n".join(lines) + "\n"


def parse_partition(text: str) -> PartitionFile:
    lines = list(_content_lines(text))
    if not lines or lines[0][1][0] != "PARTITION" or len(lines[0][1]) < 4:
        raise FormatError("partition must start with PARTITION <m> <n> <k>")
    no, head = lines[0]
    m, n, k = (_int(t, f"line {no}") for t in head[1:4])
    meta = {}
    for tok in head[4:]:
        key, eq, val = tok.partition("=")
        if not eq or not key:
            raise FormatError(f"line {no}: expected key=value, got {tok!r}")
        meta[key] = val
    if len(lines) != 1 + m:
        raise FormatError(f"expected {m} label rows, found {len(lines) - 1}")
    rows = []
    for no, toks in lines[1:]:
        if len(toks) != n:
            raise FormatError(f"line {no}: expected {n} labels, found {len(toks)}")
        rows.append([_int(t, f"line {no}") - 1 for t in toks])
    try:
        return PartitionFile(np.array(rows), k, meta)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_partition(path) -> PartitionFile:
    return parse_partition(Path(path).read_text())


def write_partition(pf: PartitionFile, path):
    Path(path).write_text(format_partition(pf))
