"""Random vertex weights: finite distributions, the effective-size transform,
load balancing by truncation at powers of two, and Monte-Carlo estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .dp import Infeasible, solve_window
from .grid import GridGraph, Partition, VertexOrdering

__all__ = [
    "PART_CAP",
    "LOWER_THRESHOLD",
    "WeightDistribution",
    "SplitDistribution",
    "beta_transform",
    "split_at",
    "StochasticResult",
    "StochasticInfeasible",
    "stochastic_partition",
    "VarianceCheck",
    "variance_bound_check",
    "expected_max_estimate",
    "normalized_max_part_weight",
    "poisson_truncated",
    "sample_part_sums",
]

# every part's transformed weight must stay at or below this cap
PART_CAP = 18.0
# total transformed weight that certifies a lower bound when the cap cannot be met
LOWER_THRESHOLD = 17.0


class WeightDistribution:
    """Finite discrete distribution on nonnegative values.

    Equal values are merged and atoms are kept sorted.  Probabilities must
    sum to one within 1e-9; they are renormalised only when off by more than
    1e-12, so rebuilding from stored atoms reproduces them exactly.
    """

    __slots__ = ("values", "probs")

    def __init__(self, values, probs):
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        p = np.asarray(probs, dtype=np.float64).reshape(-1)
        if v.size == 0 or v.size != p.size:
            raise ValueError("support must be nonempty with one probability per value")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and nonnegative")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("probabilities must be positive")
        total = p.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        uniq, inv = np.unique(v, return_inverse=True)
        merged = np.bincount(inv, weights=p)
        self.values = uniq
        self.probs = merged / merged.sum() if abs(total - 1.0) > 1e-12 else merged
        self.values.flags.writeable = False
        self.probs.flags.writeable = False

    @classmethod
    def point(cls, value: float) -> "WeightDistribution":
        return cls([value], [1.0])

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, WeightDistribution)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.probs, other.probs))

    def __repr__(self) -> str:
        return f"WeightDistribution({len(self)} atoms, mean={self.mean():.6g})"

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.values - mu) ** 2, self.probs))

    def max(self) -> float:
        return float(self.values[-1])

    def scaled(self, factor: float) -> "WeightDistribution":
        return WeightDistribution(self.values * factor, self.probs)


@dataclass(frozen=True)
class SplitDistribution:
    normal: WeightDistribution
    exceptional_mean: float
    threshold: float


def beta_transform(d: WeightDistribution, k: int) -> float:
    """Effective size ``log_k E[k^X]`` of a distribution supported in [0, 1]."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if d.max() > 1.0:
        raise ValueError(f"support exceeds 1 (max {d.max()}); normalise first")
    top = d.max()
    lk = math.log(k)
    # factor out k^max so a point mass comes back exactly
    value = top + math.log(float(np.dot(d.probs, np.exp((d.values - top) * lk)))) / lk
    # the exact value lies in [mean, max]; clamp away rounding noise
    return float(min(max(value, d.mean()), top))


def split_at(d: WeightDistribution, i: int) -> SplitDistribution:
    """Truncate at ``2**i``: mass above the threshold moves to an atom at zero."""
    theta = math.ldexp(1.0, i)
    big = d.values > theta
    normal = WeightDistribution(np.where(big, 0.0, d.values), d.probs)
    exceptional = float(np.dot(d.values[big], d.probs[big]))
    return SplitDistribution(normal, exceptional, theta)


@dataclass
class StochasticResult:
    partition: Partition
    i_star: int
    eps_used: float
    weights: np.ndarray
    exceptional_sum: float
    log: list[tuple[int, str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return True


@dataclass
class StochasticInfeasible:
    k: int
    log: list[tuple[int, str]]

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        lines = [f"infeasible for every threshold exponent tried (k={self.k}):"]
        lines += [f"  i={i}: {why}" for i, why in self.log]
        return "\n".join(lines)


def transformed_weights(dists, k: int, i: int, tables=None) -> tuple[np.ndarray, float]:
    """Per-vertex ``beta`` weight of the truncated, rescaled distribution, and the
    total exceptional mean divided by ``2**i``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    vals, probs = _padded(dists) if tables is None else tables
    theta = math.ldexp(1.0, i)
    big = vals > theta
    exc = float(np.sum(probs * vals * big)) / theta
    x = np.where(big, 0.0, vals) / theta
    top = np.max(np.where(probs > 0, x, 0.0), axis=1)
    lk = math.log(k)
    s = np.sum(probs * np.exp((x - top[:, None]) * lk), axis=1)
    w = top + np.log(s) / lk
    mean = np.sum(probs * x, axis=1)
    return np.clip(w, mean, top), exc


def _padded(dists):
    width = max(len(d) for d in dists)
    vals = np.zeros((len(dists), width))
    probs = np.zeros((len(dists), width))
    for v, d in enumerate(dists):
        vals[v, : len(d)] = d.values
        probs[v, : len(d)] = d.probs
    return vals, probs


def stochastic_partition(graph: GridGraph, dists, ordering: VertexOrdering, k: int,
                         i_range: tuple[int, int] = (0, 13), balance_eps: float | None = None):
    """Smallest threshold exponent ``i`` in ``i_range`` (inclusive) whose
    truncated instance has exceptional mass at most one and admits an
    ordering-consistent partition with every part's transformed weight at
    most ``PART_CAP``.

    The cap equals ``(1 + eps_i) * A_w`` with ``A_w`` the mean transformed part
    weight; ``eps_i`` is reported.  Exponents that fail are listed with the
    reason in ``log``.

    ``balance_eps`` additionally asks every part's transformed weight to lie
    within ``(1 +- balance_eps) A_w`` (the cap still applies).  The
    experiments use it to compare against partitions balanced on the means
    at the same tolerance.
    """
    lo_i, hi_i = i_range
    if lo_i > hi_i:
        raise ValueError("i_range is empty")
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(dists) != graph.n_vertices:
        raise ValueError("need one distribution per vertex")
    if balance_eps is not None and balance_eps < 0:
        raise ValueError("balance_eps must be nonnegative")
    log = []
    tables = _padded(dists)
    for i in range(lo_i, hi_i + 1):
        w, exc = transformed_weights(dists, k, i, tables)
        if exc > 1.0:
            log.append((i, f"exceptional mass {exc:.6g} > 1"))
            continue
        total = float(w.sum())
        if total <= 0:
            log.append((i, "total transformed weight is zero"))
            continue
        eps = (PART_CAP * k - total) / total
        if eps < 0:
            log.append((i, f"total transformed weight {total:.6g} exceeds {PART_CAP:g}k"))
            continue
        lo, hi = -math.inf, PART_CAP
        if balance_eps is not None:
            a_w = total / k
            lo, hi = (1 - balance_eps) * a_w, min(PART_CAP, (1 + balance_eps) * a_w)
        res = solve_window(graph, ordering, k, w, lo, hi, PART_CAP * 1e-12)
        if isinstance(res, Infeasible):
            log.append((i, f"no consistent partition under the cap ({res.describe()})"))
            continue
        log.append((i, "accepted"))
        return StochasticResult(res.partition, i, eps, w, exc, log)
    return StochasticInfeasible(k, log)


def _tables(dists):
    width = max(len(d) for d in dists)
    n = len(dists)
    vals = np.zeros((n, width))
    cdf = np.ones((n, width))
    natoms = np.empty(n, np.int64)
    for v, d in enumerate(dists):
        a = len(d)
        vals[v, :a] = d.values
        cdf[v, :a] = np.cumsum(d.probs)
        natoms[v] = a
    return cdf, vals, natoms


def sample_part_sums(dists, labels, k: int, samples: int, seed: int, chunk: int = 4096):
    """Yield arrays of joint-sample part sums, ``chunk`` samples at a time."""
    if samples < 1:
        raise ValueError("samples must be positive")
    labels = np.asarray(labels, dtype=np.int64)
    cdf, vals, natoms = _tables(dists)
    rng = np.random.Generator(np.random.PCG64(seed))
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        u = rng.random((size, len(dists)))
        yield _kernels.mc_part_sums(u, cdf, vals, natoms, labels, k)
        done += size


@dataclass(frozen=True)
class VarianceCheck:
    lhs_estimate: float
    stderr: float
    lhs_exact: float
    bound: float
    samples: int

    @property
    def holds(self) -> bool:
        return self.lhs_estimate <= self.bound + 3.0 * self.stderr


def variance_bound_check(graph: GridGraph, dists, partition: Partition, eps: float, c: float,
                         samples: int = 100_000, seed: int = 0) -> VarianceCheck:
    """Monte-Carlo and exact values of ``(1/k) E[sum_i (X(V_i) - A)^2]`` next to
    the bound ``(4 eps + eps^2) A^2 + c A``."""
    k = partition.k
    mu = np.array([d.mean() for d in dists])
    var = np.array([d.variance() for d in dists])
    bad = np.flatnonzero(var > c * mu + 1e-9)
    if bad.size:
        v = int(bad[0])
        raise ValueError(f"vertex {graph.coords(v)} has variance {var[v]:.6g} > c*mean = {c * mu[v]:.6g}")
    A = mu.sum() / k
    part_mu = np.bincount(partition.labels, weights=mu, minlength=k)
    part_var = np.bincount(partition.labels, weights=var, minlength=k)
    off = np.flatnonzero(np.abs(part_mu - A) > eps * A + 1e-9 * max(A, 1.0))
    if off.size:
        i = int(off[0])
        raise ValueError(f"part {i} has expected weight {part_mu[i]:.6g}, outside {A:.6g} +- {eps:g}A")
    exact = float(np.sum(part_var + (part_mu - A) ** 2) / k)
    total = 0.0
    total_sq = 0.0
    for sums in sample_part_sums(dists, partition.labels, k, samples, seed):
        q = np.sum((sums - A) ** 2, axis=1) / k
        total += q.sum()
        total_sq += np.dot(q, q)
    mean = total / samples
    spread = max(total_sq / samples - mean * mean, 0.0)
    stderr = math.sqrt(spread / max(samples - 1, 1))
    bound = (4 * eps + eps * eps) * A * A + c * A
    return VarianceCheck(mean, stderr, exact, bound, samples)


def expected_max_estimate(graph: GridGraph, dists, partition: Partition, samples: int,
                          seed: int = 0) -> float:
    """Monte-Carlo estimate of ``E[max_i X(V_i)]``."""
    total = 0.0
    for sums in sample_part_sums(dists, partition.labels, partition.k, samples, seed):
        total += sums.max(axis=1).sum()
    return total / samples


def normalized_max_part_weight(graph: GridGraph, dists, partition: Partition, samples: int,
                               seed: int = 0) -> float:
    """Mean over samples of ``k * max part weight / total expected weight``."""
    expected = sum(d.mean() for d in dists)
    if expected <= 0:
        raise ValueError("total expected weight is zero")
    return partition.k * expected_max_estimate(graph, dists, partition, samples, seed) / expected


def poisson_truncated(lam: float, cap: int) -> WeightDistribution:
    """Poisson(lam) restricted to ``0..cap`` and renormalised."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    x = np.arange(cap + 1)
    p = stats.poisson.pmf(x, lam)
    keep = p > 0
    p = p[keep]
    return WeightDistribution(x[keep].astype(float), p / p.sum())
