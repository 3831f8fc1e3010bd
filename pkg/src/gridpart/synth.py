"""Synthetic instances: smoothed sparse random fields and discretised GEV workloads.

All randomness comes from ``numpy.random.Generator(PCG64(seed))`` so a seed
reproduces the same instance on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .stochastic import WeightDistribution

__all__ = [
    "GevParams",
    "GevRanges",
    "make_rng",
    "smoothing_kernel",
    "smooth",
    "sparse_smoothed_field",
    "gev_pdf",
    "gev_discretized",
    "random_gev_instance",
]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def smoothing_kernel(radius: int = 3) -> np.ndarray:
    """``exp(-distance)`` weights over a ``(2r+1) x (2r+1)`` window."""
    d = np.arange(-radius, radius + 1)
    return np.exp(-np.sqrt(d[:, None] ** 2 + d[None, :] ** 2))


def smooth(field, iters: int, radius: int = 3) -> np.ndarray:
    """Repeated normalised kernel averaging; the window is clipped at the grid edge."""
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    f = np.asarray(field, dtype=np.float64)
    if iters == 0:
        return f.copy()
    return _kernels.smooth_field(np.ascontiguousarray(f), smoothing_kernel(radius), iters)


def sparse_smoothed_field(m: int, n: int, seed: int, bernoulli_p: float = 0.02,
                          iters: int = 40, magnitude: str = "uniform") -> np.ndarray:
    """Sparse random spikes, smoothed ``iters`` times.

    Spike heights are U[0,1] by default; ``magnitude="pareto"`` draws them
    from a Pareto(1.5) law instead, which gives a heavy-tailed workload map.
    """
    if not 0 < bernoulli_p <= 1:
        raise ValueError("bernoulli_p must lie in (0, 1]")
    if m < 1 or n < 1:
        raise ValueError("grid dimensions must be positive")
    rng = make_rng(seed)
    if magnitude == "uniform":
        heights = rng.random((m, n))
    elif magnitude == "pareto":
        heights = rng.pareto(1.5, (m, n)) + 1.0
    else:
        raise ValueError(f"unknown magnitude law {magnitude!r}")
    spikes = rng.random((m, n)) < bernoulli_p
    return smooth(heights * spikes, iters)


@dataclass(frozen=True)
class GevParams:
    mu: float
    sigma: float
    xi: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class GevRanges:
    mu: tuple[float, float] = (50.0, 200.0)
    sigma: tuple[float, float] = (5.0, 50.0)
    xi: tuple[float, float] = (-0.2, 0.4)
    scale: tuple[float, float] = (0.5, 2.0)


def gev_pdf(x, mu: float, sigma: float, xi: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = (x - mu) / sigma
    # log density, so far tails underflow to 0 instead of inf * 0
    if xi == 0.0:
        with np.errstate(over="ignore"):
            logf = -z - np.exp(-z)
        return np.exp(logf) / sigma
    base = 1.0 + xi * z
    out = np.zeros_like(z)
    ok = base > 0
    lb = np.log(base[ok])
    with np.errstate(over="ignore"):
        out[ok] = np.exp(-(1.0 / xi + 1.0) * lb - np.exp(-lb / xi)) / sigma
    return out


def gev_discretized(p: GevParams, support_cap: int = 250) -> WeightDistribution:
    """Distribution on ``{s, 2s, ..., cap*s}`` with masses proportional to the pdf at ``1..cap``."""
    i = np.arange(1, support_cap + 1, dtype=np.float64)
    f = gev_pdf(i, p.mu, p.sigma, p.xi)
    total = f.sum()
    if not (np.isfinite(total) and total > 0):
        raise ValueError(f"GEV{(p.mu, p.sigma, p.xi)} puts no mass on 1..{support_cap}")
    keep = f > 0
    return WeightDistribution(i[keep] * p.scale, f[keep] / total)


def random_gev_instance(m: int, n: int, seed: int, support_cap: int = 250,
                        ranges: GevRanges = GevRanges(), scale_field=None) -> list[WeightDistribution]:
    """Independent random GEV parameters per cell, row-major.

    With ``scale_field`` given (an ``m x n`` nonnegative workload map) the
    per-cell scale is proportional to it instead of random, normalised to
    mean 1 and floored at 1e-3 so that every cell keeps positive support.
    """
    rng = make_rng(seed)
    size = m * n
    mu = rng.uniform(*ranges.mu, size)
    sigma = rng.uniform(*ranges.sigma, size)
    xi = rng.uniform(*ranges.xi, size)
    scale = rng.uniform(*ranges.scale, size)
    if scale_field is not None:
        w = np.asarray(scale_field, dtype=np.float64).reshape(-1)
        if w.size != size or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("scale_field must be a nonnegative m x n map with positive total")
        scale = np.maximum(w / w.mean(), 1e-3)
    return [gev_discretized(GevParams(mu[v], sigma[v], xi[v], scale[v]), support_cap)
            for v in range(size)]
