import itertools
import math

import numpy as np
import pytest

from gridpart import _kernels
from gridpart.dp import BalanceMode, Infeasible, dynamic_partition, solve_window
from gridpart.grid import GridGraph, Partition, snake_ordering
from gridpart.stochastic import (
    PART_CAP,
    StochasticInfeasible,
    StochasticResult,
    WeightDistribution,
    _tables,
    beta_transform,
    expected_max_estimate,
    normalized_max_part_weight,
    poisson_truncated,
    split_at,
    stochastic_partition,
    transformed_weights,
    variance_bound_check,
)


def direct_beta(values, probs, k):
    return math.log(sum(p * k ** x for x, p in zip(values, probs))) / math.log(k)


def test_distribution_basics():
    d = WeightDistribution([3, 1, 3], [0.25, 0.5, 0.25])
    assert d.values.tolist() == [1, 3] and d.probs.tolist() == [0.5, 0.5]
    assert d.mean() == 2 and d.variance() == 1 and d.max() == 3
    assert WeightDistribution(d.values, d.probs) == d
    with pytest.raises(ValueError):
        WeightDistribution([1, 2], [0.5, 0.6])
    with pytest.raises(ValueError):
        WeightDistribution([-1], [1.0])
    with pytest.raises(ValueError):
        WeightDistribution([1, 2], [1.0, 0.0])
    with pytest.raises(ValueError):
        WeightDistribution([], [])


def test_rebuild_is_exact():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        p = rng.random(6)
        p /= p.sum()
        d = WeightDistribution(rng.integers(0, 4, 6) * 0.3, p)
        assert WeightDistribution(d.values, d.probs) == d


def test_beta_point_mass_exact():
    for c in np.linspace(0, 1, 101):
        for k in (2, 3, 10, 75):
            assert beta_transform(WeightDistribution.point(c), k) == c


def test_beta_bernoulli_closed_form():
    for p in np.linspace(0.01, 0.99, 50):
        for k in (2, 5, 20, 100):
            d = WeightDistribution([0.0, 1.0], [1 - p, p])
            closed = math.log(1 - p + p * k) / math.log(k)
            assert abs(beta_transform(d, k) - closed) <= 1e-12
            assert abs(beta_transform(d, k) - direct_beta([0, 1], [1 - p, p], k)) <= 1e-12


def test_beta_uniform_three_points():
    d = WeightDistribution([0, 0.5, 1], [1 / 3, 1 / 3, 1 / 3])
    assert beta_transform(d, 4) == pytest.approx(math.log(7 / 3, 4), abs=1e-12)
    assert beta_transform(d, 4) == pytest.approx(0.6112, abs=1e-4)


def test_beta_between_mean_and_max():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        n = int(rng.integers(1, 8))
        p = rng.random(n) + 1e-3
        d = WeightDistribution(rng.random(n), p / p.sum())
        b = beta_transform(d, int(rng.integers(2, 200)))
        assert d.mean() <= b <= d.max()
    with pytest.raises(ValueError):
        beta_transform(WeightDistribution.point(2.0), 3)
    with pytest.raises(ValueError):
        beta_transform(WeightDistribution.point(0.5), 1)


def test_split_examples():
    d = WeightDistribution([1, 3], [0.5, 0.5])
    s = split_at(d, 0)
    assert s.exceptional_mean == 1.5 and s.threshold == 1
    assert s.normal == WeightDistribution([0, 1], [0.5, 0.5])
    small = split_at(d, 2)
    assert small.exceptional_mean == 0 and small.normal == d
    big = WeightDistribution([5, 9], [0.5, 0.5])
    all_big = split_at(big, 1)
    assert all_big.exceptional_mean == big.mean()
    assert all_big.normal == WeightDistribution.point(0.0)


def gev_like(rng, n_cells, atoms=30, top=400):
    out = []
    for _ in range(n_cells):
        vals = rng.choice(np.arange(1, top + 1), atoms, replace=False).astype(float)
        p = rng.random(atoms) + 0.01
        out.append(WeightDistribution(vals, p / p.sum()))
    return out


def test_transformed_weights_match_per_vertex_beta():
    rng = np.random.default_rng(2)
    dists = gev_like(rng, 12)
    for i in (3, 6, 8, 10):
        w, exc = transformed_weights(dists, 7, i)
        theta = 2.0 ** i
        ref = [beta_transform(split_at(d, i).normal.scaled(1 / theta), 7) for d in dists]
        assert np.allclose(w, ref, rtol=1e-12, atol=1e-14)
        assert exc == pytest.approx(sum(split_at(d, i).exceptional_mean for d in dists) / theta, rel=1e-12)


def test_trivial_feasible_instance():
    g = GridGraph("square", 2, 2)
    dists = [WeightDistribution.point(0.0)] * 3 + [WeightDistribution.point(1.0)]
    res = stochastic_partition(g, dists, snake_ordering(g, 1), 2)
    assert isinstance(res, StochasticResult)
    assert res.i_star == 0 and res.exceptional_sum == 0
    parts = np.bincount(res.partition.labels, weights=res.weights, minlength=2)
    assert np.all(parts <= PART_CAP)


def test_contract_on_random_instances():
    rng = np.random.default_rng(3)
    for trial in range(4):
        g = GridGraph("hex", 8, 8)
        dists = gev_like(rng, 64)
        order = snake_ordering(g, 3)
        k = 6
        res = stochastic_partition(g, dists, order, k)
        assert res, res.describe() if not res else ""
        assert res.exceptional_sum <= 1.0
        parts = np.bincount(res.partition.labels, weights=res.weights, minlength=k)
        assert np.all(parts <= PART_CAP + 1e-9)
        # minimality: every smaller exponent fails one of the two conditions
        for i in range(0, res.i_star):
            w, exc = transformed_weights(dists, k, i)
            if exc <= 1.0 and w.sum() <= PART_CAP * k:
                assert isinstance(solve_window(g, order, k, w, -math.inf, PART_CAP, PART_CAP * 1e-12), Infeasible)


def test_balance_window_option():
    rng = np.random.default_rng(4)
    g = GridGraph("square", 8, 8)
    dists = gev_like(rng, 64)
    res = stochastic_partition(g, dists, snake_ordering(g, 2), 4, balance_eps=0.2)
    assert res
    parts = np.bincount(res.partition.labels, weights=res.weights, minlength=4)
    avg = res.weights.sum() / 4
    assert np.all(np.abs(parts - avg) <= 0.2 * avg + 1e-9)
    assert np.all(parts <= PART_CAP + 1e-9)


def test_infeasible_when_range_too_small():
    rng = np.random.default_rng(5)
    g = GridGraph("square", 4, 4)
    dists = gev_like(rng, 16)
    res = stochastic_partition(g, dists, snake_ordering(g, 2), 2, i_range=(0, 1))
    assert isinstance(res, StochasticInfeasible) and not res
    assert "i=0" in res.describe() and "i=1" in res.describe()
    with pytest.raises(ValueError):
        stochastic_partition(g, dists, snake_ordering(g, 2), 2, i_range=(3, 2))


def test_variance_bound_deterministic():
    g = GridGraph("square", 2, 2)
    dists = [WeightDistribution.point(2.0)] * 4
    p = Partition(g, np.array([0, 0, 1, 1]), 2)
    chk = variance_bound_check(g, dists, p, 0.0, 0.0, samples=100)
    assert chk.lhs_estimate == 0 and chk.lhs_exact == 0 and chk.bound == 0 and chk.holds


def test_variance_bound_poisson_and_exact_agreement():
    rng = np.random.default_rng(6)
    g = GridGraph("hex", 10, 10)
    dists = [poisson_truncated(float(lam), 60) for lam in rng.uniform(1, 8, 100)]
    means = np.array([d.mean() for d in dists])
    res = dynamic_partition(g.with_weights(means), snake_ordering(g, 3), 5, BalanceMode(0.1))
    chk = variance_bound_check(g, dists, res.partition, 0.1, 1 + 1e-3, samples=20000, seed=1)
    assert chk.holds
    assert abs(chk.lhs_estimate - chk.lhs_exact) <= 3 * chk.stderr
    with pytest.raises(ValueError, match="variance"):
        variance_bound_check(g, dists, res.partition, 0.1, 0.5, samples=10)
    with pytest.raises(ValueError, match="part"):
        variance_bound_check(g, dists, res.partition, 0.0, 1 + 1e-3, samples=10)


def test_expected_max_exact_for_point_masses():
    g = GridGraph("square", 1, 3)
    dists = [WeightDistribution.point(x) for x in (1.0, 2.0, 4.0)]
    p = Partition(g, np.array([0, 0, 1]), 2)
    assert expected_max_estimate(g, dists, p, 7) == 4.0
    assert normalized_max_part_weight(g, dists, p, 7) == pytest.approx(2 * 4 / 7)


def test_expected_max_matches_joint_enumeration():
    g = GridGraph("square", 1, 3)
    dists = [WeightDistribution([0, 1, 5], [0.2, 0.5, 0.3]),
             WeightDistribution([1, 2], [0.6, 0.4]),
             WeightDistribution([0, 3, 4], [0.1, 0.1, 0.8])]
    labels = np.array([0, 0, 1])
    exact = 0.0
    for combo in itertools.product(*[list(zip(d.values, d.probs)) for d in dists]):
        prob = math.prod(p for _, p in combo)
        a = combo[0][0] + combo[1][0]
        exact += prob * max(a, combo[2][0])
    p = Partition(g, labels, 2)
    est = expected_max_estimate(g, dists, p, 200000, seed=2)
    assert est == pytest.approx(exact, abs=0.02)
    total = sum(d.mean() for d in dists)
    one = Partition(g, np.zeros(3, np.int64), 1)
    assert expected_max_estimate(g, dists, one, 200000, seed=3) == pytest.approx(total, abs=0.02)


def test_poisson_truncated():
    d = poisson_truncated(1.0, 50)
    assert d.mean() == pytest.approx(1.0, abs=1e-12)
    assert d.variance() == pytest.approx(1.0, abs=1e-12)
    tiny = poisson_truncated(1e-300, 5)
    assert tiny.mean() == pytest.approx(0.0, abs=1e-250)
    for lam in (0.5, 2.0, 9.0, 30.0):
        d = poisson_truncated(lam, int(lam + 10 * math.sqrt(lam)) + 1)
        assert d.variance() <= (1 + 1e-3) * d.mean()
    with pytest.raises(ValueError):
        poisson_truncated(0.0, 5)


def test_inverse_cdf_sampling_matches_probs():
    d = WeightDistribution([0, 1, 2, 7], [0.1, 0.2, 0.3, 0.4])
    cdf, vals, natoms = _tables([d])
    u = np.random.default_rng(7).random((200000, 1))
    labels = np.zeros(1, np.int64)
    for fn in (_kernels.mc_part_sums_jit, _kernels.mc_part_sums_numpy):
        draws = fn(u, cdf, vals, natoms, labels, 1)[:, 0]
        freq = np.array([(draws == x).mean() for x in d.values])
        assert np.allclose(freq, d.probs, atol=0.005)


def test_sampling_twins_agree():
    rng = np.random.default_rng(8)
    dists = gev_like(rng, 30, atoms=12, top=50)
    cdf, vals, natoms = _tables(dists)
    labels = rng.integers(0, 4, 30)
    u = rng.random((500, 30))
    a = _kernels.mc_part_sums_jit(u, cdf, vals, natoms, labels, 4)
    b = _kernels.mc_part_sums_numpy(u, cdf, vals, natoms, labels, 4)
    assert np.allclose(a, b, rtol=1e-13)
