import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridpart.io import (
    FormatError,
    Instance,
    PartitionFile,
    format_instance,
    format_partition,
    parse_instance,
    parse_partition,
    read_instance,
    write_instance,
)
from gridpart.stochastic import WeightDistribution

finite = st.floats(min_value=0, max_value=1e300, allow_nan=False, allow_infinity=False)


@st.composite
def instances(draw):
    m, n = draw(st.integers(1, 5)), draw(st.integers(1, 5))
    w = np.array(draw(st.lists(finite, min_size=m * n, max_size=m * n))).reshape(m, n)
    k = draw(st.none() | st.integers(1, 50))
    eps = draw(st.none() | st.floats(0, 2, allow_nan=False))
    dists = None
    if draw(st.booleans()):
        dists = []
        for _ in range(m * n):
            vals = draw(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=4))
            p = np.array(draw(st.lists(st.floats(0.01, 1), min_size=len(vals), max_size=len(vals))))
            dists.append(WeightDistribution(vals, p / p.sum()))
    return Instance(draw(st.sampled_from(["square", "hex"])), w, k, eps, dists)


@settings(max_examples=150, deadline=None)
@given(instances())
def test_instance_round_trip(inst):
    text = format_instance(inst)
    back = parse_instance(text)
    assert back == inst
    assert format_instance(back) == text


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 9), st.integers(0, 2**31 - 1),
       st.dictionaries(st.sampled_from(["algorithm", "eps", "seed", "x"]),
                       st.text("abc019.-", min_size=0, max_size=5), max_size=3))
def test_partition_round_trip(m, n, k, seed, meta):
    labels = np.random.default_rng(seed).integers(0, k, (m, n))
    pf = PartitionFile(labels, k, meta)
    text = format_partition(pf)
    assert parse_partition(text) == pf
    assert text.splitlines()[1].split()[0] == str(labels[0, 0] + 1)


def test_uniform_file_literal(tmp_path):
    inst = Instance("hex", np.ones((2, 3)), k=2, eps=0.1)
    path = tmp_path / "u.grid"
    write_instance(inst, path)
    assert path.read_text() == "GRID hex 2 3 k=2 eps=0.1\n1.0 1.0 1.0\n1.0 1.0 1.0\n"
    assert read_instance(path) == inst


def test_comments_and_blank_lines():
    text = "# made by hand\nGRID square 1 2\n\n0.5 2\n"
    inst = parse_instance(text)
    assert inst.weights.tolist() == [[0.5, 2.0]] and inst.k is None


@pytest.mark.parametrize("text", [
    "",
    "GRID cube 1 1\n1\n",
    "GRID square 2 2\n1 1\n",
    "GRID square 1 2\n1 x\n",
    "GRID square 1 2\n1 -1\n",
    "GRID square 1 1\ninf\n",
    "GRID square 1 1 k=two\n1\n",
    "GRID square 1 1\n1\nDISTS\natom 1 1\n",
    "GRID square 1 1\n1\nDISTS\nv 0 0\natom 1 0.5\n",
])
def test_bad_instances(text):
    with pytest.raises(FormatError):
        parse_instance(text)


@pytest.mark.parametrize("text", [
    "PARTITION 1 2\n1 1\n",
    "PARTITION 1 2 2\n1 3\n",
    "PARTITION 1 2 2\n0 1\n",
    "PARTITION 1 2 2 oops\n1 2\n",
    "PARTITION 2 2 2\n1 2\n",
])
def test_bad_partitions(text):
    with pytest.raises(FormatError):
        parse_partition(text)
