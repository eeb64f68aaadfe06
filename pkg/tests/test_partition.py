import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llframe import DomainError, Partition, ReferenceNodes, locate, physical_nodes, total_nodes, uniform_partition
from llframe.exceptions import ConfigError
from llframe.partition import global_nodes


def test_identity_partition():
    p = uniform_partition(-1, 1, 1)
    np.testing.assert_array_equal(p.breakpoints, [-1, 1])
    assert p.centers[0] == 0 and p.half_widths[0] == 1


def test_four_pieces():
    p = uniform_partition(-1, 1, 4)
    np.testing.assert_array_equal(p.breakpoints, [-1, -0.5, 0, 0.5, 1])
    assert p.h_max == 0.5


def test_f1_domain():
    p = uniform_partition(1, 15, 7)
    np.testing.assert_array_equal(p.breakpoints, np.arange(1, 16, 2))
    np.testing.assert_array_equal(p.half_widths, np.ones(7))


@pytest.mark.parametrize("a,b,K", [(1, 1, 2), (2, 1, 2), (0, 1, 0), (0, 1, 1.5)])
def test_bad_partition(a, b, K):
    with pytest.raises(ConfigError):
        uniform_partition(a, b, K)


def test_non_increasing_breakpoints():
    with pytest.raises(ConfigError):
        Partition([0.0, 0.5, 0.5, 1.0])


def test_reference_nodes():
    t = ReferenceNodes(7).nodes
    assert t[0] == -1.0 and t[-1] == 1.0
    np.testing.assert_allclose(np.diff(t), 2 / 6, rtol=1e-14)
    with pytest.raises(ConfigError):
        ReferenceNodes(1)


def test_physical_nodes():
    np.testing.assert_array_equal(physical_nodes(uniform_partition(-1, 1, 1), 0, ReferenceNodes(3)), [-1, 0, 1])
    np.testing.assert_array_equal(physical_nodes(uniform_partition(0, 4, 4), 2, ReferenceNodes(2)), [2, 3])
    with pytest.raises(IndexError):
        physical_nodes(uniform_partition(0, 4, 4), 4, ReferenceNodes(2))


def test_shared_breakpoint_node():
    p = Partition([0.0, 0.3, 1.1, 2.0])
    ref = ReferenceNodes(9)
    for k in range(p.K - 1):
        assert physical_nodes(p, k, ref)[-1] == physical_nodes(p, k + 1, ref)[0] == p.breakpoints[k + 1]


def test_locate_examples():
    p4 = uniform_partition(-1, 1, 4)
    assert locate(p4, -0.5) == (1, -1.0)
    assert locate(p4, 1.0) == (3, 1.0)
    assert locate(uniform_partition(-1, 1, 2), 0.25) == (1, -0.5)


def test_locate_domain():
    p = uniform_partition(0, 1, 3)
    with pytest.raises(DomainError):
        locate(p, 1.1)
    assert locate(p, -1e-13)[0] == 0


def test_total_nodes():
    assert total_nodes(4, 15) == 57
    assert total_nodes(14, 21) == 281
    assert total_nodes(20, 15) == 281
    assert total_nodes(uniform_partition(0, 1, 20), 15) == 281


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.integers(1, 50))
def test_locate_round_trip(u, K):
    p = uniform_partition(-3.0, 2.0, K)
    x = -3.0 + 5.0 * u
    k, t = locate(p, x)
    assert 0 <= k < K
    assert abs(p.to_physical(k, t) - x) <= 1e-13


def test_locate_vectorized_matches_scalar():
    p = Partition([0.0, 0.1, 0.5, 0.55, 1.0])
    xs = np.linspace(0, 1, 101)
    ks, ts = locate(p, xs)
    for x, k, t in zip(xs, ks, ts):
        assert (k, t) == locate(p, x)


def test_global_grid_is_equispaced():
    p = uniform_partition(-1, 1, 6)
    x = global_nodes(p, 11)
    assert x.size == total_nodes(p, 11)
    np.testing.assert_allclose(x, np.linspace(-1, 1, x.size), atol=1e-15)
    # concatenation of per-subinterval nodes with shared points deduplicated
    ref = ReferenceNodes(11)
    cat = np.unique(np.concatenate([physical_nodes(p, k, ref) for k in range(p.K)]))
    np.testing.assert_array_equal(cat, x)
