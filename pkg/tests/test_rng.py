import numpy as np
import pytest

from aibo.rng import Stream, normal_bank


def test_same_seed_and_label_reproduce():
    a = Stream(5).split("x").uniform(100)
    b = Stream(5).split("x").uniform(100)
    assert np.array_equal(a, b)


def test_different_labels_differ():
    root = Stream(5)
    assert not np.array_equal(root.split("a").uniform(10), root.split("b").uniform(10))


def test_duplicate_label_rejected():
    root = Stream(1)
    root.split("a")
    with pytest.raises(ValueError, match="duplicate"):
        root.split("a")


def test_advancing_one_child_leaves_sibling_alone():
    r1, r2 = Stream(9), Stream(9)
    a1, b1 = r1.split("a"), r1.split("b")
    a1.uniform(1000)
    _, b2 = r2.split("a"), r2.split("b")
    assert np.array_equal(b1.uniform(50), b2.uniform(50))


def test_sibling_streams_uncorrelated():
    root = Stream(2024)
    a = root.split("left").uniform(10_000)
    b = root.split("right").uniform(10_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_normal_stream_moments():
    z = Stream(3).split("n").normal(100_000)
    assert abs(z.mean()) < 0.02
    assert abs(z.std() - 1.0) < 0.02


def test_seed_range_checked():
    with pytest.raises(ValueError):
        Stream(-1)


@pytest.mark.parametrize("quasi", [True, False])
def test_bank_regenerates_identically(quasi):
    a = normal_bank(Stream(4), 256, 3, quasi=quasi)
    b = normal_bank(Stream(4), 256, 3, quasi=quasi)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("quasi", [True, False])
def test_bank_prefix_property(quasi):
    full = normal_bank(Stream(11), 128, 5, quasi=quasi)
    short = normal_bank(Stream(11), 128, 4, quasi=quasi)
    assert np.array_equal(full[:, :4], short)


def test_bank_covariance_near_identity():
    b = normal_bank(Stream(8), 100_000, 4)
    cov = np.cov(b, rowvar=False)
    assert np.linalg.norm(cov - np.eye(4)) / np.linalg.norm(np.eye(4)) < 0.03
    assert np.all(np.isfinite(b))
