import math

import numpy as np
import pytest

from crnetsim.geometry import BoxRegion, SpatialIndex, distance


def test_distance_basic():
    assert distance((0, 0), (3, 4)) == 5.0
    assert distance((1.5, -2.0), (1.5, -2.0)) == 0.0


def test_box_requires_positive_extent():
    with pytest.raises(ValueError):
        BoxRegion(0, 0, 0, 1)
    with pytest.raises(ValueError):
        BoxRegion(0, 1, 2, 1)
    with pytest.raises(ValueError):
        BoxRegion(0, math.inf, 0, 1)


def test_box_square_properties():
    box = BoxRegion.square(2.5, center=(1.0, -1.0))
    assert box.center == (1.0, -1.0)
    assert box.width == box.height == 5.0
    assert box.area == 25.0


def test_padded_shrunk_scaled():
    box = BoxRegion.square(1.0)
    assert box.padded(0.5) == BoxRegion.square(1.5)
    assert box.shrunk(0.25) == BoxRegion.square(0.75)
    assert box.scaled(2.0) == BoxRegion.square(2.0)
    with pytest.raises(ValueError):
        box.scaled(0.0)


def test_contains_is_boundary_inclusive():
    box = BoxRegion(0, 1, 0, 1)
    pts = np.array([[0.0, 0.5], [1.0, 1.0], [0.5, 0.5], [1.0000001, 0.5]])
    assert box.contains(pts).tolist() == [True, True, True, False]


def _linear_scan(points, center, r):
    d = np.hypot(points[:, 0] - center[0], points[:, 1] - center[1])
    return np.nonzero(d <= r)[0]


def test_radius_query_matches_linear_scan():
    gen = np.random.default_rng(7)
    points = gen.uniform(-3, 3, size=(400, 2))
    for cell in (0.05, 0.3, 1.7):
        index = SpatialIndex(points, cell)
        for _ in range(25):
            center = gen.uniform(-3.5, 3.5, size=2)
            r = gen.uniform(0, 2.0)
            got = index.radius_query(center, r)
            want = _linear_scan(points, center, r)
            assert np.array_equal(got, want)


def test_radius_query_includes_exact_distance():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    index = SpatialIndex(points, 0.4)
    assert index.radius_query((0.0, 0.0), 1.0).tolist() == [0, 1, 2]


def test_radius_query_zero_radius():
    points = np.array([[1.0, 1.0], [2.0, 2.0]])
    index = SpatialIndex(points, 0.5)
    assert index.radius_query((1.0, 1.0), 0.0).tolist() == [0]
    assert index.radius_query((1.5, 1.5), 0.0).tolist() == []


def test_radius_query_rejects_negative_radius():
    index = SpatialIndex(np.zeros((1, 2)), 1.0)
    with pytest.raises(ValueError):
        index.radius_query((0, 0), -0.1)


def test_empty_index():
    index = SpatialIndex(np.empty((0, 2)), 1.0)
    assert len(index) == 0
    assert index.radius_query((0, 0), 10.0).size == 0
    assert not index.query_any((0, 0), 10.0)


def test_index_rejects_bad_cell_size():
    with pytest.raises(ValueError):
        SpatialIndex(np.zeros((1, 2)), 0.0)
    with pytest.raises(ValueError):
        SpatialIndex(np.zeros((1, 2)), math.nan)


def test_query_any():
    points = np.array([[0.0, 0.0]])
    index = SpatialIndex(points, 1.0)
    assert index.query_any((0.5, 0.0), 0.5)
    assert not index.query_any((0.5, 0.0), 0.49)
