import numpy as np
import pytest

from dppproj.errors import DimensionMismatch, DuplicatePoints, IndexOutOfRange, InvalidParameter, InvalidRadius
from dppproj.patterns import PointPattern, pair_count, pair_counts, pair_distances, project, torus_sup_distance


def test_project_examples():
    p = PointPattern([[0.1, 0.2, 0.3]])
    q = project(p, [0, 2])
    assert np.array_equal(q.points, [[0.1, 0.3]])
    assert q.meta["projected_on"] == [0, 2]
    full = project(p, [0, 1, 2])
    assert full == p
    with pytest.raises(IndexOutOfRange):
        project(p, [3])


def test_projection_preserves_count():
    p = PointPattern(np.random.default_rng(0).random((50, 4)))
    assert project(p, [1, 3]).count == 50


def test_torus_distance_examples():
    assert torus_sup_distance([0.3], [0.3]) == 0.0
    assert torus_sup_distance([0.05], [0.95]) == pytest.approx(0.10)
    assert torus_sup_distance([0.0, 0.5], [0.5, 0.5]) == 0.5
    with pytest.raises(DimensionMismatch):
        torus_sup_distance([0.1], [0.1, 0.2])


def test_pair_count_examples():
    assert pair_count(PointPattern([[0.4, 0.4]]), 0.3) == 0
    two = PointPattern([[0.1], [0.3]])
    assert pair_count(two, 0.1) == 0
    assert pair_count(two, 0.25) == 2
    p = PointPattern(np.random.default_rng(1).random((30, 3)))
    assert pair_count(p, 0.5) == 30 * 29
    with pytest.raises(InvalidRadius):
        pair_counts(p, [0.6])


def test_pair_distances_against_brute_force():
    p = PointPattern(np.random.default_rng(2).random((40, 2)))
    brute = sorted(
        torus_sup_distance(p.points[i], p.points[j]) for i in range(40) for j in range(i + 1, 40)
    )
    assert np.allclose(np.sort(pair_distances(p)), brute)


def test_validation():
    with pytest.raises(DuplicatePoints):
        PointPattern([[0.1, 0.2], [0.1, 0.2]])
    with pytest.raises(InvalidParameter):
        PointPattern([[1.2]])
    with pytest.raises(DimensionMismatch):
        PointPattern([0.1, 0.2])
    e = PointPattern.empty(3)
    assert e.count == 0 and e.iota == 3
    p = PointPattern([[0.5]])
    with pytest.raises(ValueError):
        p.points[0, 0] = 0.1


def test_csv_round_trip_is_bit_exact(tmp_path):
    pts = np.random.default_rng(3).random((25, 3))
    p = PointPattern(pts)
    path = tmp_path / "p.csv"
    p.write_csv(path)
    assert path.read_text().splitlines()[0] == "x1,x2,x3"
    q = PointPattern.read_csv(path)
    assert np.array_equal(q.points, pts)
    assert PointPattern.from_csv(PointPattern.empty(2).to_csv()).iota == 2
