import math

import numpy as np
import pytest

from rglt import Domain, GridSize, boundary_band_count, grid_points, mask, measure_estimate, near_boundary_points
from rglt.domain import BOUNDARY, INSIDE, OUTSIDE, DomainError, grid_coordinates


def test_grid_points():
    assert [p.tolist() for _, p in grid_points(GridSize((3,)))] == [[0.25], [0.5], [0.75]]
    pts = list(grid_points(GridSize((1, 1))))
    assert pts[0][0] == (1, 1) and pts[0][1].tolist() == [0.5, 0.5]
    pts = list(grid_points(GridSize((2, 2))))
    assert len(pts) == 4
    np.testing.assert_allclose(pts[0][1], [1 / 3, 1 / 3])


def test_mask_examples():
    n = GridSize((3, 3))
    full = mask(Domain.hypercube(2), n)
    assert full.count == 9
    m = mask(Domain.disk((0.5, 0.5), 0.3), n)
    assert m.count == 5
    assert m.indices().tolist() == [2, 4, 5, 6, 8]
    assert mask(Domain.disk((0.5, 0.5), 0.5), n).count == 9
    assert measure_estimate(Domain.disk((0.5, 0.5), 0.3), n) == pytest.approx(5 / 9)
    assert measure_estimate(Domain.hypercube(3), GridSize.cube(4, 3)) == 1.0


def test_mask_dimension_mismatch():
    with pytest.raises(DomainError):
        mask(Domain.hypercube(2), GridSize((3,)))


def test_measure_disk_converges():
    est = measure_estimate(Domain.disk((0.5, 0.5), 0.5), GridSize.cube(255, 2))
    assert abs(est - math.pi / 4) <= 0.02


@pytest.mark.parametrize("domain", [
    Domain.disk((0.5, 0.5), 0.35),
    Domain.annulus((0.5, 0.5), 0.1, 0.4),
    Domain.triangle(),
    Domain.l_shape(),
    Domain.hypercube(2, 0.1, 0.8),
    Domain.polygon([(0.1, 0.1), (0.9, 0.2), (0.5, 0.9)]),
    Domain.disk((0.5, 0.5, 0.5), 0.3),
])
def test_signed_distance_sign_matches_membership(domain):
    pts = np.random.default_rng(0).random((4000, domain.d))
    sd = domain.signed_distance(pts)
    cls = domain.classify(pts)
    assert np.array_equal(sd < -1e-12, cls == INSIDE)
    assert np.array_equal(sd > 1e-12, cls == OUTSIDE)


@pytest.mark.parametrize("domain,mu", [
    (Domain.disk((0.5, 0.5), 0.35), math.pi * 0.35**2),
    (Domain.annulus((0.5, 0.5), 0.1, 0.4), math.pi * (0.16 - 0.01)),
    (Domain.triangle(), 0.5),
    (Domain.l_shape(), 0.75),
    (Domain.hypercube(2, 0.1, 0.8), 0.49),
    (Domain.disk((0.5, 0.5, 0.5), 0.3), 4 / 3 * math.pi * 0.027),
])
def test_analytic_measure_and_grid_estimate(domain, mu):
    assert domain.measure == pytest.approx(mu)
    m = 63 if domain.d == 2 else 31
    assert abs(measure_estimate(domain, GridSize.cube(m, domain.d)) - mu) <= 0.03


def test_polygon_edges_are_boundary():
    tri = Domain.triangle()
    assert tri.classify([[0.5, 0.5], [0.5, 0.0], [0.2, 0.2], [0.8, 0.8]]).tolist() == [
        BOUNDARY, BOUNDARY, INSIDE, OUTSIDE]
    L = Domain.l_shape()
    assert L.inside([[0.25, 0.75], [0.75, 0.75], [0.25, 0.25]]).tolist() == [False, True, True]


def test_builtin_validation():
    with pytest.raises(DomainError):
        Domain.disk((0.5, 0.5), 0.6)
    with pytest.raises(DomainError):
        Domain.hypercube(2, 0.5, 0.4)
    with pytest.raises(DomainError):
        Domain.from_config({"kind": "blob"})


def test_band_count_examples():
    disk = Domain.disk((0.5, 0.5), 0.3)
    n = GridSize((3, 3))
    assert boundary_band_count(disk, n, 0.0) == 0
    assert boundary_band_count(disk, n, 1.0) == 9
    assert boundary_band_count(Domain.hypercube(1), GridSize((3,)), 0.1) == 0


def test_band_count_monotone_and_vanishing_density():
    for dom in (Domain.disk((0.5, 0.5), 0.4), Domain.l_shape()):
        n = GridSize.cube(31, 2)
        counts = [boundary_band_count(dom, n, c) for c in (0.0, 0.01, 0.05, 0.2)]
        assert counts == sorted(counts)
        dens = [boundary_band_count(dom, GridSize.cube(m, 2), 2 / (m + 1)) / m**2 for m in (15, 31, 63)]
        assert dens[0] > dens[1] > dens[2]


def test_near_boundary_examples():
    unit = Domain.hypercube(1)
    assert near_boundary_points(unit, GridSize((3,)), 1) == set()
    assert near_boundary_points(unit, GridSize((9,)), 1) == set()
    assert near_boundary_points(unit, GridSize((3,)), 2) == {(1,), (3,)}
    assert near_boundary_points(Domain.hypercube(2), GridSize((5, 5)), 1) == set()


def test_near_boundary_within_distance():
    for dom in (Domain.disk((0.5, 0.5), 0.4), Domain.l_shape(), Domain.annulus((0.5, 0.5), 0.15, 0.45)):
        n = GridSize.cube(31, 2)
        k = 2
        D = near_boundary_points(dom, n, k)
        assert D
        coords = np.array([[c / 32 for c in j] for j in D])
        assert np.all(np.abs(dom.signed_distance(coords)) <= k * n.h.max() + 1e-12)


def test_implicit_domain():
    dom = Domain.implicit("(x1-0.5)^2 + (x2-0.5)^2 < 0.09", 2)
    n = GridSize((3, 3))
    assert mask(dom, n).count == 5
    assert dom.classify([[0.8, 0.5]]).tolist() == [OUTSIDE]    # on the circle: "out"
    with pytest.raises(DomainError):
        boundary_band_count(dom, n, 0.1)
    probe = Domain.implicit("(x1-0.5)^2 + (x2-0.5)^2 < 0.09", 2, distance_probe=True)
    exact = Domain.disk((0.5, 0.5), 0.3)
    m = GridSize.cube(31, 2)
    c = 2 / 32
    approx_count, exact_count = boundary_band_count(probe, m, c), boundary_band_count(exact, m, c)
    assert 0.5 * exact_count <= approx_count <= 1.5 * exact_count
    with_sd = Domain.implicit("(x1-0.5)^2 + (x2-0.5)^2 < 0.09", 2, distance="sqrt((x1-0.5)^2 + (x2-0.5)^2) - 0.3")
    assert boundary_band_count(with_sd, m, c) == exact_count


def test_mapped_domain():
    base = Domain.hypercube(2, 0.0, 0.5)
    dom = Domain.mapped(base, [[1, 0], [0, 2]], [0.25, 0.0])
    assert dom.measure == pytest.approx(0.5)
    assert dom.inside([[0.5, 0.5], [0.1, 0.5], [0.5, 0.99]]).tolist() == [True, False, True]
    # rotation by 90 degrees about the center maps the disk onto itself
    rot = Domain.mapped(Domain.disk((0.5, 0.5), 0.3), [[0, -1], [1, 0]], [1.0, 0.0])
    pts = np.random.default_rng(1).random((500, 2))
    np.testing.assert_allclose(rot.signed_distance(pts), np.linalg.norm(pts - [0.5, 0.5], axis=1) - 0.3,
                               atol=1e-12)


def test_ray_reach_linear_crossing():
    dom = Domain.hypercube(1, 0.0, 0.6)
    r = dom.ray_reach(np.array([[0.5]]), 0, 1, 0.25, 1.0)
    assert r[0] == pytest.approx(0.4, abs=1e-10)
    assert dom.ray_reach(np.array([[0.5]]), 0, -1, 0.25, 1.0)[0] == 1.0


def test_grid_coordinates_exclude_endpoints():
    c = grid_coordinates(GridSize((4, 2)))
    assert c.min() > 0 and c.max() < 1
