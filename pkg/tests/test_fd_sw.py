import numpy as np
import pytest

from rglt import CoefficientFn, Domain, GridSize, SWProblem, assemble_sw, neighbor_fraction, sw_skew_norm_report, sw_symbol
from rglt.domain import grid_coordinates, near_boundary_flags
from rglt.fd_sw import central_difference_matrix, neighbor_fractions, scale_factor
from rglt.reduction import restrict

UNIT = Domain.hypercube(1)
DISK = Domain.disk((0.5, 0.5), 0.4)


def test_neighbor_fraction_examples():
    assert neighbor_fraction(UNIT, [0.5], 0, 1, 0.25) == 1.0
    assert neighbor_fraction(Domain.hypercube(1, 0.0, 0.6), [0.5], 0, 1, 0.25) == pytest.approx(0.4, abs=1e-10)
    assert neighbor_fraction(Domain.disk((0.5, 0.5), 0.5), [0.5, 0.9], 1, 1, 1 / 16) == 1.0
    with pytest.raises(ValueError):
        neighbor_fraction(UNIT, [1.0], 0, 1, 0.25)


def test_neighbor_fraction_circle_oracle():
    rng = np.random.default_rng(0)
    r = 0.4
    pts = 0.5 + (rng.random((200, 2)) - 0.5) * 0.75
    pts = pts[DISK.inside(pts)]
    h = 0.1
    n = GridSize((9, 9))
    sp_, sm = neighbor_fractions(DISK, n, pts)
    # exact chord: solve |p + t e_1 - c| = r for t > 0
    dy = pts[:, 1] - 0.5
    half = np.sqrt(r**2 - dy**2)
    reach_plus = (0.5 + half - pts[:, 0]) / h
    reach_minus = (pts[:, 0] - (0.5 - half)) / h
    np.testing.assert_allclose(sp_[:, 0], np.minimum(reach_plus, 1.0), atol=1e-9)
    np.testing.assert_allclose(sm[:, 0], np.minimum(reach_minus, 1.0), atol=1e-9)
    assert np.all((sp_ > 0) & (sp_ <= 1))


def test_assemble_1d_examples():
    sysm = assemble_sw(SWProblem.create(UNIT), GridSize((3,)))
    M = sysm.matrix.toarray()
    np.testing.assert_allclose(M, 32 * np.eye(3) - 16 * np.eye(3, k=1) - 16 * np.eye(3, k=-1))
    M5 = assemble_sw(SWProblem.create(UNIT, c=5.0), GridSize((3,))).matrix.toarray()
    np.testing.assert_allclose(np.diag(M5), 37)
    short = assemble_sw(SWProblem.create(Domain.hypercube(1, 0.0, 0.6)), GridSize((3,)))
    assert short.size == 2
    S = short.matrix.toarray()
    assert S[1, 1] == pytest.approx(80.0, rel=1e-9)
    np.testing.assert_allclose(short.s_plus[:, 0], [1.0, 0.4], atol=1e-10)
    # the row at 0.5 keeps its unit-step left neighbour scaled by 2/(s+ + s-)
    assert S[1, 0] == pytest.approx(-1 / (0.5 * 1.4 * 0.0625))


def test_rhs_and_projector():
    prob = SWProblem.create(DISK, f="x1 + x2")
    s = assemble_sw(prob, GridSize((15, 15)))
    np.testing.assert_allclose(s.rhs, s.points.sum(axis=1))
    assert s.projector.d == s.size
    np.testing.assert_array_equal(s.points, grid_coordinates(GridSize((15, 15)))[s.projector.positions])


def test_empty_interior_rejected():
    with pytest.raises(ValueError):
        assemble_sw(SWProblem.create(Domain.disk((0.5, 0.5), 0.01)), GridSize((4, 4)))


@pytest.mark.parametrize("d,n", [(1, (9,)), (2, (7, 6)), (3, (4, 3, 5))])
def test_full_cube_matches_central_differences(d, n):
    prob = SWProblem.create(Domain.hypercube(d), a=[1.0 + k for k in range(d)], b=[0.5 * (k - 1) for k in range(d)],
                            c=2.0)
    n = GridSize(n)
    A = assemble_sw(prob, n).matrix.toarray()
    B = central_difference_matrix(prob, n).toarray()
    assert np.max(np.abs(A - B)) <= 1e-12 * np.max(np.abs(B))


def test_interior_rows_match_zero_extended_classical():
    a = [CoefficientFn.from_expr("1 + x1", 2), CoefficientFn.from_expr("2 + x2^2", 2)]
    b = [CoefficientFn.from_expr("x2", 2), CoefficientFn.const(1.0, 2)]
    c = CoefficientFn.from_expr("x1 * x2", 2)
    prob = SWProblem.create(DISK, a=a, b=b, c=c)
    ext = SWProblem.create(Domain.hypercube(2), a=[f.zero_extended(DISK) for f in a],
                           b=[f.zero_extended(DISK) for f in b], c=c.zero_extended(DISK))
    n = GridSize((21, 21))
    s = assemble_sw(prob, n)
    classical = restrict(s.projector, central_difference_matrix(ext, n)).toarray()
    A = s.matrix.toarray()
    far = ~near_boundary_flags(DISK, n, 2)[s.projector.positions]
    assert far.sum() > 0
    # same entries up to the summation order of the half-step coefficients
    np.testing.assert_allclose(A[far], classical[far], rtol=1e-14, atol=1e-14 * np.abs(classical).max())


def test_symmetry_and_positive_diagonal():
    prob = SWProblem.create(DISK, a=["1 + x1", "1 + x2"], c=1.0)
    n = GridSize((25, 25))
    s = assemble_sw(prob, n)
    A = s.matrix.toarray()
    far = ~near_boundary_flags(DISK, n, 2)[s.projector.positions]
    sub = A[np.ix_(far, far)]
    np.testing.assert_allclose(sub, sub.T, rtol=1e-14, atol=0)
    assert np.all(np.diag(A) > 0)


def test_tiny_fraction_points_dropped():
    # the grid point 0.5 sits within 1e-10 of the right end
    dom = Domain.hypercube(1, 0.0, 0.5 + 1e-10)
    s = assemble_sw(SWProblem.create(dom), GridSize((3,)))
    assert s.dropped == [(2,)] and s.size == 1


def test_sw_symbol_examples():
    th = np.array([[0.3, -1.2], [2.0, 0.5]])
    x = np.array([[0.4, 0.5], [0.6, 0.5]])
    s1 = sw_symbol(SWProblem.create(UNIT))
    np.testing.assert_allclose(s1(x[:, :1], th[:, :1]), 2 - 2 * np.cos(th[:, 0]))
    s2 = sw_symbol(SWProblem.create(DISK))
    np.testing.assert_allclose(s2(x, th), 4 - 2 * np.cos(th[:, 0]) - 2 * np.cos(th[:, 1]))
    assert s2.domain is DISK
    s3 = sw_symbol(SWProblem.create(DISK, a=["x1", 0.0], b=[3.0, 1.0], c=7.0))
    np.testing.assert_allclose(s3(x, th), x[:, 0] * (2 - 2 * np.cos(th[:, 0])))


def test_skew_norm_report():
    sweep = [GridSize.cube(m, 2) for m in (15, 31, 63)]
    sq = sw_skew_norm_report(SWProblem.create(Domain.hypercube(2)), sweep)
    assert sq["ratio"] == [0.0, 0.0, 0.0]
    disk = sw_skew_norm_report(SWProblem.create(DISK), sweep)["ratio"]
    assert disk[-1] < disk[0]
    conv = sw_skew_norm_report(SWProblem.create(Domain.hypercube(2), b=[1.0, 1.0]), sweep)["ratio"]
    assert conv[0] > 0 and conv[1] < conv[0] / 3 and conv[2] < conv[1] / 3


def test_scale_factor():
    assert scale_factor(GridSize((4, 8))) == 1 / 16
