import math

import numpy as np
import pytest

from brinkspec import iterlog
from brinkspec.eigensolve import lowest_eigs
from brinkspec.errors import DomainError, ParamError, ShapeError
from brinkspec.iterlog import ComparisonOrder
from brinkspec.potentials import AlphaFamily, SquareWell, ThresholdFamily, ThresholdKind, Zero, exact_zero_mode
from brinkspec.radialgrid import (Boundary, GridWarning, Placement, TridiagOperator, apply, assemble, make_grid,
                                  nodal_apply, potential_on_grid, reduce_dimension, residual, to_nodal,
                                  to_standard)

# bound state of the 3-d square well depth 10 radius 1: sqrt(10 - k^2) cot sqrt(10 - k^2) = -k (mpmath)
MP_WELL10_E0 = -4.624194086329779548908725472137689


def test_reduce_dimension():
    assert reduce_dimension(1) == 0.0
    assert reduce_dimension(3) == 0.0
    assert reduce_dimension(5) == 2.0
    assert reduce_dimension(2) == -0.25
    with pytest.raises(ParamError):
        reduce_dimension(0)


def test_make_grid_uniform_spacing():
    g = make_grid(3, 1e-3, 50.0, 4999)
    assert g.h == pytest.approx(0.01, rel=1e-3)
    pts = g.points
    assert pts[0] == 1e-3 and pts[-1] == 50.0
    np.testing.assert_allclose(np.diff(pts), g.h, rtol=1e-9)
    assert g.size == 4999
    assert g.left is Boundary.Dirichlet


def test_make_grid_geometric_ratio():
    g = make_grid(4, 1e-2, 1e4, 3000, "geometric")
    assert g.placement is Placement.Geometric
    assert g.ratio == pytest.approx((1e4 / 1e-2) ** (1 / 3001), rel=1e-14)
    x = g.nodes
    assert np.all(np.diff(x) > 0) and x[-1] < 1e4
    np.testing.assert_allclose(x[1:] / x[:-1], g.ratio, rtol=1e-9)
    with pytest.raises(ParamError):
        g.h


@pytest.mark.parametrize("args", [
    (3, 5.0, 1.0, 100),
    (3, -1.0, 1.0, 100),
    (3, 0.0, 1.0, 2),
    (3, 0.0, 10.0, 100, "geometric"),
    (3, 0.1, 10.0, 100, "uniform", 1.1),
    (3, 0.1, 10.0, 100, "geometric", 0.9),
    (0, 0.1, 10.0, 100),
])
def test_make_grid_rejects(args):
    with pytest.raises(ParamError):
        make_grid(*args)


def test_neumann_left_boundary():
    g = make_grid(1, 0.0, 10.0, 99)
    assert g.left is Boundary.Neumann
    assert g.size == 100 and g.nodes[0] == 0.0
    with pytest.raises(ParamError):
        make_grid(3, 0.0, 10.0, 99, left="neumann")


def test_two_dimensional_warning():
    with pytest.warns(GridWarning):
        make_grid(2, 0.5, 10.0, 100)


def test_uniform_standard_form_entries():
    g = make_grid(5, 0.0, 10.0, 199)
    p = AlphaFamily(1.0, 5)
    T = assemble(p, g)
    h, x = g.h, g.nodes
    np.testing.assert_allclose(T.diag, 2 / h**2 + p(x) + 2.0 / x**2, rtol=1e-12)
    np.testing.assert_allclose(T.offdiag, -1 / h**2, rtol=1e-12)


def test_offdiag_negative_on_any_grid():
    for g in (make_grid(3, 0.0, 5.0, 50), make_grid(3, 1e-4, 1e3, 200, "geometric"), make_grid(1, 0.0, 3.0, 30)):
        assert np.all(assemble(Zero(), g).offdiag < 0)


def test_gershgorin_lower_bound():
    g = make_grid(3, 0.0, 20.0, 999)
    p = AlphaFamily(2.0, 3)
    lo, _ = assemble(p, g).gershgorin()
    floor = float(np.min(p(g.nodes)))
    assert lo >= floor - 4 / g.h**2 - 1e-9


def test_operator_arrays_read_only_and_validated():
    T = TridiagOperator.from_standard([2.0, 2.0, 2.0], [-1.0, -1.0])
    with pytest.raises(ValueError):
        T.kdiag[0] = 5.0
    with pytest.raises(ShapeError):
        TridiagOperator.from_standard([2.0, 2.0], [-1.0, -1.0])
    with pytest.raises(ParamError):
        TridiagOperator([1.0, 1.0], [0.5], [1.0, 0.0])


def test_free_box_lowest_eigenvalue_converges_at_order_two():
    errs = []
    for n in (199, 399, 799):
        g = make_grid(3, 0.0, 10.0, n)
        e0 = lowest_eigs(assemble(Zero(), g), 1, tol=1e-13).eigenvalues[0]
        errs.append(abs(e0 - (math.pi / 10.0) ** 2))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_free_box_level_falls_with_box_size():
    levels = [lowest_eigs(assemble(Zero(), make_grid(3, 0.0, L, 2000)), 1, tol=1e-14).eigenvalues[0]
              for L in (5.0, 10.0, 20.0, 40.0)]
    assert all(a > b > 0 for a, b in zip(levels, levels[1:]))


def test_neumann_box_quarter_wave():
    g = make_grid(1, 0.0, 10.0, 1999)
    e0 = lowest_eigs(assemble(Zero(), g), 1, tol=1e-13).eigenvalues[0]
    assert e0 == pytest.approx((math.pi / 20.0) ** 2, rel=1e-5)


def test_square_well_against_transcendental_root():
    for n in (4000, 8000):
        g = make_grid(3, 0.0, 20.0, n - 1)
        e0 = lowest_eigs(assemble(SquareWell(10.0, 1.0), g), 1, tol=1e-12).eigenvalues[0]
        assert e0 == pytest.approx(MP_WELL10_E0, rel=2e-3)


def test_cell_average_at_jump():
    g = make_grid(3, 0.0, 2.0, 9)  # nodes at 0.2, 0.4, ..., radius 0.5 sits between 0.4 and 0.6
    w = SquareWell(1.0, 0.5)
    vals = potential_on_grid(w, g)
    x = g.nodes
    i = int(np.argmin(np.abs(x - 0.5)))
    # dual cell of the node at 0.4 is [0.3, 0.5], of 0.6 is [0.5, 0.7]; jump on a cell edge
    np.testing.assert_allclose(vals, w(x))
    g = make_grid(3, 0.0, 2.0, 19)  # node at 0.5 exactly; its cell [0.45, 0.55] is half inside
    vals = potential_on_grid(w, g)
    i = int(np.argmin(np.abs(g.nodes - 0.5)))
    assert vals[i] == pytest.approx(-0.5)
    np.testing.assert_array_equal(np.delete(vals, i), np.delete(w(g.nodes), i))


def test_apply_examples():
    g = make_grid(3, 0.0, 10.0, 99)
    T = assemble(Zero(), g)
    np.testing.assert_array_equal(apply(T, np.zeros(99)), 0.0)
    k, L, h, x = 3, 10.0, g.h, g.nodes
    u = np.sin(k * math.pi * x / L)
    np.testing.assert_allclose(apply(T, u), (2 / h**2) * (1 - math.cos(k * math.pi * h / L)) * u, atol=1e-9)
    with pytest.raises(ShapeError):
        apply(T, np.zeros(98))
    with pytest.raises(ShapeError):
        nodal_apply(T, np.zeros(3))


def test_apply_is_symmetric_on_geometric_grids():
    rng = np.random.default_rng(0)
    g = make_grid(5, 1e-3, 1e3, 400, "geometric")
    T = assemble(AlphaFamily(1.5, 5), g)
    u, v = rng.standard_normal(400), rng.standard_normal(400)
    lhs, rhs = u @ apply(T, v), v @ apply(T, u)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0) * T.scale()
    np.testing.assert_allclose(to_nodal(T, to_standard(T, u)), u, rtol=1e-15)
    dense = T.to_dense()
    np.testing.assert_allclose(dense, dense.T)
    np.testing.assert_allclose(dense @ u, apply(T, u), rtol=1e-9, atol=1e-9 * T.scale())


def test_residual_orders():
    def ratio(p, f, d, r_min, r_max, hs):
        # the skipped boundary layer scales with 1/h so both grids see the same window
        res = []
        for k, h in enumerate(hs):
            n = int(round((r_max - r_min) / h)) - 1
            res.append(residual(p, f, make_grid(d, r_min, r_max, n), skip=5 * 2**k))
        return res[0] / res[1]

    assert 3.5 <= ratio(ThresholdFamily(ComparisonOrder(0, 0.0), ThresholdKind.Wm, 3),
                        lambda r: iterlog.psi_lower(0, 3, r), 3, 1.0, 20.0, (0.02, 0.01)) <= 4.5
    assert 3.5 <= ratio(AlphaFamily(2.0, 3), lambda r: exact_zero_mode(2.0, 3, r), 3, 0.0, 20.0,
                        (0.02, 0.01)) <= 4.5
    order = ComparisonOrder(1, 1.0)
    assert 3.5 <= ratio(ThresholdFamily(order, ThresholdKind.Ym, 4), lambda r: iterlog.psi_upper(order, 4, r), 4,
                        2.0, 50.0, (0.02, 0.01)) <= 4.5


def test_residual_options():
    g = make_grid(3, 0.0, 5.0, 99)
    with pytest.raises(ParamError):
        residual(Zero(), np.ones_like, g, transform="weird")
    with pytest.raises(ParamError):
        residual(Zero(), np.ones_like, g, skip=50)
    # u = x itself solves -u'' = 0 without the reduction
    assert residual(Zero(), lambda r: r, g, transform="none") < 1e-9


def test_assemble_domain_error():
    tf = ThresholdFamily(ComparisonOrder(2, 0.0), ThresholdKind.Wm, 3)
    with pytest.raises(DomainError):
        assemble(tf, make_grid(3, 1.0, 10.0, 50))
    with pytest.raises(ShapeError):
        assemble(Zero(), make_grid(3, 1.0, 10.0, 50), potential_values=np.zeros(3))
