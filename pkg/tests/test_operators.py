"""Shallow-water gradient, divergence, duality and the pressure matrix."""
import numpy as np
import pytest
import sympy as sp

from oracles import cell_duality_defect, grad_loops, pressure_matrix_oracle
from swnh import analytic
from swnh.boundary import WALL, BoundaryCondition
from swnh.grid import Grid, build_uniform_grid, sample_bathymetry
from swnh.operators import (assemble_laplacian, dense_operator, div_sw, duality_face_terms,
                            grad_sw, grad_sw_eps, scaled_div_sw)


def random_instance(rng, n, uniform=False):
    if uniform:
        grid = build_uniform_grid(0.0, n * 0.7, n)
    else:
        grid = Grid.from_edges(np.concatenate(([0.0], np.cumsum(rng.uniform(0.3, 1.2, n)))))
    return grid, rng.uniform(0.5, 2.0, n), rng.uniform(0.0, 0.3, n)


# --------------------------------------------------------------------------
# grad_sw
# --------------------------------------------------------------------------

def test_gradient_of_constant_pressure():
    grid = build_uniform_grid(0.0, 1.0, 6)
    g = grad_sw(np.full(7, 3.0), np.ones(6), np.zeros(6), grid)
    np.testing.assert_allclose(g.comp1, 0.0, atol=1e-14)
    np.testing.assert_allclose(g.comp2, -6.0, rtol=1e-14)


def test_gradient_of_zero_pressure():
    grid = build_uniform_grid(0.0, 1.0, 5)
    g = grad_sw(np.zeros(6), np.linspace(1, 2, 5), np.linspace(0, 0.2, 5), grid)
    assert np.all(g.comp1 == 0.0) and np.all(g.comp2 == 0.0)


def test_gradient_three_cell_hand_example():
    H = [sp.Integer(1), sp.Integer(2), sp.Integer(1)]
    zb = [sp.Integer(0)] * 3
    p = [sp.Integer(v) for v in (0, 1, 1, 0)]
    c1, c2 = grad_loops(p, H, zb, [sp.Integer(1)] * 3)
    assert c1[1] == 0 and c2[1] == -2
    grid = build_uniform_grid(0.0, 3.0, 3)
    g = grad_sw(np.array([0.0, 1.0, 1.0, 0.0]), np.array([1.0, 2.0, 1.0]), np.zeros(3), grid)
    np.testing.assert_allclose(g.comp1, [float(v) for v in c1], atol=1e-15)
    np.testing.assert_allclose(g.comp2, [float(v) for v in c2], atol=1e-15)


def test_gradient_matches_loop_oracle(rng):
    for _ in range(20):
        grid, H, zb = random_instance(rng, 9)
        p = rng.normal(size=10)
        c1, c2 = grad_loops(p, H, zb, grid.widths)
        g = grad_sw(p, H, zb, grid)
        np.testing.assert_allclose(g.comp1, c1, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(g.comp2, c2, rtol=1e-13, atol=1e-13)


def test_vertical_component_sign():
    grid = build_uniform_grid(0.0, 1.0, 8)
    p = np.abs(np.random.default_rng(1).normal(size=9))
    assert np.all(grad_sw(p, np.ones(8), np.zeros(8), grid).comp2 <= 0.0)


# --------------------------------------------------------------------------
# div_sw
# --------------------------------------------------------------------------

def test_divergence_of_uniform_flow():
    grid = build_uniform_grid(0.0, 1.0, 6)
    d = div_sw(np.full(6, 1.7), np.zeros(6), np.ones(6), np.zeros(6), grid)
    np.testing.assert_allclose(d, 0.0, atol=1e-14)


def test_divergence_of_vertical_velocity():
    grid = build_uniform_grid(0.0, 1.0, 6)
    d = div_sw(np.zeros(6), np.full(6, 0.4), np.ones(6), np.zeros(6), grid)
    np.testing.assert_allclose(d[1:-1], 0.8, rtol=1e-14)
    assert d[0] == 0.0 and d[-1] == 0.0


def test_divergence_alpha_weight():
    grid = build_uniform_grid(0.0, 1.0, 6)
    d = div_sw(np.zeros(6), np.full(6, 0.4), np.ones(6), np.zeros(6), grid, alpha=1.5)
    np.testing.assert_allclose(d[1:-1], 0.6, rtol=1e-14)


def test_bowl_fields_are_discretely_divergence_free_where_wet():
    bowl = analytic.BowlParams.from_amplitude(1.0)
    table = analytic.BowlSolution(bowl, 2.0)
    for n in (100, 200, 400):
        grid = build_uniform_grid(-2.0, 2.0, n)
        f = table.fields(grid.centers, 0.7)
        zb = sample_bathymetry(bowl.bottom, grid).zb
        d = div_sw(f.u, f.w, f.H, zb, grid)
        wet = np.r_[False, (f.H[:-1] > 0) & (f.H[1:] > 0), False]
        assert np.max(np.abs(d[wet])) <= 1e-12


def test_soliton_divergence_residual_is_second_order():
    sol = analytic.SolitonParams()
    res = []
    for n in (200, 400, 800):
        grid = build_uniform_grid(-15.0, 15.0, n)
        f = analytic.soliton_fields(sol, grid.centers, 0.0, period=30.0)
        res.append(np.max(np.abs(div_sw(f.u, f.w, f.H, np.zeros(n), grid, periodic=True))))
    ratios = np.array(res[:-1]) / np.array(res[1:])
    assert np.all((ratios >= 3.5) & (ratios <= 4.5))


# --------------------------------------------------------------------------
# grad_sw_eps
# --------------------------------------------------------------------------

def test_regularised_gradient_inactive_on_deep_water(rng):
    grid, H, zb = random_instance(rng, 12)
    p = rng.normal(size=13)
    g = grad_sw(p, H, zb, grid)
    ge = grad_sw_eps(p, H, zb, grid, epsilon=1e-3)
    np.testing.assert_allclose(ge.comp1, g.comp1 / H, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(ge.comp2, g.comp2 / H, rtol=1e-14, atol=1e-14)
    ge2 = grad_sw_eps(p, H, zb, grid, epsilon=5e-4)
    np.testing.assert_array_equal(ge.comp1, ge2.comp1)
    np.testing.assert_array_equal(ge.comp2, ge2.comp2)


def test_regularised_gradient_bounded_on_dry_cell():
    grid = build_uniform_grid(0.0, 1.0, 5)
    H = np.array([1.0, 0.5, 0.0, 0.4, 1.0])
    p = np.array([0.0, 0.3, 0.2, 0.1, 0.0, 0.0])
    eps = 1e-6
    g = grad_sw_eps(p, H, np.zeros(5), grid, eps)
    assert np.all(np.isfinite(g.comp1)) and np.all(np.isfinite(g.comp2))
    # dry cell: no zeta terms, vertical part bounded by p / eps
    assert g.comp1[2] == pytest.approx((p[3] - p[2]) / 0.2, rel=1e-14)
    assert abs(g.comp2[2]) <= 2.0 * max(p[2], p[3]) / eps


def test_regularised_gradient_rejects_nonpositive_epsilon():
    grid = build_uniform_grid(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        grad_sw_eps(np.zeros(6), np.ones(5), np.zeros(5), grid, 0.0)


# --------------------------------------------------------------------------
# duality
# --------------------------------------------------------------------------

def test_cellwise_duality_with_explicit_d_terms(rng):
    for _ in range(50):
        n = int(rng.integers(3, 17))
        grid, H, zb = random_instance(rng, n)
        p, u, w = rng.normal(size=n + 1), rng.normal(size=n), rng.normal(size=n)
        defect = cell_duality_defect(p, u, w, H, zb, grid.widths)
        assert np.max(np.abs(defect)) <= 1e-12
        # the package face fluxes telescope the same identity
        gr = grad_sw(p, H, zb, grid)
        D = p * scaled_div_sw(u, w, H, zb, grid)
        Gf = duality_face_terms(p, u, w, H, zb, grid)
        lhs = grid.widths * (gr.comp1 * u + gr.comp2 * w) + 0.5 * (D[:-1] + D[1:])
        np.testing.assert_allclose(lhs, Gf[1:] - Gf[:-1], rtol=0, atol=1e-12)


def test_global_duality_for_compact_support(rng):
    n = 16
    grid, H, zb = random_instance(rng, n)
    p = rng.normal(size=n + 1)
    u, w = rng.normal(size=n), rng.normal(size=n)
    p[:2] = p[-2:] = 0.0
    u[:2] = u[-2:] = w[:2] = w[-2:] = 0.0
    gr = grad_sw(p, H, zb, grid)
    lhs = np.sum(grid.widths * (gr.comp1 * u + gr.comp2 * w))
    rhs = np.sum(p[1:-1] * scaled_div_sw(u, w, H, zb, grid)[1:-1])
    assert abs(lhs + rhs) <= 1e-12


# --------------------------------------------------------------------------
# assemble_laplacian
# --------------------------------------------------------------------------

def test_flat_interior_row_matches_regular_stencil():
    n, H, dx = 8, 1.3, 0.25
    grid = build_uniform_grid(0.0, n * dx, n)
    sys_ = assemble_laplacian(np.full(n, H), np.zeros(n), grid)
    k = 4
    # dxf * div (grad p / H) row: H (-p_{k-1} + 2 p_k - p_{k+1}) / dx
    #                             + dx (p_{k-1} + 2 p_k + p_{k+1}) / H
    assert sys_.diag[k] == pytest.approx(2 * H / dx + 2 * dx / H, rel=1e-14)
    assert sys_.lower[k] == pytest.approx(-H / dx + dx / H, rel=1e-14)
    assert sys_.upper[k] == pytest.approx(-H / dx + dx / H, rel=1e-14)


def test_pressure_matrix_equals_dense_product(rng):
    for _ in range(50):
        n = int(rng.integers(3, 17))
        grid, H, zb = random_instance(rng, n)
        K = assemble_laplacian(H, zb, grid, epsilon=1e-8).to_dense()[1:-1, 1:-1]
        ref = pressure_matrix_oracle(H, zb, grid.widths)
        np.testing.assert_allclose(K, ref, rtol=0, atol=1e-12 * max(1.0, np.abs(ref).max()))


def test_four_cell_dense_product(rng):
    grid = build_uniform_grid(0.0, 4.0, 4)
    H = rng.uniform(0.5, 2.0, 4)
    zb = rng.uniform(0.0, 0.3, 4)
    K = assemble_laplacian(H, zb, grid).to_dense()[1:-1, 1:-1]
    np.testing.assert_allclose(K, pressure_matrix_oracle(H, zb, grid.widths), rtol=0, atol=1e-12)
    np.testing.assert_allclose(dense_operator(H, zb, grid)[1:-1, 1:-1], K, rtol=0, atol=1e-12)


def test_matrix_is_symmetric_positive_definite(rng):
    for _ in range(20):
        grid, H, zb = random_instance(rng, 15)
        s = assemble_laplacian(H, zb, grid)
        np.testing.assert_allclose(s.lower[1:], s.upper[:-1], rtol=1e-13, atol=1e-13)
        assert np.all(s.diag > 0.0)
        assert np.linalg.eigvalsh(s.to_dense()).min() > 0.0


def test_dirichlet_boundary_rows():
    n = 6
    grid = build_uniform_grid(0.0, 1.0, n)
    left = BoundaryCondition("given_flux", 1.0)
    right = BoundaryCondition("given_depth", 1.0)
    s = assemble_laplacian(np.ones(n), np.zeros(n), grid, left, right,
                           u=np.linspace(0, 1, n), w=np.zeros(n), dt=0.1)
    for k in (0, n - 1, n):
        assert s.diag[k] == 1.0 and s.rhs[k] == 0.0
        assert s.lower[k] == 0.0 and s.upper[k] == 0.0
    assert s.upper[n - 2] == 0.0 and s.lower[1] == 0.0
    assert s.solve()[[0, n - 1, n]].tolist() == [0.0, 0.0, 0.0]


def test_dry_faces_become_identity_rows():
    n = 6
    grid = build_uniform_grid(0.0, 1.0, n)
    H = np.array([1.0, 1.0, 0.0, 0.0, 1.0, 1.0])
    s = assemble_laplacian(H, np.zeros(n), grid, WALL, WALL)
    assert s.active.tolist() == [False, True, False, False, False, True, False]
    assert s.diag[3] == 1.0 and s.lower[3] == 0.0 and s.upper[3] == 0.0


def test_periodic_system_is_symmetric(rng):
    n = 12
    grid = build_uniform_grid(0.0, 3.0, n)
    H = rng.uniform(0.5, 2.0, n)
    zb = rng.uniform(0.0, 0.3, n)
    periodic = BoundaryCondition("periodic")
    M = assemble_laplacian(H, zb, grid, periodic, periodic).to_dense()
    np.testing.assert_allclose(M, M.T, rtol=0, atol=1e-13)
    assert M.shape == (n, n)
    assert np.linalg.eigvalsh(M).min() > 0.0
