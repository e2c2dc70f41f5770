import numpy as np
import pytest

from airy_process.pde_check import (
    StencilGrid,
    build_grid,
    hierarchy_L,
    hierarchy_order2_residual,
    hierarchy_order4_residual,
    pde_residual_uv,
    pde_residual_xy,
    rhs_order2,
    rhs_order4_forms,
)


def synthetic_grid(f, t0, u0, v0, mesh, t_mesh=None, coords="uv"):
    t_mesh = mesh if t_mesh is None else t_mesh
    a = u0 + mesh * np.arange(-2, 3)
    b = v0 + mesh * np.arange(-2, 3)
    A, B = np.meshgrid(a, b, indexing="ij")
    h = np.stack([f(t, A, B) for t in (t0 - t_mesh, t0, t0 + t_mesh)])
    return StencilGrid(t0, a, b, mesh, t_mesh, h, coords, "synthetic")


# --- grids -----------------------------------------------------------------


def test_series_grid_decouples_at_large_time(sol):
    g = build_grid(1e3, (-0.2, 0.2), (-0.3, 0.1), 0.1, source="series", sol=sol)
    ref = np.log(sol.f2_cdf(g.u_grid))[:, None] + np.log(sol.f2_cdf(g.v_grid))[None, :]
    assert np.max(np.abs(g.h[1] - ref)) <= 1e-6


def test_exact_and_series_grids_agree_at_t8(sol):
    ge = build_grid(8.0, (-1, 1), (-1, 1), 0.5, source="exact", sol=sol)
    gs = build_grid(8.0, (-1, 1), (-1, 1), 0.5, source="series", sol=sol)
    assert np.max(np.abs(np.exp(ge.h) - np.exp(gs.h))) <= 1e-4


def test_grid_swap_symmetry(sol):
    g = build_grid(2.0, (-0.5, 0.5), (-0.5, 0.5), 0.25, sol=sol)
    for k in range(3):
        np.testing.assert_allclose(g.h[k], g.h[k].T, atol=1e-12)


def test_grid_is_immutable_and_finite(sol):
    g = build_grid(2.0, (-0.5, 0.5), (-0.5, 0.5), 0.25, source="series", sol=sol)
    assert np.all(np.isfinite(g.h))
    with pytest.raises(ValueError):
        g.h[0, 0, 0] = 1.0


def test_grid_rejects_underflow(sol):
    with pytest.raises(ValueError):
        build_grid(1.0, (-9.8, -9.4), (-9.8, -9.4), 0.1, sol=sol)


def test_grid_rejects_bad_spacing(sol):
    with pytest.raises(ValueError):
        build_grid(1.0, (0.0, 0.33), (0.0, 0.4), 0.1, sol=sol)


# --- residual plumbing on synthetic h ----------------------------------------


def test_separable_h_kills_mixed_groups():
    g = synthetic_grid(lambda t, u, v: np.sin(u) + np.exp(0.3 * v) + 0 * t, 2.0, 0.1, -0.2, 0.01)
    r = pde_residual_uv(g, (2, 2))
    assert abs(r.terms["uuv_group"]) < 1e-9 and abs(r.terms["uvv_group"]) < 1e-9
    # the cubic group survives as r1'''(u) r3''(v) - r3'''(v) r1''(u)
    u, v = 0.1, -0.2
    cubic = -np.cos(u) * 0.09 * np.exp(0.3 * v) - 0.027 * np.exp(0.3 * v) * -np.sin(u)
    assert r.terms["cubic_group"] == pytest.approx(cubic, rel=1e-3)


def test_matched_exponentials_are_static_solutions():
    g = synthetic_grid(lambda t, u, v: np.exp(0.7 * u) - 2 * np.exp(0.7 * v) + 0 * t, 2.0, 0.1, -0.2, 0.02)
    r = pde_residual_uv(g, (2, 2))
    # every group is at rounding level
    assert r.scale <= 1e-9


def test_separable_residual_is_time_term_only():
    # h = t u^2 + v^3: mixed partials vanish, so residual = LHS = t * 2
    g = synthetic_grid(lambda t, u, v: t * u**2 + v**3, 1.5, 0.2, 0.3, 0.05)
    r = pde_residual_uv(g, (2, 2))
    assert r.lhs == pytest.approx(3.0, rel=1e-8)
    assert r.residual == pytest.approx(r.lhs - r.terms["cubic_group"], rel=1e-8)


def test_xy_form_for_functions_of_y():
    # no t or x dependence: only the group with the explicit factor x survives
    f = lambda t, u, v: np.cos(u + v) + 0 * t
    on_diag = pde_residual_xy(synthetic_grid(f, 1.0, 0.2, 0.2, 0.02), (2, 2))
    assert abs(on_diag.lhs) < 1e-9
    for name in ("t2_dx", "x_dy", "wronskian"):
        assert abs(on_diag.terms[name]) < 1e-8
    off = pde_residual_xy(synthetic_grid(f, 1.0, 0.2, -0.1, 0.02), (2, 2))
    assert abs(off.terms["t2_dx"]) < 1e-8 and abs(off.terms["wronskian"]) < 1e-8
    # -x d/dy (h_xx - h_yy) = x h_yyy, with h_yyy = sin(y), x = 0.3, y = 0.1
    assert off.terms["x_dy"] == pytest.approx(0.3 * np.sin(0.1), rel=1e-3)


def test_uv_residual_is_twice_xy_residual():
    g = synthetic_grid(lambda t, u, v: np.sin(u * t) * np.cos(v) + u**2 * v / t, 1.3, 0.3, -0.4, 0.05)
    assert pde_residual_uv(g, (2, 2)).residual == pytest.approx(2 * pde_residual_xy(g, (2, 2)).residual, rel=1e-10)


def test_report_scale_is_largest_term():
    g = synthetic_grid(lambda t, u, v: np.sin(u * t) * np.cos(v), 1.3, 0.3, -0.4, 0.05)
    r = pde_residual_uv(g, (2, 2))
    assert r.scale == max(abs(x) for x in r.terms.values())
    assert r.relative_residual == abs(r.residual) / r.scale


def test_stencil_support_required():
    g = synthetic_grid(lambda t, u, v: u * v + 0 * t, 1.0, 0.0, 0.0, 0.1)
    with pytest.raises(IndexError):
        pde_residual_uv(g, (1, 2))


# --- exact Fredholm h ---------------------------------------------------------


@pytest.fixture(scope="module")
def exact_reports():
    out = {}
    for m in (0.04, 0.02):
        g = build_grid(1.0, (0.5 - 2 * m, 0.5 + 2 * m), (-0.5 - 2 * m, -0.5 + 2 * m), m)
        out[m] = (pde_residual_uv(g, (2, 2)), pde_residual_xy(g, (2, 2)))
    return out


def test_exact_residual_below_mesh_floor(exact_reports):
    for m, (r, _) in exact_reports.items():
        assert r.relative_residual <= 10 * m * m


def test_exact_residual_mesh_halving(exact_reports):
    ratio = exact_reports[0.04][0].residual / exact_reports[0.02][0].residual
    assert 3.0 <= ratio <= 5.0


def test_exact_residual_at_origin(sol):
    m = 0.02
    g = build_grid(1.0, (-2 * m, 2 * m), (-2 * m, 2 * m), m, sol=sol)
    r = pde_residual_uv(g, (2, 2))
    assert r.relative_residual <= 10 * m * m
    # at u = v the antisymmetric pieces cancel: the uv scale is carried by the mixed groups
    assert r.scale == pytest.approx(abs(r.terms["uuv_group"]), rel=1e-6)


def test_xy_grid_matches_uv_grid():
    m = 0.04
    gxy = build_grid(1.0, (1 - 2 * m, 1 + 2 * m), (-2 * m, 2 * m), m, coords="xy")
    r_xy = pde_residual_xy(gxy, (2, 2))
    assert r_xy.point[1] == pytest.approx(0.5) and r_xy.point[2] == pytest.approx(-0.5)
    assert r_xy.relative_residual <= 10 * m * m


def test_series_residual_decays_like_t_minus_4(sol):
    # Richardson in the mesh removes the stencil error; what is left is truncation of the series
    def extrapolated(t):
        vals = []
        for m in (0.025, 0.0125):
            g = build_grid(t, (0.5 - 2 * m, 0.5 + 2 * m), (-0.5 - 2 * m, -0.5 + 2 * m), m, source="series", sol=sol)
            vals.append(pde_residual_uv(g, (2, 2)).residual)
        return (4 * vals[1] - vals[0]) / 3

    ratio = extrapolated(4.0) / extrapolated(8.0)
    assert 16 * 0.7 <= ratio <= 16 * 1.3


# --- operator L ---------------------------------------------------------------


def test_L_of_u2v():
    assert abs(hierarchy_L(lambda u, v: u**2 * v, 0.3, 0.7) - 2.0) <= 1e-6


def test_L_antisymmetry():
    f = lambda u, v: u**2 * v + np.sin(u) * v**3
    swapped = lambda u, v: f(v, u)
    a = hierarchy_L(f, 0.4, -0.2, 1e-2)
    b = hierarchy_L(swapped, -0.2, 0.4, 1e-2)
    assert abs(a + b) <= 1e-9


@pytest.mark.parametrize(
    "r1,r2,r3",
    [
        (np.sin, np.exp, np.cos),
        (np.exp, np.sin, lambda x: x**4),
        (np.cosh, np.cos, np.arctan),
    ],
)
def test_L_null_space(r1, r2, r3):
    f = lambda u, v: r1(u) + r3(v) + r2(u + v)
    for mesh in (1e-2, 5e-3):
        assert abs(hierarchy_L(f, 0.3, -0.6, mesh)) <= 10 * mesh**2


def test_L_mesh_convergence():
    f = lambda u, v: np.exp(u) * np.sin(2 * v)
    exact = lambda u, v: np.exp(u) * 2 * np.cos(2 * v) - np.exp(u) * -4 * np.sin(2 * v)
    for u, v in ((0.1, 0.2), (-0.5, 0.9), (0.7, -0.3)):
        e1 = abs(hierarchy_L(f, u, v, 0.04) - exact(u, v))
        e2 = abs(hierarchy_L(f, u, v, 0.02) - exact(u, v))
        assert 3.0 <= e1 / e2 <= 5.0


# --- hierarchy -------------------------------------------------------------------


@pytest.mark.parametrize("u,v", [(0.0, 0.0), (-2.0, 1.0)])
def test_order2_identity(sol, u, v):
    assert abs(hierarchy_order2_residual(u, v, sol)) <= 1e-7


def test_order2_rhs_antisymmetric(sol):
    for u, v in ((-1.0, 0.5), (0.3, -2.0)):
        assert rhs_order2(u, v, sol) == pytest.approx(-rhs_order2(v, u, sol), abs=1e-16)


def test_order2_L_by_finite_differences(sol):
    # independent of the closed-form jets: L applied to gp(u) gp(v) numerically
    hfun = lambda u, v: sol.tails_at(np.ravel(u)).gp * sol.tails_at(np.ravel(v)).gp
    for u, v in ((-1.0, 0.5), (0.5, -0.5)):
        assert abs(hierarchy_L(hfun, u, v, 1e-2) - rhs_order2(u, v, sol)) <= 1e-4


@pytest.mark.parametrize("u,v", [(0.0, 0.0), (1.0, -1.0)])
def test_order4_identity(sol, u, v):
    assert abs(hierarchy_order4_residual(u, v, sol)) <= 1e-6


def test_order4_rhs_forms_agree(sol):
    g_form, q_form = rhs_order4_forms(-1.5, 0.5, sol)
    assert abs(g_form - q_form) <= 1e-7


def test_order4_L_by_finite_differences(sol):
    from airy_process.asymptotics import h4_term

    hfun = lambda u, v: h4_term(np.ravel(u), np.ravel(v), sol)
    u, v = -0.8, 0.4
    assert abs(hierarchy_L(hfun, u, v, 1e-2) - rhs_order4_forms(u, v, sol)[0]) <= 1e-4


def test_hierarchy_on_grid(sol):
    g = np.linspace(-2, 1, 4)
    for u in g:
        for v in g:
            assert abs(hierarchy_order2_residual(u, v, sol)) <= 1e-6
            assert abs(hierarchy_order4_residual(u, v, sol)) <= 1e-6
