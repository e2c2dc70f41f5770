import math

import mpmath
import numpy as np
import pytest

from airy_process.airy_fredholm import KernelSpec, airy_ai, joint_cdf
from airy_process.numerics import gauss_legendre
from airy_process.painleve import (
    ConvergenceError,
    default_solution,
    f2_cdf,
    f2_pdf,
    left_asymptote,
    q_at,
    qp_at,
    solve_hastings_mcleod,
    tails_at,
)


@pytest.fixture(scope="module")
def fine():
    return solve_hastings_mcleod(n_nodes=8001)


def test_right_boundary_is_airy(sol):
    assert abs(sol.q_at(8.0) + float(mpmath.airyai(8))) <= 1e-10


def test_left_boundary_value(sol):
    expected = -2.0 * (1 + 1 / (8 * (-512.0)))
    assert abs(sol.q_at(-8.0) - expected) <= 5e-4


def test_q_at_origin(sol):
    assert abs(sol.q_at(0.0) + 0.3670615) <= 1e-6


def test_q_negative_and_increasing(sol):
    assert np.all(sol.q < 0)
    assert sol.q_at(-2.0) < sol.q_at(0.0) < sol.q_at(2.0) < 0
    assert np.all(np.diff(sol.q) > 0)


def test_outside_grid_uses_asymptotes(sol):
    assert sol.q_at(13.0) == pytest.approx(-airy_ai(13.0), rel=1e-14)
    assert sol.q_at(-12.0) == pytest.approx(float(left_asymptote(-12.0)), rel=1e-14)
    assert q_at(sol, 13.0) == sol.q_at(13.0)
    assert qp_at(sol, 13.0) == sol.qp_at(13.0)


def test_ode_residual_at_nodes(sol):
    h = sol.h
    q = sol.q
    a = sol.grid
    fd = (q[2:] - 2 * q[1:-1] + q[:-2]) / h**2
    rhs = a[1:-1] * q[1:-1] + 2 * q[1:-1] ** 3
    assert np.max(np.abs(fd - rhs) / (1 + np.abs(fd))) <= 1e-6


def test_first_integral_on_every_node(sol):
    t = sol.tails_at(sol.grid)
    H = sol.q_prime**2 - sol.grid * sol.q**2 - sol.q**4
    assert np.max(np.abs(H - t.gp)) <= 1e-8


@pytest.mark.parametrize("u", [-4.0, -1.0, 0.0, 2.0])
def test_first_integral_points(sol, u):
    q, qp = sol.q_at(u), sol.qp_at(u)
    assert abs(qp**2 - u * q**2 - q**4 - sol.tails_at(u).gp) <= 1e-8


def test_mesh_refinement(sol, fine):
    a = np.linspace(-9.99, 7.99, 997)
    assert np.max(np.abs(sol.q_at(a) - fine.q_at(a))) <= 1e-8
    mids = (sol.grid[:-1] + sol.grid[1:]) / 2
    assert np.max(np.abs(sol.q_at(mids) - fine.q_at(mids))) <= 1e-8


def test_tails_against_independent_quadrature(sol):
    # direct Gauss-Legendre of the interpolant on [u, 8] plus the Airy tail by mpmath
    u = -2.5
    rule = gauss_legendre(400, u, 8.0)
    q = sol.q_at(rule.nodes)
    qp = sol.qp_at(rule.nodes)
    tail_q2 = float(mpmath.quad(lambda x: mpmath.airyai(x) ** 2, [8, mpmath.inf]))
    tail_aq2 = float(mpmath.quad(lambda x: x * mpmath.airyai(x) ** 2, [8, mpmath.inf]))
    tail_qp2 = float(mpmath.quad(lambda x: mpmath.airyai(x, 1) ** 2, [8, mpmath.inf]))
    t = sol.tails_at(u)
    gp = rule.weights @ q**2 + tail_q2
    g = rule.weights @ ((u - rule.nodes) * q**2) + u * tail_q2 - tail_aq2
    assert t.gp == pytest.approx(gp, rel=1e-9)
    assert t.g == pytest.approx(g, rel=1e-9)
    assert t.g1p == pytest.approx(rule.weights @ qp**2 + tail_qp2, rel=1e-9)
    assert t.g2p == pytest.approx(rule.weights @ q**4, rel=1e-9)


def test_tails_vanish_to_the_right(sol):
    t = sol.tails_at(8.0)
    assert 0 <= t.gp < 1e-14
    for x in (9.0, 20.0):
        tt = sol.tails_at(x)
        assert 0 <= tt.gp < 1e-14 and tt.g <= 0 and abs(tt.g) < 1e-14


def test_tails_monotone_and_signed(sol):
    u = np.linspace(-10, 12, 441)
    t = sol.tails_at(u)
    for comp in (t.gp, t.g1p, t.g2p):
        assert np.all(comp >= 0)
        assert np.all(np.diff(comp) <= 0)
    assert np.all(t.g <= 0)


def test_gp_derivative(sol):
    h = 1e-4
    for u in (-3.0, 0.0, 1.7):
        d = (sol.tails_at(u + h).gp - sol.tails_at(u - h).gp) / (2 * h)
        assert abs(d + sol.q_at(u) ** 2) <= 1e-6


def test_tails_below_domain_rejected(sol):
    with pytest.raises(ValueError):
        tails_at(sol, -10.5)


def test_cdf_limits_and_monotonicity(sol):
    assert abs(sol.f2_cdf(8.0) - 1.0) <= 1e-12
    assert sol.f2_cdf(-3.0) < sol.f2_cdf(0.0) < sol.f2_cdf(3.0)
    u = np.linspace(-14, 10, 500)
    F = sol.f2_cdf(u)
    assert np.all((F >= 0) & (F <= 1))
    assert np.all(np.diff(F) >= 0)
    assert f2_cdf(sol, 0.5) == sol.f2_cdf(0.5)


def test_cdf_matches_fredholm_at_origin(sol):
    assert abs(sol.f2_cdf(0.0) - joint_cdf(KernelSpec((0.0,), (0.0,))).value) <= 1e-7


def test_density_normalization_and_mean(sol):
    rule = gauss_legendre(600, -10.0, 8.0)
    dens = sol.f2_pdf(rule.nodes)
    assert np.all(dens >= 0)
    assert abs(rule.weights @ dens - 1.0) <= 1e-6
    assert abs(rule.weights @ (rule.nodes * dens) + 1.7711) <= 1e-3


def test_density_is_derivative_of_cdf(sol):
    h = 1e-4
    for u in (-3.0, -1.0, 0.0, 1.5):
        fd = (sol.f2_cdf(u + h) - sol.f2_cdf(u - h)) / (2 * h)
        assert abs(fd - sol.f2_pdf(u)) <= 1e-7
    assert f2_pdf(sol, -1.0) == sol.f2_pdf(-1.0)


def test_cdf_continuous_across_left_edge(sol):
    a = sol.alpha_min
    assert abs(sol.f2_cdf(a - 1e-9) - sol.f2_cdf(a)) <= 1e-15 + 1e-8 * sol.f2_cdf(a)


@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha_max=5.0), dict(alpha_min=-7.0), dict(n_nodes=1000)],
)
def test_preconditions(kwargs):
    with pytest.raises(ValueError):
        solve_hastings_mcleod(**kwargs)


def test_newton_budget_exhaustion():
    with pytest.raises(ConvergenceError):
        solve_hastings_mcleod(tol=1e-30, max_iter=2)


def test_default_solution_cached():
    assert default_solution() is default_solution()
    assert default_solution().newton_iterations < 20
