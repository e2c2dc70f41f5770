"""Large-t expansion of the two-time Airy distribution.

    P(A(0) <= u, A(t) <= v) = F2(u) F2(v) + F2'(u) F2'(v) / t^2
                              + (Phi(u, v) + Phi(v, u)) / t^4 + O(t^-6)

In logarithmic form ``log P = g(u) + g(v) + h2/t^2 + h4/t^4 + ...`` with
``g = log F2``, ``h2 = g'(u) g'(v)`` and ``f4 = h4 + h2^2 / 2`` the 1/t^4
coefficient of ``P / (F2(u) F2(v))``.  Everything here is built from the
tail integrals of the Painleve function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airy_fredholm import joint_cdf_grid
from .painleve import PainleveSolution, default_solution

__all__ = [
    "ExpansionTerms",
    "ConsistencyError",
    "expansion_terms",
    "h2_term",
    "h4_term",
    "h4_g_form",
    "f4_term",
    "phi",
    "joint_series",
    "covariance_exact",
    "c_constant",
]


class ConsistencyError(AssertionError):
    """Two equivalent closed forms disagree: points to a quadrature bug."""


@dataclass(frozen=True)
class ExpansionTerms:
    u: float
    v: float
    g_u: float
    g_v: float
    gp_u: float
    gp_v: float
    g1p_u: float
    g1p_v: float
    g2p_u: float
    g2p_v: float
    q_u: float
    q_v: float
    qp_u: float
    qp_v: float
    h2: float
    h4: float
    f4: float
    phi_uv: float
    phi_vu: float


def _sol(sol):
    return default_solution() if sol is None else sol


def _pieces(sol: PainleveSolution, x):
    t = sol.tails_at(x)
    q = sol.q_at(x)
    return q, t.gp, t.g, t.g1p, t.g2p


def _h4_q(qu, gpu, Ju, qv, gpv, Jv):
    one = qu**2 * (qv**2 / 4 - gpv**2 / 2) + gpu * Jv
    two = qv**2 * (qu**2 / 4 - gpu**2 / 2) + gpv * Ju
    return one + two


def h4_g_form(u, v, sol: PainleveSolution | None = None):
    """h4 written through g = log F2 and the auxiliary integrals g1, g2."""
    sol = _sol(sol)
    qu, gpu, gu, g1u, g2u = _pieces(sol, u)
    qv, gpv, gv, g1v, g2v = _pieces(sol, v)
    gppu, gppv = -qu**2, -qv**2
    return 0.5 * (gppu * gpv**2 + gppv * gpu**2 + gppu * gppv) + gpu * (2 * gv + g1v - g2v) + gpv * (2 * gu + g1u - g2u)


def h2_term(u, v, sol: PainleveSolution | None = None):
    sol = _sol(sol)
    return sol.tails_at(u).gp * sol.tails_at(v).gp


def h4_term(u, v, sol: PainleveSolution | None = None, check: bool = True):
    """h4 from its q-form; cross-checked against the g-form to 1e-8."""
    sol = _sol(sol)
    qu, gpu, gu, g1u, g2u = _pieces(sol, u)
    qv, gpv, gv, g1v, g2v = _pieces(sol, v)
    val = _h4_q(qu, gpu, 2 * gu + g1u - g2u, qv, gpv, 2 * gv + g1v - g2v)
    if check:
        other = h4_g_form(u, v, sol)
        if np.max(np.abs(np.asarray(val) - other)) > 1e-8:
            raise ConsistencyError("q-form and g-form of h4 disagree")
    return val


def f4_term(u, v, sol: PainleveSolution | None = None):
    sol = _sol(sol)
    return h4_term(u, v, sol) + 0.5 * h2_term(u, v, sol) ** 2


def _magnitude_sum(terms):
    # smallest first, to limit cancellation error near u ~ v ~ -3
    stack = np.stack(np.broadcast_arrays(*terms))
    order = np.argsort(np.abs(stack), axis=0)
    return np.sum(np.take_along_axis(stack, order, axis=0), axis=0)


def phi(u, v, sol: PainleveSolution | None = None):
    """Phi(u, v) = F2(u) F2(v) [gp_u^2 gp_v^2 / 4 + q_u^2 (q_v^2/4 - gp_v^2/2)
    + gp_u int_v^inf (2(v-a) q^2 + q'^2 - q^4) da]."""
    sol = _sol(sol)
    qu, gpu, _, _, _ = _pieces(sol, u)
    qv, gpv, gv, g1v, g2v = _pieces(sol, v)
    Jv = 2 * gv + g1v - g2v
    terms = (
        0.25 * gpu**2 * gpv**2,
        0.25 * qu**2 * qv**2,
        -0.5 * qu**2 * gpv**2,
        gpu * 2 * gv,
        gpu * g1v,
        -gpu * g2v,
    )
    bracket = _magnitude_sum(terms)
    val = sol.f2_cdf(u) * sol.f2_cdf(v) * bracket
    return float(val) if np.ndim(val) == 0 else val


def expansion_terms(u: float, v: float, sol: PainleveSolution | None = None) -> ExpansionTerms:
    sol = _sol(sol)
    qu, gpu, gu, g1u, g2u = _pieces(sol, u)
    qv, gpv, gv, g1v, g2v = _pieces(sol, v)
    h2 = gpu * gpv
    h4 = h4_term(u, v, sol)
    return ExpansionTerms(
        u=u, v=v, g_u=gu, g_v=gv, gp_u=gpu, gp_v=gpv, g1p_u=g1u, g1p_v=g1v, g2p_u=g2u, g2p_v=g2v,
        q_u=qu, q_v=qv, qp_u=sol.qp_at(u), qp_v=sol.qp_at(v),
        h2=h2, h4=h4, f4=h4 + 0.5 * h2 * h2, phi_uv=phi(u, v, sol), phi_vu=phi(v, u, sol),
    )


def joint_series(t, u, v, order: int = 4, sol: PainleveSolution | None = None):
    """Asymptotic approximation of P(A(0) <= u, A(t) <= v), through 1/t^2 or 1/t^4."""
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    sol = _sol(sol)
    val = sol.f2_cdf(u) * sol.f2_cdf(v) + sol.f2_pdf(u) * sol.f2_pdf(v) / t**2
    if order == 4:
        val = val + (phi(u, v, sol) + phi(v, u, sol)) / t**4
    return val


def _trapezoid_2d(values, mesh):
    w = np.full(values.shape[0], mesh)
    w[0] = w[-1] = mesh / 2
    return float(w @ values @ w)


def _symmetric_grid(window, mesh):
    n = int(round(2 * window / mesh))
    if not np.isclose(n * mesh, 2 * window):
        raise ValueError("window must be a multiple of mesh/2")
    return np.linspace(-window, window, n + 1)


def covariance_exact(t: float, window: float = 8.0, mesh: float = 0.25, sol: PainleveSolution | None = None, **kernel) -> float:
    """Cov(A(0), A(t)) by Hoeffding's identity,
    the double integral of P(A(0)<=u, A(t)<=v) - F2(u) F2(v)."""
    if not t > 0:
        raise ValueError("t must be positive")
    if window < 8 or mesh > 0.25:
        raise ValueError("need window >= 8 and mesh <= 0.25")
    sol = _sol(sol)
    grid = _symmetric_grid(window, mesh)
    P = joint_cdf_grid(t, grid, grid, **kernel)
    F = sol.f2_cdf(grid)
    return _trapezoid_2d(P - np.outer(F, F), mesh)


def c_constant(window: float = 8.0, mesh: float = 0.1, sol: PainleveSolution | None = None) -> float:
    """c = 2 * double integral of Phi over the plane, truncated to [-window, window]^2.

    Phi is a product of F2 factors, so it is below 1e-30 for u or v < -8,
    and the tail integrals kill it super-exponentially for u or v > 8.
    """
    if window < 8 or mesh > 0.1:
        raise ValueError("need window >= 8 and mesh <= 0.1")
    sol = _sol(sol)
    grid = _symmetric_grid(window, mesh)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    vals = phi(U.ravel(), V.ravel(), sol).reshape(U.shape)
    return 2.0 * _trapezoid_2d(vals, mesh)
