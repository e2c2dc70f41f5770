"""Finite-difference checks of the two-time PDE and of the large-t hierarchy.

``h(t; u, v) = log P(A(0) <= u, A(t) <= v)`` satisfies

    t d/dt (h_uu - h_vv) = h_uuv (2 h_vv + h_uv - h_uu + u - v - t^2)
                         - h_uvv (2 h_uu + h_uv - h_vv - u + v - t^2)
                         + h_uuu (h_uv + h_vv) - h_vvv (h_uu + h_uv)

and, in ``x = u - v``, ``y = u + v``,

    2t h_txy = (t^2 d/dx - x d/dy)(h_xx - h_yy) + 8 {h_xy, h_yy}_y,

with the Wronskian ``{f, g}_y = f_y g - f g_y``.  For any smooth h the
(u, v) residual is exactly twice the (x, y) residual.

The hierarchy checks use closed-form derivatives: derivatives of q come from
the Painleve equation itself, derivatives of the tail integrals from the
fundamental theorem of calculus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .airy_fredholm import KernelSpec, joint_cdf_grid, joint_probability
from .asymptotics import h2_term, h4_term
from .numerics import fd_partial
from .painleve import PainleveSolution, default_solution

__all__ = [
    "StencilGrid",
    "ResidualReport",
    "build_grid",
    "pde_residual_uv",
    "pde_residual_xy",
    "hierarchy_L",
    "hierarchy_order2_residual",
    "hierarchy_order4_residual",
    "rhs_order2",
    "rhs_order4_forms",
    "L_h4_closed_form",
]


@dataclass(frozen=True)
class StencilGrid:
    """log-probabilities on a uniform (t, a, b) mesh.

    ``coords`` is ``"uv"`` (axes are the thresholds) or ``"xy"`` (axes are
    ``x = u - v`` and ``y = u + v``).  ``h`` has shape (3, na, nb) for times
    ``t0 - t_mesh, t0, t0 + t_mesh``.
    """

    t0: float
    a_grid: np.ndarray
    b_grid: np.ndarray
    mesh: float
    t_mesh: float
    h: np.ndarray
    coords: str = "uv"
    source: str = "exact"

    @property
    def u_grid(self):
        return self.a_grid

    @property
    def v_grid(self):
        return self.b_grid

    def partial(self, dt: int, da: int, db: int, ia: int, ib: int) -> float:
        return fd_partial(self.h, (self.t_mesh, self.mesh, self.mesh), (dt, da, db), (1, ia, ib))


@dataclass(frozen=True)
class ResidualReport:
    point: tuple[float, float, float]
    lhs: float
    rhs: float
    residual: float
    scale: float
    relative_residual: float
    terms: dict = field(default_factory=dict)


def _log_series(t, u, v, sol):
    tu = sol.tails_at(u)
    tv = sol.tails_at(v)
    return tu.g + tv.g + tu.gp * tv.gp / t**2 + h4_term(u, v, sol, check=False) / t**4


def _uniform(lo, hi, mesh):
    n = int(round((hi - lo) / mesh))
    if n < 4 or not np.isclose(lo + n * mesh, hi, atol=1e-9 * max(1.0, abs(hi))):
        raise ValueError(f"range [{lo}, {hi}] is not a whole number (>= 4) of mesh steps {mesh}")
    return lo + mesh * np.arange(n + 1)


def build_grid(t0: float, u_range, v_range, mesh: float, t_mesh: float | None = None, source: str = "exact",
               coords: str = "uv", sol: PainleveSolution | None = None, **kernel) -> StencilGrid:
    """Sample h on a uniform grid around ``t0``.

    ``source`` is ``"exact"`` (Fredholm determinant) or ``"series"`` (the
    log-expansion ``g(u) + g(v) + h2/t^2 + h4/t^4``).  With ``coords="xy"``
    the ranges are for x and y and each node is mapped to
    ``u = (y + x)/2, v = (y - x)/2``.
    """
    if source not in ("exact", "series"):
        raise ValueError("source must be 'exact' or 'series'")
    if coords not in ("uv", "xy"):
        raise ValueError("coords must be 'uv' or 'xy'")
    t_mesh = mesh if t_mesh is None else t_mesh
    if t0 - t_mesh <= 0:
        raise ValueError("t0 - t_mesh must be positive")
    sol = default_solution() if sol is None else sol
    a = _uniform(*u_range, mesh)
    b = _uniform(*v_range, mesh)
    times = (t0 - t_mesh, t0, t0 + t_mesh)
    h = np.empty((3, a.size, b.size))
    for k, t in enumerate(times):
        if coords == "uv":
            if source == "exact":
                P = joint_cdf_grid(t, a, b, **kernel)
                if np.min(P) < 1e-12:
                    raise ValueError("probabilities underflow on the grid; raise the thresholds")
                h[k] = np.log(P)
            else:
                U, V = np.meshgrid(a, b, indexing="ij")
                h[k] = _log_series(t, U.ravel(), V.ravel(), sol).reshape(U.shape)
        else:
            X, Y = np.meshgrid(a, b, indexing="ij")
            U, V = (Y + X) / 2, (Y - X) / 2
            if source == "exact":
                P = np.array([joint_probability(KernelSpec((0.0, t), (uu, vv), **kernel)) for uu, vv in zip(U.ravel(), V.ravel())])
                if np.min(P) < 1e-12:
                    raise ValueError("probabilities underflow on the grid; raise the thresholds")
                h[k] = np.log(P).reshape(U.shape)
            else:
                h[k] = _log_series(t, U.ravel(), V.ravel(), sol).reshape(U.shape)
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite log-probabilities on the grid")
    h.setflags(write=False)
    return StencilGrid(float(t0), a, b, float(mesh), float(t_mesh), h, coords, source)


def _uv_partials(grid: StencilGrid, ia: int, ib: int) -> dict:
    """All partials needed by either form, in (u, v) variables."""
    p = grid.partial
    if grid.coords == "uv":
        return {
            "uu": p(0, 2, 0, ia, ib), "vv": p(0, 0, 2, ia, ib), "uv": p(0, 1, 1, ia, ib),
            "uuu": p(0, 3, 0, ia, ib), "vvv": p(0, 0, 3, ia, ib),
            "uuv": p(0, 2, 1, ia, ib), "uvv": p(0, 1, 2, ia, ib),
            "tuu": p(1, 2, 0, ia, ib), "tvv": p(1, 0, 2, ia, ib),
        }
    # axes are (x, y): d_u = d_x + d_y, d_v = d_y - d_x
    d = {(i, j): p(0, i, j, ia, ib) for i in range(4) for j in range(4) if 2 <= i + j <= 3}
    dt = {(i, j): p(1, i, j, ia, ib) for i in range(3) for j in range(3) if i + j == 2}
    xx, xy, yy = d[(2, 0)], d[(1, 1)], d[(0, 2)]
    xxx, xxy, xyy, yyy = d[(3, 0)], d[(2, 1)], d[(1, 2)], d[(0, 3)]
    return {
        "uu": xx + 2 * xy + yy, "vv": xx - 2 * xy + yy, "uv": yy - xx,
        "uuu": xxx + 3 * xxy + 3 * xyy + yyy,
        "vvv": -xxx + 3 * xxy - 3 * xyy + yyy,
        "uuv": -xxx - xxy + xyy + yyy,
        "uvv": xxx - xxy - xyy + yyy,
        "tuu": dt[(2, 0)] + 2 * dt[(1, 1)] + dt[(0, 2)],
        "tvv": dt[(2, 0)] - 2 * dt[(1, 1)] + dt[(0, 2)],
    }


def _physical_point(grid: StencilGrid, ia: int, ib: int):
    a, b = grid.a_grid[ia], grid.b_grid[ib]
    if grid.coords == "uv":
        return a, b
    return (b + a) / 2, (b - a) / 2


def _check_point(grid: StencilGrid, point):
    ia, ib = point
    if not (2 <= ia < grid.a_grid.size - 2 and 2 <= ib < grid.b_grid.size - 2):
        raise IndexError(f"point {point} lacks full stencil support")


def _report(point, lhs, groups: dict) -> ResidualReport:
    rhs = sum(groups.values())
    scale = max(abs(lhs), *(abs(g) for g in groups.values()))
    if scale == 0.0:
        scale = 1.0
    res = lhs - rhs
    return ResidualReport(point, lhs, rhs, res, scale, abs(res) / scale, {"lhs": lhs, **groups})


def pde_residual_uv(grid: StencilGrid, point) -> ResidualReport:
    _check_point(grid, point)
    d = _uv_partials(grid, *point)
    u, v = _physical_point(grid, *point)
    t = grid.t0
    lhs = t * (d["tuu"] - d["tvv"])
    g1 = d["uuv"] * (2 * d["vv"] + d["uv"] - d["uu"] + u - v - t * t)
    g2 = -d["uvv"] * (2 * d["uu"] + d["uv"] - d["vv"] - u + v - t * t)
    g3 = d["uuu"] * (d["uv"] + d["vv"]) - d["vvv"] * (d["uu"] + d["uv"])
    return _report((t, u, v), lhs, {"uuv_group": g1, "uvv_group": g2, "cubic_group": g3})


def pde_residual_xy(grid: StencilGrid, point) -> ResidualReport:
    _check_point(grid, point)
    d = _uv_partials(grid, *point)
    u, v = _physical_point(grid, *point)
    t = grid.t0
    x = u - v
    h_xy = (d["uu"] - d["vv"]) / 4
    h_yy = (d["uu"] + 2 * d["uv"] + d["vv"]) / 4
    h_xyy = (d["uuu"] + d["uuv"] - d["uvv"] - d["vvv"]) / 8
    h_yyy = (d["uuu"] + 3 * d["uuv"] + 3 * d["uvv"] + d["vvv"]) / 8
    dx_diff = -(d["uuv"] - d["uvv"]) / 2  # d/dx (h_xx - h_yy)
    dy_diff = -(d["uuv"] + d["uvv"]) / 2  # d/dy (h_xx - h_yy)
    lhs = 2 * t * (d["tuu"] - d["tvv"]) / 4
    return _report((t, u, v), lhs, {
        "t2_dx": t * t * dx_diff,
        "x_dy": -x * dy_diff,
        "wronskian": 8 * (h_xyy * h_yy - h_xy * h_yyy),
    })


def hierarchy_L(hfun, u: float, v: float, mesh: float = 1e-3) -> float:
    """(d/du - d/dv) d^2/du dv applied to ``hfun(u, v)`` by central differences."""
    offs = mesh * np.arange(-2, 3)
    U, V = np.meshgrid(u + offs, v + offs, indexing="ij")
    vals = np.asarray(hfun(U, V), dtype=float).reshape(5, 5)
    return fd_partial(vals, mesh, (2, 1), (2, 2)) - fd_partial(vals, mesh, (1, 2), (2, 2))


# ---------------------------------------------------------------------------
# closed-form jets


def _q_jet(sol: PainleveSolution, x: float, order: int = 5) -> np.ndarray:
    """q, q', ..., q^(order) at x, higher derivatives from q'' = x q + 2 q^3."""
    j = np.zeros(order + 1)
    j[0] = sol.q_at(x)
    j[1] = sol.qp_at(x)
    # derivatives of f = x q + 2 q^3 via Leibniz, using the jet built so far
    for k in range(2, order + 1):
        n = k - 2
        cube = _mul(_mul(j, j, n), j, n)[n]
        xq = x * j[n] + (n * j[n - 1] if n >= 1 else 0.0)
        j[k] = xq + 2 * cube
    return j


def _mul(a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
    """Leibniz product of two derivative jets."""
    from math import comb

    n = min(a.size, b.size) - 1 if order is None else order
    out = np.zeros(n + 1)
    for k in range(n + 1):
        out[k] = sum(comb(k, i) * a[i] * b[k - i] for i in range(k + 1))
    return out


def _factor_jets(sol: PainleveSolution, x: float, order: int = 3) -> dict:
    """Jets of the univariate building blocks of h2 and h4."""
    qj = _q_jet(sol, x, order + 1)
    q2 = _mul(qj, qj, order)
    qp = qj[1:]
    qp2 = _mul(qp, qp, order - 1)
    q4 = _mul(q2, q2, order - 1)
    t = sol.tails_at(x)
    gp = np.concatenate(([t.gp], -q2[:order]))
    g = np.concatenate(([t.g], gp[:order]))
    g1p = np.concatenate(([t.g1p], -qp2[: order]))
    g2p = np.concatenate(([t.g2p], -q4[: order]))
    return {"q": qj, "q2": q2, "gp": gp, "g": g, "J": 2 * g + g1p - g2p}


def _L_separable(fu: np.ndarray, gv: np.ndarray) -> float:
    # L[f(u) g(v)] = f''(u) g'(v) - f'(u) g''(v)
    return fu[2] * gv[1] - fu[1] * gv[2]


def L_h4_closed_form(u: float, v: float, sol: PainleveSolution | None = None) -> float:
    sol = default_solution() if sol is None else sol
    U = _factor_jets(sol, u)
    V = _factor_jets(sol, v)

    tot = _L_separable(U["q2"], V["q2"] / 4 - _mul(V["gp"], V["gp"], 3) / 2) + _L_separable(U["gp"], V["J"])
    # swapped half: factor in v times factor in u; L[f(v) g(u)] = g''(u) f'(v) - g'(u) f''(v)
    A = V["q2"]
    B = U["q2"] / 4 - _mul(U["gp"], U["gp"], 3) / 2
    tot += B[2] * A[1] - B[1] * A[2]
    tot += U["J"][2] * V["gp"][1] - U["J"][1] * V["gp"][2]
    return float(tot)


def _g_derivs(sol, x):
    """g', g'', g''', g'''' for g = log F2."""
    qj = _q_jet(sol, x, 2)
    q, qp, qpp = qj
    return np.array([sol.tails_at(x).gp, -q * q, -2 * q * qp, -2 * (qp * qp + q * qpp)])


def rhs_order2(u: float, v: float, sol: PainleveSolution | None = None) -> float:
    sol = default_solution() if sol is None else sol
    gu = _g_derivs(sol, u)
    gv = _g_derivs(sol, v)
    return float(gu[2] * gv[1] - gv[2] * gu[1])


def hierarchy_order2_residual(u: float, v: float, sol: PainleveSolution | None = None) -> float:
    """L[h2] - RHS with h2 = g'(u) g'(v), all derivatives in closed form."""
    sol = default_solution() if sol is None else sol
    U = _factor_jets(sol, u)
    V = _factor_jets(sol, v)
    return _L_separable(U["gp"], V["gp"]) - rhs_order2(u, v, sol)


def rhs_order4_forms(u: float, v: float, sol: PainleveSolution | None = None) -> tuple[float, float]:
    """Right-hand side of L[h4] = ... in its g-form and in its q-form.

    The q-form eliminates explicit u, v with u q = q'' - 2 q^3.  Its second
    group, the one without the tail integral, enters with a minus sign; with
    that sign the two forms agree identically.
    """
    sol = default_solution() if sol is None else sol
    g1u, g2u, g3u, g4u = _g_derivs(sol, u)
    g1v, g2v, g3v, g4v = _g_derivs(sol, v)
    g_form = (
        2 * (g3u * g2v**2 - g3v * g2u**2)
        + g3u * g3v * (g1u - g1v)
        + 0.5 * (g4u * 2 * g1v * g2v - g4v * 2 * g1u * g2u)
        + (g3u * g2v + g3v * g2u) * (u - v)
        + 2 * (g3u * g1v - g3v * g1u)
    )

    def half(a, b):
        qa, qpa, qppa = _q_jet(sol, a, 2)
        qb, qpb, qppb = _q_jet(sol, b, 2)
        tail_q2 = -sol.tails_at(b).gp  # int_b^inf q^2
        first = 2 * (2 * qa * qpa * (qb * qpb + 1) - qa * qppa * qb**2 - qpa**2 * qb**2) * tail_q2
        second = 2 * qa * (qa * qpb * qppb + qpa * qb * qppb - 2 * qa * qb**3 * qpb)
        return first - second

    q_form = half(u, v) - half(v, u)
    return float(g_form), float(q_form)


def hierarchy_order4_residual(u: float, v: float, sol: PainleveSolution | None = None, tol: float = 1e-7) -> float:
    """L[h4] - RHS with h4 in closed form; both RHS forms must agree to ``tol``."""
    from .asymptotics import ConsistencyError

    sol = default_solution() if sol is None else sol
    g_form, q_form = rhs_order4_forms(u, v, sol)
    if abs(g_form - q_form) > tol:
        raise ConsistencyError(f"RHS forms disagree at ({u}, {v}): {g_form} vs {q_form}")
    return L_h4_closed_form(u, v, sol) - g_form
