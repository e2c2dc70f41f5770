"""Hastings-McLeod solution of Painleve II and the Tracy-Widom distribution.

``q'' = alpha q + 2 q^3`` with ``q ~ -Ai(alpha)`` as alpha -> +inf and
``q ~ sqrt(-alpha/2)`` in magnitude as alpha -> -inf.  The sign convention is
``q < 0`` throughout; every quantity computed from ``q`` here is even in ``q``.

Shooting from the right is unstable (the solution is a separatrix), so the
boundary-value problem is solved on ``[alpha_min, alpha_max]`` with a Numerov
(fourth order) discretization and Newton iteration.  Boundary data:
``q(alpha_max) = -Ai(alpha_max)`` and
``q(alpha_min) = -sqrt(-alpha/2) (1 + 1/(8 alpha^3))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .airy_fredholm import airy_pair
from .numerics import gauss_legendre, tridiagonal_solve

__all__ = [
    "PainleveSolution",
    "TailIntegrals",
    "ConvergenceError",
    "solve_hastings_mcleod",
    "default_solution",
    "q_at",
    "qp_at",
    "tails_at",
    "f2_cdf",
    "f2_pdf",
    "left_asymptote",
]


class ConvergenceError(RuntimeError):
    pass


def left_asymptote(alpha):
    """Negative branch for alpha -> -inf, with the first correction term."""
    a = np.asarray(alpha, dtype=float)
    return -np.sqrt(-a / 2.0) * (1.0 + 1.0 / (8.0 * a**3))


def _left_asymptote_prime(alpha):
    a = np.asarray(alpha, dtype=float)
    r = np.sqrt(-a / 2.0)
    # d/da of -r (1 + a^-3/8)
    return (1.0 / (4.0 * r)) * (1.0 + 1.0 / (8.0 * a**3)) + r * 3.0 / (8.0 * a**4)


def _rhs(alpha, q):
    return alpha * q + 2.0 * q**3


def _third(alpha, q, qp):
    return q + (alpha + 6.0 * q * q) * qp


def _fourth(alpha, q, qp):
    f = _rhs(alpha, q)
    return 2.0 * qp + alpha * f + 12.0 * q * qp * qp + 6.0 * q * q * f


def _fifth(alpha, q, qp):
    f = _rhs(alpha, q)
    f3 = _third(alpha, q, qp)
    return 3.0 * f + alpha * f3 + 12.0 * qp**3 + 36.0 * q * qp * f + 6.0 * q * q * f3


@dataclass(frozen=True)
class PainleveSolution:
    alpha_min: float
    alpha_max: float
    grid: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    newton_iterations: int
    # cumulative right-tail integrals at each node (including the tail past alpha_max)
    cum_q2: np.ndarray
    cum_aq2: np.ndarray
    cum_qp2: np.ndarray
    cum_q4: np.ndarray

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def q_second(self) -> np.ndarray:
        return _rhs(self.grid, self.q)

    def q_at(self, alpha):
        return q_at(self, alpha)

    def qp_at(self, alpha):
        return qp_at(self, alpha)

    def tails_at(self, u):
        return tails_at(self, u)

    def f2_cdf(self, u):
        return f2_cdf(self, u)

    def f2_pdf(self, u):
        return f2_pdf(self, u)


@dataclass(frozen=True)
class TailIntegrals:
    """Right-tail integrals of the Painleve function at ``u``.

    gp = int_u^inf q^2, g = int_u^inf (u - a) q^2, g1p = int_u^inf q'^2,
    g2p = int_u^inf q^4.
    """

    u: float | np.ndarray
    gp: float | np.ndarray
    g: float | np.ndarray
    g1p: float | np.ndarray
    g2p: float | np.ndarray


def _initial_guess(alpha):
    ai, _ = airy_pair(alpha)
    left = np.sqrt(np.maximum(-alpha, 0.0) / 2.0)
    return -((np.abs(ai) ** 4 + left**4) ** 0.25)


def _endpoint_derivative(a0, q0, q1, h):
    """q' at a grid end from a one-sided Taylor step using the ODE for the
    higher derivatives; fixed point in q' (converges in a few sweeps)."""
    qp = (q1 - q0) / h
    for _ in range(8):
        f = _rhs(a0, q0)
        t3 = _third(a0, q0, qp)
        t4 = _fourth(a0, q0, qp)
        t5 = _fifth(a0, q0, qp)
        qp = (q1 - q0 - h * h / 2 * f - h**3 / 6 * t3 + h**3 / 6 * (a0 + 6 * q0 * q0) * qp - h**4 / 24 * t4 - h**5 / 120 * t5)
        qp = qp / (h + h**3 / 6 * (a0 + 6 * q0 * q0))
    return qp


def _hermite5(x0, h, y0, d0, s0, y1, d1, s1, t):
    """Quintic Hermite value and first derivative at local coordinate t in [0,1]."""
    t2, t3, t4, t5 = t * t, t**3, t**4, t**5
    h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h10 = t - 6 * t3 + 8 * t4 - 3 * t5
    h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
    h01 = 10 * t3 - 15 * t4 + 6 * t5
    h11 = -4 * t3 + 7 * t4 - 3 * t5
    h21 = 0.5 * (t3 - 2 * t4 + t5)
    val = h00 * y0 + h * h10 * d0 + h * h * h20 * s0 + h01 * y1 + h * h11 * d1 + h * h * h21 * s1
    g00 = -30 * t2 + 60 * t3 - 30 * t4
    g10 = 1 - 18 * t2 + 32 * t3 - 15 * t4
    g20 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4)
    g01 = 30 * t2 - 60 * t3 + 30 * t4
    g11 = -12 * t2 + 28 * t3 - 15 * t4
    g21 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4)
    der = (g00 * y0 + h * g10 * d0 + h * h * g20 * s0 + g01 * y1 + h * g11 * d1 + h * h * g21 * s1) / h
    return val, der


def _interp(sol_grid, q, qp, alpha):
    """q and q' at arbitrary points inside the grid (vectorized)."""
    a0 = sol_grid[0]
    h = sol_grid[1] - sol_grid[0]
    n = sol_grid.size
    idx = np.clip(np.floor((alpha - a0) / h).astype(int), 0, n - 2)
    t = (alpha - sol_grid[idx]) / h
    s = _rhs(sol_grid, q)
    return _hermite5(sol_grid[idx], h, q[idx], qp[idx], s[idx], q[idx + 1], qp[idx + 1], s[idx + 1], t)


def _right_tail_closed_forms(b):
    """Integrals over [b, inf) with q = -Ai: (q^2, alpha q^2, q'^2, q^4)."""
    ai, aip = airy_pair(b)
    tq2 = aip**2 - b * ai**2
    taq2 = -(b * b * ai**2 - b * aip**2 + ai * aip) / 3.0
    tqp2 = (b * b * ai**2 - b * aip**2 - 2.0 * ai * aip) / 3.0
    tq4 = ai**4 / (4.0 * np.sqrt(b))
    return tq2, taq2, tqp2, tq4


_CELL_ORDER = 8


def solve_hastings_mcleod(alpha_min: float = -10.0, alpha_max: float = 8.0, n_nodes: int = 4001, tol: float = 1e-13, max_iter: int = 50) -> PainleveSolution:
    if alpha_max < 6.0:
        raise ValueError("alpha_max must be at least 6 for the Airy boundary condition")
    if alpha_min > -8.0:
        raise ValueError("alpha_min must be at most -8 for the left boundary condition")
    if n_nodes < 2000:
        raise ValueError("n_nodes must be at least 2000")
    grid = np.linspace(alpha_min, alpha_max, int(n_nodes))
    h = grid[1] - grid[0]
    if not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    h2 = h * h / 12.0
    q = _initial_guess(grid)
    q[0] = float(left_asymptote(alpha_min))
    q[-1] = -airy_pair(alpha_max)[0]

    it = 0
    for it in range(1, max_iter + 1):
        f = _rhs(grid, q)
        fp = grid + 6.0 * q * q
        F = q[:-2] - 2.0 * q[1:-1] + q[2:] - h2 * (f[:-2] + 10.0 * f[1:-1] + f[2:])
        lower = 1.0 - h2 * fp[:-2]
        diag = -2.0 - 10.0 * h2 * fp[1:-1]
        upper = 1.0 - h2 * fp[2:]
        dq = tridiagonal_solve(lower, diag, upper, -F)
        q[1:-1] += dq
        if np.max(np.abs(dq)) < tol:
            break
    else:
        raise ConvergenceError(f"Newton did not converge in {max_iter} iterations")
    if np.any(q >= 0):
        raise ConvergenceError("Newton converged to a solution that is not negative everywhere")

    # q' in the interior: central difference corrected with the ODE (O(h^4))
    f = _rhs(grid, q)
    qp = np.empty_like(q)
    qp[1:-1] = (q[2:] - q[:-2]) / (2 * h) - (h / 12.0) * (f[2:] - f[:-2])
    qp[0] = _endpoint_derivative(grid[0], q[0], q[1], h)
    qp[-1] = _endpoint_derivative(grid[-1], q[-1], q[-2], -h)

    # per-cell Gauss-Legendre integrals of q^2, a q^2, q'^2, q^4
    ref = gauss_legendre(_CELL_ORDER, 0.0, 1.0)
    t = ref.nodes
    s = f
    qv, qd = _hermite5(grid[:-1, None], h, q[:-1, None], qp[:-1, None], s[:-1, None], q[1:, None], qp[1:, None], s[1:, None], t[None, :])
    a = grid[:-1, None] + h * t[None, :]
    w = h * ref.weights[None, :]
    cells = [np.sum(w * qv**2, axis=1), np.sum(w * a * qv**2, axis=1), np.sum(w * qd**2, axis=1), np.sum(w * qv**4, axis=1)]
    tails = _right_tail_closed_forms(alpha_max)
    cums = []
    for c, tl in zip(cells, tails):
        cum = np.empty(grid.size)
        cum[-1] = tl
        cum[:-1] = tl + np.cumsum(c[::-1])[::-1]
        cums.append(cum)

    for arr in (grid, q, qp, *cums):
        arr.setflags(write=False)
    return PainleveSolution(float(alpha_min), float(alpha_max), grid, q, qp, it, *cums)


@lru_cache(maxsize=4)
def default_solution(n_nodes: int = 4001) -> PainleveSolution:
    return solve_hastings_mcleod(n_nodes=n_nodes)


def _as_array(x):
    xa = np.asarray(x, dtype=float)
    return xa, xa.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def q_at(sol: PainleveSolution, alpha):
    """q(alpha); outside the grid the asymptotic branches are returned."""
    a, scalar = _as_array(alpha)
    a = np.atleast_1d(a)
    out = np.empty_like(a)
    inside = (a >= sol.alpha_min) & (a <= sol.alpha_max)
    right = a > sol.alpha_max
    left = a < sol.alpha_min
    if np.any(inside):
        out[inside] = _interp(sol.grid, sol.q, sol.q_prime, a[inside])[0]
    if np.any(right):
        out[right] = -airy_pair(a[right])[0]
    if np.any(left):
        out[left] = left_asymptote(a[left])
    return _ret(out[0], True) if scalar else out


def qp_at(sol: PainleveSolution, alpha):
    a, scalar = _as_array(alpha)
    a = np.atleast_1d(a)
    out = np.empty_like(a)
    inside = (a >= sol.alpha_min) & (a <= sol.alpha_max)
    right = a > sol.alpha_max
    left = a < sol.alpha_min
    if np.any(inside):
        out[inside] = _interp(sol.grid, sol.q, sol.q_prime, a[inside])[1]
    if np.any(right):
        out[right] = -airy_pair(a[right])[1]
    if np.any(left):
        out[left] = _left_asymptote_prime(a[left])
    return _ret(out[0], True) if scalar else out


def _partial_cell(sol: PainleveSolution, u):
    """Integrals from u up to the next grid node, and that node's index."""
    h = sol.h
    n = sol.grid.size
    idx = np.clip(np.floor((u - sol.alpha_min) / h).astype(int), 0, n - 2)
    right = sol.grid[idx + 1]
    ref = gauss_legendre(_CELL_ORDER, 0.0, 1.0)
    span = right - u
    a = u[:, None] + span[:, None] * ref.nodes[None, :]
    w = span[:, None] * ref.weights[None, :]
    qv, qd = _interp(sol.grid, sol.q, sol.q_prime, a)
    parts = (np.sum(w * qv**2, axis=1), np.sum(w * a * qv**2, axis=1), np.sum(w * qd**2, axis=1), np.sum(w * qv**4, axis=1))
    return parts, idx + 1


def _raw_tails(sol: PainleveSolution, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u < sol.alpha_min):
        raise ValueError(f"u below the solved domain [{sol.alpha_min}, {sol.alpha_max}]")
    q2 = np.empty_like(u)
    aq2 = np.empty_like(u)
    qp2 = np.empty_like(u)
    q4 = np.empty_like(u)
    inside = u <= sol.alpha_max
    if np.any(inside):
        (p1, p2, p3, p4), nxt = _partial_cell(sol, u[inside])
        q2[inside] = p1 + sol.cum_q2[nxt]
        aq2[inside] = p2 + sol.cum_aq2[nxt]
        qp2[inside] = p3 + sol.cum_qp2[nxt]
        q4[inside] = p4 + sol.cum_q4[nxt]
    if np.any(~inside):
        q2[~inside], aq2[~inside], qp2[~inside], q4[~inside] = _right_tail_closed_forms(u[~inside])
    return u, q2, aq2, qp2, q4


def tails_at(sol: PainleveSolution, u) -> TailIntegrals:
    ua, scalar = _as_array(u)
    uu, q2, aq2, qp2, q4 = _raw_tails(sol, ua)
    g = uu * q2 - aq2
    if scalar:
        return TailIntegrals(float(ua), float(q2[0]), float(g[0]), float(qp2[0]), float(q4[0]))
    return TailIntegrals(ua, q2, g, qp2, q4)


def _log_f2_and_gp(sol: PainleveSolution, u):
    """log F2 and gp = (log F2)' for any real u; below the grid the left
    asymptote of q is integrated from alpha_min."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    logf = np.empty_like(u)
    gp = np.empty_like(u)
    ok = u >= sol.alpha_min
    if np.any(ok):
        t = tails_at(sol, u[ok])
        logf[ok] = t.g
        gp[ok] = t.gp
    if np.any(~ok):
        a = sol.alpha_min
        base = tails_at(sol, a)
        for k in np.flatnonzero(~ok):
            x = u[k]
            quad = gauss_legendre(48, x, a)

            def gp_at(s):
                inner = gauss_legendre(48, 0.0, 1.0)
                pts = s[:, None] + (a - s)[:, None] * inner.nodes[None, :]
                vals = left_asymptote(pts) ** 2
                return base.gp + (a - s) * (vals @ inner.weights)

            gp[k] = gp_at(np.array([x]))[0]
            logf[k] = base.g - np.dot(quad.weights, gp_at(quad.nodes))
    return logf, gp


def f2_cdf(sol: PainleveSolution, u):
    """Tracy-Widom GUE distribution F2(u) = exp(-int_u^inf (a-u) q^2 da)."""
    ua, scalar = _as_array(u)
    logf, _ = _log_f2_and_gp(sol, ua)
    val = np.exp(logf)
    return float(val[0]) if scalar else val


def f2_pdf(sol: PainleveSolution, u):
    """F2'(u) = F2(u) * int_u^inf q^2."""
    ua, scalar = _as_array(u)
    logf, gp = _log_f2_and_gp(sol, ua)
    val = np.exp(logf) * gp
    return float(val[0]) if scalar else val
