"""Airy function, extended Airy kernel and Fredholm determinants.

One- and two-time distribution functions of the Airy process are Fredholm
determinants ``det(I - K)`` of the extended Airy kernel restricted to
``[u_i, inf)``.  We discretize with Gauss-Legendre Nystrom on ``[u_i, u_i+L]``
using square-root weights, and take the determinant by LU.

Kernel entries between different times ``t_i, t_j`` are z-integrals of
``exp(-z (t_i - t_j)) Ai(x+z) Ai(y+z)``.  For ``t_i >= t_j`` the integral runs
over ``z > 0`` and is done on composite Gauss-Legendre panels (graded near 0
when the exponential is steep).  For ``t_i < t_j`` the defining integral is over
``z < 0`` where the integrand decays only like ``exp(-s|z|)``, ``s = t_j - t_i``.
For ``s >= BACKWARD_SWITCH`` we integrate it directly; for smaller ``s`` we
use the whole-line identity

    int_R exp(s z) Ai(x+z) Ai(y+z) dz
        = (4 pi s)^(-1/2) exp(s^3/12 - s(x+y)/2 - (x-y)^2/(4s))

and integrate only the convergent half-line ``z > 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .numerics import composite_gauss_legendre, gauss_legendre, lu_log_det

__all__ = [
    "airy_ai",
    "airy_ai_prime",
    "airy_pair",
    "KernelSpec",
    "FredholmResult",
    "FredholmError",
    "extended_kernel_entry",
    "joint_probability",
    "joint_cdf",
    "joint_cdf_grid",
]

AI0 = 0.355028053887817239260063186004183176  # 3^(-2/3) / Gamma(2/3)
AIP0 = -0.258819403792806798405183560189203963  # -3^(-1/3) / Gamma(1/3)

# Taylor-table region; outside it the asymptotic expansions are used.
_TAB_LO, _TAB_HI, _TAB_STEP = -12.0, 9.0, 0.125
_TAYLOR_TERMS = 28
_ACCURATE_RANGE = (-60.0, 200.0)


# ---------------------------------------------------------------------------
# Airy function


def _taylor_coeffs(c: float, y0: float, y1: float, nterms: int) -> np.ndarray:
    # y'' = x y expanded at c: a_{k+2} = (c a_k + a_{k-1}) / ((k+2)(k+1))
    a = np.zeros(nterms)
    a[0], a[1] = y0, y1
    a[2] = c * y0 / 2.0
    for k in range(1, nterms - 2):
        a[k + 2] = (c * a[k] + a[k - 1]) / ((k + 2) * (k + 1))
    return a


def _taylor_step(c, y0, y1, h):
    a = _taylor_coeffs(c, y0, y1, 60)
    k = np.arange(60)
    return float(np.sum(a * h**k)), float(np.sum(k[1:] * a[1:] * h ** (k[1:] - 1)))


def _asymptotic_coeffs(n: int) -> tuple[np.ndarray, np.ndarray]:
    u = np.ones(n)
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    v = np.array([-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(n)])
    return u, v


_U, _V = _asymptotic_coeffs(20)


def _asym_positive(x: np.ndarray):
    zeta = (2.0 / 3.0) * x**1.5
    s_u = np.zeros_like(x)
    s_v = np.zeros_like(x)
    for k in range(_U.size - 1, -1, -1):
        s_u = s_u * (-1.0 / zeta) + _U[k]
        s_v = s_v * (-1.0 / zeta) + _V[k]
    with np.errstate(under="ignore"):
        e = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    x4 = x**0.25
    return e / x4 * s_u, -x4 * e * s_v


def _asym_negative(x: np.ndarray):
    r = -x
    zeta = (2.0 / 3.0) * r**1.5
    iz2 = -1.0 / (zeta * zeta)
    pe = np.zeros_like(r)
    po = np.zeros_like(r)
    qe = np.zeros_like(r)
    qo = np.zeros_like(r)
    for k in range(_U.size // 2 - 1, -1, -1):
        pe = pe * iz2 + _U[2 * k]
        po = po * iz2 + _U[2 * k + 1]
        qe = qe * iz2 + _V[2 * k]
        qo = qo * iz2 + _V[2 * k + 1]
    po /= zeta
    qo /= zeta
    th = zeta - math.pi / 4.0
    c, s = np.cos(th), np.sin(th)
    r4 = r**0.25
    sp = math.sqrt(math.pi)
    return (c * pe + s * po) / (sp * r4), r4 * (s * qe - c * qo) / sp


@lru_cache(maxsize=1)
def _airy_table():
    """Taylor coefficients of Ai at equispaced centers on [_TAB_LO, _TAB_HI].

    Anchors: exact values at 0 carried to the negative side (neutrally
    stable, oscillatory), and the asymptotic series at _TAB_HI carried
    downward to 0 (stable for the recessive solution).
    """
    centers = np.arange(_TAB_LO, _TAB_HI + 0.5 * _TAB_STEP, _TAB_STEP)
    vals = np.empty((centers.size, 2))
    i0 = int(round(-_TAB_LO / _TAB_STEP))
    vals[i0] = (AI0, AIP0)
    for i in range(i0, 0, -1):
        vals[i - 1] = _taylor_step(centers[i], *vals[i], -_TAB_STEP)
    top = np.array([_TAB_HI])
    a, ap = _asym_positive(top)
    vals[-1] = (a[0], ap[0])
    for i in range(centers.size - 1, i0 + 1, -1):
        vals[i - 1] = _taylor_step(centers[i], *vals[i], -_TAB_STEP)
    coeffs = np.array([_taylor_coeffs(c, y0, y1, _TAYLOR_TERMS) for c, (y0, y1) in zip(centers, vals)])
    return centers, coeffs


def airy_pair(x):
    """Return ``(Ai(x), Ai'(x))`` for scalar or array ``x``.

    Absolute error is about 1e-15 on [-12, 9] (Taylor table) and below 1e-13
    elsewhere inside [-60, 200]. Outside that range the asymptotic
    expansions are still returned, with a warning.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any((xa < _ACCURATE_RANGE[0]) | (xa > _ACCURATE_RANGE[1])):
        warnings.warn("airy_pair: argument outside [-60, 200]; asymptotic branch, reduced accuracy", stacklevel=2)
    ai = np.empty_like(xa)
    aip = np.empty_like(xa)
    lo = xa < _TAB_LO
    hi = xa > _TAB_HI
    mid = ~(lo | hi)
    if np.any(lo):
        ai[lo], aip[lo] = _asym_negative(xa[lo])
    if np.any(hi):
        ai[hi], aip[hi] = _asym_positive(xa[hi])
    if np.any(mid):
        centers, coeffs = _airy_table()
        xm = xa[mid]
        idx = np.clip(np.rint((xm - _TAB_LO) / _TAB_STEP).astype(int), 0, centers.size - 1)
        h = xm - centers[idx]
        c = coeffs[idx]
        y = np.zeros_like(xm)
        dy = np.zeros_like(xm)
        for k in range(_TAYLOR_TERMS - 1, 0, -1):
            y = y * h + c[:, k]
            dy = dy * h + k * c[:, k]
        y = y * h + c[:, 0]
        ai[mid], aip[mid] = y, dy
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip


def airy_ai(x):
    return airy_pair(x)[0]


def airy_ai_prime(x):
    return airy_pair(x)[1]


# ---------------------------------------------------------------------------
# Kernel discretization


class FredholmError(RuntimeError):
    """Discretized Fredholm problem is singular or a quadrature failed."""


BACKWARD_SWITCH = 1.0
_UPPER_FLOOR = 10.0  # intervals always reach at least this far to the right


@dataclass(frozen=True)
class KernelSpec:
    times: tuple[float, ...]
    thresholds: tuple[float, ...]
    truncation: float = 16.0
    quad_order: int = 64
    z_quad_order: int = 20  # Gauss-Legendre nodes per z-panel

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "thresholds", tuple(float(u) for u in self.thresholds))
        if len(self.times) != len(self.thresholds) or not self.times:
            raise ValueError("times and thresholds must be nonempty and of equal length")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be weakly increasing")
        if not self.truncation > 0:
            raise ValueError("truncation length must be positive")
        if self.quad_order < 8 or self.z_quad_order < 8:
            raise ValueError("quadrature orders must be at least 8")
        if not all(math.isfinite(u) for u in self.thresholds):
            raise ValueError("thresholds must be finite")

    @property
    def m(self) -> int:
        return len(self.times)

    def coarse(self) -> "KernelSpec":
        return KernelSpec(self.times, self.thresholds, self.truncation - 4.0, max(8, self.quad_order // 2), self.z_quad_order)


@dataclass(frozen=True)
class FredholmResult:
    value: float
    refinement_error: float


def _min_gap_order(spec: KernelSpec) -> int:
    """Quadrature order needed to resolve the heat-kernel part of backward
    blocks, whose width is sqrt(2 s)."""
    gaps = [abs(b - a) for a in spec.times for b in spec.times if 0 < abs(b - a) < BACKWARD_SWITCH]
    if not gaps:
        return spec.quad_order
    sigma = math.sqrt(2.0 * min(gaps))
    span = max(spec.truncation, _UPPER_FLOOR - min(spec.thresholds))
    return max(spec.quad_order, int(math.ceil(math.pi * span / (1.4 * sigma))))


def _interval_rule(u: float, spec: KernelSpec, order: int):
    b = max(u + spec.truncation, _UPPER_FLOOR)
    q = gauss_legendre(order, u, b)
    return q.nodes, np.sqrt(q.weights)


def _z_horizon(u_floor: float) -> float:
    # Ai(x + z) for x >= u_floor is below 1e-21 once x + z >= 16
    return float(max(2.0, math.ceil(16.0 - u_floor)))


@lru_cache(maxsize=256)
def _forward_z_rule(tau: float, u_floor: float, order: int):
    """Nodes/weights for int_0^inf exp(-tau z) (.) dz, weight included."""
    zmax = _z_horizon(u_floor)
    if tau > 0:
        zmax = min(zmax, 45.0 / tau)
    panel = 1.0 if tau <= 1.0 else 1.0 / tau
    if tau > 1.0:
        # graded panels: 0, 1/tau, 2/tau, 4/tau, ... then unit panels
        br = [0.0]
        step = panel
        while br[-1] + step < min(zmax, 1.0):
            br.append(br[-1] + step)
            step *= 2.0
        br.append(min(zmax, max(br[-1] + step, 1.0)))
        while br[-1] < zmax:
            br.append(min(zmax, br[-1] + 1.0))
        breaks = np.array(br)
    else:
        breaks = np.linspace(0.0, zmax, int(math.ceil(zmax / panel)) + 1)
    q = composite_gauss_legendre(breaks, order)
    return q.nodes, q.weights * np.exp(-tau * q.nodes)


@lru_cache(maxsize=256)
def _backward_direct_rule(s: float, u_floor: float, order: int):
    """Nodes/weights for int_{-inf}^0 exp(s z) (.) dz."""
    zneg = 45.0 / s
    npan = int(math.ceil(zneg / 0.5))
    q = composite_gauss_legendre(np.linspace(-zneg, 0.0, npan + 1), order)
    return q.nodes, q.weights * np.exp(s * q.nodes)


@lru_cache(maxsize=256)
def _backward_half_rule(s: float, u_floor: float, order: int):
    """Nodes/weights for int_0^inf exp(s z) (.) dz (heat-kernel form)."""
    zmax = _z_horizon(u_floor) + 4.0 * s
    q = composite_gauss_legendre(np.linspace(0.0, zmax, int(math.ceil(zmax)) + 1), order)
    return q.nodes, q.weights * np.exp(s * q.nodes)


def _airy_kernel_matrix(x, y, ax=None, apx=None, ay=None, apy=None):
    """Equal-time Airy kernel by the Christoffel-Darboux form."""
    if ax is None:
        ax, apx = airy_pair(x)
    if ay is None:
        ay, apy = airy_pair(y)
    X = x[:, None]
    Y = y[None, :]
    num = np.outer(ax, apy) - np.outer(apx, ay)
    diff = X - Y
    close = np.abs(diff) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(close, 0.0, num / np.where(close, 1.0, diff))
    if np.any(close):
        conf = (apx**2 - x * ax**2)[:, None] * np.ones_like(Y)
        K = np.where(close, conf, K)
    return K


def _heat(x, y, s):
    X = x[:, None]
    Y = y[None, :]
    return np.exp(s**3 / 12.0 - s * (X + Y) / 2.0 - (X - Y) ** 2 / (4.0 * s)) / math.sqrt(4.0 * math.pi * s)


def _z_integral(x, y, z, wz):
    Ax = airy_ai(x[:, None] + z[None, :])
    Ay = airy_ai(y[:, None] + z[None, :])
    return (Ax * wz) @ Ay.T


def _kernel_block(ti, tj, x, y, u_floor, zorder, pairs=None):
    """K_ij(x_r, y_s) on the product of two node sets."""
    tau = ti - tj
    if tau == 0.0:
        if pairs is not None:
            (ax, apx), (ay, apy) = pairs
            return _airy_kernel_matrix(x, y, ax, apx, ay, apy)
        return _airy_kernel_matrix(x, y)
    if tau > 0:
        z, wz = _forward_z_rule(tau, u_floor, zorder)
        return _z_integral(x, y, z, wz)
    s = -tau
    if s >= BACKWARD_SWITCH:
        z, wz = _backward_direct_rule(s, u_floor, zorder)
        return -_z_integral(x, y, z, wz)
    z, wz = _backward_half_rule(s, u_floor, zorder)
    return _z_integral(x, y, z, wz) - _heat(x, y, s)


def extended_kernel_entry(spec: KernelSpec, i: int, j: int, x: float, y: float) -> float:
    """Single entry K_ij(x, y) of the extended Airy kernel for ``spec``."""
    if x < spec.thresholds[i] or y < spec.thresholds[j]:
        raise ValueError("kernel arguments must lie above their thresholds")
    u_floor = min(spec.thresholds)
    K = _kernel_block(spec.times[i], spec.times[j], np.array([x], float), np.array([y], float), u_floor, spec.z_quad_order)
    return float(K[0, 0])


def _log_det_from_blocks(blocks) -> tuple[float, int]:
    M = np.block(blocks)
    M = np.eye(M.shape[0]) - M
    return lu_log_det(M)


def _finish(logdet: float, sign: int) -> float:
    if sign == 0:
        raise FredholmError("discretized operator I - K is singular; increase quad_order or truncation")
    val = sign * math.exp(logdet) if logdet > -745 else 0.0
    if val < -1e-10 or val > 1 + 1e-10:
        raise FredholmError(f"determinant {val:.3e} outside [0, 1]; discretization too coarse")
    return min(max(val, 0.0), 1.0)


def _merge_equal_times(spec: KernelSpec) -> KernelSpec:
    # A(t) <= u and A(t) <= u' is A(t) <= min(u, u'); the kernel formula
    # itself is only meaningful for distinct times.
    times, thr = [], []
    for t, u in zip(spec.times, spec.thresholds):
        if times and t == times[-1]:
            thr[-1] = min(thr[-1], u)
        else:
            times.append(t)
            thr.append(u)
    if len(times) == spec.m:
        return spec
    return KernelSpec(tuple(times), tuple(thr), spec.truncation, spec.quad_order, spec.z_quad_order)


def joint_probability(spec: KernelSpec) -> float:
    """P(A(t_1) <= u_1, ..., A(t_m) <= u_m) from the discretized determinant."""
    spec = _merge_equal_times(spec)
    order = _min_gap_order(spec)
    u_floor = min(spec.thresholds)
    nodes = [_interval_rule(u, spec, order) for u in spec.thresholds]
    pairs = [airy_pair(x) for x, _ in nodes]
    blocks = []
    for i in range(spec.m):
        row = []
        xi, swi = nodes[i]
        for j in range(spec.m):
            xj, swj = nodes[j]
            K = _kernel_block(spec.times[i], spec.times[j], xi, xj, u_floor, spec.z_quad_order, (pairs[i], pairs[j]))
            row.append(swi[:, None] * K * swj[None, :])
        blocks.append(row)
    return _finish(*_log_det_from_blocks(blocks))


def joint_cdf(spec: KernelSpec) -> FredholmResult:
    """Joint distribution value together with a refinement error estimate
    (difference to the same problem with half the nodes and L - 4)."""
    if spec.m not in (1, 2):
        warnings.warn("only one- and two-time probabilities are validated", stacklevel=2)
    if min(spec.thresholds) < -10:
        raise ValueError("thresholds below -10 are outside the supported range")
    fine = joint_probability(spec)
    coarse = joint_probability(spec.coarse())
    return FredholmResult(value=fine, refinement_error=abs(fine - coarse))


def joint_cdf_grid(t: float, u_grid, v_grid, *, truncation: float = 16.0, quad_order: int = 64, z_quad_order: int = 20) -> np.ndarray:
    """P(A(0) <= u, A(t) <= v) for every pair of the two grids.

    Node sets, Airy values and half-kernel factors are computed once per
    threshold and reused across the grid; values equal pointwise
    ``joint_probability`` calls on ``KernelSpec((0, t), (u, v))``.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    v_grid = np.asarray(v_grid, dtype=float)
    if np.any(np.diff(u_grid) <= 0) or np.any(np.diff(v_grid) <= 0):
        raise ValueError("grids must be strictly ascending")
    if t < 0:
        raise ValueError("time separation must be nonnegative")
    out = np.empty((u_grid.size, v_grid.size))
    t = float(t)
    zo = z_quad_order

    cache: dict[tuple[float, float], tuple] = {}

    def prep(u, u_floor, spec):
        key = (u, u_floor)
        if key not in cache:
            x, sw = _interval_rule(u, spec, order)
            ax, apx = airy_pair(x)
            Kself = sw[:, None] * _airy_kernel_matrix(x, x, ax, apx, ax, apx) * sw[None, :]
            fac = {}
            if t > 0:
                z, wz = _forward_z_rule(t, u_floor, zo)
                fac["fwd"] = sw[:, None] * airy_ai(x[:, None] + z[None, :]) * np.sqrt(wz)[None, :]
                if t >= BACKWARD_SWITCH:
                    z, wz = _backward_direct_rule(t, u_floor, zo)
                else:
                    z, wz = _backward_half_rule(t, u_floor, zo)
                fac["bwd"] = sw[:, None] * airy_ai(x[:, None] + z[None, :]) * np.sqrt(wz)[None, :]
            cache[key] = (x, sw, (ax, apx), Kself, fac)
        return cache[key]

    for a, u in enumerate(u_grid):
        for b, v in enumerate(v_grid):
            spec = KernelSpec((0.0, t), (u, v), truncation, quad_order, zo)
            order = _min_gap_order(spec)
            u_floor = min(u, v)
            xu, swu, pu, K11, fu = prep(float(u), u_floor, spec)
            xv, swv, pv, K22, fv = prep(float(v), u_floor, spec)
            if t == 0.0:
                out[a, b] = _finish(*_log_det_from_blocks([[K11]] if u <= v else [[K22]]))
                continue
            else:
                # block (2,1): t_2 - t_1 = t > 0; block (1,2): backward
                K21 = fv["fwd"] @ fu["fwd"].T
                K12 = fu["bwd"] @ fv["bwd"].T
                if t >= BACKWARD_SWITCH:
                    K12 = -K12
                else:
                    K12 = K12 - swu[:, None] * _heat(xu, xv, t) * swv[None, :]
            out[a, b] = _finish(*_log_det_from_blocks([[K11, K12], [K21, K22]]))
    return out
