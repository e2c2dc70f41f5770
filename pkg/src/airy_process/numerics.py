"""Numerical kernel shared by the rest of the package.

Gauss-Legendre rules, LU log-determinants, a Hermitian eigenvalue solver
(Householder tridiagonalization followed by implicit-shift QL), central
finite-difference stencils, a tridiagonal solver for Newton iterations and a
seedable Gaussian source.

The Gaussian sampler is Box-Muller on top of numpy's PCG64 uniforms. Each
``RandomStream`` is keyed by ``(seed, stream_id)`` through ``SeedSequence``,
so parallel workers get independent, reproducible substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np

__all__ = [
    "Quadrature",
    "gauss_legendre",
    "composite_gauss_legendre",
    "lu_log_det",
    "hermitian_eigenvalues",
    "tridiagonal_solve",
    "central_weights",
    "fd_partial",
    "RandomStream",
    "gaussian_pair",
    "standard_normals",
]


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _legendre_reference(m: int) -> tuple[np.ndarray, np.ndarray]:
    # Newton on P_m with the three-term recurrence, Tricomi initial guesses.
    k = np.arange(1, m + 1)
    x = np.cos(np.pi * (k - 0.25) / (m + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, m + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        if m == 1:
            p0, p1 = np.ones_like(x), x.copy()
        dp = m * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    # one more evaluation at the converged nodes for the weights
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, m + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    if m == 1:
        p0 = np.ones_like(x)
    dp = m * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    # symmetrize to kill the last-ulp asymmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(m: int, a: float = -1.0, b: float = 1.0) -> Quadrature:
    """m-point Gauss-Legendre rule on [a, b], nodes ascending."""
    if m < 1:
        raise ValueError(f"need at least one node, got m={m}")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("interval bounds must be finite")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = _legendre_reference(int(m))
    half = 0.5 * (b - a)
    return Quadrature(nodes=a + half * (x + 1.0), weights=half * w, interval=(a, b))


def composite_gauss_legendre(breaks, m: int) -> Quadrature:
    """Concatenate m-point rules on consecutive panels given by ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise ValueError("breaks must be strictly increasing with at least two entries")
    x, w = _legendre_reference(int(m))
    lo = breaks[:-1, None]
    half = 0.5 * np.diff(breaks)[:, None]
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return Quadrature(nodes=nodes, weights=weights, interval=(float(breaks[0]), float(breaks[-1])))


def lu_log_det(M) -> tuple[float, int]:
    """Return ``(log|det M|, sign)`` from LU with partial pivoting.

    ``sign`` is 0 when a pivot vanishes relative to the matrix scale, in
    which case the log is ``-inf``.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"lu_log_det needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    if n == 0:
        return 0.0, 1
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return -math.inf, 0
    tiny = scale * n * np.finfo(float).eps * 1e-3
    log_abs = 0.0
    sign = 1
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        pivot = A[p, k]
        if abs(pivot) <= tiny:
            return -math.inf, 0
        if p != k:
            A[[k, p], k:] = A[[p, k], k:]
            sign = -sign
        if pivot < 0:
            sign = -sign
        log_abs += math.log(abs(pivot))
        if k + 1 < n:
            col = A[k + 1 :, k] / pivot
            A[k + 1 :, k + 1 :] -= np.outer(col, A[k, k + 1 :])
    return log_abs, sign


# ---------------------------------------------------------------------------
# Hermitian eigenvalues


@numba.njit(cache=True)
def _tridiagonalize(A):
    """Householder reduction of a Hermitian matrix (overwritten) to real
    symmetric tridiagonal form; returns diagonal and |subdiagonal|."""
    n = A.shape[0]
    d = np.empty(n)
    e = np.zeros(n)
    v = np.empty(n, dtype=np.complex128)
    p = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        alpha = A[k + 1, k]
        s = 0.0
        for i in range(k + 2, n):
            s += A[i, k].real ** 2 + A[i, k].imag ** 2
        xnorm = math.sqrt(abs(alpha) ** 2 + s)
        d[k] = A[k, k].real
        if s == 0.0:
            e[k] = abs(alpha)
            continue
        e[k] = xnorm
        aa = abs(alpha)
        phase = alpha / aa if aa > 0.0 else 1.0 + 0.0j
        beta = -phase * xnorm
        # v = x - beta e1
        v[0] = alpha - beta
        for i in range(1, m):
            v[i] = A[k + 1 + i, k]
        vv = 0.0
        for i in range(m):
            vv += v[i].real ** 2 + v[i].imag ** 2
        tau = 2.0 / vv
        # p = tau * A22 v
        for i in range(m):
            acc = 0.0 + 0.0j
            for j in range(m):
                acc += A[k + 1 + i, k + 1 + j] * v[j]
            p[i] = tau * acc
        kk = 0.0 + 0.0j
        for i in range(m):
            kk += np.conj(v[i]) * p[i]
        kk = 0.5 * tau * kk.real
        for i in range(m):
            p[i] = p[i] - kk * v[i]
        for i in range(m):
            vi = v[i]
            pi = p[i]
            for j in range(m):
                A[k + 1 + i, k + 1 + j] -= vi * np.conj(p[j]) + pi * np.conj(v[j])
    if n >= 2:
        d[n - 2] = A[n - 2, n - 2].real
        e[n - 2] = abs(A[n - 1, n - 2])
    d[n - 1] = A[n - 1, n - 1].real
    return d, e


@numba.njit(cache=True)
def _tql_eigenvalues(d, e):
    """Implicit-shift QL on a symmetric tridiagonal (d diagonal, e[i] couples
    i and i+1). Eigenvalues returned unsorted in d; -1 on non-convergence."""
    n = d.shape[0]
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@numba.njit(cache=True)
def _eigvalsh_kernel(A):
    d, e = _tridiagonalize(A)
    status = _tql_eigenvalues(d, e)
    return np.sort(d), status


def hermitian_eigenvalues(M, *, hermitian_tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, ascending.

    Raises ``ValueError`` if ``M`` deviates from Hermitian by more than
    ``hermitian_tol`` relative to its largest entry.
    """
    A = np.array(M, dtype=np.complex128, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"need a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return np.empty(0)
    scale = max(float(np.max(np.abs(A))), 1.0)
    if np.max(np.abs(A - A.conj().T)) > hermitian_tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    A = 0.5 * (A + A.conj().T)
    vals, status = _eigvalsh_kernel(A)
    if status != 0:
        raise RuntimeError("QL iteration failed to converge")
    return vals


# ---------------------------------------------------------------------------
# Linear solves


def tridiagonal_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm. ``lower[i]`` multiplies x[i-1] in row i (lower[0]
    unused), ``upper[i]`` multiplies x[i+1] (upper[-1] unused)."""
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    r = np.array(rhs, dtype=float)
    n = b.size
    cp = np.empty(n)
    rp = np.empty(n)
    cp[0] = c[0] / b[0]
    rp[0] = r[0] / b[0]
    for i in range(1, n):
        den = b[i] - a[i] * cp[i - 1]
        if den == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        cp[i] = c[i] / den if i < n - 1 else 0.0
        rp[i] = (r[i] - a[i] * rp[i - 1]) / den
    x = np.empty(n)
    x[-1] = rp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = rp[i] - cp[i] * x[i + 1]
    return x


# ---------------------------------------------------------------------------
# Finite differences


_CENTRAL = {
    (1, 2): (-1 / 2, 0.0, 1 / 2),
    (2, 2): (1.0, -2.0, 1.0),
    (3, 2): (-1 / 2, 1.0, 0.0, -1.0, 1 / 2),
    (4, 2): (1.0, -4.0, 6.0, -4.0, 1.0),
    (1, 4): (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
    (2, 4): (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12),
    (3, 4): (1 / 8, -1.0, 13 / 8, 0.0, -13 / 8, 1.0, -1 / 8),
    (4, 4): (-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6),
}


def central_weights(order: int, accuracy: int = 2) -> tuple[float, ...]:
    """Weights of the central stencil for d^order/dx^order, truncation error
    O(h^accuracy); offsets run symmetrically from -r to r."""
    if order == 0:
        return (1.0,)
    try:
        return _CENTRAL[(order, accuracy)]
    except KeyError:
        raise ValueError(f"no central stencil for order={order}, accuracy={accuracy}") from None


def fd_partial(values, spacing, orders, point, accuracy: int = 2) -> float:
    """Central-difference estimate of a mixed partial derivative.

    ``values`` is an n-d array sampled on a uniform grid with per-axis
    ``spacing``; ``orders`` gives the derivative order along each axis and
    ``point`` the grid index where the derivative is wanted. Mixed partials
    are tensor products of the 1-d stencils.
    """
    values = np.asarray(values)
    ndim = values.ndim
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (ndim,))
    if len(orders) != ndim or len(point) != ndim:
        raise ValueError("orders and point must have one entry per axis")
    if any(o > 4 or o < 0 for o in orders):
        raise ValueError("derivative orders must be in 0..4")
    stencils = []
    for axis, (o, i) in enumerate(zip(orders, point)):
        w = central_weights(int(o), accuracy)
        r = len(w) // 2
        if i - r < 0 or i + r >= values.shape[axis]:
            raise IndexError(f"stencil of radius {r} at index {i} exceeds axis {axis} of size {values.shape[axis]}")
        stencils.append((np.asarray(w) / spacing[axis] ** o, r))
    block = values[tuple(slice(i - r, i + r + 1) for (_, r), i in zip(stencils, point))]
    for w, _ in reversed(stencils):
        block = block @ w
    return float(block)


# ---------------------------------------------------------------------------
# Random numbers


@dataclass
class RandomStream:
    """Seeded uniform source; ``(seed, stream_id)`` fixes the sequence."""

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=(int(self.stream_id),))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniforms(self, size) -> np.ndarray:
        # open interval (0, 1]; keeps log() finite in Box-Muller
        return 1.0 - self._gen.random(size)


def standard_normals(stream: RandomStream, size: int) -> np.ndarray:
    """``size`` standard normal deviates by Box-Muller, generated in pairs."""
    npairs = (int(size) + 1) // 2
    u1 = stream.uniforms(npairs)
    u2 = stream.uniforms(npairs)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * npairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:size]


def gaussian_pair(stream: RandomStream) -> tuple[float, float]:
    z = standard_normals(stream, 2)
    return float(z[0]), float(z[1])
