"""Monte Carlo for the coupled Gaussian Hermitian pair.

The joint weight ``exp(-Tr(M1^2 + M2^2 - 2c M1 M2) / 2)`` factors, after
completing the square in M2, as

    exp(-(1 - c^2) Tr M1^2 / 2) * exp(-Tr(M2 - c M1)^2 / 2),

so ``M1 = H / sqrt(1 - c^2)`` with H a standard Gaussian Hermitian matrix and
``M2 = c M1 + G`` with G independent of M1 and distributed like H.  By the
symmetry of the weight both marginals equal ``H / sqrt(1 - c^2)``.

"Standard" means diagonal entries N(0, 1) and off-diagonal real and
imaginary parts N(0, 1/2) each, the ensemble with weight ``exp(-Tr M^2 / 2)``.
Its spectral edge sits at ``2 sqrt(n)`` with fluctuations of order
``n^(-1/6)``; with ``c = exp(-n^(-1/3) t)`` the rescaled top eigenvalues of
(M1, M2) approximate (A(0), A(t)).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import RandomStream, hermitian_eigenvalues, standard_normals

__all__ = [
    "CoupledEnsembleConfig",
    "CoupledSampleBatch",
    "Estimate",
    "ConditionalBound",
    "RareEventError",
    "gaussian_hermitian",
    "sample_coupled_matrices",
    "sample_coupled_pair",
    "rescale_edge",
    "sample_batch",
    "empirical_joint_cdf",
    "empirical_marginal_cdf",
    "conditional_bound_check",
    "write_batch_csv",
]

CHUNK = 500  # draws per substream; fixes the draw -> stream assignment


class RareEventError(ValueError):
    """The conditioning event is too rare for rejection sampling."""


@dataclass(frozen=True)
class CoupledEnsembleConfig:
    n: int
    t: float
    samples: int
    seed: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError("t must be positive and finite")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError("samples must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit nonnegative integer")

    @property
    def c(self) -> float:
        return math.exp(-self.n ** (-1 / 3) * self.t)


@dataclass(frozen=True)
class CoupledSampleBatch:
    """``pairs[k] = (A0, At)`` for draw index k."""

    pairs: np.ndarray
    config: CoupledEnsembleConfig

    def __len__(self):
        return self.pairs.shape[0]

    @property
    def a0(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def at(self) -> np.ndarray:
        return self.pairs[:, 1]


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class ConditionalBound:
    lhs: float
    rhs: float
    holds: bool
    lhs_stderr: float
    rhs_stderr: float
    accepted: int


def gaussian_hermitian(n: int, stream: RandomStream) -> np.ndarray:
    """Standard Gaussian Hermitian matrix, weight exp(-Tr M^2 / 2)."""
    z = standard_normals(stream, n * n)
    m = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    k = iu[0].size
    m[iu] = (z[n : n + k] + 1j * z[n + k :]) / math.sqrt(2.0)
    m = m + m.conj().T
    m[np.diag_indices(n)] = z[:n]
    return m


def sample_coupled_matrices(n: int, c: float, stream: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= c < 1.0:
        raise ValueError("coupling c must lie in [0, 1)")
    m1 = gaussian_hermitian(n, stream) / math.sqrt(1.0 - c * c)
    m2 = c * m1 + gaussian_hermitian(n, stream)
    return m1, m2


def sample_coupled_pair(n: int, c: float, stream: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    """Ascending spectra of one coupled draw (M1, M2)."""
    m1, m2 = sample_coupled_matrices(n, c, stream)
    return hermitian_eigenvalues(m1), hermitian_eigenvalues(m2)


def rescale_edge(eig_max, n: int, c: float = 0.0):
    """Edge coordinate u with ``lambda_max = (2 sqrt(n) + n^(-1/6) u) / sqrt(1 - c^2)``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return n ** (1 / 6) * (np.asarray(eig_max) * math.sqrt(1.0 - c * c) - 2.0 * math.sqrt(n))


def _chunk(args) -> np.ndarray:
    n, c, seed, index, count = args
    stream = RandomStream(seed, index)
    out = np.empty((count, 2))
    for k in range(count):
        e1, e2 = sample_coupled_pair(n, c, stream)
        out[k] = e1[-1], e2[-1]
    return out


def _chunks(n, c, seed, samples, salt=0):
    nchunks = -(-samples // CHUNK)
    return [(n, c, seed, salt + i, min(CHUNK, samples - i * CHUNK)) for i in range(nchunks)]


def _run(jobs, fn, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def sample_batch(config: CoupledEnsembleConfig, workers: int = 1) -> CoupledSampleBatch:
    """Rescaled top-eigenvalue pairs.  Draw k always comes from substream
    ``k // CHUNK``, so the batch does not depend on ``workers``."""
    c = config.c
    raw = np.concatenate(_run(_chunks(config.n, c, config.seed, config.samples), _chunk, workers))
    pairs = rescale_edge(raw, config.n, c)
    pairs.setflags(write=False)
    return CoupledSampleBatch(pairs, config)


def empirical_joint_cdf(batch: CoupledSampleBatch, u: float, v: float) -> Estimate:
    if len(batch) == 0:
        raise ValueError("empty batch")
    hits = (batch.a0 <= u) & (batch.at <= v)
    p = float(np.mean(hits))
    return Estimate(p, math.sqrt(p * (1.0 - p) / len(batch)))


def empirical_marginal_cdf(values, u: float) -> Estimate:
    values = np.asarray(values)
    p = float(np.mean(values <= u))
    return Estimate(p, math.sqrt(p * (1.0 - p) / values.size))


def _gue_chunk(args) -> np.ndarray:
    n, _, seed, index, count = args
    stream = RandomStream(seed, index)
    return np.array([hermitian_eigenvalues(gaussian_hermitian(n, stream))[-1] for _ in range(count)])


# substreams for the reference ensemble start here, clear of the pair chunks
_REFERENCE_SALT = 1 << 20


@lru_cache(maxsize=8)
def _conditional_draws(n: int, c: float, samples: int, seed: int):
    pairs = np.concatenate(_run(_chunks(n, c, seed, samples), _chunk, 1))
    ref = np.concatenate(_run(_chunks(n, c, seed, samples, _REFERENCE_SALT), _gue_chunk, 1))
    pairs.setflags(write=False)
    ref.setflags(write=False)
    return pairs, ref


def conditional_bound_check(n: int, c: float, a: float, z: float, samples: int, seed: int) -> ConditionalBound:
    """Monte Carlo check of

        P(lambda_max(M2) >= a' | lambda_max(M1) <= s') <= P(lambda_max(G) >= a' - c s')

    with G a standard Gaussian Hermitian matrix.  It follows from Weyl's
    inequality ``lambda_max(M2) <= lambda_max(M2 - c M1) + c lambda_max(M1)``
    and ``M2 - c M1 ~ G`` independent of M1.

    ``a`` and ``z`` are edge coordinates: ``a' `` and ``s'`` are the raw
    levels whose rescaled values are ``a`` and ``-z``.  Conditioning is by
    rejection over one shared batch of draws, reused across calls with the
    same (n, c, samples, seed).
    """
    if not z > 0:
        raise ValueError("z must be positive")
    if not 0.0 <= c < 1.0:
        raise ValueError("coupling c must lie in [0, 1)")
    pairs, ref = _conditional_draws(int(n), float(c), int(samples), int(seed))
    scale = math.sqrt(1.0 - c * c)
    a_raw = (2.0 * math.sqrt(n) + n ** (-1 / 6) * a) / scale
    s_raw = (2.0 * math.sqrt(n) - n ** (-1 / 6) * z) / scale
    cond = pairs[:, 0] <= s_raw
    accepted = int(np.count_nonzero(cond))
    if accepted < 1e-3 * samples or accepted == 0:
        raise RareEventError(f"conditioning event accepted {accepted}/{samples} draws; use a smaller z")
    lhs = float(np.mean(pairs[cond, 1] >= a_raw))
    rhs = float(np.mean(ref >= a_raw - c * s_raw))
    se_l = math.sqrt(lhs * (1 - lhs) / accepted)
    se_r = math.sqrt(rhs * (1 - rhs) / ref.size)
    holds = lhs <= rhs + 3.0 * math.hypot(se_l, se_r)
    return ConditionalBound(lhs, rhs, bool(holds), se_l, se_r, accepted)


def write_batch_csv(batch: CoupledSampleBatch, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw_index", "A0", "At"])
        for k, (a0, at) in enumerate(batch.pairs):
            w.writerow([k, repr(float(a0)), repr(float(at))])
