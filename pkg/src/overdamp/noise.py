"""Counter-based Gaussian noise and the OU-filtered increments of one step.

Over a step of length ``h`` with ``a = gamma**2 * h`` the kinetic system needs

    db = int_0^h dB_s
    ix = int_0^h (1 - exp(-gamma^2 (h - s))) dB_s
    iv = int_0^h exp(-gamma^2 (h - s)) dB_s

which are jointly Gaussian.  Note ``ix = db - iv`` identically, so the 3x3
covariance always has rank 2; the factorization below is a semidefinite
Cholesky that zeroes the vanishing pivot.

Every draw is a pure function of ``(seed, replica, step, component, particle)``:
numpy's Philox generator is keyed with ``(seed, replica)`` and its counter is
offset by ``(step, component, channel)`` in the upper 192 bits, giving disjoint
streams.  Particles index sequential draws inside one stream, so a particle's
values do not depend on how many particles follow it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OverdampError

CH_INCREMENT = 0
CH_INITIAL_X = 1
CH_INITIAL_V = 2

_SMALL_A = 1e-4


@dataclass(frozen=True)
class NoiseKey:
    seed: int
    replica: int = 0
    particle: int = 0
    step: int = 0
    dim_component: int = 0


def _generator(seed: int, replica: int, step: int, component: int, channel: int) -> np.random.Generator:
    key = (int(seed) & (2**64 - 1)) | (int(replica) << 64)
    counter = (int(step) << 64) | (int(component) << 128) | (int(channel) << 192)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def standard_normals(seed: int, replica: int, step: int, n: int, dim: int,
                     channel: int = CH_INCREMENT, width: int = 3) -> np.ndarray:
    """Standard normals of shape ``(n, dim, width)`` for one (seed, replica, step)."""
    out = np.empty((n, dim, width))
    for c in range(dim):
        out[:, c, :] = _generator(seed, replica, step, c, channel).standard_normal((n, width))
    return out


def brownian_increment(key: NoiseKey, h: float) -> float:
    """N(0, h) draw determined by ``key``; equals the ``db`` of the coupled draw."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h!r}")
    z = _generator(key.seed, key.replica, key.step, key.dim_component, CH_INCREMENT)
    z = z.standard_normal((key.particle + 1, 3))[key.particle, 0]
    return math.sqrt(h) * float(z)


@dataclass(frozen=True)
class OUIncrementCovariance:
    """Covariance of ``(db, ix, iv)`` over one step."""

    gamma: float
    a: float
    var_db: float
    var_ix: float
    var_iv: float
    cov_db_ix: float
    cov_db_iv: float
    cov_ix_iv: float

    def matrix(self) -> np.ndarray:
        return np.array([
            [self.var_db, self.cov_db_ix, self.cov_db_iv],
            [self.cov_db_ix, self.var_ix, self.cov_ix_iv],
            [self.cov_db_iv, self.cov_ix_iv, self.var_iv],
        ])


def ou_covariance(gamma: float, h: float) -> OUIncrementCovariance:
    if not (gamma > 0 and h > 0):
        raise DomainError("gamma and h must be positive")
    g2 = gamma * gamma
    a = g2 * h
    e1 = -math.expm1(-a)  # 1 - exp(-a)
    e2 = -math.expm1(-2 * a)  # 1 - exp(-2a)
    if a < _SMALL_A:
        # a - 2 e1 + e2/2 and a - e1 lose everything to cancellation here
        var_ix = a**3 / 3 * (1 - 0.75 * a + 0.35 * a * a - a**3 / 8) / g2
        cov_db_ix = a * a / 2 * (1 - a / 3 + a * a / 12 - a**3 / 60) / g2
    else:
        var_ix = (a - 2 * e1 + e2 / 2) / g2
        cov_db_ix = (a - e1) / g2
    return OUIncrementCovariance(
        gamma=float(gamma),
        a=a,
        var_db=float(h),
        var_ix=var_ix,
        var_iv=e2 / (2 * g2),
        cov_db_ix=cov_db_ix,
        cov_db_iv=e1 / g2,
        cov_ix_iv=e1 * e1 / (2 * g2),  # = (e1 - e2/2) / g2 without cancellation
    )


def psd_cholesky(sigma: np.ndarray, clamp: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == sigma`` for a PSD ``sigma``.

    Eigenvalues down to ``-clamp * trace`` are tolerated; pivots below that
    threshold are treated as exact zeros and their column is dropped.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    tr = float(np.trace(sigma))
    if np.linalg.eigvalsh(sigma).min() < -clamp * tr:
        raise OverdampError("covariance is not positive semidefinite")
    n = sigma.shape[0]
    L = np.zeros_like(sigma)
    for j in range(n):
        piv = sigma[j, j] - L[j, :j] @ L[j, :j]
        # relative to the diagonal entry: var_ix ~ a^3 is legitimately tiny
        if piv <= clamp * max(sigma[j, j], 0.0) or piv <= 0:
            continue
        L[j, j] = math.sqrt(piv)
        for i in range(j + 1, n):
            L[i, j] = (sigma[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    if not np.all(np.isfinite(L)):
        raise OverdampError("covariance factorization failed")
    return L


def increment_factor(gamma: float, h: float) -> np.ndarray:
    return psd_cholesky(ou_covariance(gamma, h).matrix())


def coupled_increments(seed: int, replica: int, step: int, n: int, dim: int,
                       factor: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(db, ix, iv)`` arrays of shape ``(n, dim)`` for one step."""
    return _combine(factor, standard_normals(seed, replica, step, n, dim))


def _combine(L, z):
    # explicit lower-triangular product; keeps db == sqrt(h) * z0 bit-exactly
    z0, z1, z2 = z[..., 0], z[..., 1], z[..., 2]
    db = L[0, 0] * z0
    ix = L[1, 0] * z0 + L[1, 1] * z1
    iv = (L[2, 0] * z0 + L[2, 1] * z1) + L[2, 2] * z2
    return db, ix, iv


def brownian_increments(seed: int, replica: int, step: int, n: int, dim: int, h: float) -> np.ndarray:
    """``db`` alone; identical to the ``db`` component of :func:`coupled_increments`."""
    return math.sqrt(h) * standard_normals(seed, replica, step, n, dim)[..., 0]


def sample_coupled_increments(key: NoiseKey, gamma: float, h: float) -> tuple[float, float, float]:
    L = increment_factor(gamma, h)
    z = _generator(key.seed, key.replica, key.step, key.dim_component, CH_INCREMENT)
    z = z.standard_normal((key.particle + 1, 3))[key.particle]
    db, ix, iv = _combine(L, z)
    return float(db), float(ix), float(iv)
