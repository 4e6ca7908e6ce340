"""Distances and moment statistics between particle ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, DomainError

ASSIGNMENT_LIMIT = 512


@dataclass(frozen=True)
class GapRecord:
    t: float
    msd: float
    moment2_kinetic: float
    moment2_overdamped: float


def _points(a, name="a"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DomainError(f"{name} must have shape (N, d)")
    return a


def coupled_msd(a, b) -> float:
    """Index-wise mean squared distance ``(1/N) sum_i |a_i - b_i|^2``.

    This is the cost of one particular coupling, hence an upper bound for the
    squared empirical W2 distance.
    """
    a, b = _points(a, "a"), _points(b, "b")
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.sum((a - b) ** 2, axis=1)))


def second_moment(x) -> float:
    x = _points(x, "x")
    if x.shape[0] == 0:
        raise DomainError("empty ensemble")
    return float(np.mean(np.sum(x * x, axis=1)))


def gap_record(snapshot) -> GapRecord:
    xk, xo = snapshot.kinetic.x, snapshot.overdamped.x
    return GapRecord(snapshot.t, coupled_msd(xk, xo), second_moment(xk), second_moment(xo))


def _samples_1d(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise DomainError("empty sample")
    if a.size != b.size:
        raise DomainError(f"sample sizes differ: {a.size} vs {b.size}")
    return np.sort(a), np.sort(b)


def w2_empirical_1d(a, b) -> float:
    """Exact W2 between two equal-size 1-d samples (monotone coupling)."""
    a, b = _samples_1d(a, b)
    return math.sqrt(float(np.mean((a - b) ** 2)))


def w1_empirical_1d(a, b) -> float:
    a, b = _samples_1d(a, b)
    return float(np.mean(np.abs(a - b)))


def wp_assignment_exact(a, b, p: int = 2) -> float:
    """Exact empirical W_p for equal-size samples in any dimension, O(N^3)."""
    a, b = _points(a, "a"), _points(b, "b")
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    if p not in (1, 2):
        raise DomainError("p must be 1 or 2")
    n = a.shape[0]
    if n == 0:
        raise DomainError("empty sample")
    if n > ASSIGNMENT_LIMIT:
        raise CapacityError(f"N={n} exceeds the assignment limit {ASSIGNMENT_LIMIT}")
    diff = a[:, None, :] - b[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    cost = sq if p == 2 else np.sqrt(sq)
    rows, cols = linear_sum_assignment(cost)
    return float(np.mean(cost[rows, cols])) ** (1.0 / p)


@dataclass(frozen=True)
class ModulusProbe:
    deltas: np.ndarray
    msd: np.ndarray
    c: float  # smallest c with msd <= c (delta + sqrt(delta)) on the grid
    c_lsq: float  # least-squares fit of msd ~ c (delta + sqrt(delta))

    def envelope(self, c=None):
        c = self.c if c is None else c
        return c * (self.deltas + np.sqrt(self.deltas))


def modulus_probe(times, positions, delta_grid) -> ModulusProbe:
    """Mean-square increments ``E|x(t + delta) - x(t)|^2`` of a trajectory.

    ``positions`` has shape ``(K, N, d)`` at the uniformly spaced ``times``; the
    average runs over every start time with ``t + delta`` inside the record.
    """
    times = np.asarray(times, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim == 2:
        pos = pos[:, :, None]
    if pos.shape[0] != times.size or times.size < 2:
        raise DomainError("need at least two snapshots matching the time list")
    spacing = np.diff(times)
    dt = spacing[0]
    if not np.allclose(spacing, dt, rtol=1e-9, atol=0):
        raise DomainError("snapshots must be uniformly spaced")
    span = times[-1] - times[0]
    deltas = np.asarray(delta_grid, dtype=np.float64)
    msd = np.empty(deltas.size)
    for m, delta in enumerate(deltas):
        if delta < 0 or delta > span * (1 + 1e-12):
            raise DomainError(f"delta={delta!r} outside [0, {span!r}]")
        lag = int(round(delta / dt))
        if abs(lag * dt - delta) > 1e-9 * max(delta, dt):
            raise DomainError(f"delta={delta!r} is not a multiple of the snapshot spacing {dt!r}")
        if lag == 0:
            msd[m] = 0.0
            continue
        inc = pos[lag:] - pos[:-lag]
        msd[m] = float(np.mean(np.sum(inc * inc, axis=2)))
    shape = deltas + np.sqrt(deltas)
    pos_mask = shape > 0
    c = float(np.max(msd[pos_mask] / shape[pos_mask])) if pos_mask.any() else 0.0
    c_lsq = float(msd[pos_mask] @ shape[pos_mask] / (shape[pos_mask] @ shape[pos_mask])) if pos_mask.any() else 0.0
    return ModulusProbe(deltas, msd, c, c_lsq)
