"""Time stepping for the kinetic and overdamped particle systems.

The kinetic system (positions ``x``, velocities ``v``, friction ``gamma``)

    dx = gamma v dt
    dv = -gamma^2 v dt + gamma F(x) dt + sqrt(2) gamma dB

is advanced either by the exponential integrator (OU part exact, force frozen
over the step) or by Euler-Maruyama with sub-stepping.  The overdamped system
``dx = F(x) dt + sqrt(2) dB`` is advanced by Euler-Maruyama.  In
:func:`simulate_coupled` both consume the same Brownian increment ``db`` every
macro step, and they start from the same positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, SingularityError
from .model import (
    EM_STABILITY_LIMIT,
    Integrator,
    KineticEnsemble,
    OverdampedEnsemble,
    SimConfig,
    mean_field_force_all,
)
from .noise import (
    CH_INITIAL_V,
    CH_INITIAL_X,
    brownian_increments,
    coupled_increments,
    increment_factor,
    ou_covariance,
    standard_normals,
)

SQRT2 = math.sqrt(2.0)

# target value of gamma^2 * h for an Euler-Maruyama kinetic sub-step
EM_SUBSTEP_TARGET = 0.5


@dataclass(frozen=True, eq=False)
class CoupledSnapshot:
    step: int
    t: float
    kinetic: KineticEnsemble
    overdamped: OverdampedEnsemble


@dataclass(frozen=True, eq=False)
class CoupledState:
    kinetic: KineticEnsemble
    overdamped: OverdampedEnsemble
    step: int
    config: SimConfig


def _forces(cfg: SimConfig, x):
    return mean_field_force_all(cfg.potential, cfg.kernel, x)


def step_underdamped_exp(state: KineticEnsemble, cfg: SimConfig, ix, iv,
                         h: float | None = None, force=None) -> KineticEnsemble:
    """One exponential-integrator step with the force frozen at the step start."""
    h = cfg.dt if h is None else h
    g = cfg.gamma
    cov = ou_covariance(g, h)
    decay = math.exp(-cov.a)
    e1 = -math.expm1(-cov.a)
    F = _forces(cfg, state.x) if force is None else force
    v = decay * state.v + (e1 / g) * F + SQRT2 * g * iv
    x = state.x + (e1 / g) * state.v + cov.cov_db_ix * F + SQRT2 * ix
    return KineticEnsemble(x, v, state.t + h)


def step_underdamped_em(state: KineticEnsemble, cfg: SimConfig, db,
                        h: float | None = None, force=None) -> KineticEnsemble:
    h = cfg.dt if h is None else h
    g = cfg.gamma
    if g * g * h > EM_STABILITY_LIMIT:
        raise ConfigError(f"gamma^2*h = {g * g * h!r} exceeds {EM_STABILITY_LIMIT}")
    F = _forces(cfg, state.x) if force is None else force
    x = state.x + g * h * state.v
    v = state.v - (g * g * h) * state.v + (g * h) * F + (SQRT2 * g) * db
    return KineticEnsemble(x, v, state.t + h)


def step_overdamped_em(state: OverdampedEnsemble, cfg: SimConfig, db,
                       h: float | None = None, force=None) -> OverdampedEnsemble:
    h = cfg.dt if h is None else h
    F = _forces(cfg, state.x) if force is None else force
    return OverdampedEnsemble(state.x + h * F + SQRT2 * db, state.t + h)


def em_substeps(cfg: SimConfig) -> int:
    """Kinetic Euler-Maruyama sub-steps per macro step (sub-step <= 0.5/gamma^2)."""
    return max(1, math.ceil(cfg.dt * cfg.gamma**2 / EM_SUBSTEP_TARGET - 1e-9))


def initial_sample(cfg: SimConfig, replica: int = 0) -> tuple[KineticEnsemble, OverdampedEnsemble]:
    """Independent Gaussian X0 and V0; the overdamped copy shares X0 exactly."""
    n, d = cfg.n_particles, cfg.dim
    if cfg.x0_var < 0 or cfg.v0_var < 0:
        raise ConfigError("initial variances must be >= 0")
    zx = standard_normals(cfg.seed, replica, 0, n, d, CH_INITIAL_X, width=1)[..., 0]
    zv = standard_normals(cfg.seed, replica, 0, n, d, CH_INITIAL_V, width=1)[..., 0]
    x0 = cfg.x0_mean + math.sqrt(cfg.x0_var) * zx
    v0 = cfg.v0_mean + math.sqrt(cfg.v0_var) * zv
    return KineticEnsemble(x0, v0, 0.0), OverdampedEnsemble(x0, 0.0)


def record_steps_for(cfg: SimConfig, record_times) -> list[int]:
    """Map record times onto step indices; each must sit on the step grid."""
    out = []
    n_steps = cfg.n_steps
    prev = -1
    for t in record_times:
        k = int(round(t / cfg.dt))
        if not 0 <= k <= n_steps or abs(k * cfg.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"record time {t!r} is not a grid time in [0, {cfg.t_final!r}]")
        if k < prev:
            raise DomainError("record times must be sorted")
        prev = k
        out.append(k)
    return out


def uniform_record_steps(cfg: SimConfig, count: int) -> list[int]:
    """``count`` roughly uniform record steps in (0, T], plus t = 0."""
    steps = np.round(np.linspace(0, cfg.n_steps, count + 1)).astype(int)
    return sorted(set(int(s) for s in steps))


def simulate_coupled(cfg: SimConfig, record_times=None, replica: int = 0,
                     record_steps=None) -> list[CoupledSnapshot]:
    """Advance both systems under shared noise and return snapshots.

    Pass either ``record_times`` (grid times in [0, T]) or ``record_steps``.
    """
    if record_steps is None:
        if record_times is None:
            record_times = [cfg.t_final]
        record_steps = record_steps_for(cfg, record_times)
    wanted = sorted(set(record_steps))
    if wanted and (wanted[0] < 0 or wanted[-1] > cfg.n_steps):
        raise DomainError("record step outside the simulated range")
    kin, od = initial_sample(cfg, replica)
    n, d, h = cfg.n_particles, cfg.dim, cfg.dt
    snaps: dict[int, CoupledSnapshot] = {}
    if 0 in wanted:
        snaps[0] = CoupledSnapshot(0, 0.0, kin, od)
    last = wanted[-1] if wanted else 0

    exp_factor = None
    m = 1
    if cfg.integrator is Integrator.EXPONENTIAL_OU:
        exp_factor = increment_factor(cfg.gamma, h)
    else:
        m = em_substeps(cfg)

    for k in range(last):
        t_next = (k + 1) * h
        try:
            if exp_factor is not None:
                db, ix, iv = coupled_increments(cfg.seed, replica, k, n, d, exp_factor)
                new_kin = step_underdamped_exp(kin, cfg, ix, iv)
            else:
                hs = h / m
                db = np.zeros((n, d))
                new_kin = kin
                for s in range(m):
                    db_s = brownian_increments(cfg.seed, replica, k * m + s, n, d, hs)
                    new_kin = step_underdamped_em(new_kin, cfg, db_s, hs)
                    db = db + db_s
            od = step_overdamped_em(od, cfg, db)
        except SingularityError as e:
            raise SingularityError(e.i, e.j, t=k * h) from None
        kin = KineticEnsemble(new_kin.x, new_kin.v, t_next)
        od = OverdampedEnsemble(od.x, t_next)
        if k + 1 in wanted:
            snaps[k + 1] = CoupledSnapshot(k + 1, t_next, kin, od)
    return [snaps[k] for k in record_steps]
