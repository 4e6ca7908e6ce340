"""Potentials, interaction kernels, ensembles and the mean-field force.

The drift acting on particle ``i`` of an ensemble ``x`` (shape ``(N, d)``) is

    F_i = -grad_phi(x_i) - (1/N) * sum_{j != i} grad_k(x_i - x_j)

Every built-in kernel is radial, ``grad_k(r) = f(|r|^2) * r``, so it is exactly
antisymmetric in floating point.  The batched force uses that to evaluate each
pair once while still summing every row in ascending ``j`` order, which makes it
bit-identical to the per-particle loop in :func:`mean_field_force`.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigError, DomainError, SingularityError

# numba probes an outdated TBB on some hosts; the fallback layers are fine
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

__all__ = [
    "ExternalPotential",
    "InteractionKernel",
    "Integrator",
    "KineticEnsemble",
    "OverdampedEnsemble",
    "SimConfig",
    "ValidationReport",
    "grad_phi",
    "grad_k",
    "mean_field_force",
    "mean_field_force_all",
    "register_potential",
    "validate_assumption_phi",
    "validate_kernel",
    "worker_count",
]

U64_MAX = 2**64 - 1


# ---------------------------------------------------------------------------
# External potentials
# ---------------------------------------------------------------------------

def _sqnorm(x):
    return np.sum(np.square(x), axis=-1)


def _log1p_phi(x):
    return np.log1p(_sqnorm(x))


def _log1p_grad(x):
    return 2.0 * x / (1.0 + _sqnorm(x))[..., None]


def _quartic_phi(x):
    return 0.25 * _sqnorm(x) ** 2


def _quartic_grad(x):
    return _sqnorm(x)[..., None] * x


# name -> (phi, grad_phi, default c_phi)
_CUSTOM_POTENTIALS: dict[str, tuple[Callable, Callable, float]] = {
    # bounded gradient, unbounded (logarithmic) potential; grad is 2-Lipschitz
    "log1p": (_log1p_phi, _log1p_grad, 2.0),
    # superquadratic growth; deliberately violates the linear-growth bound
    "quartic": (_quartic_phi, _quartic_grad, 1.0),
}


def register_potential(name: str, phi: Callable, grad: Callable, c_phi: float) -> None:
    """Make ``ExternalPotential.custom(name)`` available.

    ``phi`` and ``grad`` must accept arrays of shape ``(..., d)`` and return
    shapes ``(...)`` and ``(..., d)`` respectively.
    """
    if not name or ":" in name:
        raise ValueError(f"invalid potential name {name!r}")
    _CUSTOM_POTENTIALS[name] = (phi, grad, float(c_phi))


@dataclass(frozen=True)
class ExternalPotential:
    """Confining potential Phi >= 0 together with its claimed constant C_Phi."""

    kind: str = "zero"
    scale: float = 0.0
    name: str = ""
    c_phi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "harmonic", "custom"):
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if self.kind == "harmonic" and not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigError(f"harmonic scale must be positive, got {self.scale!r}")
        if self.kind == "custom" and self.name not in _CUSTOM_POTENTIALS:
            raise ConfigError(f"unknown custom potential {self.name!r}")
        if not self.c_phi >= 0:
            raise ConfigError(f"c_phi must be >= 0, got {self.c_phi!r}")

    @classmethod
    def zero(cls) -> "ExternalPotential":
        return cls("zero")

    @classmethod
    def harmonic(cls, scale: float = 1.0) -> "ExternalPotential":
        """Phi(x) = scale * |x|^2 / 2."""
        return cls("harmonic", scale=float(scale), c_phi=float(scale))

    @classmethod
    def custom(cls, name: str, c_phi: float | None = None) -> "ExternalPotential":
        if name not in _CUSTOM_POTENTIALS:
            raise ConfigError(f"unknown custom potential {name!r}")
        if c_phi is None:
            c_phi = _CUSTOM_POTENTIALS[name][2]
        return cls("custom", name=name, c_phi=float(c_phi))

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros(x.shape[:-1])
        if self.kind == "harmonic":
            return 0.5 * self.scale * _sqnorm(x)
        return _CUSTOM_POTENTIALS[self.name][0](x)

    def grad(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return self.scale * x
        return _CUSTOM_POTENTIALS[self.name][1](x)

    def render(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "harmonic":
            return f"harmonic:{self.scale!r}"
        out = f"custom:{self.name}"
        if self.c_phi != _CUSTOM_POTENTIALS[self.name][2]:
            out += f":{self.c_phi!r}"
        return out


def grad_phi(p: ExternalPotential, x) -> np.ndarray:
    """Gradient of the external potential at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("grad_phi: non-finite input point")
    return p.grad(x)


# ---------------------------------------------------------------------------
# Interaction kernels
# ---------------------------------------------------------------------------

_ZERO, _SMOOTH, _NEWTONIAN, _POWERLAW, _LINEAR = 0, 1, 2, 3, 4
_SMOOTH_CODES = {"gauss": _SMOOTH, "linear": _LINEAR}


@dataclass(frozen=True)
class InteractionKernel:
    """Radial interaction force grad K.

    * ``smooth`` (name ``gauss``): grad K(x) = x exp(-|x|^2); bounded by
      1/sqrt(2e) and 1-Lipschitz, so ``c_k = 1`` covers both constants.
    * ``smooth`` (name ``linear``): grad K(x) = x.  Lipschitz but unbounded;
      handy for checking force assembly by hand.
    * ``newtonian``: grad K(x) = sign * x / (|x|^2 + eps^2)^(d/2).  With the
      drift ``-grad K * rho``, ``sign=+1`` pulls particles together.
    * ``powerlaw``: K(x) = (|x|^2 + eps^2)^(-alpha/2), the regularized |x|^-alpha.

    ``q`` and ``radius`` are descriptive only (integrability exponent and
    near-field ball radius of a singular kernel); nothing reads them.
    """

    kind: str = "zero"
    sign: float = 1.0
    eps: float = 0.0
    alpha: float = 0.0
    c_k: float = 1.0
    name: str = ""
    q: float | None = field(default=None, compare=False)
    radius: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "smooth", "newtonian", "powerlaw"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "smooth" and self.name not in _SMOOTH_CODES:
            raise ConfigError(f"unknown smooth kernel {self.name!r}")
        if self.kind == "newtonian" and self.sign not in (1.0, -1.0):
            raise ConfigError(f"newtonian sign must be +1 or -1, got {self.sign!r}")
        if self.kind in ("newtonian", "powerlaw") and not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be finite and >= 0, got {self.eps!r}")
        if self.kind == "powerlaw" and not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"powerlaw alpha must be positive, got {self.alpha!r}")

    @classmethod
    def zero(cls) -> "InteractionKernel":
        return cls("zero")

    @classmethod
    def smooth(cls, c_k: float = 1.0, name: str = "gauss") -> "InteractionKernel":
        return cls("smooth", name=name, c_k=float(c_k))

    @classmethod
    def newtonian(cls, sign: float = 1.0, eps: float = 0.0) -> "InteractionKernel":
        return cls("newtonian", sign=float(sign), eps=float(eps))

    @classmethod
    def powerlaw(cls, alpha: float, eps: float = 0.0) -> "InteractionKernel":
        return cls("powerlaw", alpha=float(alpha), eps=float(eps))

    @property
    def singular(self) -> bool:
        return self.kind in ("newtonian", "powerlaw") and self.eps == 0.0

    def params(self) -> tuple[int, float, float]:
        if self.kind == "smooth":
            return _SMOOTH_CODES[self.name], 0.0, 0.0
        if self.kind == "newtonian":
            return _NEWTONIAN, self.sign, self.eps
        if self.kind == "powerlaw":
            return _POWERLAW, self.alpha, self.eps
        return _ZERO, 0.0, 0.0

    def grad_bound(self, dim: int) -> float:
        """sup |grad K| (inf for an unregularized singular kernel)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "smooth":
            return self.c_k if self.name == "gauss" else math.inf
        if self.eps == 0.0:
            return math.inf
        if self.kind == "newtonian":
            if dim == 1:
                return 1.0
            s = 1.0 / math.sqrt(dim - 1)
            return self.eps ** (1 - dim) * s / (1 + s * s) ** (dim / 2)
        a = self.alpha
        s2 = self.eps**2 / (a + 1)
        return a * math.sqrt(s2) * (s2 + self.eps**2) ** (-a / 2 - 1)

    def render(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "smooth":
            out = "smooth" if self.name == "gauss" else f"smooth:{self.name}"
            return out if self.c_k == 1.0 else f"{out}:{self.c_k!r}"
        if self.kind == "newtonian":
            return f"newtonian:{'+' if self.sign > 0 else '-'}:{self.eps!r}"
        return f"powerlaw:{self.alpha!r}:{self.eps!r}"


@njit(cache=True)
def _radial_factor(r2, code, p0, p1, dim):
    if code == 1:
        return math.exp(-r2)
    if code == 2:
        return p0 * (r2 + p1 * p1) ** (-0.5 * dim)
    if code == 3:
        return -p0 * (r2 + p1 * p1) ** (-0.5 * p0 - 1.0)
    if code == 4:
        return 1.0
    return 0.0


@njit(cache=True)
def _is_singular(r2, code, p1):
    return (code == 2 or code == 3) and r2 + p1 * p1 == 0.0


@njit(cache=True)
def _grad_k_point(r, code, p0, p1):
    d = r.shape[0]
    out = np.zeros(d)
    r2 = 0.0
    for c in range(d):
        r2 += r[c] * r[c]
    if _is_singular(r2, code, p1):
        return out, True
    f = _radial_factor(r2, code, p0, p1, d)
    for c in range(d):
        out[c] = f * r[c]
    return out, False


@njit(cache=True)
def _pair_sums_serial(x, code, p0, p1, err):
    # Each unordered pair is evaluated once.  Row k receives -g_ik for i < k
    # (outer loop order) then g_kj for j > k, i.e. ascending j overall.
    n, d = x.shape
    out = np.zeros((n, d))
    g = np.empty(d)
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                g[c] = x[i, c] - x[j, c]
                r2 += g[c] * g[c]
            if _is_singular(r2, code, p1):
                err[0] = i
                err[1] = j
                return out
            f = _radial_factor(r2, code, p0, p1, d)
            for c in range(d):
                gc = f * g[c]
                out[i, c] += gc
                out[j, c] -= gc
    return out


@njit(cache=True, parallel=True)
def _pair_sums_rows(x, code, p0, p1, bad):
    # Row-parallel variant: every row is an independent ascending-j reduction,
    # so the result does not depend on the thread count.
    n, d = x.shape
    out = np.zeros((n, d))
    for i in prange(n):
        g = np.empty(d)
        for j in range(n):
            if j == i:
                continue
            r2 = 0.0
            for c in range(d):
                g[c] = x[i, c] - x[j, c]
                r2 += g[c] * g[c]
            if _is_singular(r2, code, p1):
                if bad[i] < 0:
                    bad[i] = j
                continue
            f = _radial_factor(r2, code, p0, p1, d)
            for c in range(d):
                out[i, c] += f * g[c]
    return out


def grad_k(k: InteractionKernel, r) -> np.ndarray:
    """Interaction force grad K(r) at a single separation vector."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    if r.ndim != 1:
        raise DomainError("grad_k expects a single vector")
    if not np.all(np.isfinite(r)):
        raise DomainError("grad_k: non-finite input")
    code, p0, p1 = k.params()
    out, singular = _grad_k_point(r, code, p0, p1)
    if singular:
        raise SingularityError()
    return out


def worker_count() -> int:
    """Worker threads for the force pass; ``OVERDAMP_THREADS`` caps it."""
    avail = numba.config.NUMBA_NUM_THREADS
    raw = os.environ.get("OVERDAMP_THREADS", "").strip()
    if not raw:
        return avail
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"OVERDAMP_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("OVERDAMP_THREADS must be >= 1")
    return min(n, avail)


def pair_sums(k: InteractionKernel, x: np.ndarray, threads: int | None = None) -> np.ndarray:
    """Row sums ``S_i = sum_{j != i} grad_k(x_i - x_j)``, shape ``(N, d)``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if k.kind == "zero":
        return np.zeros_like(x)
    code, p0, p1 = k.params()
    threads = worker_count() if threads is None else threads
    if threads > 1:
        bad = np.full(x.shape[0], -1, dtype=np.int64)
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
        out = _pair_sums_rows(x, code, p0, p1, bad)
        hit = np.flatnonzero(bad >= 0)
        if hit.size:
            raise SingularityError(hit[0], bad[hit[0]])
        return out
    err = np.array([-1, -1], dtype=np.int64)
    out = _pair_sums_serial(x, code, p0, p1, err)
    if err[0] >= 0:
        raise SingularityError(err[0], err[1])
    return out


def mean_field_force(p: ExternalPotential, k: InteractionKernel, ensemble_x, i: int) -> np.ndarray:
    """Force on particle ``i``, by direct summation over the other particles."""
    x = np.ascontiguousarray(ensemble_x, dtype=np.float64)
    n = x.shape[0]
    if not 0 <= i < n:
        raise DomainError(f"particle index {i} out of range for N={n}")
    acc = np.zeros(x.shape[1])
    if k.kind != "zero":
        for j in range(n):
            if j == i:
                continue
            try:
                acc = acc + grad_k(k, x[i] - x[j])
            except SingularityError:
                raise SingularityError(i, j) from None
    return -p.grad(x[i]) - acc / n


def mean_field_force_all(p: ExternalPotential, k: InteractionKernel, ensemble_x,
                         threads: int | None = None) -> np.ndarray:
    """Forces on all particles; row ``i`` equals ``mean_field_force(p, k, x, i)``."""
    x = np.ascontiguousarray(ensemble_x, dtype=np.float64)
    if x.ndim != 2:
        raise DomainError("ensemble positions must have shape (N, d)")
    if not np.all(np.isfinite(x)):
        raise DomainError("ensemble positions must be finite")
    s = pair_sums(k, x, threads)
    return -p.grad(x) - s / x.shape[0]


# ---------------------------------------------------------------------------
# Ensembles and configuration
# ---------------------------------------------------------------------------

def _frozen(a, name):
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2:
        raise DomainError(f"{name} must have shape (N, d), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class KineticEnsemble:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, "x"))
        object.__setattr__(self, "v", _frozen(self.v, "v"))
        if self.x.shape != self.v.shape:
            raise DomainError(f"x and v shapes differ: {self.x.shape} vs {self.v.shape}")
        if not self.t >= 0:
            raise DomainError("time must be >= 0")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class OverdampedEnsemble:
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, "x"))
        if not self.t >= 0:
            raise DomainError("time must be >= 0")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


class Integrator(str, Enum):
    EXPONENTIAL_OU = "exp"
    EULER_MARUYAMA = "em"


EM_STABILITY_LIMIT = 50.0


@dataclass(frozen=True)
class SimConfig:
    """One coupled simulation.  ``dt`` is the macro step shared by both systems."""

    gamma: float = 1.0
    n_particles: int = 100
    dim: int = 1
    t_final: float = 1.0
    dt: float = 0.01
    seed: int = 0
    replicas: int = 1
    potential: ExternalPotential = field(default_factory=lambda: ExternalPotential.harmonic(1.0))
    kernel: InteractionKernel = field(default_factory=InteractionKernel.zero)
    integrator: Integrator = Integrator.EXPONENTIAL_OU
    x0_mean: float = 0.0
    x0_var: float = 1.0
    v0_mean: float = 0.0
    v0_var: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        if not (math.isfinite(self.gamma) and self.gamma >= 1):
            raise ConfigError(f"gamma must be >= 1, got {self.gamma!r}")
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if not (math.isfinite(self.t_final) and self.t_final > 0):
            raise ConfigError("t_final must be > 0")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt must be > 0")
        if not 0 <= self.seed <= U64_MAX:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.x0_var < 0 or self.v0_var < 0:
            raise ConfigError("initial variances must be >= 0")
        if (self.integrator is Integrator.EULER_MARUYAMA
                and self.dt * self.gamma**2 > EM_STABILITY_LIMIT):
            raise ConfigError(
                f"dt*gamma^2 = {self.dt * self.gamma**2!r} exceeds {EM_STABILITY_LIMIT} for em")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"t_final={self.t_final!r} is not a multiple of dt={self.dt!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Numerical checks of the potential / kernel hypotheses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    r: float
    probe_radius: float
    n_probes: int
    sup_weighted_grad: float  # sup |grad Phi|^r exp(-Phi), i.e. C_{Phi,r}
    sup_growth_ratio: float  # sup |grad Phi| / (1 + |x|)
    sup_lipschitz_ratio: float
    min_phi: float
    c_phi: float

    @property
    def passed(self) -> bool:
        tol = 1e-12 * max(1.0, self.c_phi)
        return (self.min_phi >= 0
                and self.sup_growth_ratio <= self.c_phi + tol
                and self.sup_lipschitz_ratio <= self.c_phi + tol
                and math.isfinite(self.sup_weighted_grad))

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "probe_radius": self.probe_radius,
            "n_probes": self.n_probes,
            "sup_weighted_grad": self.sup_weighted_grad,
            "sup_growth_ratio": self.sup_growth_ratio,
            "sup_lipschitz_ratio": self.sup_lipschitz_ratio,
            "min_phi": self.min_phi,
            "c_phi": self.c_phi,
            "passed": self.passed,
        }


def probe_points(dim: int, radius: float, n_probes: int) -> np.ndarray:
    """Deterministic probe set inside the ball of the given radius.

    In 1-d a uniform grid on [-radius, radius]; otherwise points on rays through
    the origin (coordinate axes plus Halton-derived directions), uniform in |x|.
    """
    if dim == 1:
        return np.linspace(-radius, radius, n_probes)[:, None]
    from scipy.stats import norm, qmc

    n_dir = min(n_probes, 2 * dim + 62)
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    extra = n_dir - len(axes)
    dirs = axes[:n_dir]
    if extra > 0:
        u = qmc.Halton(d=dim, scramble=False).random(extra + 1)[1:]
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dirs = np.concatenate([axes, g])
    n_r = max(1, n_probes // n_dir)
    radii = np.linspace(0.0, radius, n_r)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    return pts[:n_probes]


def validate_assumption_phi(p: ExternalPotential, r: float, probe_radius: float,
                            n_probes: int, dim: int = 1) -> ValidationReport:
    """Probe the growth, Lipschitz and C_{Phi,r} conditions on a grid."""
    if n_probes < 1:
        raise DomainError("n_probes must be >= 1")
    x = probe_points(dim, probe_radius, n_probes)
    phi = p.value(x)
    g = p.grad(x)
    gn = np.linalg.norm(g, axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        weighted = np.where(gn > 0, gn**r, 0.0 if r > 0 else 1.0) * np.exp(-phi)
    growth = gn / (1.0 + np.linalg.norm(x, axis=1))
    # Lipschitz ratio over neighbouring probes (consecutive points along rays
    # and across the probe list).
    lip = 0.0
    if len(x) > 1:
        dx = np.linalg.norm(np.diff(x, axis=0), axis=1)
        dg = np.linalg.norm(np.diff(g, axis=0), axis=1)
        ok = dx > 0
        if ok.any():
            lip = float(np.max(dg[ok] / dx[ok]))
    return ValidationReport(
        r=float(r),
        probe_radius=float(probe_radius),
        n_probes=int(n_probes),
        sup_weighted_grad=float(np.max(weighted)),
        sup_growth_ratio=float(np.max(growth)),
        sup_lipschitz_ratio=lip,
        min_phi=float(np.min(phi)),
        c_phi=p.c_phi,
    )


def validate_kernel(k: InteractionKernel, dim: int, n_pairs: int = 10_000,
                    scale: float = 3.0, seed: int = 0) -> dict:
    """Sample sup |grad K| and the Lipschitz ratio on random points and pairs."""
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=scale, size=(n_pairs, dim))
    b = a + rng.normal(scale=scale / 10, size=(n_pairs, dim))
    ga = np.array([grad_k(k, ai) for ai in a]) if k.kind != "zero" else np.zeros_like(a)
    gb = np.array([grad_k(k, bi) for bi in b]) if k.kind != "zero" else np.zeros_like(b)
    neg = np.array([grad_k(k, -ai) for ai in a]) if k.kind != "zero" else np.zeros_like(a)
    dist = np.linalg.norm(a - b, axis=1)
    ok = dist > 0
    lip = float(np.max(np.linalg.norm(ga - gb, axis=1)[ok] / dist[ok])) if ok.any() else 0.0
    sup = float(np.max(np.linalg.norm(ga, axis=1)))
    bound = k.grad_bound(dim)
    antisym = bool(np.array_equal(neg, -ga))
    passed = sup <= bound * (1 + 1e-12) and antisym
    if k.kind == "smooth":
        passed = passed and lip <= k.c_k * (1 + 1e-12)
    return {
        "kernel": k.render(),
        "dim": dim,
        "n_pairs": n_pairs,
        "grad_bound": bound,
        "sup_grad": sup,
        "sup_lipschitz_ratio": lip,
        "antisymmetric": antisym,
        "passed": bool(passed),
    }
