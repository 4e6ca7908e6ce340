import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from overdamp.errors import ConfigError, DomainError, SingularityError
from overdamp.model import (
    ExternalPotential,
    Integrator,
    InteractionKernel,
    KineticEnsemble,
    OverdampedEnsemble,
    SimConfig,
    grad_k,
    grad_phi,
    mean_field_force,
    mean_field_force_all,
    validate_assumption_phi,
    validate_kernel,
)

LINEAR = InteractionKernel.smooth(name="linear")
KERNELS = [
    InteractionKernel.smooth(),
    LINEAR,
    InteractionKernel.newtonian(+1, 0.3),
    InteractionKernel.newtonian(-1, 0.1),
    InteractionKernel.powerlaw(1.5, 0.2),
]
finite = st.floats(-50, 50, allow_nan=False)


# --- gradients ---------------------------------------------------------------

def test_grad_phi_examples():
    np.testing.assert_array_equal(grad_phi(ExternalPotential.harmonic(1), [3.0, 4.0]), [3.0, 4.0])
    np.testing.assert_array_equal(grad_phi(ExternalPotential.zero(), [1.5, -2.0]), [0.0, 0.0])
    np.testing.assert_array_equal(grad_phi(ExternalPotential.harmonic(2), [1.0, 0.0, 0.0]), [2.0, 0.0, 0.0])


@pytest.mark.parametrize("bad", [[np.nan, 0.0], [0.0, np.inf]])
def test_grad_phi_rejects_nonfinite(bad):
    with pytest.raises(DomainError):
        grad_phi(ExternalPotential.harmonic(1), bad)


def test_grad_k_newtonian_examples():
    np.testing.assert_array_equal(grad_k(InteractionKernel.newtonian(+1, 0.0), [1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(grad_k(InteractionKernel.newtonian(+1, 1.0), [1.0, 0.0]), [0.5, 0.0], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(grad_k(InteractionKernel.newtonian(-1, 0.0), [0.0, 2.0]), [0.0, -0.5])


def test_grad_k_smooth_and_powerlaw_closed_forms():
    r = np.array([0.6, -0.8])  # |r| = 1
    np.testing.assert_allclose(grad_k(InteractionKernel.smooth(), r), r * math.exp(-1.0), rtol=1e-15)
    # K = (|r|^2 + eps^2)^(-1): grad = -2 r / (1 + eps^2)^2
    np.testing.assert_allclose(grad_k(InteractionKernel.powerlaw(2.0, 1.0), r), -2 * r / 4.0, rtol=1e-15)


@pytest.mark.parametrize("k", [InteractionKernel.newtonian(1, 0.0), InteractionKernel.powerlaw(1.0, 0.0)])
def test_grad_k_singular_at_origin(k):
    with pytest.raises(SingularityError):
        grad_k(k, [0.0, 0.0])


@pytest.mark.parametrize("k", KERNELS + [InteractionKernel.zero()], ids=lambda k: k.render())
@given(r=arrays(np.float64, 3, elements=finite))
def test_grad_k_antisymmetric(k, r):
    np.testing.assert_array_equal(grad_k(k, -r), -grad_k(k, r))


@pytest.mark.parametrize("dim", [1, 2, 3])
@given(r=arrays(np.float64, 3, elements=st.floats(-5, 5)), eps=st.floats(0.05, 2.0))
@settings(max_examples=60)
def test_regularized_newtonian_pointwise_bound(dim, r, eps):
    r = r[:dim]
    k = InteractionKernel.newtonian(+1, eps)
    g = np.linalg.norm(grad_k(k, r))
    norm = np.linalg.norm(r)
    assert g <= norm / (norm**2 + eps**2) ** (dim / 2) * (1 + 1e-12)
    # sup_s s/(1+s^2)^(d/2): approached as s -> inf for d = 1, else found by scan
    s = np.linspace(0, 50, 200001)
    shape_sup = 1.0 if dim == 1 else np.max(s / (1 + s * s) ** (dim / 2))
    sup = eps ** (1 - dim) * shape_sup
    assert g <= sup * (1 + 1e-6)
    assert k.grad_bound(dim) == pytest.approx(sup, rel=1e-6)


def test_powerlaw_bound_matches_scan():
    k = InteractionKernel.powerlaw(1.5, 0.2)
    s = np.linspace(0, 5, 500001)
    scan = np.max(1.5 * s * (s * s + 0.04) ** -1.75)
    assert k.grad_bound(2) == pytest.approx(scan, rel=1e-6)


# --- forces ------------------------------------------------------------------

def test_force_examples():
    zero = ExternalPotential.zero()
    x2 = np.array([[0.0], [1.0]])
    np.testing.assert_array_equal(mean_field_force(zero, LINEAR, x2, 0), [0.5])
    np.testing.assert_array_equal(mean_field_force(zero, LINEAR, np.array([[0.0], [1.0], [2.0]]), 1), [0.0])
    xh = np.array([[2.0, 0.0], [5.0, 1.0]])
    np.testing.assert_array_equal(
        mean_field_force(ExternalPotential.harmonic(1), InteractionKernel.zero(), xh, 0), [-2.0, 0.0])
    np.testing.assert_array_equal(mean_field_force_all(zero, LINEAR, x2), [[0.5], [-0.5]])


def test_force_index_out_of_range():
    with pytest.raises(DomainError):
        mean_field_force(ExternalPotential.zero(), LINEAR, np.zeros((3, 1)), 3)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.render())
@pytest.mark.parametrize("n,dim", [(1, 1), (2, 2), (17, 1), (64, 2), (128, 3)])
def test_batched_force_equals_per_particle_oracle(k, n, dim):
    x = np.random.default_rng(n * 10 + dim).normal(size=(n, dim))
    p = ExternalPotential.harmonic(0.7)
    oracle = np.array([mean_field_force(p, k, x, i) for i in range(n)])
    np.testing.assert_array_equal(mean_field_force_all(p, k, x, threads=1), oracle)
    np.testing.assert_array_equal(mean_field_force_all(p, k, x, threads=4), oracle)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.render())
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 200), dim=st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_forces_sum_to_zero_without_potential(k, seed, n, dim):
    x = np.random.default_rng(seed).normal(scale=2.0, size=(n, dim))
    f = mean_field_force_all(ExternalPotential.zero(), k, x)
    assert np.all(np.abs(f.sum(axis=0)) <= 1e-12 * n * max(1.0, np.abs(f).max()))


@pytest.mark.parametrize("threads", [1, 3])
def test_coincident_particles_name_the_pair(threads):
    x = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    k = InteractionKernel.newtonian(+1, 0.0)
    with pytest.raises(SingularityError) as info:
        mean_field_force_all(ExternalPotential.zero(), k, x, threads=threads)
    assert {info.value.i, info.value.j} == {1, 2}
    with pytest.raises(SingularityError) as info:
        mean_field_force(ExternalPotential.zero(), k, x, 2)
    assert (info.value.i, info.value.j) == (2, 1)


def test_regularized_kernel_tolerates_coincident_particles():
    x = np.ones((4, 2))
    f = mean_field_force_all(ExternalPotential.zero(), InteractionKernel.newtonian(+1, 0.3), x)
    np.testing.assert_array_equal(f, np.zeros((4, 2)))


def test_force_rejects_nonfinite_positions():
    with pytest.raises(DomainError):
        mean_field_force_all(ExternalPotential.zero(), LINEAR, np.array([[np.nan], [0.0]]))


# --- validators --------------------------------------------------------------

def test_validator_harmonic_weighted_sup():
    rep = validate_assumption_phi(ExternalPotential.harmonic(1), r=2, probe_radius=10, n_probes=100_000)
    # max of s^2 exp(-s^2/2) is at s = sqrt(2), value 2/e
    assert rep.sup_weighted_grad == pytest.approx(2 / math.e, abs=1e-7)
    assert rep.sup_growth_ratio <= 1.0
    assert rep.passed


@pytest.mark.parametrize("r", [0.5, 1, 3])
def test_validator_zero_potential(r):
    rep = validate_assumption_phi(ExternalPotential.zero(), r=r, probe_radius=5, n_probes=1000, dim=2)
    assert rep.sup_weighted_grad == 0.0
    assert rep.passed


def test_validator_flags_quartic_growth():
    rep = validate_assumption_phi(ExternalPotential.custom("quartic"), r=1, probe_radius=10, n_probes=10_000)
    assert not rep.passed


def test_validator_log1p_bounded_potential():
    rep = validate_assumption_phi(ExternalPotential.custom("log1p"), r=1, probe_radius=50, n_probes=20_000, dim=2)
    assert rep.passed
    # |grad| = 2s/(1+s^2), exp(-Phi) = 1/(1+s^2): maximum of 2s/(1+s^2)^2 at s = 1/sqrt(3)
    s = 1 / math.sqrt(3)
    assert rep.sup_weighted_grad <= 2 * s / (1 + s * s) ** 2 * (1 + 1e-12)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_smooth_kernel_lipschitz_sampling(dim):
    rep = validate_kernel(InteractionKernel.smooth(), dim, n_pairs=10_000)
    assert rep["passed"] and rep["antisymmetric"]
    assert rep["sup_lipschitz_ratio"] <= 1.0
    assert rep["sup_grad"] <= 1 / math.sqrt(2 * math.e) + 1e-12


def test_newtonian_kernel_validation():
    rep = validate_kernel(InteractionKernel.newtonian(+1, 0.3), 2, n_pairs=2000)
    assert rep["passed"]
    assert rep["grad_bound"] == pytest.approx(0.5 / 0.3)


# --- value types -------------------------------------------------------------

def test_ensembles_validate_and_freeze():
    with pytest.raises(DomainError):
        KineticEnsemble(np.zeros((3, 2)), np.zeros((3, 1)))
    with pytest.raises(DomainError):
        OverdampedEnsemble(np.array([[np.inf]]))
    e = OverdampedEnsemble(np.zeros((2, 1)))
    with pytest.raises(ValueError):
        e.x[0, 0] = 1.0
    assert (e.n, e.dim) == (2, 1)


def test_simconfig_invariants():
    with pytest.raises(ConfigError):
        SimConfig(gamma=0.5)
    with pytest.raises(ConfigError):
        SimConfig(gamma=10, dt=0.6, t_final=0.6, integrator=Integrator.EULER_MARUYAMA)
    SimConfig(gamma=10, dt=0.6, t_final=0.6, integrator=Integrator.EXPONENTIAL_OU)
    SimConfig(gamma=10, dt=0.5, t_final=1.0, integrator="em")
    with pytest.raises(ConfigError):
        SimConfig(t_final=1.0, dt=0.3)
    with pytest.raises(ConfigError):
        SimConfig(seed=2**64)
    assert SimConfig(t_final=1.0, dt=0.01).n_steps == 100
