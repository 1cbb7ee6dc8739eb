import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given
from hypothesis import strategies as st

from flsim.atoms import DIM, LaserParams, PumpVariant, effective_parts, mhz, named_state, projector
from flsim.dissipation import DecayParams, effective_cd_model
from flsim.dynamics import (
    PropagatorCache,
    SplitGenerator,
    Trajectory,
    observe,
    propagate_const,
    propagate_parts,
    propagate_timedep,
    purity,
    step_propagator,
)
from flsim.errors import DimensionMismatchError, InvalidInputError, StiffnessError
from flsim.operators import JumpChannel
from flsim.protocols import make_conversion_I, run_cycles
from flsim.pulses import PulseKind, PulseShape, gaussian_sigma

from .helpers import random_density, random_hermitian


def ep0(omega2=mhz(0.04)):
    return LaserParams(mhz(4.0), omega2, mhz(200.0), PumpVariant.EP0)


# --- observables ------------------------------------------------------------

def test_pure_state_purity():
    assert purity(projector("GHZ-")) == pytest.approx(1.0, abs=1e-14)


def test_maximally_mixed_purity():
    assert purity(np.eye(DIM) / DIM) == pytest.approx(1 / 27, abs=1e-15)


def test_ghz_and_w_orthogonal():
    assert abs(observe(projector("GHZ-"), named_state("W0"))) < 1e-15


def test_observe_accepts_projector():
    rho = random_density(np.random.default_rng(3), DIM)
    v = named_state("W0")
    assert observe(rho, v) == pytest.approx(observe(rho, np.outer(v, v.conj())), abs=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_observables_in_range(seed):
    rho = random_density(np.random.default_rng(seed), DIM)
    v = named_state("GHZ-")
    assert -1e-9 <= observe(rho, v) <= 1 + 1e-9
    assert 0 < purity(rho) <= 1 + 1e-9


# --- constant generators ----------------------------------------------------

def test_no_dynamics_is_constant():
    rho = random_density(np.random.default_rng(0), DIM)
    tr = propagate_const(rho, np.zeros((DIM, DIM)), (), 5.0, 7)
    assert np.max(np.abs(tr.states - rho)) < 1e-14
    assert len(tr.times) == 8


def test_zero_duration_is_identity():
    rho = projector("W0")
    h = effective_parts(ep0()).nominal
    for tr in (propagate_const(rho, h, (), 0.0, 3), propagate_timedep(rho, lambda t: h, (), 0.0, samples=3)):
        assert np.array_equal(tr.final, rho)


def test_cd_decay_law():
    d = DecayParams()
    m = effective_cd_model(d)
    rho0 = np.outer(m.ket("r"), m.ket("r"))
    tr = propagate_const(rho0, m.hamiltonian, m.channels, 10 / d.Gamma1, 100)
    assert np.max(np.abs(tr.population(m.ket("0")) - (1 - np.exp(-d.Gamma1 * tr.times)))) < 1e-8


def test_ep0_pi_pulse_fills_d0():
    p = ep0()
    h = effective_parts(p).nominal
    t_pi = math.pi / (math.sqrt(3) * p.omega2)
    tr = propagate_const(projector("000"), h, (), t_pi, 50)
    assert tr.population(named_state("D0"))[-1] == pytest.approx(1.0, abs=1e-6)
    # two-level Rabi oracle on the {|000>, |D0>} block
    rabi = np.sin(math.sqrt(3) * p.omega2 * tr.times / 2) ** 2
    assert np.max(np.abs(tr.population(named_state("D0")) - rabi)) < 1e-6


def test_explicit_sample_grid():
    h = effective_parts(ep0()).nominal
    times = np.array([0.0, 0.3, 1.7, 4.0])
    tr = propagate_const(projector("000"), h, (), 4.0, times)
    ref = propagate_const(projector("000"), h, (), 1.7, 1)
    np.testing.assert_allclose(tr.times, times)
    assert np.max(np.abs(tr.states[2] - ref.final)) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        propagate_const(np.eye(3) / 3, np.zeros((DIM, DIM)), (), 1.0)
    with pytest.raises(DimensionMismatchError):
        propagate_const(np.eye(DIM) / DIM, np.zeros((DIM, DIM)), [JumpChannel(np.eye(3), 1.0)], 1.0)


@pytest.mark.parametrize("bad", [dict(duration=-1.0), dict(duration=1.0, samples=0),
                                 dict(duration=1.0, samples=np.array([0.0, 2.0]))])
def test_invalid_grids(bad):
    with pytest.raises(InvalidInputError):
        propagate_const(np.eye(DIM) / DIM, np.zeros((DIM, DIM)), (), **bad)


def test_cache_reuses_exponentials():
    cache = PropagatorCache(maxsize=2)
    h = effective_parts(ep0()).nominal
    a = step_propagator(h, (), 1.0, cache)
    b = step_propagator(h, (), 1.0, cache)
    assert a is b
    step_propagator(h, (), 2.0, cache)
    step_propagator(h, (), 3.0, cache)
    assert step_propagator(h, (), 1.0, cache) is not a


def test_cached_matches_uncached():
    h = effective_parts(ep0()).nominal
    a = step_propagator(h, (), 1.3, PropagatorCache())
    b = step_propagator(h, (), 1.3, None)
    assert np.max(np.abs(a - b)) < 1e-14


def test_trajectory_validation():
    with pytest.raises(InvalidInputError):
        Trajectory(np.array([0.0, 1.0]), np.zeros((3, 2, 2)))
    with pytest.raises(InvalidInputError):
        Trajectory(np.array([1.0, 0.0]), np.zeros((2, 2, 2)))


# --- time-dependent generators ----------------------------------------------

def test_timedep_matches_const_on_random_system():
    rng = np.random.default_rng(7)
    n = 4
    h = random_hermitian(rng, n, 2.0)
    chans = [JumpChannel(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 0.3)]
    rho0 = random_density(rng, n)
    a = propagate_const(rho0, h, chans, 3.0, 6)
    b = propagate_timedep(rho0, lambda t: h, chans, 3.0, samples=6)
    assert np.max(np.abs(a.states - b.states)) < 1e-6


def test_timedep_against_exact_two_level_drive():
    """A chirp-free drive H = f(t) sx has U = exp(-i F(t) sx), F = int f."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    tr = propagate_timedep(rho0, lambda t: np.cos(t) * sx, (), 4.0, samples=20)
    expected = np.sin(np.sin(tr.times)) ** 2
    assert np.max(np.abs(tr.states[:, 1, 1].real - expected)) < 1e-7


def test_split_generator_matches_dense():
    p = ep0()
    parts = effective_parts(p)
    d = DecayParams()
    chans = effective_cd_model(d).channels[:0]
    gen = SplitGenerator.build(parts.static, parts.raising, chans)

    def amp(t):
        return 0.5 + 0.5 * np.exp(1j * 0.3 * t)

    a = propagate_parts(projector("000"), gen, amp, 20.0, samples=4)
    b = propagate_timedep(projector("000"), lambda t: parts.at(amp(t)), chans, 20.0, samples=4)
    assert np.max(np.abs(a.states - b.states)) < 1e-7


def test_gaussian_pi_pulse_transfer():
    omega0 = mhz(0.072)
    pulse = PulseShape(PulseKind.GAUSSIAN, omega0, math.sqrt(3))
    parts = effective_parts(ep0(omega0))
    gen = SplitGenerator.build(parts.static, parts.raising)
    tr = propagate_parts(projector("000"), gen, lambda t: pulse.envelope(t) / omega0, pulse.duration)
    assert tr.population(named_state("D0"))[-1] >= 1 - 1e-4


def test_stiffness_error_carries_time():
    # a non-finite drive after t = 0.5 makes every step fail until the step size underflows
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    with pytest.warns(RuntimeWarning), pytest.raises(StiffnessError) as info:
        propagate_timedep(rho0, lambda t: sx * (np.nan if t > 0.5 else 1.0), (), 2.0, samples=4)
    assert info.value.time == pytest.approx(0.5, abs=1e-6)


def test_timedep_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        propagate_timedep(np.eye(2) / 2, lambda t: np.zeros((3, 3)), (), 1.0)


# --- whole-protocol invariants ----------------------------------------------

@pytest.fixture(scope="module")
def gauss_cycles():
    p = LaserParams(mhz(4.0), mhz(0.04), mhz(200.0))
    proto = make_conversion_I(p, DecayParams(), pulse="gauss")
    return proto, run_cycles(projector("GHZ-"), proto, samples_per_step=2)


def test_trace_and_hermiticity_drift_over_18_cycles(gauss_cycles):
    _, tr = gauss_cycles
    assert np.max(np.abs(tr.traces() - 1)) < 1e-6
    herm = np.max(np.abs(tr.states - np.conj(np.transpose(tr.states, (0, 2, 1)))))
    assert herm < 1e-8


def test_tolerance_convergence(gauss_cycles):
    proto, tr = gauss_cycles
    tight = run_cycles(projector("GHZ-"), proto, samples_per_step=2, rel_tol=1e-9, abs_tol=1e-11)
    assert abs(tight.observables["W0"][-1] - tr.observables["W0"][-1]) < 1e-7


def test_const_and_timedep_paths_agree_on_a_protocol(laser, decay):
    proto = make_conversion_I(laser, decay, n_cycles=2)
    a = run_cycles(projector("GHZ-"), proto)

    def unit_phase(cycle, k, t0, duration):
        return lambda t: 0.0

    b = run_cycles(projector("GHZ-"), proto, phase_source=unit_phase)
    assert np.max(np.abs(a.states - b.states)) < 1e-6


# --- pulses -----------------------------------------------------------------

def test_gaussian_sigma_closed_form():
    # numerical area of the truncated Gaussian is pi / alpha
    for alpha in (1.0, math.sqrt(2), math.sqrt(3)):
        s = gaussian_sigma(alpha, mhz(0.072))
        t = np.linspace(0, 4 * s, 20001)
        area = scipy.integrate.simpson(mhz(0.072) * np.exp(-((t - 2 * s) ** 2) / (2 * s**2)), x=t)
        assert alpha * area == pytest.approx(math.pi, rel=1e-8)


def test_gaussian_sigma_value_and_scaling():
    s1 = gaussian_sigma(1.0, mhz(0.072))
    assert s1 == pytest.approx(2.90, abs=0.01)
    assert gaussian_sigma(math.sqrt(2), mhz(0.072)) == pytest.approx(s1 / math.sqrt(2))
    assert gaussian_sigma(1.0, mhz(0.144)) == pytest.approx(s1 / 2)


def test_pulse_areas_are_pi():
    for kind in PulseKind:
        for alpha in (1.0, math.sqrt(2), math.sqrt(3)):
            assert PulseShape(kind, mhz(0.04), alpha).area() == pytest.approx(math.pi)


def test_pulse_validation():
    with pytest.raises(InvalidInputError):
        gaussian_sigma(1.0, 0.0)
    with pytest.raises(InvalidInputError):
        PulseShape(PulseKind.RECTANGULAR, -1.0)
    with pytest.warns(UserWarning):
        gaussian_sigma(1.7, 1.0)


def test_rect_envelope_is_flat():
    p = PulseShape("rect", 2.0)
    np.testing.assert_array_equal(p.envelope(np.linspace(0, p.duration, 5)), 2.0)
