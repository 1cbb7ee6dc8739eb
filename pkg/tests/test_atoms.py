import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from flsim.atoms import (
    DIM,
    NAMED_STATES,
    LaserParams,
    TwoPhotonParams,
    VdwParams,
    basis_index,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_parts,
    interaction_to_static,
    ket,
    mhz,
    named_state,
    two_photon_reduce,
    zeno_project,
    zeno_strong_weak,
)
from flsim.dynamics import propagate_const
from flsim.errors import InvalidInputError
from flsim.operators import is_hermitian, matrix_exp

VARIANTS = ("EP0", "EP1", "SE0", "SE1", "SEplus")


def pulse_end(h, psi0, t):
    return matrix_exp(-1j * h, t) @ psi0


# --- basis and named states -------------------------------------------------

def test_basis_ordering():
    assert basis_index("000") == 0
    assert basis_index("01r") == 5
    assert basis_index("r00") == 18
    assert basis_index("rrr") == 26
    with pytest.raises(InvalidInputError):
        basis_index("0a1")


def test_ghz_minus_components():
    g = named_state("GHZ-")
    assert g[basis_index("000")] == pytest.approx(1 / math.sqrt(2))
    assert g[basis_index("111")] == pytest.approx(-1 / math.sqrt(2))


def test_named_states_unit_norm_and_aliases():
    for v in NAMED_STATES.values():
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(named_state("GHZ−"), named_state("GHZ-"))
    np.testing.assert_array_equal(named_state("W₀"), named_state("W0"))
    with pytest.raises(InvalidInputError):
        named_state("W7")


def test_ground_families_orthogonal():
    labels = ["GHZ+", "GHZ-", "W0", "W0'", "W0''", "W1", "W1'", "W1''"]
    g = np.array([named_state(s) for s in labels])
    np.testing.assert_allclose(g @ g.conj().T, np.eye(len(labels)), atol=1e-14)


def test_ghz_w_orthogonal():
    assert abs(np.vdot(named_state("GHZ+"), named_state("GHZ-"))) < 1e-15
    assert np.vdot(named_state("W0"), named_state("W0")) == pytest.approx(1.0)


def test_product_labels():
    np.testing.assert_allclose(ket("+--"), np.kron(np.kron([1, 1, 0], [1, -1, 0]), [1, -1, 0]) / 2 ** 1.5)


# --- effective Hamiltonians -------------------------------------------------

def test_ep0_coupling(laser):
    h = build_effective_hamiltonian(laser.with_variant("EP0"))
    elem = np.vdot(named_state("D0"), h @ named_state("000"))
    assert elem == pytest.approx(math.sqrt(3) * laser.omega2 / 2)


@pytest.mark.parametrize("variant,state", [("EP0", "W0"), ("EP1", "W1"), ("SEplus", "GHZ-"), ("SE0", "W0")])
def test_dark_states(laser, variant, state):
    h = build_effective_hamiltonian(laser.with_variant(variant))
    assert np.max(np.abs(h @ named_state(state))) < 1e-15


@pytest.mark.parametrize("variant", VARIANTS)
def test_effective_hermitian(laser, variant):
    assert is_hermitian(build_effective_hamiltonian(laser.with_variant(variant)))


@pytest.mark.parametrize("variant", VARIANTS)
def test_effective_confined_to_single_rydberg_sector(laser, variant):
    h = build_effective_hamiltonian(laser.with_variant(variant))
    labels = [a + b + c for a in "01r" for b in "01r" for c in "01r"]
    multi = [i for i, s in enumerate(labels) if s.count("r") >= 2]
    assert np.all(h[:, multi] == 0) and np.all(h[multi, :] == 0)


def test_ep0_ignores_two_or_more_ones(laser):
    h = build_effective_hamiltonian(laser.with_variant("EP0"))
    for s in ("011", "101", "110", "111"):
        assert np.max(np.abs(h @ ket(s))) < 1e-15


def test_ep_pi_pulse(laser):
    p = laser.with_variant("EP1")
    t1 = math.pi / (math.sqrt(3) * p.omega2)
    psi = pulse_end(build_effective_hamiltonian(p), ket("111"), t1)
    assert abs(np.vdot(named_state("D1"), psi)) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_se0_pi_pulse(laser):
    p = laser.with_variant("SE0")
    psi = pulse_end(build_effective_hamiltonian(p), ket("011"), math.pi / p.omega2)
    assert abs(np.vdot(ket("r11"), psi)) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_seplus_pi_pulse(laser):
    p = laser.with_variant("SEplus")
    psi = pulse_end(build_effective_hamiltonian(p), ket("+--"), math.pi / (math.sqrt(2) * p.omega2))
    assert abs(np.vdot(ket("r--"), psi)) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_detuning_shifts_rydberg_levels(laser):
    parts = effective_parts(laser.with_variant("SE0"), detuning=0.5)
    assert parts.static[basis_index("r11"), basis_index("r11")] == pytest.approx(0.5)
    assert parts.static[basis_index("011"), basis_index("011")] == 0


# --- Zeno projection --------------------------------------------------------

@pytest.mark.parametrize("variant", VARIANTS)
def test_zeno_projection_reproduces_closed_forms(laser, variant):
    p = laser.with_variant(variant)
    strong, weak = zeno_strong_weak(p)
    np.testing.assert_allclose(zeno_project(strong, weak), build_effective_hamiltonian(p), atol=1e-10)


def test_zeno_with_zero_strong_part():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4, 4))
    np.testing.assert_array_equal(zeno_project(np.zeros((4, 4)), w), w)


def test_zeno_empty_null_space():
    with pytest.raises(InvalidInputError):
        zeno_project(np.eye(3), np.ones((3, 3)))


# --- full Hamiltonians ------------------------------------------------------

def test_full_ep0_interaction_frame_entries(laser):
    p = laser.with_variant("EP0")
    v = VdwParams(urr_override=p.delta)
    h = build_full_hamiltonian(p, v, "interaction", 0.0, offresonant=True)
    i, j = basis_index, basis_index
    assert h[i("r00"), j("100")] == pytest.approx(p.omega1 / 2)
    assert h[i("r00"), j("000")] == pytest.approx(p.omega2 / 2)
    assert h[i("rr0"), i("rr0")] == pytest.approx(v.urr)
    assert h[i("rrr"), i("rrr")] == pytest.approx(3 * v.urr)


@given(st.floats(0, 50), st.sampled_from(["EP0", "EP1", "SE0", "SE1"]), st.sampled_from(["interaction", "static"]))
def test_full_hermitian(t, variant, frame):
    p = LaserParams(mhz(4), mhz(0.04), mhz(200), variant)
    h = build_full_hamiltonian(p, VdwParams(), frame, t, offresonant=True)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_full_needs_time_in_interaction_frame(laser):
    with pytest.raises(InvalidInputError):
        build_full_hamiltonian(laser, VdwParams(), "interaction")
    with pytest.raises(InvalidInputError):
        build_full_hamiltonian(laser, VdwParams(), "lab", 0.0)


def test_static_and_interaction_frames_agree():
    """|000> population under the literal interaction-frame Schroedinger equation
    (independent solve_ivp on a ket) and the static-frame propagator."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = LaserParams(mhz(4), mhz(0.1), mhz(200), "EP0")
    v = VdwParams(urr_override=p.delta)
    t_end = math.pi / p.omega2
    times = np.linspace(0, t_end, 11)

    def rhs(t, y):
        return -1j * build_full_hamiltonian(p, v, "interaction", t) @ y

    sol = solve_ivp(rhs, (0, t_end), ket("000"), method="DOP853", t_eval=times, rtol=1e-10, atol=1e-12)
    p_int = np.abs(sol.y[0]) ** 2
    rho0 = np.outer(ket("000"), ket("000"))
    tr = propagate_const(rho0, build_full_hamiltonian(p, v), (), t_end, times)
    p_static = tr.population(ket("000"))
    assert np.max(np.abs(p_int - p_static)) < 1e-6
    # the frame change is diagonal, so the final states agree up to it
    u = interaction_to_static(p, t_end)
    psi_static = u @ sol.y[:, -1]
    assert abs(np.vdot(psi_static, tr.final @ psi_static).real - 1) < 1e-6


def test_vdw_defaults():
    v = VdwParams()
    assert v.urr == pytest.approx(mhz(200), rel=1e-3)
    assert VdwParams.from_urr(mhz(200)).urr == pytest.approx(mhz(200), rel=1e-12)
    with pytest.raises(InvalidInputError):
        VdwParams(r0=-1)


def test_laser_params_validation():
    with pytest.raises(InvalidInputError):
        LaserParams(0.0, 1.0, 1.0)
    with pytest.warns(UserWarning):
        LaserParams(1.0, 0.05, 1.0)


# --- two-photon reduction ---------------------------------------------------

def test_two_photon_reduce_reference_parameters():
    tp = TwoPhotonParams(mhz(93.42), mhz(0.856), mhz(1000))
    o1, o2 = two_photon_reduce(tp, mhz(200))
    assert o1 == pytest.approx(mhz(4.0), rel=5e-3)
    assert o2 == pytest.approx(mhz(0.04), rel=5e-3)


def test_two_photon_zero_drive():
    assert two_photon_reduce(TwoPhotonParams(0.0, 1.0, 10.0), 2.0) == (0.0, 0.0)


@given(st.floats(0.1, 50), st.floats(0, 50), st.floats(100, 1000), st.floats(0, 500))
def test_two_photon_formula(wa, wb, d1, delta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        o1, o2 = two_photon_reduce(TwoPhotonParams(wa, wb, d1), delta)
    assert o1 / 2 == pytest.approx((2 * d1 + delta) * wa**2 / (8 * d1 * (d1 + delta)), rel=1e-12)
    assert o2 / 2 == pytest.approx(wa * wb / (4 * d1), rel=1e-12)


def test_dimension_constant():
    assert DIM == 27
