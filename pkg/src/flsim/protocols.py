"""Six-step pump/dissipation cycles and their one-period generators.

Conversion I turns ``|GHZ->`` into ``|W0>``::

    EP1 -> CD -> SE0 -> CD -> EP0 -> UCD

and conversion II turns ``|W0>`` into ``|GHZ->``::

    SE0 -> UCD -> SE1 -> UCD -> SE+ -> UCD

Coherent steps are pi pulses of the weak drive, either rectangular or
Gaussian; dissipative steps switch on an engineered decay channel for a
fixed time. Natural Rydberg decay is on throughout.
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .atoms import (
    DIM,
    HamiltonianParts,
    LaserParams,
    PumpVariant,
    VdwParams,
    effective_parts,
    full_parts,
    mhz,
    named_state,
)
from .dissipation import ChannelKind, DecayParams, effective_channels, rydberg_decay_channels
from .dynamics import PropagatorCache, SplitGenerator, Trajectory, default_cache, propagate_parts, purity
from .errors import FlsimError, InvalidInputError, NonUniqueSteadyStateError, NumericalError
from .operators import JumpChannel, eig, liouvillian, matrix_exp, matrix_log
from .pulses import PulseKind, PulseShape

__all__ = [
    "ProtocolLabel",
    "ProtocolStep",
    "Protocol",
    "CD_TIME_FACTOR",
    "UCD_TIME_FACTOR",
    "GAUSS_OMEGA0",
    "make_conversion_I",
    "make_conversion_II",
    "make_protocol",
    "run_cycles",
    "cycle_propagator",
    "effective_liouvillian",
    "SpectrumResult",
    "steady_state_analysis",
    "SweepPoint",
    "sweep_ratio",
]

#: Dissipative step lengths in units of the inverse effective rate.
CD_TIME_FACTOR = 4.6
UCD_TIME_FACTOR = 9.75
#: Peak Rabi frequency of the Gaussian pulses.
GAUSS_OMEGA0 = mhz(0.072)

# Pulse-area coefficient of each pump: its effective Rabi frequency over omega2.
_ALPHA = {
    PumpVariant.EP0: math.sqrt(3),
    PumpVariant.EP1: math.sqrt(3),
    PumpVariant.SE0: 1.0,
    PumpVariant.SE1: 1.0,
    PumpVariant.SEPLUS: math.sqrt(2),
}


class ProtocolLabel(str, enum.Enum):
    CONVERSION_I = "ConversionI"
    CONVERSION_II = "ConversionII"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class ProtocolStep:
    """One step of a cycle.

    A coherent step carries ``hamiltonian`` (and optionally a ``pulse``
    envelope, ``None`` meaning a rectangular pulse at the nominal
    amplitude); a dissipative step carries engineered ``channels``.
    ``always_on`` channels act in both kinds of step.
    """

    label: str
    duration: float
    hamiltonian: HamiltonianParts | None = None
    pulse: PulseShape | None = None
    channels: tuple[JumpChannel, ...] = ()
    always_on: tuple[JumpChannel, ...] = ()

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise InvalidInputError(f"step {self.label}: duration must be positive, got {self.duration}")
        if self.hamiltonian is None and not self.channels:
            raise InvalidInputError(f"step {self.label}: needs a Hamiltonian or decay channels")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "always_on", tuple(self.always_on))

    @property
    def coherent(self) -> bool:
        return self.hamiltonian is not None

    @property
    def constant(self) -> bool:
        return self.pulse is None or self.pulse.kind is PulseKind.RECTANGULAR

    @property
    def all_channels(self) -> tuple[JumpChannel, ...]:
        return self.channels + self.always_on

    def amplitude(self, t) -> float:
        """Weak-drive amplitude relative to the one ``hamiltonian`` was built with."""
        if self.constant:
            return 1.0
        return float(self.pulse.envelope(t) / self.pulse.omega0)

    def hamiltonian_at(self, t, phase=0.0) -> np.ndarray:
        if self.hamiltonian is None:
            return np.zeros((DIM, DIM), dtype=complex)
        a = self.amplitude(t)
        if phase:
            a = a * np.exp(1j * phase)
        return self.hamiltonian.at(a)

    def generator(self) -> np.ndarray:
        """Lindblad generator of a constant step."""
        if not self.constant:
            raise InvalidInputError(f"step {self.label} has a time-dependent pulse")
        return liouvillian(self.hamiltonian_at(0.0), self.all_channels)


@dataclass(frozen=True)
class Protocol:
    """An ordered cycle of steps, repeated ``n_cycles`` times by default.

    ``initial`` and ``target`` name the states the protocol converts between
    (see :func:`flsim.atoms.named_state`).
    """

    label: ProtocolLabel
    steps: tuple[ProtocolStep, ...]
    n_cycles: int = 18
    initial: str = ""
    target: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "label", ProtocolLabel(self.label))
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise InvalidInputError("a protocol needs at least one step")
        if self.label is not ProtocolLabel.CUSTOM and len(self.steps) != 6:
            raise InvalidInputError(f"{self.label.value} has six steps, got {len(self.steps)}")
        if self.n_cycles < 1:
            raise InvalidInputError("n_cycles must be at least 1")

    @property
    def period(self) -> float:
        return sum(s.duration for s in self.steps)

    @property
    def coherent_time(self) -> float:
        return sum(s.duration for s in self.steps if s.coherent)

    @property
    def constant(self) -> bool:
        return all(s.constant for s in self.steps)

    def durations(self) -> list[float]:
        return [s.duration for s in self.steps]

    def with_steps(self, steps) -> "Protocol":
        return replace(self, steps=tuple(steps))


# --- builders ---------------------------------------------------------------

def _coherent_step(variant, p: LaserParams, model, vdw, pulse_kind, omega0, detuning, always_on):
    variant = PumpVariant(variant)
    alpha = _ALPHA[variant]
    if PulseKind(pulse_kind) is PulseKind.GAUSSIAN:
        pulse = PulseShape(PulseKind.GAUSSIAN, omega0, alpha)
        lp = LaserParams(p.omega1, omega0, p.delta, variant)
        duration = pulse.duration
    else:
        pulse = None
        lp = p.with_variant(variant)
        duration = math.pi / (alpha * p.omega2)
    if model == "effective":
        parts = effective_parts(lp, detuning)
    elif model == "full":
        parts = full_parts(lp, vdw if vdw is not None else VdwParams(urr_override=p.delta), detuning)
    else:
        raise InvalidInputError(f"unknown model {model!r}; use 'effective' or 'full'")
    return ProtocolStep(variant.value, duration, hamiltonian=parts, pulse=pulse, always_on=always_on)


def _decay_step(kind, d: DecayParams, duration, always_on):
    kind = ChannelKind(kind)
    return ProtocolStep(kind.value, duration, channels=tuple(effective_channels(kind, d)), always_on=always_on)


def make_protocol(
    label,
    p: LaserParams,
    d: DecayParams,
    *,
    model: str = "effective",
    vdw: VdwParams | None = None,
    pulse: str = "rect",
    omega0: float = GAUSS_OMEGA0,
    tau1: float | None = None,
    tau2: float | None = None,
    detuning: float = 0.0,
    gamma_r: bool = True,
    n_cycles: int = 18,
) -> Protocol:
    """Build conversion I or II.

    Args:
        label: ``ProtocolLabel.CONVERSION_I`` or ``CONVERSION_II``.
        p: Laser parameters; ``p.omega2`` sets the rectangular pulse lengths.
        d: Decay parameters; the engineered rates fix ``tau1`` and ``tau2``
            unless given.
        model: ``"effective"`` (Zeno Hamiltonians) or ``"full"`` (static-frame
            three-atom Hamiltonians with ``vdw``; ``U_rr = Delta`` if omitted).
        pulse: ``"rect"`` or ``"gauss"``; Gaussian pulses peak at ``omega0``.
        detuning: Weak-laser detuning added to every Rydberg excitation.
        gamma_r: Keep natural Rydberg decay on during every step.
    """
    label = ProtocolLabel(label)
    always_on = tuple(rydberg_decay_channels(d)) if gamma_r else ()
    tau1 = CD_TIME_FACTOR / d.Gamma1 if tau1 is None else tau1
    tau2 = UCD_TIME_FACTOR / d.Gamma2 if tau2 is None else tau2

    def coh(v):
        return _coherent_step(v, p, model, vdw, pulse, omega0, detuning, always_on)

    def dec(kind, tau):
        return _decay_step(kind, d, tau, always_on)

    if label is ProtocolLabel.CONVERSION_I:
        steps = [coh("EP1"), dec("CD", tau1), coh("SE0"), dec("CD", tau1), coh("EP0"), dec("UCD", tau2)]
        initial, target = "GHZ-", "W0"
    elif label is ProtocolLabel.CONVERSION_II:
        steps = [coh("SE0"), dec("UCD", tau2), coh("SE1"), dec("UCD", tau2), coh("SEplus"), dec("UCD", tau2)]
        initial, target = "W0", "GHZ-"
    else:
        raise InvalidInputError("only conversion I and II have builders")
    meta = {
        "p": p, "d": d, "model": model, "vdw": vdw, "pulse": PulseKind(pulse).value, "omega0": omega0,
        "tau1": tau1, "tau2": tau2, "detuning": detuning, "gamma_r": gamma_r,
    }
    return Protocol(label, tuple(steps), n_cycles, initial, target, meta)


def make_conversion_I(p: LaserParams, d: DecayParams, **kwargs) -> Protocol:
    """GHZ-to-W cycle; keyword arguments as in :func:`make_protocol`."""
    return make_protocol(ProtocolLabel.CONVERSION_I, p, d, **kwargs)


def make_conversion_II(p: LaserParams, d: DecayParams, **kwargs) -> Protocol:
    """W-to-GHZ cycle; keyword arguments as in :func:`make_protocol`."""
    return make_protocol(ProtocolLabel.CONVERSION_II, p, d, **kwargs)


# --- execution --------------------------------------------------------------

#: ``phase_source(cycle, step_index, t_start, duration)`` returns the laser
#: phase ``phi(t)`` (``t`` from the start of the step) for a coherent step,
#: or ``None`` for a noiseless one.
PhaseSource = Callable[[int, int, float, float], Callable[[float], float] | None]


def _step_propagator(step, dt, cache):
    gen = step.generator()
    return cache.get(gen, dt) if cache is not None else matrix_exp(gen, dt)


def _split_generator(step):
    parts = step.hamiltonian
    if parts is None:
        zero = np.zeros((DIM, DIM), dtype=complex)
        return SplitGenerator.build(zero, zero, step.all_channels)
    return SplitGenerator.build(parts.static, parts.raising, step.all_channels)


def _step_trajectory(rho, step, samples, prop, gen, phase, rel_tol, abs_tol):
    if step.constant and phase is None:
        times = np.linspace(0.0, step.duration, samples + 1)
        states = np.empty((samples + 1,) + rho.shape, dtype=complex)
        v = rho.reshape(-1)
        states[0] = rho
        for k in range(1, samples + 1):
            v = prop @ v
            states[k] = v.reshape(rho.shape)
        return Trajectory(times, states)

    if phase is None:
        def amp(t):
            return step.amplitude(t)
    else:
        def amp(t):
            return step.amplitude(t) * np.exp(1j * phase(t))
    return propagate_parts(rho, gen, amp, step.duration, rel_tol=rel_tol, abs_tol=abs_tol,
                           samples=samples, breakpoints=getattr(phase, "breakpoints", None))


def run_cycles(
    rho0,
    protocol: Protocol,
    n_cycles: int | None = None,
    samples_per_step: int = 1,
    *,
    phase_source: PhaseSource | None = None,
    observables: Sequence[str] | None = None,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    cache: PropagatorCache | None = default_cache,
) -> Trajectory:
    """Repeat the protocol and record the state ``samples_per_step`` times per step.

    The returned trajectory carries populations of ``observables`` (default:
    the protocol's initial and target states), a ``purity`` series and the
    marks ``step_end`` and ``cycle_end`` (sample indices).
    """
    n_cycles = protocol.n_cycles if n_cycles is None else int(n_cycles)
    if n_cycles < 1:
        raise InvalidInputError("n_cycles must be at least 1")
    if samples_per_step < 1:
        raise InvalidInputError("samples_per_step must be at least 1")
    rho = np.asarray(rho0, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise InvalidInputError(f"initial state must be {DIM}x{DIM}, got {rho.shape}")

    times = [np.zeros(1)]
    states = [rho[None]]
    marks = {"step_end": [], "cycle_end": []}
    props, gens = {}, {}
    t0 = 0.0
    count = 1
    for c in range(n_cycles):
        for k, step in enumerate(protocol.steps):
            phase = phase_source(c, k, t0, step.duration) if (phase_source and step.coherent) else None
            prop = gen = None
            if step.constant and phase is None:
                if k not in props:
                    props[k] = _step_propagator(step, step.duration / samples_per_step, cache)
                prop = props[k]
            else:
                if k not in gens:
                    gens[k] = _split_generator(step)
                gen = gens[k]
            traj = _step_trajectory(rho, step, samples_per_step, prop, gen, phase, rel_tol, abs_tol)
            rho = traj.final
            times.append(t0 + traj.times[1:])
            states.append(traj.states[1:])
            t0 += step.duration
            count += len(traj.times) - 1
            marks["step_end"].append(count - 1)
        marks["cycle_end"].append(count - 1)

    out = Trajectory(np.concatenate(times), np.concatenate(states), marks=marks)
    names = list(observables) if observables is not None else [protocol.initial, protocol.target]
    out.add_populations({n: named_state(n) for n in names if n})
    out.observables["purity"] = out.purity()
    return out


def cycle_propagator(protocol: Protocol, cache: PropagatorCache | None = default_cache) -> np.ndarray:
    """Ordered product ``exp(L6 t6) ... exp(L1 t1)`` of a constant protocol."""
    if not protocol.constant:
        raise InvalidInputError("cycle propagator needs constant (rectangular-pulse) steps")
    out = None
    for step in protocol.steps:
        prop = _step_propagator(step, step.duration, cache)
        out = prop if out is None else prop @ out
    return out


def effective_liouvillian(
    protocol: Protocol,
    cache: PropagatorCache | None = default_cache,
    *,
    branch: str = "principal",
    verify_floor: float = 0.1,
) -> np.ndarray:
    """``(1/T) Log`` of the one-period propagator.

    The cycle propagator of a dissipative protocol usually has a few real
    negative eigenvalues (modes flipped by a pi pulse and damped within the
    period). By default the principal branch is taken for them, which fixes
    only the imaginary part of those fast modes. ``branch="strict"`` raises
    :class:`~flsim.errors.BranchAmbiguityError` instead. The round trip
    ``exp(L T) = P`` is verified to ``1e-8`` on the invariant subspace of
    eigenvalues with ``|mu| > verify_floor``, which contains the steady state
    and every slow mode.
    """
    return matrix_log(
        cycle_propagator(protocol, cache),
        protocol.period,
        branch=branch,
        verify_floor=verify_floor,
    )


# --- spectrum and steady state ----------------------------------------------

@dataclass(frozen=True)
class SpectrumResult:
    """Spectrum and steady state of an effective Liouvillian."""

    eigenvalues: np.ndarray
    steady_state: np.ndarray
    purity: float
    target_population: float
    spectral_gap: float
    zero_tol: float = 1e-8

    @property
    def zero_modes(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) < self.zero_tol))


def steady_state_analysis(l_eff, target, *, zero_tol=1e-8, clip_tol=1e-10) -> SpectrumResult:
    """Steady state from the kernel of ``l_eff`` plus purity and target population.

    Args:
        l_eff: Generator on row-stacked density matrices.
        target: State name or vector whose population is reported.
        zero_tol: Eigenvalues with ``|lambda| < zero_tol`` count as zero modes;
            there must be exactly one.
        clip_tol: Negative steady-state eigenvalues down to ``-clip_tol`` are
            set to zero before purity is computed.

    Raises:
        NonUniqueSteadyStateError: no or several zero modes.
        NumericalError: steady state not positive within ``1e-8``.
    """
    l_eff = np.asarray(l_eff)
    res = eig(l_eff)
    w, v = res.eigenvalues, res.right_eigenvectors
    zero = np.flatnonzero(np.abs(w) < zero_tol)
    if zero.size != 1:
        raise NonUniqueSteadyStateError(
            f"expected one zero mode, found {zero.size} (smallest |lambda| = {np.min(np.abs(w)):.3e})"
        )
    n = int(round(math.sqrt(l_eff.shape[0])))
    rho = v[:, zero[0]].reshape(n, n)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise NumericalError("zero mode is traceless; not a density matrix", {"trace": complex(tr)})
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -1e-8:
        raise NumericalError("steady state is not positive", {"min_eigenvalue": float(vals.min())})
    vals = np.where(vals < clip_tol, np.clip(vals, 0.0, None), vals)
    rho = (vecs * vals) @ vecs.conj().T
    rho = rho / np.real(np.trace(rho))
    target_vec = named_state(target) if isinstance(target, str) else np.asarray(target)
    pop = float(np.real(np.vdot(target_vec, rho @ target_vec)))
    others = np.delete(w, zero)
    gap = float(np.min(np.abs(others.real))) if others.size else 0.0
    return SpectrumResult(w, rho, purity(rho), pop, gap, zero_tol)


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    result: SpectrumResult | None
    error: str | None = None


def sweep_ratio(
    family,
    ratios: Sequence[float],
    d: DecayParams | None = None,
    *,
    omega1: float = mhz(4.0),
    delta: float = mhz(200.0),
    model: str = "full",
    vdw: VdwParams | None = None,
    threads: int = 1,
) -> list[SweepPoint]:
    """Steady-state analysis of a protocol family against ``omega2 / omega1``.

    ``omega1`` stays fixed. The full static-frame model is the default,
    since the effective one does not depend on the ratio. A failing point is
    recorded with its error message and the sweep goes on.
    """
    d = DecayParams() if d is None else d
    label = ProtocolLabel(family)
    for r in ratios:
        if not 0 < r <= 0.1:
            raise InvalidInputError(f"ratio {r} outside (0, 0.1]")

    def one(r):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                p = LaserParams(omega1, r * omega1, delta)
            proto = make_protocol(label, p, d, model=model, vdw=vdw)
            return SweepPoint(r, steady_state_analysis(effective_liouvillian(proto, cache=None), proto.target))
        except FlsimError as exc:
            return SweepPoint(r, None, f"{type(exc).__name__}: {exc}")

    if threads > 1 and len(ratios) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, ratios))
    return [one(r) for r in ratios]
