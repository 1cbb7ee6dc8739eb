"""Noise and imperfection models.

* Laser phase noise with a white frequency-noise spectrum
  ``S_dv(f) = h0``, i.e. ``S_phi(f) = h0 / f^2``, synthesized as a sum of
  cosines with random phases. The weak drive picks up ``exp(i phi(t))``.
* Quasi-static interatomic distance errors, which shift ``U_rr``.
* Timing errors of the coherent steps.
* Detuning of the weak laser.

Noise parameters are in SI-style units (Hz, Hz^2/Hz) as is customary;
traces are sampled on the microsecond time axis used by the simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atoms import HamiltonianParts, VdwParams
from .errors import CoverageError, InvalidInputError
from .protocols import Protocol, ProtocolStep, make_protocol
from .pulses import PulseKind, PulseShape, gaussian_sigma

__all__ = [
    "PhaseNoiseSpec",
    "NoiseTrace",
    "phase_noise_trace",
    "apply_phase_noise",
    "phase_source",
    "TracePhase",
    "PulseKind",
    "PulseShape",
    "gaussian_sigma",
    "ImperfectionSpec",
    "distance_shift",
    "apply_imperfections",
]


@dataclass(frozen=True)
class PhaseNoiseSpec:
    """White frequency noise of the weak laser.

    Attributes:
        h0: Frequency-noise density in Hz^2/Hz.
        f_max: Highest synthesized frequency in Hz.
        n_components: Number of cosine terms, ``M / 2``.
        seed: Master seed.
    """

    h0: float = 400.0
    f_max: float = 10e6
    n_components: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (self.h0 >= 0 and math.isfinite(self.h0)):
            raise InvalidInputError("h0 must be finite and non-negative")
        if not self.f_max > 0 or self.n_components < 1:
            raise InvalidInputError("need f_max > 0 and at least one component")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")

    @property
    def df(self) -> float:
        """Frequency spacing in Hz."""
        return self.f_max / self.n_components

    @property
    def dt_us(self) -> float:
        """Sample spacing ``1 / (M df)`` in us."""
        return 1e6 / (2 * self.n_components * self.df)

    @property
    def frequencies(self) -> np.ndarray:
        return self.df * np.arange(1, self.n_components + 1)

    def phase_amplitudes(self) -> np.ndarray:
        """``2 sqrt(S_phi(f_j) df)`` in rad."""
        return 2 * np.sqrt(self.h0 * self.df) / self.frequencies


@dataclass(frozen=True)
class NoiseTrace:
    """Sampled phase ``phi`` (rad) and frequency deviation ``dv`` (Hz) on a uniform grid in us."""

    times: np.ndarray
    phi: np.ndarray
    dv: np.ndarray
    spec: PhaseNoiseSpec

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def phase(self, t, offset=0.0):
        """Linear interpolation of ``phi`` at ``offset + t``."""
        tt = np.asarray(t, dtype=float) + offset
        if np.any(tt < -1e-12) or np.any(tt > self.duration * (1 + 1e-12) + 1e-12):
            raise CoverageError(f"t = {tt} outside the trace [0, {self.duration}] us")
        out = np.interp(tt, self.times, self.phi)
        return float(out) if np.ndim(out) == 0 else out


def phase_noise_trace(spec: PhaseNoiseSpec, duration: float, seed=None) -> NoiseTrace:
    """Sample ``phi(t) = sum_j 2 sqrt(S_phi(f_j) df) cos(2 pi f_j t + varphi_j)``.

    The random phases ``varphi_j`` are uniform on ``[0, 2 pi)`` and drawn
    from ``numpy.random.default_rng(seed)``; ``seed`` defaults to
    ``spec.seed`` and may be anything ``SeedSequence`` accepts. The grid
    spacing is ``spec.dt_us`` and the last sample is at or beyond
    ``duration``.
    """
    if not duration > 0:
        raise InvalidInputError("duration must be positive")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    varphi = rng.uniform(0.0, 2 * np.pi, spec.n_components)
    n = int(math.ceil(duration / spec.dt_us - 1e-9))
    times = spec.dt_us * np.arange(n + 1)
    if spec.h0 == 0:
        zeros = np.zeros(n + 1)
        return NoiseTrace(times, zeros, zeros.copy(), spec)
    arg = 2 * np.pi * np.outer(times * 1e-6, spec.frequencies) + varphi
    phi = np.cos(arg) @ spec.phase_amplitudes()
    dv = -np.sin(arg) @ np.full(spec.n_components, 2 * math.sqrt(spec.h0 * spec.df))
    return NoiseTrace(times, phi, dv, spec)


def apply_phase_noise(h, trace: NoiseTrace, duration=None, offset=0.0) -> Callable[[float], np.ndarray]:
    """Time-dependent Hamiltonian with ``omega2 -> omega2 exp(i phi(t))``.

    ``h`` is either :class:`~flsim.atoms.HamiltonianParts` (rectangular
    pulse) or a coherent :class:`~flsim.protocols.ProtocolStep`, whose pulse
    envelope is kept. ``offset`` shifts the read-out point in the trace.
    """
    if isinstance(h, ProtocolStep):
        if not h.coherent:
            raise InvalidInputError("phase noise acts on coherent steps only")
        duration = h.duration if duration is None else duration

        def build(t, phase):
            return h.hamiltonian_at(t, phase)
    elif isinstance(h, HamiltonianParts):
        def build(t, phase):
            return h.at(np.exp(1j * phase))
    else:
        raise InvalidInputError("expected HamiltonianParts or a ProtocolStep")
    if duration is not None and offset + duration > trace.duration * (1 + 1e-12) + 1e-12:
        raise CoverageError(f"trace of {trace.duration} us cannot cover {duration} us from {offset} us")

    def h_of_t(t):
        return build(t, trace.phase(t, offset))

    return h_of_t


class TracePhase:
    """``phi(t)`` read from a trace starting at ``offset``; exposes the kinks of the interpolant."""

    def __init__(self, trace: NoiseTrace, offset=0.0):
        self.trace = trace
        self.offset = offset

    def __call__(self, t):
        return self.trace.phase(t, self.offset)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.trace.times - self.offset


def phase_source(spec: PhaseNoiseSpec, *, reuse_trace=False, total_time=None):
    """Phase provider for :func:`flsim.protocols.run_cycles`.

    By default every coherent step gets an independent trace seeded by
    ``(spec.seed, cycle, step)``. With ``reuse_trace`` one trace spanning
    ``total_time`` is generated and each step reads it at its own start time.
    """
    if spec.h0 == 0:
        return None
    if reuse_trace:
        if total_time is None:
            raise InvalidInputError("reuse_trace needs total_time")
        whole = phase_noise_trace(spec, total_time)

        def src(cycle, step, t_start, duration):
            return TracePhase(whole, t_start)

        return src

    def src(cycle, step, t_start, duration):
        return TracePhase(phase_noise_trace(spec, duration, seed=[int(spec.seed), cycle, step]))

    return src


# --- static imperfections ---------------------------------------------------

@dataclass(frozen=True)
class ImperfectionSpec:
    """Quasi-static errors applied to a protocol.

    Attributes:
        delta_r: Offset of every interatomic distance, in nm.
        delta_t_fraction: Relative error of every coherent-step duration.
        delta_freq: Detuning of the weak laser in rad/us (positive = red).
        exact_distance: Use ``C6 / (R0 + dR)^6`` instead of the linearized shift.
    """

    delta_r: float = 0.0
    delta_t_fraction: float = 0.0
    delta_freq: float = 0.0
    exact_distance: bool = False

    def __post_init__(self):
        if abs(self.delta_t_fraction) > 0.5:
            raise InvalidInputError("|delta_t_fraction| must not exceed 0.5")
        if not all(math.isfinite(x) for x in (self.delta_r, self.delta_t_fraction, self.delta_freq)):
            raise InvalidInputError("imperfections must be finite")

    @property
    def is_zero(self) -> bool:
        return self.delta_r == 0 and self.delta_t_fraction == 0 and self.delta_freq == 0


def distance_shift(delta_r_nm: float, v: VdwParams, exact=False) -> VdwParams:
    """Interaction after moving every atom pair by ``delta_r_nm``.

    Linearized: ``U -> U (1 - 6 dR / R0)``; exact: ``C6 / (R0 + dR)^6``.
    """
    dr = delta_r_nm * 1e-3
    if abs(dr) >= v.r0:
        raise InvalidInputError("distance offset must be smaller than r0")
    if dr == 0:
        return v
    u = v.urr
    if exact:
        new = u * (v.r0 / (v.r0 + dr)) ** 6
    else:
        new = u * (1 - 6 * dr / v.r0)
    return VdwParams(c6=v.c6, r0=v.r0 + dr, urr_override=new)


def _stretch(step: ProtocolStep, factor: float) -> ProtocolStep:
    return ProtocolStep(step.label, step.duration * factor, step.hamiltonian, step.pulse, step.channels, step.always_on)


def apply_imperfections(protocol: Protocol, spec: ImperfectionSpec, vdw: VdwParams | None = None) -> Protocol:
    """Protocol with the requested static errors.

    A distance offset switches to the full static-frame Hamiltonians with the
    shifted ``U_rr`` (the nominal one is ``U_rr = Delta`` unless ``vdw`` is
    given). A detuning shifts every Rydberg excitation of the weak drive.
    Timing errors stretch coherent steps only; a Gaussian envelope keeps its
    width and is truncated or extended.
    """
    if spec.is_zero:
        return protocol
    build = dict(protocol.meta)
    p = build.pop("p", None)
    d = build.pop("d", None)
    if p is None or d is None:
        raise InvalidInputError("protocol was not made by make_protocol; cannot rebuild")
    if spec.delta_r:
        base = vdw or build.get("vdw") or VdwParams.from_urr(p.delta)
        build["vdw"] = distance_shift(spec.delta_r, base, spec.exact_distance)
        build["model"] = "full"
    build["detuning"] = build.get("detuning", 0.0) + spec.delta_freq
    out = make_protocol(protocol.label, p, d, n_cycles=protocol.n_cycles, **build)
    if spec.delta_t_fraction:
        f = 1 + spec.delta_t_fraction
        out = out.with_steps(_stretch(s, f) if s.coherent else s for s in out.steps)
    return out
