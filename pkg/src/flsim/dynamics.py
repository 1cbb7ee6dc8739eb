"""Master-equation propagation and observables.

Two propagation paths share one :class:`Trajectory` type:

* :func:`propagate_const` for a constant generator, using cached
  superoperator exponentials chained over the sample grid;
* :func:`propagate_timedep` for time-dependent Hamiltonians, using the
  adaptive Dormand-Prince pair on the vectorized master equation.
"""
from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.sparse

from .errors import DimensionMismatchError, InvalidInputError, StiffnessError
from .operators import JumpChannel, liouvillian, matrix_exp

__all__ = [
    "Trajectory",
    "PropagatorCache",
    "default_cache",
    "step_propagator",
    "propagate_const",
    "propagate_timedep",
    "propagate_parts",
    "SplitGenerator",
    "observe",
    "purity",
    "apply_superop",
]


def observe(rho, state) -> float:
    """Population ``<psi|rho|psi>`` of a state vector, or ``Tr(P rho)`` of a projector."""
    rho = np.asarray(rho)
    s = np.asarray(state)
    if s.ndim == 1:
        return float(np.real(np.vdot(s, rho @ s)))
    return float(np.real(np.trace(s @ rho)))


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


@dataclass
class Trajectory:
    """Sampled density matrices with named observables.

    ``states`` has shape ``(n_samples, d, d)``. ``marks`` records sample
    indices of interest, e.g. the end of every cycle.
    """

    times: np.ndarray
    states: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    marks: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise InvalidInputError("times and states must have matching length")
        if len(self.times) > 1 and np.any(np.diff(self.times) < 0):
            raise InvalidInputError("sample times must be non-decreasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def population(self, state) -> np.ndarray:
        s = np.asarray(state)
        if s.ndim == 1:
            return np.real(np.einsum("i,nij,j->n", s.conj(), self.states, s))
        return np.real(np.einsum("ij,nji->n", s, self.states))

    def purity(self) -> np.ndarray:
        return np.real(np.einsum("nij,nji->n", self.states, self.states))

    def traces(self) -> np.ndarray:
        return np.real(np.einsum("nii->n", self.states))

    def add_populations(self, named: dict) -> "Trajectory":
        for name, s in named.items():
            self.observables[name] = self.population(s)
        return self

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Append ``other`` (whose first sample duplicates our last one)."""
        offset = len(self.times) - 1
        marks = {k: list(v) for k, v in self.marks.items()}
        for k, v in other.marks.items():
            marks.setdefault(k, []).extend(i + offset for i in v)
        obs = {}
        for k in set(self.observables) | set(other.observables):
            if k in self.observables and k in other.observables:
                obs[k] = np.concatenate([self.observables[k], other.observables[k][1:]])
        return Trajectory(
            np.concatenate([self.times, other.times[1:]]),
            np.concatenate([self.states, other.states[1:]]),
            obs,
            marks,
        )


class PropagatorCache:
    """Thread-safe LRU cache of ``exp(L t)`` keyed by the generator's bytes."""

    def __init__(self, maxsize=48):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(generator: np.ndarray, t: float):
        g = np.ascontiguousarray(generator)
        digest = hashlib.blake2b(g.view(np.uint8), digest_size=16).hexdigest()
        return digest, g.shape, float(t)

    def get(self, generator, t) -> np.ndarray:
        k = self.key(generator, t)
        with self._lock:
            hit = self._data.get(k)
            if hit is not None:
                self._data.move_to_end(k)
                self.hits += 1
                return hit
        value = matrix_exp(generator, t)
        value.setflags(write=False)
        with self._lock:
            self.misses += 1
            self._data[k] = value
            self._data.move_to_end(k)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return value

    def clear(self):
        with self._lock:
            self._data.clear()


default_cache = PropagatorCache()


def _check(rho0, h, channels):
    rho0 = np.asarray(rho0, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho0.shape != h.shape:
        raise DimensionMismatchError(f"state shape {rho0.shape} vs Hamiltonian {h.shape}")
    for ch in channels:
        if ch.dim != h.shape[0]:
            raise DimensionMismatchError("jump operator dimension differs from the Hamiltonian")
    return rho0, h


def apply_superop(s, rho) -> np.ndarray:
    n = rho.shape[0]
    return (s @ rho.reshape(-1)).reshape(n, n)


def _sample_times(duration, samples):
    if duration < 0:
        raise InvalidInputError("duration must be non-negative")
    if np.ndim(samples) == 0:
        n = int(samples)
        if n < 1:
            raise InvalidInputError("need at least one sample interval")
        return np.linspace(0.0, duration, n + 1)
    times = np.asarray(samples, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or times[0] < 0 or times[-1] > duration * (1 + 1e-12):
        raise InvalidInputError("sample times must be sorted within [0, duration]")
    return times


def step_propagator(h, channels: Sequence[JumpChannel], duration, cache: PropagatorCache | None = default_cache):
    """Superoperator ``exp(L duration)`` for a constant generator."""
    gen = liouvillian(h, channels)
    if cache is None:
        return matrix_exp(gen, duration)
    return cache.get(gen, duration)


def propagate_const(rho0, h, channels: Sequence[JumpChannel] = (), duration=0.0, samples=1,
                    cache: PropagatorCache | None = default_cache) -> Trajectory:
    """Propagate under a time-independent Lindblad generator.

    ``samples`` is either a number of equal intervals or an explicit sorted
    array of times in ``[0, duration]``. Uniform grids chain one cached
    ``exp(L dt)``.
    """
    rho0, h = _check(rho0, h, channels)
    times = _sample_times(duration, samples)
    if duration == 0:
        return Trajectory(times, np.repeat(rho0[None], len(times), axis=0))
    gen = liouvillian(h, channels)
    states = np.empty((len(times),) + rho0.shape, dtype=complex)
    dts = np.diff(times, prepend=0.0)
    if np.ndim(samples) == 0:
        dts[1:] = duration / int(samples)  # identical keys -> one exponential
    v = rho0.reshape(-1)
    for k, dt in enumerate(dts):
        if dt > 0:
            prop = cache.get(gen, dt) if cache is not None else matrix_exp(gen, dt)
            v = prop @ v
        states[k] = v.reshape(rho0.shape)
    return Trajectory(times, states)


def propagate_timedep(
    rho0,
    h_of_t: Callable[[float], np.ndarray],
    channels: Sequence[JumpChannel] = (),
    duration=0.0,
    rel_tol=1e-8,
    abs_tol=1e-10,
    samples=1,
    max_step=np.inf,
    method="DOP853",
    breakpoints=None,
) -> Trajectory:
    """Adaptive explicit Runge-Kutta (Dormand-Prince 8(5,3) by default) on ``d vec(rho)/dt = L(t) vec(rho)``.

    The right-hand side is evaluated in Hilbert space, which is the same
    linear map as the vectorized generator but costs ``O(d^3)``.
    ``breakpoints`` lists times where ``h_of_t`` has kinks (e.g. the nodes
    of an interpolated noise trace); the integrator is restarted there so
    that every segment is smooth. Raises :class:`StiffnessError` when the
    step size underflows.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    times = _sample_times(duration, samples)
    if duration == 0:
        return Trajectory(times, np.repeat(rho0[None], len(times), axis=0))
    n = rho0.shape[0]
    h0 = np.asarray(h_of_t(0.0))
    _check(rho0, h0, channels)
    chans = [c for c in channels if c.rate]
    ops = [(np.sqrt(c.rate) * c.operator) for c in chans]
    ops = [(c, c.conj().T, c.conj().T @ c) for c in ops]
    heff_d = sum((0.5 * cdc for _, _, cdc in ops), np.zeros((n, n), dtype=complex))

    def rhs(t, y):
        rho = y.reshape(n, n)
        k = -1j * np.asarray(h_of_t(t)) - heff_d
        out = k @ rho + rho @ k.conj().T
        for c, cd, _ in ops:
            out += c @ rho @ cd
        return out.reshape(-1)

    return _integrate(rhs, rho0, times, duration, rel_tol, abs_tol, max_step, method, breakpoints)


def _integrate(rhs, rho0, times, duration, rel_tol, abs_tol, max_step, method, breakpoints):
    n = rho0.shape[0]
    edges = np.array([0.0, float(duration)])
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        edges = np.unique(np.concatenate([edges, bp[(bp > 0) & (bp < duration)]]))
    states = np.empty((len(times), n, n), dtype=complex)
    states[times == 0] = rho0
    y = rho0.reshape(-1)
    last_t = [0.0]

    def tracked(t, v):
        last_t[0] = t
        return rhs(t, v)

    for a, b in zip(edges[:-1], edges[1:]):
        idx = np.flatnonzero((times > a) & (times <= b))
        t_eval = np.union1d(times[idx], [b]) if idx.size else None
        # segments between breakpoints are short and smooth: try one step first
        first = min(b - a, max_step) if breakpoints is not None else None
        sol = scipy.integrate.solve_ivp(
            tracked, (a, b), y, method=method, t_eval=t_eval, rtol=rel_tol, atol=abs_tol, max_step=max_step,
            first_step=first,
        )
        if sol.status != 0:
            # t_eval hides the last accepted step; the last trial time is the better stamp
            t_fail = float(last_t[0])
            raise StiffnessError(f"integration failed at t = {t_fail:.6g} us: {sol.message}", t_fail)
        if idx.size:
            states[idx] = sol.y.T[np.searchsorted(t_eval, times[idx])].reshape(-1, n, n)
        y = sol.y[:, -1]
    return Trajectory(times, states)


@dataclass(frozen=True)
class SplitGenerator:
    """Sparse pieces of ``L(t) = L0 + a(t) L_R + conj(a(t)) L_R^dag`` for ``H = static + a R + h.c.``."""

    l0: scipy.sparse.csr_matrix
    lr: scipy.sparse.csr_matrix
    lrd: scipy.sparse.csr_matrix
    dim: int

    @classmethod
    def build(cls, static, raising, channels: Sequence[JumpChannel] = ()) -> "SplitGenerator":
        static = np.asarray(static, dtype=complex)
        raising = np.asarray(raising, dtype=complex)
        if raising.shape != static.shape:
            raise DimensionMismatchError("raising part and static part differ in shape")
        n = static.shape[0]
        eye = np.eye(n)
        rd = raising.conj().T
        return cls(
            scipy.sparse.csr_matrix(liouvillian(static, channels)),
            scipy.sparse.csr_matrix(-1j * (np.kron(raising, eye) - np.kron(eye, raising.T))),
            scipy.sparse.csr_matrix(-1j * (np.kron(rd, eye) - np.kron(eye, rd.T))),
            n,
        )

    def apply(self, a: complex, y):
        return self.l0 @ y + a * (self.lr @ y) + a.conjugate() * (self.lrd @ y)


def propagate_parts(
    rho0,
    gen: SplitGenerator,
    amplitude: Callable[[float], complex],
    duration=0.0,
    rel_tol=1e-8,
    abs_tol=1e-10,
    samples=1,
    max_step=np.inf,
    method="DOP853",
    breakpoints=None,
) -> Trajectory:
    """:func:`propagate_timedep` for a :class:`SplitGenerator` and drive amplitude ``a(t)``.

    Each right-hand side costs three sparse mat-vecs, which is what makes
    pulse-shaped and noisy steps affordable.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (gen.dim, gen.dim):
        raise DimensionMismatchError(f"state shape {rho0.shape} vs generator dim {gen.dim}")
    times = _sample_times(duration, samples)
    if duration == 0:
        return Trajectory(times, np.repeat(rho0[None], len(times), axis=0))

    def rhs(t, y):
        return gen.apply(complex(amplitude(t)), y)

    return _integrate(rhs, rho0, times, duration, rel_tol, abs_tol, max_step, method, breakpoints)
