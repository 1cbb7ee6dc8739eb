"""Engineered and natural Rydberg decay channels.

The effective channels act on the 27-dim three-atom space. The single-atom
"full" models keep the short-lived intermediate states explicitly and are
used to check the adiabatic elimination behind the effective rates.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.optimize

from .atoms import N_ATOMS, embed, mhz, single_atom_op
from .errors import InvalidInputError
from .operators import JumpChannel

__all__ = [
    "ChannelKind",
    "DecayParams",
    "EngineeredChannelSpec",
    "effective_channels",
    "rydberg_decay_channels",
    "SingleAtomModel",
    "full_cd_model",
    "effective_cd_model",
    "full_ucd_model",
    "effective_ucd_model",
    "cd_ground_population",
    "ucd_ground_population",
    "decay_duration",
]


class ChannelKind(str, enum.Enum):
    CD = "CD"
    UCD = "UCD"
    NATURAL = "NaturalRydberg"


@dataclass(frozen=True)
class DecayParams:
    """Intermediate-state decay rates, dressing Rabi frequencies and ``gamma_r``.

    Defaults are the 87Rb values with ``omega_di / gamma_i = 0.2``:
    ``gamma1 = gamma3 = 2 pi x 6.06 MHz`` (5P3/2), ``gamma2 = 2 pi x 5.75 MHz``
    (5P1/2) and ``gamma_r = 2 pi x 0.28 kHz``.
    """

    gamma1: float = mhz(6.06)
    gamma2: float = mhz(5.75)
    gamma3: float = mhz(6.06)
    omega_d1: float = 0.2 * mhz(6.06)
    omega_d2: float = 0.2 * mhz(5.75)
    omega_d3: float = 0.2 * mhz(6.06)
    gamma_r: float = mhz(0.28e-3)

    def __post_init__(self):
        vals = (self.gamma1, self.gamma2, self.gamma3, self.omega_d1, self.omega_d2, self.omega_d3, self.gamma_r)
        if any(not math.isfinite(x) or x < 0 for x in vals):
            raise InvalidInputError("decay parameters must be finite and non-negative")
        for od, g in ((self.omega_d1, self.gamma1), (self.omega_d2, self.gamma2), (self.omega_d3, self.gamma3)):
            if g > 0 and od / g > 0.2 + 1e-12:
                warnings.warn(f"omega_d/gamma = {od / g:.3g} > 0.2; adiabatic elimination degrades", stacklevel=3)

    @staticmethod
    def _rate(od, g):
        return od**2 / g if g > 0 else 0.0

    @property
    def Gamma1(self) -> float:
        return self._rate(self.omega_d1, self.gamma1)

    @property
    def Gamma2(self) -> float:
        return self._rate(self.omega_d2, self.gamma2)

    @property
    def Gamma3(self) -> float:
        return self._rate(self.omega_d3, self.gamma3)

    @classmethod
    def from_rates(cls, Gamma1, Gamma2, gamma_r=mhz(0.28e-3), ratio=0.2, gamma1=mhz(6.06), gamma2=mhz(5.75)):
        """Pick dressing strengths reproducing the requested effective rates.

        The intermediate-state widths are scaled so that ``omega_d/gamma``
        keeps the given ratio, i.e. ``gamma = Gamma / ratio**2``.
        """
        g1 = Gamma1 / ratio**2 if Gamma1 else gamma1
        g2 = Gamma2 / ratio**2 if Gamma2 else gamma2
        return cls(
            gamma1=g1, gamma2=g2, gamma3=g1,
            omega_d1=ratio * g1 if Gamma1 else 0.0,
            omega_d2=ratio * g2 if Gamma2 else 0.0,
            omega_d3=ratio * g1,
            gamma_r=gamma_r,
        )


_DEFAULT_BRANCHING = {
    ChannelKind.CD: {"0": 1.0},
    ChannelKind.UCD: {"0": 0.5, "1": 0.5},
    ChannelKind.NATURAL: {"0": 0.5, "1": 0.5},
}


@dataclass(frozen=True)
class EngineeredChannelSpec:
    """Which decay channel, and how ``|r>`` branches into the ground levels."""

    kind: ChannelKind
    branching: Mapping[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        br = dict(self.branching) if self.branching is not None else dict(_DEFAULT_BRANCHING[self.kind])
        if any(k not in ("0", "1") for k in br) or any(v < 0 for v in br.values()):
            raise InvalidInputError(f"bad branching {br}")
        if abs(sum(br.values()) - 1) > 1e-12:
            raise InvalidInputError(f"branching fractions must sum to 1, got {sum(br.values())}")
        object.__setattr__(self, "branching", br)

    def total_rate(self, d: DecayParams) -> float:
        if self.kind is ChannelKind.CD:
            return d.Gamma1
        if self.kind is ChannelKind.UCD:
            return d.Gamma2
        return d.gamma_r


def effective_channels(spec, d: DecayParams) -> list[JumpChannel]:
    """27-dim jump channels ``|l><r|_j`` for every atom ``j`` and target level ``l``."""
    if not isinstance(spec, EngineeredChannelSpec):
        spec = EngineeredChannelSpec(spec)
    total = spec.total_rate(d)
    out = []
    if total == 0:
        return out
    for lvl, frac in spec.branching.items():
        if frac == 0:
            continue
        op = single_atom_op(lvl, "r")
        for j in range(N_ATOMS):
            out.append(JumpChannel(embed(op, j), total * frac))
    return out


def rydberg_decay_channels(d: DecayParams) -> list[JumpChannel]:
    """Natural Rydberg decay, split equally between ``|0>`` and ``|1>``."""
    return effective_channels(ChannelKind.NATURAL, d)


# --- single-atom models -----------------------------------------------------

@dataclass(frozen=True)
class SingleAtomModel:
    levels: tuple[str, ...]
    hamiltonian: np.ndarray
    channels: tuple[JumpChannel, ...]

    def index(self, level: str) -> int:
        return self.levels.index(level)

    def ket(self, level: str) -> np.ndarray:
        v = np.zeros(len(self.levels), dtype=complex)
        v[self.index(level)] = 1
        return v

    def op(self, a: str, b: str) -> np.ndarray:
        return np.outer(self.ket(a), self.ket(b))


def _model(levels, couplings, decays):
    n = len(levels)
    base = SingleAtomModel(tuple(levels), np.zeros((n, n), dtype=complex), ())
    h = np.zeros((n, n), dtype=complex)
    for a, b, omega in couplings:
        h += omega / 2 * (base.op(a, b) + base.op(b, a))
    chans = tuple(JumpChannel(base.op(dst, src), rate) for dst, src, rate in decays if rate > 0)
    return SingleAtomModel(tuple(levels), h, chans)


_CD_LEVELS = ("r", "p1", "0", "1")
_UCD_LEVELS = ("r", "p3", "p4", "0", "1", "alpha")


def full_cd_model(d: DecayParams) -> SingleAtomModel:
    """``|r>`` dressed to ``|p1>`` which decays only to ``|0>``."""
    return _model(_CD_LEVELS, [("r", "p1", d.omega_d1)], [("0", "p1", d.gamma1)])


def effective_cd_model(d: DecayParams) -> SingleAtomModel:
    return _model(_CD_LEVELS, [], [("0", "r", d.Gamma1)])


def full_ucd_model(d: DecayParams) -> SingleAtomModel:
    """``|r>`` dressed to ``|p3>`` (branching 1/3, 1/2, 1/6 to ``0, 1, alpha``);
    ``|alpha>`` recycled through ``|p4>`` (branching 1/3 to ``0``, 2/3 back)."""
    return _model(
        _UCD_LEVELS,
        [("r", "p3", d.omega_d2), ("alpha", "p4", d.omega_d3)],
        [
            ("0", "p3", d.gamma2 / 3),
            ("1", "p3", d.gamma2 / 2),
            ("alpha", "p3", d.gamma2 / 6),
            ("0", "p4", d.gamma3 / 3),
            ("alpha", "p4", 2 * d.gamma3 / 3),
        ],
    )


def effective_ucd_model(d: DecayParams) -> SingleAtomModel:
    """Intermediate states eliminated; ``|alpha>`` kept as a slow leak."""
    g2, g3 = d.Gamma2, d.Gamma3
    return _model(
        _UCD_LEVELS,
        [],
        [
            ("0", "r", g2 / 3),
            ("1", "r", g2 / 2),
            ("alpha", "r", g2 / 6),
            ("0", "alpha", g3 / 3),
            ("alpha", "alpha", 2 * g3 / 3),
        ],
    )


# --- closed-form decay laws -------------------------------------------------

def cd_ground_population(t, Gamma1):
    """``rho_00(t)`` after starting in ``|r>`` under conditional decay."""
    return 1 - np.exp(-Gamma1 * np.asarray(t, dtype=float))


def ucd_ground_population(t, Gamma2, Gamma3):
    """``rho_00 + rho_11`` after starting in ``|r>`` under the three-level UCD model.

    At the degenerate point ``6 Gamma2 = 2 Gamma3`` the limit
    ``Gamma2 t exp(-Gamma2 t) / 6`` replaces the singular fraction.
    """
    t = np.asarray(t, dtype=float)
    rr = np.exp(-Gamma2 * t)
    denom = 6 * Gamma2 - 2 * Gamma3
    if abs(denom) <= 1e-12 * max(Gamma2, Gamma3):
        alpha = Gamma2 * t * rr / 6
    else:
        alpha = Gamma2 / denom * (np.exp(-Gamma3 * t / 3) - rr)
    return 1 - rr - alpha


def decay_duration(target_ground_prob: float, channel, d: DecayParams) -> float:
    """Shortest time after which the ground population reaches ``target_ground_prob``."""
    if not 0 < target_ground_prob < 1:
        raise InvalidInputError("target ground probability must lie in (0, 1)")
    kind = ChannelKind(channel)
    if kind is ChannelKind.CD:
        return -math.log1p(-target_ground_prob) / d.Gamma1
    if kind is ChannelKind.NATURAL:
        return -math.log1p(-target_ground_prob) / d.gamma_r
    g2, g3 = d.Gamma2, d.Gamma3
    if g2 <= 0 or g3 <= 0:
        raise InvalidInputError("UCD needs positive Gamma2 and Gamma3")

    def f(t):
        return float(ucd_ground_population(t, g2, g3)) - target_ground_prob

    hi = 1.0 / g2
    while f(hi) < 0:
        hi *= 2
    return scipy.optimize.brentq(f, 0.0, hi, xtol=1e-14 / g2, rtol=1e-14)
