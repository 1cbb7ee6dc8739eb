"""Rectangular and Gaussian envelopes of the weak drive."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import InvalidInputError

__all__ = ["PulseKind", "PulseShape", "gaussian_sigma", "pi_pulse"]

_AREA_COEFFS = (1.0, math.sqrt(2), math.sqrt(3))


class PulseKind(str, enum.Enum):
    RECTANGULAR = "rect"
    GAUSSIAN = "gauss"


def gaussian_sigma(alpha: float, omega0: float) -> float:
    """Width of a Gaussian ``omega0 exp(-(t - 2 s)^2 / 2 s^2)`` with area ``pi / alpha`` on ``[0, 4 s]``."""
    if not omega0 > 0:
        raise InvalidInputError(f"omega0 must be positive, got {omega0}")
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    if not any(math.isclose(alpha, a) for a in _AREA_COEFFS):
        warnings.warn(f"unusual pulse-area coefficient alpha = {alpha}", stacklevel=2)
    return math.sqrt(math.pi) / (math.sqrt(2) * alpha * omega0 * erf(math.sqrt(2)))


@dataclass(frozen=True)
class PulseShape:
    """Envelope of the weak Rabi frequency during one coherent step.

    ``alpha`` is the ratio of the step's effective Rabi frequency to the
    bare one, so a pi pulse needs ``alpha * area == pi``.
    """

    kind: PulseKind
    omega0: float
    alpha: float = 1.0
    sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not self.omega0 > 0:
            raise InvalidInputError("omega0 must be positive")
        if self.kind is PulseKind.GAUSSIAN and self.sigma is None:
            object.__setattr__(self, "sigma", gaussian_sigma(self.alpha, self.omega0))

    @property
    def duration(self) -> float:
        """Length of the pi pulse."""
        if self.kind is PulseKind.GAUSSIAN:
            return 4 * float(self.sigma)
        return math.pi / (self.alpha * self.omega0)

    def envelope(self, t):
        """Rabi frequency ``Omega_2(t)``."""
        t = np.asarray(t, dtype=float)
        if self.kind is PulseKind.RECTANGULAR:
            return np.full_like(t, self.omega0)
        s = self.sigma
        return self.omega0 * np.exp(-((t - 2 * s) ** 2) / (2 * s**2))

    def area(self) -> float:
        """``alpha * int Omega_2 dt`` over the pulse (closed form)."""
        if self.kind is PulseKind.RECTANGULAR:
            return self.alpha * self.omega0 * self.duration
        return self.alpha * self.omega0 * self.sigma * math.sqrt(2 * math.pi) * erf(math.sqrt(2))


def pi_pulse(kind, omega0, alpha) -> PulseShape:
    return PulseShape(PulseKind(kind), omega0, alpha)
