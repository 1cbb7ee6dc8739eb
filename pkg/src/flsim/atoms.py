"""Three three-level Rydberg atoms on an equilateral triangle.

Basis ordering is atom-major lexicographic, ``|i j k> = |i>_1 (x) |j>_2 (x)
|k>_3`` with single-atom level order ``(0, 1, r)``, so ``|ijk>`` sits at
index ``9*i + 3*j + k`` (``r`` counting as 2). All frequencies are angular
frequencies in rad/us; use :func:`mhz` to convert a value quoted as
``2*pi x f MHz``.

Two kinds of Hamiltonian are provided for every pump variant:

* effective (Zeno-projected) Hamiltonians on the ground + single-Rydberg
  sector, :func:`build_effective_hamiltonian`;
* full three-atom Hamiltonians with the strong off-resonant drive and the
  van der Waals shift, :func:`build_full_hamiltonian`, either literally in
  the interaction picture or in the static (facilitation) frame.

The static frame rotates the multi-Rydberg states at the laser detuning,
``exp(-i t (Delta + delta) sum_{j<k} P^r_j P^r_k)`` together with
``exp(i t delta N_r)`` for a weak-laser detuning ``delta``. Ground-state
coherences are identical in both frames. Couplings that stay oscillating
in that frame (the ac-Stark-shift terms) are dropped unless
``offresonant=True``.
"""
from __future__ import annotations

import copy
import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError
from .operators import dag, kron

__all__ = [
    "DIM",
    "LEVELS",
    "PumpVariant",
    "LaserParams",
    "VdwParams",
    "TwoPhotonParams",
    "C6_80S",
    "mhz",
    "to_mhz",
    "basis_index",
    "ket",
    "named_state",
    "NAMED_STATES",
    "projector",
    "density",
    "single_atom_op",
    "embed",
    "number_rydberg",
    "rydberg_pairs",
    "HamiltonianParts",
    "effective_parts",
    "build_effective_hamiltonian",
    "full_parts",
    "build_full_hamiltonian",
    "interaction_to_static",
    "zeno_project",
    "zeno_strong_weak",
    "two_photon_reduce",
    "mixed_validation_state",
]

LEVELS = ("0", "1", "r")
N_ATOMS = 3
DIM = 3**N_ATOMS

#: C6 of Rb 80S_1/2 in rad/us * um^6 (2 pi x 4161.55 GHz um^6).
C6_80S = 2 * math.pi * 4161.55e3


def mhz(f):
    """``2 pi x f MHz`` as an angular frequency in rad/us."""
    return 2 * math.pi * f


def to_mhz(w):
    return w / (2 * math.pi)


class PumpVariant(str, enum.Enum):
    EP0 = "EP0"
    EP1 = "EP1"
    SE0 = "SE0"
    SE1 = "SE1"
    SEPLUS = "SEplus"


@dataclass(frozen=True)
class LaserParams:
    """Drive parameters of one coherent step.

    ``omega1`` is the strong, detuned drive, ``omega2`` the weak resonant
    one and ``delta`` the detuning of the strong drive.
    """

    omega1: float
    omega2: float
    delta: float
    pump_variant: PumpVariant = PumpVariant.EP0

    def __post_init__(self):
        if not self.omega1 > 0 or not self.omega2 > 0:
            raise InvalidInputError("omega1 and omega2 must be positive")
        object.__setattr__(self, "pump_variant", PumpVariant(self.pump_variant))
        if self.omega2 / self.omega1 > 0.025:
            warnings.warn(
                f"omega2/omega1 = {self.omega2 / self.omega1:.3g} > 0.025; "
                "effective Hamiltonians lose accuracy",
                stacklevel=3,
            )

    def with_variant(self, variant) -> "LaserParams":
        # copy instead of rebuilding: the ratio was already checked for self
        out = copy.copy(self)
        object.__setattr__(out, "pump_variant", PumpVariant(variant))
        return out


@dataclass(frozen=True)
class VdwParams:
    """Van der Waals interaction ``U_rr = C6 / R^6`` (``r0`` in um)."""

    c6: float = C6_80S
    r0: float = 5.2445
    urr_override: float | None = field(default=None, compare=True)

    def __post_init__(self):
        if not self.r0 > 0:
            raise InvalidInputError(f"r0 must be positive, got {self.r0}")

    @property
    def urr(self) -> float:
        if self.urr_override is not None:
            return self.urr_override
        return self.c6 / self.r0**6

    @classmethod
    def from_urr(cls, urr, c6=C6_80S):
        """Distance giving the requested interaction."""
        return cls(c6=c6, r0=(c6 / urr) ** (1 / 6))


@dataclass(frozen=True)
class TwoPhotonParams:
    omega_a: float
    omega_b: float
    delta1: float

    def __post_init__(self):
        if self.omega_a < 0 or self.omega_b < 0 or not self.delta1 > 0:
            raise InvalidInputError("two-photon parameters must be non-negative, delta1 > 0")
        if max(self.omega_a, self.omega_b) / self.delta1 > 0.15:
            warnings.warn("intermediate-state elimination is poor: omega/delta1 > 0.15", stacklevel=3)


def two_photon_reduce(tp: TwoPhotonParams, delta: float) -> tuple[float, float]:
    """Effective (omega1, omega2) of the two-photon ladder.

    The off-resonant leg gives ``omega1 / 2 = (2 D1 + D) Wa^2 / (8 D1 (D1 + D))``
    and the resonant leg ``omega2 / 2 = Wa Wb / (4 D1)``.
    """
    d1 = tp.delta1
    if delta < 0:
        raise InvalidInputError("delta must be non-negative")
    omega1 = (2 * d1 + delta) * tp.omega_a**2 / (4 * d1 * (d1 + delta))
    omega2 = tp.omega_a * tp.omega_b / (2 * d1)
    return omega1, omega2


# --- basis ------------------------------------------------------------------

_SINGLE = {
    "0": np.array([1, 0, 0], dtype=complex),
    "1": np.array([0, 1, 0], dtype=complex),
    "r": np.array([0, 0, 1], dtype=complex),
    "+": np.array([1, 1, 0], dtype=complex) / math.sqrt(2),
    "-": np.array([1, -1, 0], dtype=complex) / math.sqrt(2),
}


def basis_index(label: str) -> int:
    """Index of the product state ``|ijk>`` with levels from ``0``, ``1``, ``r``."""
    if len(label) != N_ATOMS or any(c not in LEVELS for c in label):
        raise InvalidInputError(f"not a computational basis label: {label!r}")
    idx = 0
    for c in label:
        idx = 3 * idx + LEVELS.index(c)
    return idx


def ket(label: str) -> np.ndarray:
    """Product state from a three-character label over ``0 1 r + -``."""
    if len(label) != N_ATOMS or any(c not in _SINGLE for c in label):
        raise InvalidInputError(f"not a product-state label: {label!r}")
    return kron(*(_SINGLE[c][:, None] for c in label))[:, 0]


def _sup(*terms):
    v = sum(coef * ket(lbl) for coef, lbl in terms)
    return v / np.linalg.norm(v)


def _build_named():
    s = {}
    s["GHZ+"] = _sup((1, "000"), (1, "111"))
    s["GHZ-"] = _sup((1, "000"), (-1, "111"))
    s["W0"] = _sup((1, "100"), (1, "010"), (1, "001"))
    s["W0'"] = _sup((2, "100"), (-1, "010"), (-1, "001"))
    s["W0''"] = _sup((1, "010"), (-1, "001"))
    s["W1"] = _sup((1, "110"), (1, "101"), (1, "011"))
    s["W1'"] = _sup((2, "011"), (-1, "101"), (-1, "110"))
    s["W1''"] = _sup((1, "101"), (-1, "110"))
    s["D0"] = _sup((1, "r00"), (1, "0r0"), (1, "00r"))
    s["D1"] = _sup((1, "r11"), (1, "1r1"), (1, "11r"))
    s["psi0_1"] = _sup((1, "0r1"), (-1, "01r"))
    s["psi0_2"] = _sup((1, "r01"), (-1, "10r"))
    s["psi0_3"] = _sup((1, "r10"), (-1, "1r0"))
    s["psi1_1"] = _sup((1, "1r0"), (-1, "10r"))
    s["psi1_2"] = _sup((1, "r10"), (-1, "01r"))
    s["psi1_3"] = _sup((1, "r01"), (-1, "0r1"))
    for v in s.values():
        v.setflags(write=False)
    return s


NAMED_STATES = _build_named()

_ALIASES = str.maketrans({"−": "-", "′": "'", "″": "''"})


def named_state(label: str) -> np.ndarray:
    """Unit 27-vector for a named state or a product-state label.

    Known names: ``GHZ+ GHZ- W0 W0' W0'' W1 W1' W1'' D0 D1 psi0_1..3
    psi1_1..3``; any three-character string over ``0 1 r + -`` is read as a
    product state (``"+--"`` etc.).
    """
    key = label.translate(_ALIASES).replace("₀", "0").replace("₁", "1")
    if key in NAMED_STATES:
        return NAMED_STATES[key].copy()
    try:
        return ket(key)
    except InvalidInputError:
        raise InvalidInputError(f"unknown state label {label!r}") from None


def projector(state) -> np.ndarray:
    v = named_state(state) if isinstance(state, str) else np.asarray(state, dtype=complex)
    return np.outer(v, v.conj())


def density(weights: dict) -> np.ndarray:
    """Mixed state ``sum_k w_k |k><k|`` from a ``{label: weight}`` mapping."""
    rho = sum(w * projector(lbl) for lbl, w in weights.items())
    return np.asarray(rho, dtype=complex)


def mixed_validation_state() -> np.ndarray:
    """Mixed ground state used to validate the effective Hamiltonians."""
    return density({"111": 0.19, "W0'": 0.05, "W0": 0.11, "W0''": 0.23, "000": 0.15, "011": 0.27})


def single_atom_op(a: str, b: str) -> np.ndarray:
    """``|a><b|`` on one atom."""
    op = np.zeros((3, 3), dtype=complex)
    op[LEVELS.index(a), LEVELS.index(b)] = 1
    return op


def embed(op, atom: int) -> np.ndarray:
    """Single-atom operator acting on ``atom`` (0-based) of the three."""
    factors = [np.eye(3)] * N_ATOMS
    factors[atom] = op
    return kron(*factors)


@lru_cache(maxsize=None)
def _diag_counts():
    labels = ["".join(t) for t in itertools.product(LEVELS, repeat=N_ATOMS)]
    n_r = np.array([lbl.count("r") for lbl in labels], dtype=float)
    n_1 = np.array([lbl.count("1") for lbl in labels], dtype=float)
    n_0 = np.array([lbl.count("0") for lbl in labels], dtype=float)
    pairs = n_r * (n_r - 1) / 2
    return n_0, n_1, n_r, pairs


def number_rydberg() -> np.ndarray:
    return np.diag(_diag_counts()[2]).astype(complex)


def rydberg_pairs() -> np.ndarray:
    """``sum_{j<k} P^r_j P^r_k``."""
    return np.diag(_diag_counts()[3]).astype(complex)


def _others_with_n_rydberg(atom: int, n: int) -> np.ndarray:
    """Diagonal projector: the two atoms other than ``atom`` hold exactly ``n`` Rydberg excitations."""
    d = np.zeros(DIM)
    for idx, lbl in enumerate(itertools.product(LEVELS, repeat=N_ATOMS)):
        others = [c for k, c in enumerate(lbl) if k != atom]
        d[idx] = float(others.count("r") == n)
    return np.diag(d).astype(complex)


# Which ground level each laser couples to |r>, per variant.
_STRONG = {
    PumpVariant.EP0: ("1",),
    PumpVariant.EP1: ("0",),
    PumpVariant.SE0: ("0",),
    PumpVariant.SE1: ("1",),
    PumpVariant.SEPLUS: ("0", "1"),
}
_WEAK = {
    PumpVariant.EP0: ("0",),
    PumpVariant.EP1: ("1",),
    PumpVariant.SE0: ("0",),
    PumpVariant.SE1: ("1",),
    PumpVariant.SEPLUS: ("0", "1"),
}


@lru_cache(maxsize=None)
def _raising_blocks(levels: tuple, atom: int, n_other_r: int | None):
    op = sum(single_atom_op("r", lv) for lv in levels)
    full = embed(op, atom)
    if n_other_r is None:
        return full
    return full @ _others_with_n_rydberg(atom, n_other_r)


def _raising(levels, n_other_r=None) -> np.ndarray:
    """``sum_j sum_{l in levels} |r><l|_j``, optionally conditioned on the other atoms."""
    out = np.zeros((DIM, DIM), dtype=complex)
    for j in range(N_ATOMS):
        out += _raising_blocks(tuple(levels), j, n_other_r)
    return out


@dataclass(frozen=True)
class HamiltonianParts:
    """``H(t) = static + a(t) * raising + conj(a(t)) * raising^dag``.

    ``raising`` is the weak-drive part that promotes ground states towards
    ``|r>`` at nominal amplitude; ``a(t)`` carries pulse shaping and laser
    phase (``a = 1`` for an ideal rectangular pulse).
    """

    static: np.ndarray
    raising: np.ndarray

    def at(self, amplitude=1.0) -> np.ndarray:
        r = amplitude * self.raising
        return self.static + r + dag(r)

    @property
    def nominal(self) -> np.ndarray:
        return self.at(1.0)


# --- effective Hamiltonians -------------------------------------------------

def _ep_raising(omega2, fam):
    s = NAMED_STATES
    g0 = "000" if fam == "0" else "111"
    w_p, w_pp = s[f"W{fam}'"], s[f"W{fam}''"]
    p1, p2, p3 = s[f"psi{fam}_1"], s[f"psi{fam}_2"], s[f"psi{fam}_3"]
    out = math.sqrt(3) * omega2 / 2 * np.outer(s[f"D{fam}"], ket(g0))
    out -= math.sqrt(3) * omega2 / 4 * np.outer(p2 + p3, w_p.conj())
    out -= omega2 / 4 * np.outer(2 * p1 + p2 - p3, w_pp.conj())
    return out


def _se_raising(omega2, variant):
    if variant is PumpVariant.SE0:
        pairs, amp = [("r11", "011"), ("1r1", "101"), ("11r", "110")], omega2 / 2
    elif variant is PumpVariant.SE1:
        pairs, amp = [("r00", "100"), ("0r0", "010"), ("00r", "001")], omega2 / 2
    else:
        pairs, amp = [("r--", "+--"), ("-r-", "-+-"), ("--r", "--+")], omega2 / math.sqrt(2)
    return amp * sum(np.outer(ket(a), ket(b).conj()) for a, b in pairs)


def effective_parts(p: LaserParams, detuning: float = 0.0) -> HamiltonianParts:
    """Closed-form Zeno Hamiltonian split into static and weak-drive parts.

    ``detuning`` is a weak-laser detuning added to every Rydberg excitation.
    """
    v = p.pump_variant
    if v is PumpVariant.EP0:
        raising = _ep_raising(p.omega2, "0")
    elif v is PumpVariant.EP1:
        raising = _ep_raising(p.omega2, "1")
    else:
        raising = _se_raising(p.omega2, v)
    static = detuning * number_rydberg() if detuning else np.zeros((DIM, DIM), dtype=complex)
    return HamiltonianParts(static, raising)


def build_effective_hamiltonian(p: LaserParams, detuning: float = 0.0) -> np.ndarray:
    """Effective Hamiltonian of a pump variant (EP0, EP1, SE0, SE1, SEplus)."""
    return effective_parts(p, detuning).nominal


# --- full Hamiltonians ------------------------------------------------------

def full_parts(p: LaserParams, v: VdwParams, detuning: float = 0.0) -> HamiltonianParts:
    """Full Hamiltonian in the static frame, off-resonant terms dropped.

    Keeps the weak drive only from states with no other Rydberg atom and the
    strong drive only between single- and double-Rydberg states (facilitated
    when ``U_rr = Delta``); the residual ``U_rr - Delta - detuning`` shifts
    every Rydberg pair and ``detuning`` shifts every Rydberg excitation.
    """
    strong, weak = _STRONG[p.pump_variant], _WEAK[p.pump_variant]
    hs = p.omega1 / 2 * _raising(strong, 1)
    static = hs + dag(hs)
    static = static + (v.urr - p.delta - detuning) * rydberg_pairs()
    if detuning:
        static = static + detuning * number_rydberg()
    raising = p.omega2 / 2 * _raising(weak, 0)
    return HamiltonianParts(static, raising)


def _offresonant_terms(p: LaserParams, t: float, detuning: float) -> np.ndarray:
    """Couplings that oscillate in the static frame (the Stark-shift terms)."""
    strong, weak = _STRONG[p.pump_variant], _WEAK[p.pump_variant]
    b = p.delta + detuning
    h = np.zeros((DIM, DIM), dtype=complex)
    # strong drive: phase exp(-i Delta t) times frame factor exp(i(-detuning + b n) t)
    for n in (0, 2):
        h += p.omega1 / 2 * np.exp(1j * (-p.delta - detuning + b * n) * t) * _raising(strong, n)
    for n in (1, 2):
        h += p.omega2 / 2 * np.exp(1j * b * n * t) * _raising(weak, n)
    return h + dag(h)


def build_full_hamiltonian(
    p: LaserParams,
    v: VdwParams,
    frame: str = "static",
    t: float | None = None,
    *,
    offresonant: bool = False,
    detuning: float = 0.0,
) -> np.ndarray:
    """Full 27-dim Hamiltonian of a pump variant.

    Args:
        p: Laser parameters; ``pump_variant`` selects which ground level each
            drive couples to ``|r>``.
        v: Van der Waals parameters.
        frame: ``"interaction"`` gives the literal interaction-picture
            Hamiltonian with ``exp(-i Delta t)`` on the strong drive;
            ``"static"`` the facilitation frame described in the module
            docstring.
        t: Time, needed for the interaction frame and for static frame with
            ``offresonant=True``.
        offresonant: Keep couplings that are off-resonant by ``~Delta``.
            They only produce ac Stark shifts and are dropped by default.
        detuning: Detuning of the weak laser (rad/us).
    """
    if frame not in ("static", "interaction"):
        raise InvalidInputError(f"unknown frame {frame!r}")
    if p.pump_variant not in _STRONG:
        raise InvalidInputError(f"unknown variant {p.pump_variant!r}")
    if frame == "static":
        h = full_parts(p, v, detuning).nominal
        if offresonant:
            if t is None:
                raise InvalidInputError("static frame with offresonant terms is time dependent; pass t")
            h = h + _offresonant_terms(p, t, detuning)
        return h
    if t is None:
        raise InvalidInputError("interaction frame needs t")
    strong, weak = _STRONG[p.pump_variant], _WEAK[p.pump_variant]
    if offresonant:
        hs = p.omega1 / 2 * np.exp(-1j * p.delta * t) * _raising(strong)
        hw = p.omega2 / 2 * np.exp(1j * detuning * t) * _raising(weak)
    else:
        hs = p.omega1 / 2 * np.exp(-1j * p.delta * t) * _raising(strong, 1)
        hw = p.omega2 / 2 * np.exp(1j * detuning * t) * _raising(weak, 0)
    h = hs + hw
    return h + dag(h) + v.urr * rydberg_pairs()


def interaction_to_static(p: LaserParams, t: float, detuning: float = 0.0) -> np.ndarray:
    """Diagonal unitary ``V(t)`` with ``rho_static = V rho_interaction V^dag``."""
    _, _, n_r, pairs = _diag_counts()
    phase = (p.delta + detuning) * pairs - detuning * n_r
    return np.diag(np.exp(1j * phase * t))


# --- Zeno projection --------------------------------------------------------

def zeno_project(h_strong, h_weak, *, rtol=1e-9) -> np.ndarray:
    """``P0 h_weak P0`` with ``P0`` the null-space projector of ``h_strong``."""
    h_strong = np.asarray(h_strong, dtype=complex)
    h_weak = np.asarray(h_weak, dtype=complex)
    if h_strong.shape != h_weak.shape:
        raise InvalidInputError("strong and weak parts must have equal shape")
    scale = np.max(np.abs(h_strong)) if h_strong.size else 0.0
    if scale == 0:
        return h_weak.copy()
    w, u = np.linalg.eigh(h_strong)
    null = u[:, np.abs(w) < rtol * scale * h_strong.shape[0]]
    if null.shape[1] == 0:
        raise InvalidInputError("strong Hamiltonian has an empty null space")
    proj = null @ dag(null)
    return proj @ h_weak @ proj


def zeno_strong_weak(p: LaserParams) -> tuple[np.ndarray, np.ndarray]:
    """Facilitated strong coupling and weak drive of a variant at ``U_rr = Delta``.

    These are the resonant pieces left after rotating the interaction and
    removing the Stark-shift terms; their Zeno projection reproduces the
    closed-form effective Hamiltonians.
    """
    parts = full_parts(p, VdwParams(urr_override=p.delta))
    return parts.static, parts.nominal - parts.static
