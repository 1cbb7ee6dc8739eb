"""Experiment configuration.

A configuration is one JSON document. Frequencies are entered as plain MHz
values ``f`` and mean ``2 pi x f MHz``; the loader converts them to rad/us.
Every section is optional, unknown keys are rejected and the defaults are
the standard parameter set (``Omega1 = 2 pi x 4 MHz``, ``Omega2 = 2 pi x
0.04 MHz``, ``Delta = 2 pi x 200 MHz``, ``Omega_di / gamma_i = 0.2``).

Example::

    {
      "laser": {"omega2": 0.04},
      "noise": {"h0": 400},
      "n_cycles": 18
    }
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import types
import typing
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .atoms import C6_80S, LaserParams, VdwParams, mhz, to_mhz
from .dissipation import DecayParams
from .errors import ConfigError, FlsimError
from .perturbations import ImperfectionSpec, PhaseNoiseSpec
from .protocols import ProtocolLabel
from .pulses import PulseKind

__all__ = [
    "EXPERIMENTS",
    "LaserConfig",
    "DecayConfig",
    "VdwConfig",
    "NoiseConfig",
    "ImperfectionConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

EXPERIMENTS = (
    "convert-ghz-to-w",
    "convert-w-to-ghz",
    "liouvillian-spectrum",
    "phase-noise",
    "robustness-sweep",
    "pulse-compare",
    "validate-effective",
    "validate-decay",
    "detuning-sweep",
    "comparison-table",
)

U64 = 2**64


@dataclass(frozen=True)
class LaserConfig:
    """Strong drive ``omega1``, weak drive ``omega2`` and detuning ``delta``, in MHz."""

    omega1: float = 4.0
    omega2: float = 0.04
    delta: float = 200.0

    def params(self) -> LaserParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return LaserParams(mhz(self.omega1), mhz(self.omega2), mhz(self.delta))


@dataclass(frozen=True)
class DecayConfig:
    """Intermediate-state rates, dressing strengths and Rydberg decay, in MHz.

    A dressing strength left at ``null`` is ``0.2`` times its decay rate.
    """

    gamma1: float = 6.06
    gamma2: float = 5.75
    gamma3: float = 6.06
    omega_d1: float | None = None
    omega_d2: float | None = None
    omega_d3: float | None = None
    gamma_r: float = 0.28e-3

    def params(self) -> DecayParams:
        def od(value, gamma):
            return mhz(0.2 * gamma if value is None else value)

        return DecayParams(
            gamma1=mhz(self.gamma1),
            gamma2=mhz(self.gamma2),
            gamma3=mhz(self.gamma3),
            omega_d1=od(self.omega_d1, self.gamma1),
            omega_d2=od(self.omega_d2, self.gamma2),
            omega_d3=od(self.omega_d3, self.gamma3),
            gamma_r=mhz(self.gamma_r),
        )


@dataclass(frozen=True)
class VdwConfig:
    """Van der Waals parameters.

    ``c6`` in MHz um^6, ``r0`` in um, ``urr`` in MHz. With neither ``r0`` nor
    ``urr`` the distance is chosen so that ``U_rr = Delta``.
    """

    c6: float = to_mhz(C6_80S)
    r0: float | None = None
    urr: float | None = None

    def params(self, delta: float) -> VdwParams:
        c6 = mhz(self.c6)
        if self.r0 is None and self.urr is None:
            return VdwParams.from_urr(delta, c6)
        base = VdwParams(c6, self.r0) if self.r0 is not None else VdwParams.from_urr(mhz(self.urr), c6)
        if self.urr is None:
            return base
        return VdwParams(c6, base.r0, urr_override=mhz(self.urr))


@dataclass(frozen=True)
class NoiseConfig:
    """Laser phase noise; ``h0`` in Hz^2/Hz, ``f_max`` in Hz."""

    h0: float = 0.0
    f_max: float = 10e6
    n_components: int = 500
    reuse_trace: bool = False

    def spec(self, seed: int, h0: float | None = None) -> PhaseNoiseSpec:
        return PhaseNoiseSpec(self.h0 if h0 is None else h0, self.f_max, self.n_components, seed)


@dataclass(frozen=True)
class ImperfectionConfig:
    """Static errors: ``delta_r`` in nm, ``delta_freq`` in MHz."""

    delta_r: float = 0.0
    delta_t_fraction: float = 0.0
    delta_freq: float = 0.0
    exact_distance: bool = False

    def spec(self, extra_freq: float = 0.0) -> ImperfectionSpec:
        return ImperfectionSpec(self.delta_r, self.delta_t_fraction, mhz(self.delta_freq + extra_freq), self.exact_distance)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment reads.

    Attributes:
        experiment: Experiment name; the command line may supply it instead.
        model: ``"effective"`` or ``"full"``; ``null`` picks the experiment's
            own default.
        pulse: ``"rect"`` or ``"gauss"``.
        omega0: Peak Rabi frequency of Gaussian pulses in MHz.
        protocols: Protocol families an experiment iterates over.
        seeds: Explicit noise seeds; otherwise ``n_seeds`` seeds counting up
            from ``seed``.
        ratios: ``omega2 / omega1`` grid of the spectrum sweep.
        h0_values: Noise densities of the phase-noise experiment.
        delta_r_grid: Distance offsets (nm) of the robustness sweep.
        delta_t_grid: Relative timing errors of the robustness sweep.
        detunings: Weak-laser detunings (MHz) of the detuning sweep.
        max_cycles: Cycles run by the detuning sweep.
        threshold: Target population defining "converged".
        offresonant: Keep the Stark-shift couplings in the full model of
            ``validate-effective``.
        rabi_seeds: Noise realizations averaged in the Rabi-damping series.
    """

    experiment: str | None = None
    laser: LaserConfig = field(default_factory=LaserConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    vdw: VdwConfig = field(default_factory=VdwConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    imperfection: ImperfectionConfig = field(default_factory=ImperfectionConfig)
    n_cycles: int = 18
    seed: int = 0
    seeds: list[int] | None = None
    n_seeds: int = 5
    output_path: str = "results"
    threads: int = 1
    model: str | None = None
    pulse: str = "rect"
    omega0: float = 0.072
    gamma_r_on: bool = True
    samples_per_step: int = 8
    protocols: list[str] = field(default_factory=lambda: ["ConversionI", "ConversionII"])
    ratios: list[float] = field(default_factory=lambda: [0.005, 0.01, 0.015, 0.02, 0.025, 0.04, 0.06, 0.08])
    h0_values: list[float] = field(default_factory=lambda: [400.0, 2000.0])
    delta_r_grid: list[float] = field(default_factory=lambda: [-200.0, -100.0, 0.0, 100.0, 200.0])
    delta_t_grid: list[float] = field(default_factory=lambda: [-0.2, -0.1, 0.0, 0.1, 0.2])
    detunings: list[float] = field(default_factory=lambda: [-0.03, -0.015, 0.0, 0.015, 0.03])
    max_cycles: int = 40
    threshold: float = 0.99
    offresonant: bool = False
    rabi_seeds: int = 10

    def __post_init__(self):
        _validate(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def noise_seeds(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [(self.seed + k) % U64 for k in range(self.n_seeds)]

    def model_for(self, default: str) -> str:
        return self.model if self.model is not None else default

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _validate(c: ExperimentConfig) -> None:
    if c.experiment is not None and c.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {c.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if c.model not in (None, "effective", "full"):
        raise ConfigError(f"model must be 'effective' or 'full', got {c.model!r}")
    if c.pulse not in [k.value for k in PulseKind]:
        raise ConfigError(f"pulse must be 'rect' or 'gauss', got {c.pulse!r}")
    for name in ("n_cycles", "n_seeds", "threads", "samples_per_step", "max_cycles"):
        if getattr(c, name) < 1:
            raise ConfigError(f"{name} must be at least 1")
    if c.rabi_seeds < 0:
        raise ConfigError("rabi_seeds must be non-negative")
    for s in [c.seed, *(c.seeds or [])]:
        if not 0 <= s < U64:
            raise ConfigError(f"seed {s} is not an unsigned 64-bit integer")
    if c.seeds is not None and not c.seeds:
        raise ConfigError("seeds must not be empty")
    for fam in c.protocols:
        if fam not in (ProtocolLabel.CONVERSION_I.value, ProtocolLabel.CONVERSION_II.value):
            raise ConfigError(f"unknown protocol {fam!r}")
    if not c.protocols:
        raise ConfigError("protocols must not be empty")
    for r in c.ratios:
        if not 0 < r <= 0.1:
            raise ConfigError(f"ratio {r} outside (0, 0.1]")
    if not 0 < c.threshold < 1:
        raise ConfigError("threshold must lie in (0, 1)")
    if not c.omega0 > 0:
        raise ConfigError("omega0 must be positive")
    for h0 in c.h0_values:
        if not h0 >= 0:
            raise ConfigError("h0 values must be non-negative")
    for dt in c.delta_t_grid:
        if abs(dt) > 0.5:
            raise ConfigError("timing errors must satisfy |dt| <= 0.5")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = c.laser.params()
            c.decay.params()
            v = c.vdw.params(p.delta)
            c.noise.spec(c.seed)
            c.imperfection.spec()
            for dr in c.delta_r_grid:
                if abs(dr * 1e-3) >= v.r0:
                    raise ConfigError(f"distance offset {dr} nm exceeds r0")
    except ConfigError:
        raise
    except FlsimError as exc:
        raise ConfigError(str(exc)) from None


# --- parsing ----------------------------------------------------------------

def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _coerce(value, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType) and type(None) in args:
        if value is None:
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _coerce(value, inner, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return [_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is float:
        if not _is_number(value) or not math.isfinite(value):
            raise ConfigError(f"{path}: expected a finite number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise ConfigError(f"{path}: unsupported type")


def _build(cls, data: dict, path: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], f"{path}.{k}" if path else k) for k, v in data.items()}
    return cls(**kwargs)


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return _build(ExperimentConfig, data, "")


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return parse_config(data)
