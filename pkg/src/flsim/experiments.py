"""Experiments behind the command line.

Each experiment maps an :class:`~flsim.config.ExperimentConfig` to an
:class:`ExperimentResult`: a list of numeric tables plus a small summary
dictionary. Writing files is left to :func:`write_result`, so a failing
experiment never leaves partial output behind.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .atoms import (
    mixed_validation_state,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_parts,
    mhz,
    named_state,
    projector,
    to_mhz,
)
from .config import ExperimentConfig, ImperfectionConfig, LaserConfig, VdwConfig
from .dissipation import (
    cd_ground_population,
    effective_cd_model,
    effective_ucd_model,
    full_cd_model,
    full_ucd_model,
    ucd_ground_population,
)
from .dynamics import SplitGenerator, propagate_const, propagate_parts, propagate_timedep
from .errors import InvalidInputError
from .perturbations import TracePhase, apply_imperfections, phase_noise_trace, phase_source
from .protocols import (
    Protocol,
    effective_liouvillian,
    make_protocol,
    run_cycles,
    steady_state_analysis,
)

__all__ = [
    "ResultTable",
    "ExperimentResult",
    "EXPERIMENT_RUNNERS",
    "build_protocol",
    "cycle_populations",
    "run_experiment",
    "table1",
    "write_result",
]


@dataclass
class ResultTable:
    """One output series: column names, units and a 2-D block of numbers."""

    name: str
    columns: list[str]
    units: list[str]
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if len(self.columns) != len(self.units) or self.rows.shape[1] != len(self.columns):
            raise InvalidInputError(f"table {self.name!r}: column count mismatch")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        """CSV text: a name row, a unit row, then rows at 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerow(self.units)
        for row in self.rows:
            w.writerow([format(x, ".17g") for x in row])
        return buf.getvalue()


@dataclass
class ExperimentResult:
    experiment: str
    tables: list[ResultTable]
    summary: dict = field(default_factory=dict)

    def table(self, name: str) -> ResultTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


# --- shared helpers ---------------------------------------------------------

def _map(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map, threaded when asked."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def build_protocol(cfg: ExperimentConfig, family, *, model=None, pulse=None, extra_detuning=0.0,
                   imperfections=True, n_cycles=None) -> Protocol:
    """Protocol of ``family`` with the config's parameters and static errors.

    ``extra_detuning`` (MHz) is added to the configured weak-laser detuning.
    """
    p = cfg.laser.params()
    model = model or cfg.model_for("effective")
    proto = make_protocol(
        family,
        p,
        cfg.decay.params(),
        model=model,
        vdw=cfg.vdw.params(p.delta) if model == "full" else None,
        pulse=pulse or cfg.pulse,
        omega0=mhz(cfg.omega0),
        gamma_r=cfg.gamma_r_on,
        n_cycles=n_cycles or cfg.n_cycles,
    )
    if imperfections:
        spec = cfg.imperfection.spec(extra_detuning)
        proto = apply_imperfections(proto, spec, cfg.vdw.params(p.delta))
    return proto


def _phase(cfg: ExperimentConfig, proto: Protocol, seed: int, h0: float | None = None, n_cycles=None):
    spec = cfg.noise.spec(seed, h0)
    total = (n_cycles or proto.n_cycles) * proto.period
    return phase_source(spec, reuse_trace=cfg.noise.reuse_trace, total_time=total)


def cycle_populations(traj, state: str) -> tuple[np.ndarray, np.ndarray]:
    """Times and populations at the start and at the end of every cycle."""
    idx = [0] + list(traj.marks["cycle_end"])
    return traj.times[idx], traj.observables[state][idx]


def _cycle_table(name, traj, state) -> ResultTable:
    t, pop = cycle_populations(traj, state)
    return ResultTable(name, ["cycle", "time_us", f"P_{state}"], ["1", "us", "1"],
                       np.column_stack([np.arange(len(t)), t, pop]))


# --- conversions ------------------------------------------------------------

def _conversion(cfg: ExperimentConfig, family: str) -> ExperimentResult:
    proto = build_protocol(cfg, family)
    rho0 = projector(proto.initial)
    phase = _phase(cfg, proto, cfg.seed)
    traj = run_cycles(rho0, proto, samples_per_step=cfg.samples_per_step, phase_source=phase)
    a, b = proto.initial, proto.target
    main = ResultTable(
        "",
        ["time_us", f"P_{a}", f"P_{b}", "purity"],
        ["us", "1", "1", "1"],
        np.column_stack([traj.times, traj.observables[a], traj.observables[b], traj.observables["purity"]]),
    )
    summary = {
        "protocol": family,
        "model": proto.meta["model"],
        "pulse": proto.meta["pulse"],
        "period_us": proto.period,
        "total_time_us": proto.period * proto.n_cycles,
        "final_target_population": float(traj.observables[b][-1]),
        "final_purity": float(traj.observables["purity"][-1]),
    }
    return ExperimentResult("", [main, _cycle_table("cycles", traj, b)], summary)


def _convert_ghz_to_w(cfg):
    return _conversion(cfg, "ConversionI")


def _convert_w_to_ghz(cfg):
    return _conversion(cfg, "ConversionII")


# --- spectrum ---------------------------------------------------------------

def _spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    model = cfg.model_for("full")
    tables, summary = [], {"model": model}

    def one(args):
        family, r = args
        laser = LaserConfig(cfg.laser.omega1, r * cfg.laser.omega1, cfg.laser.delta)
        proto = build_protocol(cfg.replace(laser=laser), family, model=model, pulse="rect", imperfections=False)
        return steady_state_analysis(effective_liouvillian(proto, cache=None), proto.target)

    for family in cfg.protocols:
        results = _map(one, [(family, r) for r in cfg.ratios], cfg.threads)
        rows, eig_rows = [], []
        for r, res in zip(cfg.ratios, results):
            rows.append([r, res.zero_modes, res.purity, res.target_population, to_mhz(res.spectral_gap)])
            for k, lam in enumerate(res.eigenvalues):
                eig_rows.append([r, k, to_mhz(lam.real), to_mhz(lam.imag), to_mhz(abs(lam))])
        tables.append(ResultTable(
            family,
            ["ratio", "zero_modes", "purity", "population", "gap"],
            ["1", "1", "1", "1", "2pi MHz"],
            np.array(rows),
        ))
        tables.append(ResultTable(
            f"{family}_eigenvalues",
            ["ratio", "index", "re", "im", "abs"],
            ["1", "1", "2pi MHz", "2pi MHz", "2pi MHz"],
            np.array(eig_rows),
        ))
        summary[family] = {
            f"{r:g}": {"zero_modes": res.zero_modes, "purity": res.purity, "population": res.target_population}
            for r, res in zip(cfg.ratios, results)
        }
    return ExperimentResult("", tables, summary)


# --- phase noise ------------------------------------------------------------

def _noise_run(cfg, proto, seed, h0):
    rho0 = projector(proto.initial)
    traj = run_cycles(rho0, proto, samples_per_step=1, phase_source=_phase(cfg, proto, seed, h0))
    return cycle_populations(traj, proto.target)


def _rabi_damping(cfg: ExperimentConfig, h0_values) -> ResultTable:
    """``|000> <-> |D0>`` oscillation under the EP0 pump, averaged over noise seeds."""
    p = cfg.laser.params().with_variant("EP0")
    parts = effective_parts(p)
    gen = SplitGenerator.build(parts.static, parts.raising)
    rho0 = projector("000")
    period = 2 * math.pi / (math.sqrt(3) * p.omega2)
    duration = 4 * period
    samples = 200
    ideal = propagate_const(rho0, parts.nominal, (), duration, samples)
    times = ideal.times
    cols, units, data = ["time_us", "P_000_ideal"], ["us", "1"], [times, ideal.population(named_state("000"))]
    seeds = [(cfg.seed + k) % 2**64 for k in range(cfg.rabi_seeds)]
    for h0 in h0_values:
        def one(seed):
            trace = phase_noise_trace(cfg.noise.spec(seed, h0), duration)
            ph = TracePhase(trace)
            tr = propagate_parts(rho0, gen, lambda t: np.exp(1j * ph(t)), duration,
                                 samples=times, breakpoints=ph.breakpoints)
            return tr.population(named_state("000"))

        pops = np.array(_map(one, seeds, cfg.threads))
        cols.append(f"P_000_mean_h{h0:g}")
        units.append("1")
        data.append(pops.mean(axis=0))
    return ResultTable("rabi", cols, units, np.column_stack(data))


def _phase_noise(cfg: ExperimentConfig) -> ExperimentResult:
    seeds = cfg.noise_seeds()
    tables, summary = [], {"seeds": seeds}
    for family in cfg.protocols:
        proto = build_protocol(cfg, family)
        srows = []
        for h0 in cfg.h0_values:
            runs = _map(lambda s: _noise_run(cfg, proto, s, h0), seeds, cfg.threads)
            t = runs[0][0]
            pops = np.array([r[1] for r in runs])
            mean, std = pops.mean(axis=0), pops.std(axis=0, ddof=1) if len(seeds) > 1 else np.zeros(len(t))
            cols = ["cycle", "time_us", "mean", "std"] + [f"P_seed{k}" for k in range(len(seeds))]
            tables.append(ResultTable(
                f"{family}_h{h0:g}",
                cols,
                ["1", "us", "1", "1"] + ["1"] * len(seeds),
                np.column_stack([np.arange(len(t)), t, mean, std, pops.T]),
            ))
            srows.append([h0, mean[-1], std[-1], pops[:, -1].min(), pops[:, -1].max()])
            summary[f"{family}_h{h0:g}"] = {"mean": float(mean[-1]), "std": float(std[-1])}
        tables.append(ResultTable(
            f"{family}_summary",
            ["h0", "mean_final", "std_final", "min_final", "max_final"],
            ["Hz^2/Hz", "1", "1", "1", "1"],
            np.array(srows),
        ))
    if cfg.rabi_seeds:
        tables.append(_rabi_damping(cfg, cfg.h0_values))
    return ExperimentResult("", tables, summary)


# --- static imperfections ---------------------------------------------------

def _robustness(cfg: ExperimentConfig) -> ExperimentResult:
    model = cfg.model_for("full")
    tables, summary = [], {"model": model, "pulse": cfg.pulse}
    grid = [(dr, dt) for dr in cfg.delta_r_grid for dt in cfg.delta_t_grid]
    for family in cfg.protocols:
        def one(point):
            dr, dt = point
            imp = ImperfectionConfig(dr, dt, cfg.imperfection.delta_freq, cfg.imperfection.exact_distance)
            proto = build_protocol(cfg.replace(imperfection=imp), family, model=model)
            traj = run_cycles(projector(proto.initial), proto)
            return traj.observables[proto.target][-1]

        pops = _map(one, grid, cfg.threads)
        rows = [[dr, dt, pop] for (dr, dt), pop in zip(grid, pops)]
        tables.append(ResultTable(family, ["delta_r", "delta_t_fraction", "population"], ["nm", "1", "1"], np.array(rows)))
        summary[family] = {"min": float(min(pops)), "max": float(max(pops))}
    return ExperimentResult("", tables, summary)


def _pulse_compare(cfg: ExperimentConfig) -> ExperimentResult:
    tables, summary = [], {}
    for family in cfg.protocols:
        data, info = [], {}
        for kind in ("rect", "gauss"):
            proto = build_protocol(cfg, family, pulse=kind)
            traj = run_cycles(projector(proto.initial), proto, phase_source=_phase(cfg, proto, cfg.seed))
            t, pop = cycle_populations(traj, proto.target)
            data += [t, pop]
            info[kind] = {"period_us": proto.period, "coherent_us": proto.coherent_time, "final": float(pop[-1])}
        n = cfg.n_cycles
        info["time_saving_us"] = n * (info["rect"]["period_us"] - info["gauss"]["period_us"])
        info["coherent_saving_us"] = n * (info["rect"]["coherent_us"] - info["gauss"]["coherent_us"])
        tables.append(ResultTable(
            family,
            ["cycle", "time_rect_us", "P_rect", "time_gauss_us", "P_gauss"],
            ["1", "us", "1", "us", "1"],
            np.column_stack([np.arange(len(data[0]))] + data),
        ))
        summary[family] = info
    return ExperimentResult("", tables, summary)


def _detuning_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    tables, summary = [], {"pulse": cfg.pulse, "threshold": cfg.threshold}
    for family in cfg.protocols:
        def one(delta):
            proto = build_protocol(cfg, family, extra_detuning=delta, n_cycles=cfg.max_cycles)
            traj = run_cycles(projector(proto.initial), proto, phase_source=_phase(cfg, proto, cfg.seed))
            return cycle_populations(traj, proto.target)

        runs = _map(one, cfg.detunings, cfg.threads)
        pops = np.array([r[1] for r in runs])
        cycles = np.arange(pops.shape[1])
        tables.append(ResultTable(
            family,
            ["cycle"] + [f"P_d{d:+g}" for d in cfg.detunings],
            ["1"] + ["1"] * len(cfg.detunings),
            np.column_stack([cycles, pops.T]),
        ))
        srows = []
        for d, pop in zip(cfg.detunings, pops):
            hit = np.flatnonzero(pop >= cfg.threshold)
            first = float(cycles[hit[0]]) if hit.size else math.nan
            at_n = pop[min(cfg.n_cycles, len(pop) - 1)]
            srows.append([d, at_n, first])
            summary[f"{family}_d{d:+g}"] = {"cycles_to_threshold": first, "population_at_n_cycles": float(at_n)}
        tables.append(ResultTable(
            f"{family}_summary",
            ["delta", "population_at_n_cycles", "cycles_to_threshold"],
            ["2pi MHz", "1", "1"],
            np.array(srows),
        ))
    return ExperimentResult("", tables, summary)


# --- validation -------------------------------------------------------------

_FIG_STATES = ("111", "W0", "011")


def _validate_effective(cfg: ExperimentConfig) -> ExperimentResult:
    """Full versus effective pump dynamics from a mixed ground state."""
    p0 = cfg.laser.params()
    rho0 = mixed_validation_state()
    tables, summary = [], {"offresonant": cfg.offresonant}
    for variant in ("EP0", "SE0"):
        p = p0.with_variant(variant)
        v = cfg.vdw.params(p.delta)
        duration = 2 * math.pi / p.omega2
        samples = 200
        eff = propagate_const(rho0, build_effective_hamiltonian(p), (), duration, samples)
        if cfg.offresonant:
            full = propagate_timedep(
                rho0,
                lambda t: build_full_hamiltonian(p, v, "static", t, offresonant=True),
                (),
                duration,
                samples=samples,
                rel_tol=1e-9,
                abs_tol=1e-11,
            )
        else:
            full = propagate_const(rho0, build_full_hamiltonian(p, v), (), duration, samples)
        cols, data, dev = ["time_us", "omega2_t"], [eff.times, p.omega2 * eff.times], 0.0
        for s in _FIG_STATES:
            pf, pe = full.population(named_state(s)), eff.population(named_state(s))
            cols += [f"P_{s}_full", f"P_{s}_effective"]
            data += [pf, pe]
            dev = max(dev, float(np.max(np.abs(pf - pe))))
        tables.append(ResultTable(variant, cols, ["us", "rad"] + ["1"] * (len(cols) - 2), np.column_stack(data)))
        summary[variant] = {"max_abs_deviation": dev}
    return ExperimentResult("", tables, summary)


def _validate_decay(cfg: ExperimentConfig) -> ExperimentResult:
    """Single-atom engineered decay: full, effective and closed form."""
    d = cfg.decay.params()
    tables, summary = [], {}
    cases = (
        ("CD", full_cd_model(d), effective_cd_model(d), ("0",), d.Gamma1,
         lambda t: cd_ground_population(t, d.Gamma1)),
        ("UCD", full_ucd_model(d), effective_ucd_model(d), ("0", "1"), d.Gamma2,
         lambda t: ucd_ground_population(t, d.Gamma2, d.Gamma3)),
    )
    for name, full_m, eff_m, ground, rate, closed in cases:
        duration = 12 / rate
        samples = 240

        def pop(model):
            rho0 = np.outer(model.ket("r"), model.ket("r").conj())
            tr = propagate_const(rho0, model.hamiltonian, model.channels, duration, samples)
            return sum(tr.population(model.ket(g)) for g in ground), tr.times

        pf, times = pop(full_m)
        pe, _ = pop(eff_m)
        pa = closed(times)
        tables.append(ResultTable(
            name,
            ["time_us", "pop_full", "pop_effective", "pop_analytic"],
            ["us", "1", "1", "1"],
            np.column_stack([times, pf, pe, pa]),
        ))
        summary[name] = {
            "max_full_vs_effective": float(np.max(np.abs(pf - pe))),
            "max_effective_vs_analytic": float(np.max(np.abs(pe - pa))),
        }
    return ExperimentResult("", tables, summary)


# --- comparison table -------------------------------------------------------

def table1(cfg: ExperimentConfig) -> ExperimentResult:
    """Final target populations of the W-to-GHZ conversion.

    Columns: ideal, imperfect initial state ``7/8 |W0><W0| + 1/8 |000><000|``
    and ``U_rr = (1 +- 0.1) Delta`` with the full static-frame model; one row
    per pulse shape (0 = rectangular, 1 = Gaussian).
    """
    family = "ConversionII"
    p = cfg.laser.params()
    imperfect = 7 / 8 * projector("W0") + 1 / 8 * projector("000")

    def final(proto, rho0):
        traj = run_cycles(rho0, proto)
        return float(traj.observables[proto.target][-1])

    jobs = []
    for kind in ("rect", "gauss"):
        base = build_protocol(cfg, family, pulse=kind)
        jobs.append((base, projector("W0")))
        jobs.append((base, imperfect))
        for sign in (+1, -1):
            c = cfg.replace(vdw=VdwConfig(cfg.vdw.c6, None, to_mhz(p.delta) * (1 + 0.1 * sign)))
            jobs.append((build_protocol(c, family, model="full", pulse=kind), projector("W0")))
    vals = _map(lambda job: final(*job), jobs, cfg.threads)
    rows = [[0.0] + vals[:4], [1.0] + vals[4:]]
    table = ResultTable(
        "",
        ["gaussian", "ideal", "imperfect_initial", "urr_plus10", "urr_minus10"],
        ["1", "1", "1", "1", "1"],
        np.array(rows),
    )
    keys = ("ideal", "imperfect_initial", "urr_plus10", "urr_minus10")
    summary = {kind: dict(zip(keys, row[1:])) for kind, row in zip(("rect", "gauss"), rows)}
    return ExperimentResult("", [table], summary)


EXPERIMENT_RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "convert-ghz-to-w": _convert_ghz_to_w,
    "convert-w-to-ghz": _convert_w_to_ghz,
    "liouvillian-spectrum": _spectrum,
    "phase-noise": _phase_noise,
    "robustness-sweep": _robustness,
    "pulse-compare": _pulse_compare,
    "validate-effective": _validate_effective,
    "validate-decay": _validate_decay,
    "detuning-sweep": _detuning_sweep,
    "comparison-table": table1,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Dispatch on ``cfg.experiment``."""
    if cfg.experiment not in EXPERIMENT_RUNNERS:
        raise InvalidInputError(f"unknown experiment {cfg.experiment!r}")
    result = EXPERIMENT_RUNNERS[cfg.experiment](cfg)
    result.experiment = cfg.experiment
    return result


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_result(result: ExperimentResult, cfg: ExperimentConfig, out_dir, wall_time: float) -> list[Path]:
    """Write one CSV per table and a JSON sidecar; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in result.tables:
        stem = result.experiment + (f"_{t.name}" if t.name else "")
        path = out / f"{stem}.csv"
        path.write_text(t.to_csv(), encoding="utf-8")
        paths.append(path)
    meta = {
        "experiment": result.experiment,
        "version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "threads": cfg.threads,
        "wall_time_s": wall_time,
        "files": [p.name for p in paths],
        "summary": result.summary,
        "config": cfg.to_dict(),
    }
    side = out / f"{result.experiment}.json"
    side.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return paths + [side]


def timed_run(cfg: ExperimentConfig) -> tuple[ExperimentResult, float]:
    start = time.perf_counter()
    result = run_experiment(cfg)
    return result, time.perf_counter() - start
