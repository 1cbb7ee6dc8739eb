import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from flsim.cli import build_parser, main, resolve_config
from flsim.config import EXPERIMENTS, ExperimentConfig, load_config, parse_config
from flsim.errors import ConfigError

SMALL_NOISE = {
    "protocols": ["ConversionI"],
    "n_cycles": 2,
    "seeds": [3, 11],
    "h0_values": [2000],
    "rabi_seeds": 0,
}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1], np.array(rows[2:], dtype=float)


# --- configuration ----------------------------------------------------------

def test_defaults_are_the_reference_parameter_set():
    cfg = ExperimentConfig()
    p = cfg.laser.params()
    assert p.omega1 == pytest.approx(2 * np.pi * 4.0)
    assert p.omega2 == pytest.approx(2 * np.pi * 0.04)
    assert p.delta == pytest.approx(2 * np.pi * 200.0)
    assert cfg.n_cycles == 18


def test_nested_config_is_parsed_in_mhz():
    cfg = parse_config({"laser": {"omega2": 0.1}, "noise": {"h0": 400}, "seeds": [1, 2]})
    assert cfg.laser.params().omega2 == pytest.approx(2 * np.pi * 0.1)
    assert cfg.noise_seeds() == [1, 2]


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"laser": {"omega3": 1.0}},
    {"n_cycles": "18"},
    {"n_cycles": 0},
    {"pulse": "square"},
    {"model": "lab"},
    {"experiment": "nope"},
    {"seed": -1},
    {"gamma_r_on": 1},
])
def test_invalid_configs_are_rejected(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_malformed_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "{not json"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_digest_tracks_content():
    a, b = ExperimentConfig(), ExperimentConfig(seed=1)
    assert a.digest() == ExperimentConfig().digest() != b.digest()


def test_all_experiments_are_registered():
    from flsim.experiments import EXPERIMENT_RUNNERS
    assert set(EXPERIMENTS) == set(EXPERIMENT_RUNNERS)


# --- argument handling ------------------------------------------------------

def test_overrides(tmp_path, monkeypatch):
    path = write(tmp_path, {"seed": 1, "threads": 3})
    monkeypatch.delenv("FLSIM_THREADS", raising=False)
    args = build_parser().parse_args(["phase-noise", "--config", str(path), "--seed", "0xff",
                                      "--full-hamiltonian", "--pulse", "gauss", "--out", "x"])
    cfg = resolve_config(args)
    assert (cfg.seed, cfg.model, cfg.pulse, cfg.output_path, cfg.threads) == (255, "full", "gauss", "x", 3)


def test_thread_precedence(tmp_path, monkeypatch):
    path = write(tmp_path, {"threads": 3})
    monkeypatch.setenv("FLSIM_THREADS", "2")
    parse = build_parser().parse_args
    assert resolve_config(parse(["phase-noise", "--config", str(path)])).threads == 2
    assert resolve_config(parse(["phase-noise", "--config", str(path), "--threads", "4"])).threads == 4
    monkeypatch.setenv("FLSIM_THREADS", "zero")
    with pytest.raises(ConfigError):
        resolve_config(parse(["phase-noise", "--config", str(path)]))


def test_experiment_mismatch(tmp_path):
    path = write(tmp_path, {"experiment": "phase-noise"})
    with pytest.raises(ConfigError):
        resolve_config(build_parser().parse_args(["validate-decay", "--config", str(path)]))


@pytest.mark.parametrize("argv", [
    ["validate-decay"],
    ["unknown", "--config", "c.json"],
    ["validate-decay", "--config", "c.json", "--seed", str(2**64)],
    ["validate-decay", "--config", "c.json", "--seed", "-1"],
    ["validate-decay", "--config", "c.json", "--threads", "0"],
    ["validate-decay", "--config", "c.json", "--pulse", "square"],
])
def test_bad_arguments_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


@pytest.mark.parametrize("data", ["{not json", json.dumps({"bogus": 1}), json.dumps({"laser": {"omega1": -4}})])
def test_bad_config_exits_1_and_writes_nothing(tmp_path, data):
    out = tmp_path / "out"
    assert main(["validate-decay", "--config", str(write(tmp_path, data)), "--out", str(out)]) == 1
    assert not out.exists()


def test_numerical_failure_exits_2(tmp_path, monkeypatch, capsys):
    from flsim import cli
    from flsim.errors import StiffnessError

    def boom(cfg):
        raise StiffnessError("step size underflow", 1.5)

    monkeypatch.setattr(cli, "timed_run", boom)
    out = tmp_path / "out"
    assert main(["validate-decay", "--config", str(write(tmp_path, {})), "--out", str(out)]) == 2
    assert "time" in capsys.readouterr().err
    assert not out.exists()


# --- runs -------------------------------------------------------------------

def test_validate_decay_output(tmp_path):
    out = tmp_path / "out"
    assert main(["validate-decay", "--config", str(write(tmp_path, {})), "--out", str(out)]) == 0
    for kind in ("CD", "UCD"):
        names, units, rows = read_csv(out / f"validate-decay_{kind}.csv")
        assert names == ["time_us", "pop_full", "pop_effective", "pop_analytic"]
        assert units[0] == "us"
        assert rows.shape[1] == 4
        # the effective model reproduces its closed form; the full-model tolerance is an acceptance criterion
        assert np.max(np.abs(rows[:, 2] - rows[:, 3])) < 1e-8
    meta = json.loads((out / "validate-decay.json").read_text())
    assert meta["experiment"] == "validate-decay"
    assert set(meta) >= {"config_sha256", "seed", "version", "wall_time_s", "files", "summary"}
    assert meta["config_sha256"] == ExperimentConfig(experiment="validate-decay", output_path=str(out)).digest()


def test_convert_ghz_to_w_output(tmp_path):
    out = tmp_path / "out"
    assert main(["convert-ghz-to-w", "--config", str(write(tmp_path, {})), "--out", str(out)]) == 0
    names, _, rows = read_csv(out / "convert-ghz-to-w.csv")
    assert names == ["time_us", "P_GHZ-", "P_W0", "purity"]
    assert rows[-1, 2] > 0.99
    assert rows[-1, 0] / 1000 == pytest.approx(0.715, rel=0.02)


def test_same_seed_gives_identical_csv(tmp_path):
    cfg = write(tmp_path, SMALL_NOISE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["phase-noise", "--config", str(cfg), "--out", str(a), "--seed", "42"]) == 0
    assert main(["phase-noise", "--config", str(cfg), "--out", str(b), "--seed", "42", "--threads", "2"]) == 0
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs and csvs == sorted(p.name for p in b.glob("*.csv"))
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_different_seeds_differ(tmp_path):
    data = dict(SMALL_NOISE, seeds=None, n_seeds=1)
    cfg = write(tmp_path, data)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["phase-noise", "--config", str(cfg), "--out", str(a), "--seed", "1"])
    main(["phase-noise", "--config", str(cfg), "--out", str(b), "--seed", "2"])
    name = "phase-noise_ConversionI_h2000.csv"
    assert (a / name).read_bytes() != (b / name).read_bytes()


def test_csv_precision(tmp_path):
    from flsim.experiments import ResultTable
    text = ResultTable("t", ["x"], ["1"], np.array([[0.1], [1 / 3]])).to_csv()
    lines = text.splitlines()
    assert lines[:2] == ["x", "1"]
    assert float(lines[3]) == 1 / 3 and lines[3] == format(1 / 3, ".17g")


def test_console_script(tmp_path):
    out = tmp_path / "out"
    res = subprocess.run([sys.executable, "-m", "flsim.cli", "validate-decay", "--config",
                          str(write(tmp_path, {})), "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0
    assert (out / "validate-decay.json").exists()
