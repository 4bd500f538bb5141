import json

import pytest

from ratvcbf.cli import main
from ratvcbf.config import ConfigError, load_run_config, write_default_config


SHORT_INI = """\
[scenario]
duration = 2.0
t_stress = 1.2
approach_duration = 0.6

[filter]
mode = ratvcbf

[run]
seed = 7
"""


def test_load_defaults_without_file():
    cfg = load_run_config(None)
    assert cfg.mode == "ratvcbf"
    assert cfg.scenario.theta_true == (1400.0, 70.0)


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(SHORT_INI)
    cfg = load_run_config(str(path))
    assert cfg.scenario.duration == 2.0
    assert cfg.seed == 7


def test_reject_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[scenario]\nnot_a_key = 1\n")
    with pytest.raises(ConfigError):
        load_run_config(str(path))


def test_reject_missing_file():
    with pytest.raises(ConfigError):
        load_run_config("/does/not/exist.ini")


def test_default_config_round_trip(tmp_path):
    path = tmp_path / "default.ini"
    write_default_config(str(path))
    cfg = load_run_config(str(path))
    assert cfg.scenario.smid_batch == 5
    assert cfg.scenario.smid_precision == pytest.approx(0.0008)


def test_cli_run(tmp_path, capsys):
    ini = tmp_path / "exp.ini"
    ini.write_text(SHORT_INI)
    out = tmp_path / "out"
    code = main(["run", "--config", str(ini), "--mode", "ratvcbf-smid",
                 "--out", str(out), "--seed", "1"])
    assert code == 0
    assert (out / "trace_ratvcbf_smid.csv").exists()
    with open(out / "summary.json") as fh:
        summary = json.load(fh)
    assert summary["mode"] == "ratvcbf_smid"
    assert "pass" in summary


def test_cli_run_bad_config(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[scenario]\nmrr_band_frac = 2.0\n")
    code = main(["run", "--config", str(ini), "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_compare(tmp_path, capsys):
    ini = tmp_path / "exp.ini"
    ini.write_text(SHORT_INI)
    out = tmp_path / "cmp"
    code = main(["compare", "--config", str(ini), "--out", str(out)])
    assert code == 0
    assert (out / "comparison.json").exists()
    captured = capsys.readouterr()
    assert "conservatism reduction" in captured.out
