"""Command line tests: argument parsing, config files, exit codes, emission."""

import numpy as np
import pytest

from beamsync.cli import load_config_file, main, parse_snr_spec
from beamsync.experiments import CSV_COLUMNS, ConfigError

TINY = """
# two lightly loaded users, small array, tiny grid
users = 80, 100
antennas = 16
snr-db = 10:20:10
trials = 2
seed = 4242
scenario_id = tiny
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


# ---------------------------------------------------------------------------
# SNR specs
# ---------------------------------------------------------------------------


def test_parse_snr_spec_forms():
    assert parse_snr_spec("0:30:5") == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert parse_snr_spec("10") == (10.0,)
    assert parse_snr_spec("3,1,2") == (3.0, 1.0, 2.0)
    assert parse_snr_spec(" 5 ") == (5.0,)
    assert parse_snr_spec("-5:5:5") == (-5.0, 0.0, 5.0)


def test_parse_snr_spec_errors():
    for bad in ("5:0:5", "0:10:0", "0:10", "a:b:c", "abc", "1:2:3:4"):
        with pytest.raises(ConfigError, match="bad SNR spec"):
            parse_snr_spec(bad)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def test_load_config_file_roundtrip(tiny_config):
    values = load_config_file(tiny_config)
    assert values["users"] == (80.0, 100.0)
    assert values["antennas"] == 16
    assert values["snr_db"] == (10.0, 20.0)
    assert values["trials"] == 2
    assert values["scenario_id"] == "tiny"


def test_load_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("users = 90\nwibble = 3\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:2: unknown key"):
        load_config_file(str(path))


def test_load_config_file_bad_syntax(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("users 90\n")
    with pytest.raises(ConfigError, match="expected key = value"):
        load_config_file(str(path))


def test_load_config_file_bad_value(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("trials = soon\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:1"):
        load_config_file(str(path))


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_exit_1_on_usage_and_config_errors(tmp_path, capsys):
    assert main(["mse-sweep", "--bogus"]) == 1
    assert main(["mse-sweep"]) == 1  # no scenario given
    assert main(["mse-sweep", "--preset", "fig9"]) == 1
    assert main(["mse-sweep", "--preset", "fig3", "--snr", "nope"]) == 1
    missing = str(tmp_path / "missing.cfg")
    assert main(["analyze", "--trials", "3", "--preset", "fig3"]) == 1
    capsys.readouterr()
    # a config error names the problem on stderr
    assert main(["mse-sweep", "--config", missing]) in (1, 3)


def test_exit_2_on_numerical_failure(tmp_path, capsys):
    # an AoA of 0 deg leaves no valid scatter region once the spread is added
    path = tmp_path / "degenerate.cfg"
    path.write_text("users = 0\nantennas = 16\nsnr-db = 10\ntrials = 1\n")
    assert main(["mse-sweep", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "numerical failure" in err


def test_exit_3_on_unwritable_output(tiny_config, capsys):
    code = main(
        ["mse-sweep", "--config", tiny_config, "--out", "/nonexistent/dir/x.csv"]
    )
    assert code == 3
    assert "i/o failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweeps through the front end
# ---------------------------------------------------------------------------


def test_mse_sweep_to_stdout(tiny_config, capsys):
    assert main(["mse-sweep", "--config", tiny_config]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 2 * 2
    first = lines[1].split(",")
    assert first[0] == "tiny" and first[1] == "adaf"
    assert np.isfinite(float(first[4]))


def test_flags_override_config_file(tiny_config, capsys):
    assert main(
        ["mse-sweep", "--config", tiny_config, "--trials", "3",
         "--estimator", "mf", "--seed", "7"]
    ) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split(",")
    assert row[1] == "mf"
    assert row[10] == "3"
    assert row[12] == "7"


def test_csv_file_and_gnuplot_outputs(tiny_config, tmp_path, capsys):
    out = tmp_path / "r.csv"
    prefix = tmp_path / "plot"
    assert main(
        ["mse-sweep", "--config", tiny_config, "--out", str(out),
         "--gnuplot", str(prefix)]
    ) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text().startswith(",".join(CSV_COLUMNS))
    dats = sorted(tmp_path.glob("plot_*.dat"))
    # mse plus four closed forms, two users each
    assert len(dats) == 5 * 2


def test_ser_sweep_runs(tiny_config, capsys):
    assert main(["ser-sweep", "--config", tiny_config]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    ser_col = CSV_COLUMNS.index("ser")
    values = [float(line.split(",")[ser_col]) for line in lines[1:]]
    assert all(0.0 <= v <= 1.0 for v in values)


def test_robustness_zero_bias_matches_plain_sweep(tiny_config, tmp_path):
    plain = tmp_path / "plain.csv"
    biased = tmp_path / "biased.csv"
    assert main(["mse-sweep", "--config", tiny_config, "--out", str(plain)]) == 0
    assert main(
        ["robustness", "--mode", "aoa-bias", "--aoa-bias", "0",
         "--config", tiny_config, "--out", str(biased)]
    ) == 0
    assert plain.read_bytes() == biased.read_bytes()


def test_robustness_side_cluster_via_flags(tmp_path, capsys):
    path = tmp_path / "sides.cfg"
    path.write_text(
        "users = 80, 100\nside-aoas = 100, 80\nantennas = 16\n"
        "snr-db = 10\ntrials = 1\n"
    )
    assert main(
        ["robustness", "--mode", "side-cluster", "--smpr-db", "0",
         "--config", str(path)]
    ) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 2


def test_analyze_needs_no_trials(tiny_config, capsys):
    assert main(["analyze", "--config", tiny_config]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    trials_col = CSV_COLUMNS.index("trials")
    assert all(line.split(",")[trials_col] == "0" for line in lines[1:])


def test_check_command_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out
