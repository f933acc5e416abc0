import subprocess
import sys

import pytest

from setloc import cli, scenario


def run_cli(*args):
    return cli.main(list(args))


@pytest.fixture()
def parking_cfg(tmp_path):
    path = tmp_path / "parking.cfg"
    path.write_text(scenario.builtin_config_text("parking"), encoding="utf-8")
    return path


def test_validate_ok(parking_cfg, capsys):
    assert run_cli("validate", "--config", str(parking_cfg)) == 0
    out = capsys.readouterr().out
    assert "21 sensors" in out


def test_validate_rejects_broken_containment(parking_cfg, tmp_path, capsys):
    text = parking_cfg.read_text() + "\n"
    text = text.replace("[initial_sets]",
                        "[initial_sets]\nmarker_center_dx = 9.0")
    bad = tmp_path / "bad.cfg"
    bad.write_text(text, encoding="utf-8")
    assert run_cli("validate", "--config", str(bad)) == 1
    err = capsys.readouterr().err
    assert "initial containment" in err


def test_run_corrupted_config_names_key(tmp_path, capsys):
    bad = tmp_path / "broken.cfg"
    bad.write_text(scenario.builtin_config_text("parking").replace(
        "dt = 0.5", "dt = soon"), encoding="utf-8")
    code = run_cli("run", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert code == 1
    assert "dt" in capsys.readouterr().err


def test_run_writes_outputs_and_summary(parking_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli("run", "--config", str(parking_cfg), "--out", str(out),
                   "--steps", "8", "--estimator", "set")
    assert code == 0
    stdout = capsys.readouterr().out
    assert "containment_rate=100.0%" in stdout
    metrics = (out / "metrics.csv").read_text()
    assert metrics.splitlines()[0] == ",".join(scenario.CSV_COLUMNS)
    assert len(metrics.splitlines()) == 9
    assert (out / "geometry.ndjson").exists()


def test_run_deterministic_bytes(parking_cfg, tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run_cli("run", "--config", str(parking_cfg), "--out", str(out),
                       "--steps", "6", "--seed", "7") == 0
    assert (out1 / "metrics.csv").read_bytes() == \
        (out2 / "metrics.csv").read_bytes()
    assert (out1 / "geometry.ndjson").read_bytes() == \
        (out2 / "geometry.ndjson").read_bytes()


def test_sweep_row_count(parking_cfg, tmp_path):
    out = tmp_path / "sweep"
    code = run_cli("sweep", "--config", str(parking_cfg),
                   "--parameter", "eps_wa", "--values", "0.5,1,2,4",
                   "--seeds", "5", "--steps", "3", "--out", str(out))
    assert code == 0
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 4 * 5 * 2


def test_sweep_bad_values(parking_cfg, tmp_path, capsys):
    code = run_cli("sweep", "--config", str(parking_cfg),
                   "--parameter", "eps_wa", "--values", "a,b",
                   "--out", str(tmp_path / "s"))
    assert code == 1
    assert "sweep values" in capsys.readouterr().err


def test_dump_defaults(tmp_path):
    assert run_cli("dump-defaults", "--out", str(tmp_path)) == 0
    assert (tmp_path / "parking.cfg").exists()
    assert (tmp_path / "omni.cfg").exists()
    cfg = scenario.load_config(str(tmp_path / "parking.cfg"))
    assert scenario.validate_config(cfg) == []


def test_run_fault_exit_code(tmp_path, capsys):
    # overlapping marker sets make the correspondence ambiguous, so a cap of
    # one assignment aborts the run under the default fault policy
    text = scenario.builtin_config_text("parking")
    text = text.replace("marker_area = 1.0", "marker_area = 25.0")
    text = text.replace("assignment_cap = 1000", "assignment_cap = 1")
    cfg = tmp_path / "ambiguous.cfg"
    cfg.write_text(text, encoding="utf-8")
    code = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                   "--steps", "10")
    assert code == 2
    assert "fault" in capsys.readouterr().err
    # the fallback policy turns the same run into a clean exit
    code = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "o2"),
                   "--steps", "10", "--fallback-predict")
    assert code == 0


def test_missing_config_file(tmp_path, capsys):
    assert run_cli("validate", "--config", str(tmp_path / "nope.cfg")) == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "setloc.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "sweep" in proc.stdout
