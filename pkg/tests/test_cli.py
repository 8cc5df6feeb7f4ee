import json

import pytest

from rydafdm.cli import EXIT_ERROR, EXIT_IO, EXIT_OK, main

SMALL = "[run]\ntrials = 3\nsnr_db = 20, 30\ndelta_c1 = 0.25\n"


def test_simulate_noiseless(capsys):
    assert main(["simulate", "--no-noise"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert abs(out["range_hat_m"] - 1000) <= 1.0
    assert abs(out["velocity_hat_mps"] - 50) <= 0.05
    assert out["failure"] is None


def test_simulate_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[scenario]\ntarget_range = 500\nvelocity = -10\n")
    assert main(["simulate", "-c", str(cfg), "--snr-db", "40", "--seed", "3"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert abs(out["range_hat_m"] - 500) <= 5.0


def test_spectrum_command(tmp_path, capsys):
    path = tmp_path / "spectrum.csv"
    assert main(["spectrum", "-o", str(path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert path.exists()
    assert set(summary["peaks_hz"]) == {"dual.A", "dual.B", "baseline.A", "baseline.B"}


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL + f"output_dir = {tmp_path / 'out'}\n")
    assert main(["sweep", "-c", str(cfg)]) == EXIT_OK
    csv_path = tmp_path / "out" / "nrmse.csv"
    assert capsys.readouterr().out.strip() == str(csv_path)
    assert len(csv_path.read_text().splitlines()) == 3


def test_validate_command(capsys):
    assert main(["validate"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[waveform]\nN = 0\n")
    assert main(["simulate", "-c", str(cfg)]) == EXIT_ERROR
    assert "waveform.N" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["validate", "-c", str(tmp_path / "nope.ini")]) == EXIT_ERROR


def test_unwritable_output(tmp_path, capsys):
    assert main(["spectrum", "-o", str(tmp_path / "no" / "dir.csv")]) == EXIT_IO


def test_config_template(capsys):
    assert main(["config"]) == EXIT_OK
    assert "[scenario]" in capsys.readouterr().out


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code != 0
