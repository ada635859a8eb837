import json

import pytest

from hybridce import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--seed", "7")
    lines = out.strip().splitlines()
    assert code == 0
    assert len(lines) == 10
    assert all(line.startswith("PASS") for line in lines)


def test_missing_config_exits_one(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--config", str(tmp_path / "missing.toml"))
    assert code == 1 and "config" in err


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["demo", "--mode", "bogus"])
    assert exc.value.code == 1


def test_negative_seed(capsys):
    code, _, _ = run(capsys, "demo", "--seed", "-1")
    assert code == 1


def test_demo_is_deterministic(capsys):
    first = run(capsys, "demo", "--seed", "1", "--trials", "3")
    second = run(capsys, "demo", "--seed", "1", "--trials", "3")
    assert first[0] == 0
    assert first[1] == second[1]
    assert first[1].splitlines()[0].split() == ["estimator", "bits", "snr_db", "nmse", "stderr"]


def test_codebook(capsys, tmp_path):
    code, out, _ = run(capsys, "codebook", "--bits", "1", "2")
    books = json.loads(out)
    assert code == 0 and [b["bits"] for b in books] == [1, 2]
    assert books[1]["table_distortion"] == 0.1175
    code, _, _ = run(capsys, "codebook", "--bits", "13")
    assert code == 1


def test_sweep_writes_outputs(capsys, tmp_path):
    config = tmp_path / "sweep.toml"
    config.write_text(
        'n_t = 4\nn_r = 4\nn_rf_t = 2\nn_rf_r = 2\nnum_subcarriers = 2\nnum_taps = 1\n'
        'snr_grid_db = [0, 10]\nbits_grid = [1, "inf"]\ntrials = 2\n'
    )
    out = tmp_path / "res.csv"
    code, _, _ = run(capsys, "sweep", "--config", str(config), "--out", str(out), "--seed", "5")
    assert code == 0
    assert out.read_text().startswith("estimator,snr_db,bits,nmse_mean,nmse_stderr,trials\n")
    assert (tmp_path / "res_plot.py").exists()
    assert (tmp_path / "res.png").stat().st_size > 0

    code, stdout, _ = run(capsys, "sweep", "--config", str(config), "--format", "json", "--trials", "1", "--mode", "linearized")
    assert code == 0 and len(json.loads(stdout)) == 8


def test_sweep_bad_value_exits_one(capsys, tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("num_paths = 0\n")
    code, _, _ = run(capsys, "sweep", "--config", str(config))
    assert code == 1
