import csv
import xml.etree.ElementTree as ET

import pytest

from coherent_swarm.cli import SEED_ENV, main


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def test_crlb_prints_bound(capsys, tmp_path):
    assert main(["--seed", "0", "crlb", "--csv", str(tmp_path / "b.csv")]) == 0
    out = capsys.readouterr().out
    assert "sigma_x" in out and "processing_gain" in out
    rows = list(csv.reader(open(tmp_path / "b.csv")))
    assert rows[0] == ["quantity", "value", "unit"]


def test_crlb_overrides(capsys):
    assert main(["crlb", "--seed", "1", "--bw", "8e6", "--snr-db", "20"]) == 0
    assert "8e+06" in capsys.readouterr().out


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 2


def test_bad_flag_value_is_usage_error(capsys):
    assert main(["--seed", "0", "crlb", "--bw=-4e6"]) == 2
    assert "bw_hz" in capsys.readouterr().err


def test_negative_seed_rejected(capsys):
    assert main(["--seed", "-3", "crlb"]) == 2


def test_config_errors_exit_two(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("fc_mhz = 1500\n")
    assert main(["--config", str(cfg), "sync-demo"]) == 2
    err = capsys.readouterr().err
    assert "line 1" in err and "unit mismatch" in err


def test_missing_config_file_exit_two(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.cfg"), "crlb"]) == 2


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv(SEED_ENV, "11")
    assert main(["-vv", "crlb"]) == 0
    err = capsys.readouterr().err
    assert "seed = 11" in err and "seed:" not in err


def test_bad_environment_seed(monkeypatch, capsys):
    monkeypatch.setenv(SEED_ENV, "eleven")
    assert main(["crlb"]) == 2


def test_drawn_seed_is_reported(capsys):
    assert main(["crlb"]) == 0
    err = capsys.readouterr().err
    assert err.startswith("seed: ") and int(err.split()[1]) >= 0


def test_flag_beats_config_seed(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 5\n")
    assert main(["--config", str(cfg), "--seed", "9", "-vv", "crlb"]) == 0
    assert "seed = 9" in capsys.readouterr().err


def test_global_flags_after_subcommand(capsys):
    assert main(["crlb", "--seed", "2", "-vv"]) == 0
    assert "seed = 2" in capsys.readouterr().err


def test_sync_demo(capsys):
    assert main(["--seed", "0", "sync-demo", "--delta-d", "1"]) == 0
    out = capsys.readouterr().out
    assert "-12.0083 deg" in out and "measured IF" in out


def test_sync_demo_rejects_bad_reference(capsys):
    assert main(["--seed", "0", "sync-demo", "--fref", "0"]) == 2


def test_range_sim_writes_trials(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["--seed", "0", "range-sim", "--trials", "20", "--out", str(out)]) == 0
    assert len(list(csv.reader(open(out)))) == 21


def test_mc_grid_outputs(tmp_path, capsys):
    out, pic = tmp_path / "s.csv", tmp_path / "s.svg"
    assert main(["--seed", "0", "mc-grid", "--iterations", "300", "--out", str(out), "--svg", str(pic)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 360 * 21 * 4
    assert ET.parse(pic).getroot().tag.endswith("svg")


def test_experiment_outputs(tmp_path, capsys):
    out, pic = tmp_path / "t.csv", tmp_path / "t.svg"
    assert main(["--seed", "0", "experiment", "--correction", "off", "--out", str(out), "--svg", str(pic)]) == 0
    assert "uncorrected nulls 2" in capsys.readouterr().out
    assert len(list(csv.reader(open(out)))) == 12
    assert ET.parse(pic).getroot().tag.endswith("svg")


def test_output_dir_from_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f'output_dir = "{tmp_path}"\n')
    assert main(["--config", str(cfg), "--seed", "0", "crlb", "--csv", "bound.csv"]) == 0
    assert (tmp_path / "bound.csv").exists()


def test_unwritable_output_exit_two(tmp_path, capsys):
    assert main(["--seed", "0", "crlb", "--csv", str(tmp_path / "no" / "such" / "dir.csv")]) == 2


def test_repro_negative_control(monkeypatch, capsys):
    # with tolerances cut a thousandfold the statistical checks must fail
    import coherent_swarm.cli as cli
    from coherent_swarm import repro

    def quick(seed, workers, tighten):
        checks = repro.check_moment() + repro.check_crlb() + repro.check_sync() + repro.check_gain_oracle()
        return [repro.replace(c, tighten=tighten) for c in checks]

    monkeypatch.setattr(cli, "run_checks", quick)
    assert main(["--seed", "0", "repro"]) == 0
    assert main(["--seed", "0", "repro", "--tighten", "1000"]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert main(["--seed", "0", "repro", "--tighten", "0"]) == 2
