import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherent_swarm.config import ConfigError, RunConfig, dump_config, load_config, parse_config, with_overrides


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.fc_hz == 1.5e9 and cfg.snr_db == 30.0 and cfg.f_ref_hz == pytest.approx(10e6)
    assert cfg.traverse == pytest.approx(299_792_458.0 / 1.5e9)


def test_comments_and_whitespace():
    cfg = parse_config("# header\n\n  fc_hz = 2.4e9   # carrier\nthresholds = 0.5, 0.9\nmethod = parabolic\n")
    assert cfg.fc_hz == 2.4e9 and cfg.thresholds == (0.5, 0.9) and cfg.method == "parabolic"


def test_negative_frequency_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("snr_db = 20\nfc_hz = -1\n")
    assert exc.value.key == "fc_hz" and exc.value.line == 2
    assert "fc_hz" in str(exc.value) and "line 2" in str(exc.value)


@pytest.mark.parametrize(
    "text,key",
    [("fc_mhz = 1500\n", "fc_mhz"), ("step_cm = 2\n", "step_cm"), ("snr = 30\n", "snr"), ("distance_km = 1\n", "distance_km")],
)
def test_unit_mismatch_in_key(text, key):
    with pytest.raises(ConfigError, match="unit mismatch") as exc:
        parse_config(text)
    assert exc.value.key == key and exc.value.column == 1


def test_unit_mismatch_in_value():
    with pytest.raises(ConfigError, match="unit mismatch") as exc:
        parse_config("fc_hz = 1.5 GHz\n")
    assert exc.value.line == 1 and exc.value.column == 9


def test_unknown_key_reports_position():
    with pytest.raises(ConfigError, match="unknown key") as exc:
        parse_config("snr_db = 30\n   colour = 3\n")
    assert (exc.value.line, exc.value.column) == (2, 4)


@pytest.mark.parametrize(
    "text",
    [
        "fc_hz\n",
        "fc_hz = \n",
        "trials = 2.5\n",
        "fc_hz = abc\n",
        "duty = 1.5\n",
        "thresholds = 0.9, 0.6\n",
        "method = magic\n",
        "fc_hz = 1e9\nfc_hz = 2e9\n",
        "fr1_hz = 5e9\nfr2_hz = 4e9\n",
        "fr2_hz = 4.32e9\n",
        "step_m = 1.0\n",
        "probability_target = 0\n",
        "snr_db = nan\n",
    ],
)
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_reference_beyond_filter_cutoff_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("fr2_hz = 4.312e9\n")
    assert exc.value.key == "lpf_cutoff_hz"


def test_optional_values():
    assert parse_config("seed = none\ntraverse_m = auto\n").seed is None
    assert parse_config("traverse_m = 0.5\n").traverse == 0.5


def test_overrides_are_validated():
    cfg = with_overrides(RunConfig(), snr_db=20.0, trials=None)
    assert cfg.snr_db == 20.0 and cfg.trials == 1000
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), fc_hz=-1.0)
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), nonsense=1)


def test_load_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 7\nworkers = 2\n")
    cfg = load_config(p)
    assert cfg.seed == 7 and cfg.workers == 2


def test_derived_configs():
    cfg = RunConfig(seed=4, theta_step_deg=2.0, sigma_step_over_lambda=0.01)
    mc = cfg.mc_config()
    assert len(mc.theta_grid) == 180 and len(mc.sigma_grid) == 11 and mc.master_seed == 4
    ex = cfg.experiment_config()
    assert ex.seed == 4 and len(ex.positions()) == 11


finite = st.floats(allow_nan=False, allow_infinity=False)


@given(
    seed=st.one_of(st.none(), st.integers(0, 2**32)),
    fc=st.floats(1e6, 1e10),
    snr=st.floats(-30, 80),
    thresholds=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5).map(lambda v: tuple(sorted(v))),
    traverse=st.one_of(st.none(), st.floats(0.5, 5.0)),
    method=st.sampled_from(["spline1000", "parabolic", "fft_zoom"]),
    out=st.text(alphabet="abc/_ -.", min_size=1, max_size=12),
    target=st.one_of(st.just(math.inf), st.floats(0, 60)),
)
def test_dump_parse_round_trip(seed, fc, snr, thresholds, traverse, method, out, target):
    cfg = RunConfig(
        seed=seed, fc_hz=fc, snr_db=snr, thresholds=thresholds, traverse_m=traverse,
        method=method, output_dir=out, target_snr_db=target,
    )
    assert parse_config(dump_config(cfg)) == cfg
