import math

import numpy as np
import pytest

from coherent_swarm.montecarlo import (
    CSV_COLUMNS,
    McConfig,
    analytic_crossing,
    analytic_probability,
    read_surface_csv,
    requirement_contour,
    run_surface,
    worst_case_angle,
    write_surface_csv,
)

SIGMAS = tuple(round(0.005 * i, 10) for i in range(21))


@pytest.fixture(scope="module")
def coarse():
    cfg = McConfig(iterations=3000, theta_grid=tuple(range(0, 360, 10)), master_seed=3)
    return run_surface(cfg)


def test_zero_sigma_always_succeeds(coarse):
    assert np.all(coarse.probability[:, coarse.sigma_index(0.0), :] == 1.0)


def test_broadside_away_cancels_motion(coarse):
    # at 270 degrees the sync and steering terms cancel for co-located motion
    assert np.all(coarse.probability[coarse.theta_index(270.0)] == 1.0)


def test_probability_monotone_in_sigma(coarse):
    assert np.all(np.diff(coarse.probability, axis=1) <= 1e-12)


def test_probability_monotone_in_threshold(coarse):
    assert np.all(np.diff(coarse.probability, axis=2) <= 1e-12)


def test_mirror_symmetry_is_exact(coarse):
    mirror = [coarse.theta_index((180.0 - t) % 360.0) for t in coarse.config.theta_grid]
    assert np.array_equal(coarse.probability[mirror], coarse.probability)


def test_lower_threshold_contour_encloses_higher(coarse):
    c6 = requirement_contour(coarse, 0.6)
    c9 = requirement_contour(coarse, 0.9)
    finite = [t for t in c9 if math.isfinite(c9[t])]
    assert len(finite) > len(c9) // 2
    for t in finite:
        assert c6[t] >= c9[t]


def test_contour_at_broadside():
    cfg = McConfig(iterations=5000, theta_grid=(90.0,), thresholds=(0.9,))
    c = requirement_contour(run_surface(cfg), 0.9)[90.0]
    assert 0.029 <= c <= 0.033
    assert c == pytest.approx(analytic_crossing(90.0, 0.9, 0.9), abs=0.001)


def test_worst_angle_is_broadside(coarse):
    assert worst_case_angle(requirement_contour(coarse, 0.9)) == pytest.approx(90.0, abs=1.0)


def test_worst_angle_plateau_centre():
    assert worst_case_angle({80.0: 0.1, 90.0: 0.05, 100.0: 0.05, 110.0: 0.2}) == pytest.approx(95.0)
    assert worst_case_angle({350.0: 0.1, 0.0: 0.1, 10.0: 0.1, 180.0: 0.3}) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("model", ["shared", "independent"])
def test_matches_closed_form_within_three_standard_errors(model):
    cfg = McConfig(iterations=4000, theta_grid=(0.0, 45.0, 90.0, 200.0), error_model=model, master_seed=9)
    s = run_surface(cfg)
    for i, th in enumerate(cfg.theta_grid):
        for j, sg in enumerate(cfg.sigma_grid):
            for k, x in enumerate(cfg.thresholds):
                a = analytic_probability(sg, th, x, model)
                se = math.sqrt(max(a * (1 - a), 1e-12) / cfg.iterations)
                assert abs(s.probability[i, j, k] - a) <= 3 * se + 1e-9, (th, sg, x)


def test_stderr_bounded():
    cfg = McConfig(iterations=2000, theta_grid=(90.0,))
    s = run_surface(cfg)
    assert np.all(s.stderr <= 0.5 / math.sqrt(2000) + 1e-15)


def test_worker_count_does_not_change_surface():
    cfg = McConfig(iterations=1000, theta_grid=tuple(range(0, 360, 30)))
    assert np.array_equal(run_surface(cfg, workers=1).probability, run_surface(cfg, workers=2).probability)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"iterations": 0},
        {"thresholds": (0.9, 0.6)},
        {"thresholds": (1.2,)},
        {"sigma_grid": (0.01, 0.0)},
        {"sigma_grid": (-0.01,)},
        {"theta_grid": ()},
        {"error_model": "bogus"},
        {"f_c": 0.0},
        {"probability_target": 0.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        McConfig(**kwargs)


def test_desk_preset():
    cfg = McConfig.desk()
    assert cfg.iterations == 5000 and len(cfg.theta_grid) == 360 and cfg.sigma_grid == SIGMAS


def test_csv_schema_and_round_trip(tmp_path):
    cfg = McConfig(iterations=500, theta_grid=(0.0, 90.0), sigma_grid=(0.0, 0.05))
    s = run_surface(cfg)
    path = tmp_path / "surface.csv"
    write_surface_csv(s, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    rows = read_surface_csv(path)
    assert len(rows) == 2 * 2 * len(cfg.thresholds)
    for row, ref in zip(rows, s.rows()):
        assert tuple(row[c] for c in CSV_COLUMNS) == ref


def test_lookup_errors(coarse):
    with pytest.raises(KeyError):
        coarse.threshold_index(0.55)
    with pytest.raises(KeyError):
        coarse.theta_index(5.0)
    with pytest.raises(KeyError):
        coarse.sigma_index(0.0001)
    assert coarse.theta_index(360.0) == coarse.theta_index(0.0)
