import math

import pytest

import modetest


def two_groups(data_dir):
    lines = (data_dir / "two_groups.csv").read_text().split()[1:]
    return [float(v) for v in lines]


def test_critical_bandwidth_two_points():
    assert abs(modetest.critical_bandwidth([0.0, 1.0], 1) - 0.5) < 1e-3
    assert abs(modetest.hy_critical_bandwidth([0.0, 1.0], 1, (-1.0, 2.0)) - 0.5) < 1e-3


def test_kde_and_mode_count(data_dir):
    x = two_groups(data_dir)
    h1 = modetest.critical_bandwidth(x, 1)
    assert modetest.count_modes(x, h1) == 1
    assert modetest.count_modes(x, 0.9 * h1) > 1
    dens = modetest.kde_density(x, h1, [-10.0, 2.0, 20.0])
    assert dens[0] < 1e-6 and dens[1] > 0 and dens[2] < 1e-6


def test_delta_is_twice_dip(data_dir):
    x = two_groups(data_dir)
    assert math.isclose(modetest.delta_statistic(x, 1), 2 * modetest.dip_statistic(x), rel_tol=1e-12)
    assert modetest.delta_statistic(x, 1, em_mode="grid") <= modetest.delta_statistic(x, 1) + 1e-12


def test_errors_are_typed():
    with pytest.raises(modetest.TieError):
        modetest.dip_statistic([0.0, 1.0, 1.0, 2.0])
    with pytest.raises(modetest.InvalidArgument):
        modetest.model_sample("M99", 10, 1)
    assert issubclass(modetest.TieError, modetest.Error)


def test_run_test(data_dir):
    x = two_groups(data_dir)
    out = modetest.run_test("NP", x, k=1, B=30, seed=3)
    assert out["method"] == "NP"
    assert 0 < out["pvalue"] <= 1
    assert len(out["boot_stats"]) == 30
    assert out["pvalue"] == modetest.run_test("NP", x, k=1, B=30, seed=3, workers=2)["pvalue"]
    hy = modetest.run_test("HY", x, k=1, B=20, seed=3, interval=(-3.0, 7.0))
    assert "lambda_alpha_0.05" in hy["extras"]
    with pytest.raises(modetest.InvalidArgument):
        modetest.run_test("HH", x, k=2, B=10)


def test_models_and_calibration():
    cat = modetest.model_catalog()
    assert len(cat) == 26 and cat[16]["name"] == "M17"
    x = modetest.model_sample("M17", 200, 5)
    assert len(x) == 200 and x == sorted(x)
    assert modetest.model_sample("M17", 200, 5) == x
    assert modetest.model_density("M4", [0.5])[0] > 1.5
    g = modetest.calibration(x, 2, points=64)
    assert len(g["turning_points"]) == 3
    assert len(g["series"]["g"]) == 64
    assert g["normalization"] in ("raw", "divided_by_q")
