import json

import numpy as np
import pytest

from pfaboot import ARModel, FrequencyGrid, ar_psd
from pfaboot.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from pfaboot.io import read_column, read_json, read_maxima_csv, read_series_csv

from .conftest import FIG1_COEFFS

SMALL = ["--set", "n_grid=256", "--set", "n_keep=60", "--set", "L=20"]


def run(*argv):
    return main([str(a) for a in argv])


def first_line(path):
    with open(path) as fh:
        return json.loads(fh.readline()[2:])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--out", out, "--seed", 7, *SMALL) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def cal_dir(tmp_path_factory, sim_dir):
    out = tmp_path_factory.mktemp("cal")
    rc = run(
        "calibrate", "--out", out, "--seed", 3, "--threads", 2,
        "--train", f"{sim_dir}/train_*.csv", "--observation", sim_dir / "observation.csv",
        *SMALL, "--set", "B=4", "--set", "b=60", "--variant", "bstar",
    )
    assert rc == EXIT_OK
    return out


def test_simulate_outputs(sim_dir):
    train = sorted(sim_dir.glob("train_*.csv"))
    assert len(train) == 20
    obs = read_series_csv(sim_dir / "observation.csv")
    assert obs.scheme.n == 60
    assert read_series_csv(train[0]).scheme.n == 256  # training on the full grid
    meta = first_line(sim_dir / "observation.csv")
    assert meta["seed"] == 7 and meta["command"] == "simulate"
    assert meta["config"]["n_keep"] == 60 and "pfaboot" in meta
    assert read_json(sim_dir / "true_model.json")["model"]["coeffs"] == FIG1_COEFFS


def test_simulate_fig1_counts(tmp_path):
    assert run("simulate", "--scenario", "fig1", "--out", tmp_path) == EXIT_OK
    assert len(list(tmp_path.glob("train_*.csv"))) == 20
    assert read_series_csv(tmp_path / "observation.csv").scheme.n == 103


def test_zero_amplitude_is_pure_noise(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--out", a, *SMALL) == EXIT_OK
    assert run("simulate", "--out", b, *SMALL, "--set", "inject_amplitude=0", "--set", "inject_frequency=0.1") == 0
    assert np.array_equal(read_series_csv(a / "observation.csv").values, read_series_csv(b / "observation.csv").values)


def test_injected_line_in_periodogram(tmp_path):
    # 1 min sampling, frequencies in Hz, a weak low-frequency line
    rc = run(
        "simulate", "--scenario", "inject", "--out", tmp_path,
        "--set", "n_grid=1024", "--set", "delta_t=60", "--set", "time_unit=s",
        "--set", "inject_amplitude=0.28", "--set", "inject_frequency=4.6e-5",
    )
    assert rc == EXIT_OK
    nu = read_column(tmp_path / "observation_periodogram.csv", "nu")
    p = read_column(tmp_path / "observation_periodogram.csv", "ordinate")
    band = nu < 4 * 4.6e-5
    k = np.argmax(p[band])
    assert abs(nu[k] - 4.6e-5) <= nu[0]
    psd = ar_psd(ARModel.from_coeffs(FIG1_COEFFS), FrequencyGrid(nu[band]), 60.0).ordinates
    assert p[k] > 10 * psd[k]


def test_calibrate_outputs(cal_dir):
    assert read_maxima_csv(cal_dir / "maxima.csv").shape == (4, 60)
    d = read_json(cal_dir / "farun.json")
    assert d["variant"] == "bstar" and len(d["gev"]) == 4
    header = open(cal_dir / "fa_curve.csv").read().splitlines()[1]
    assert header == "variant,gamma,mean,std,lo,hi,min,max"
    curve = read_column(cal_dir / "fa_curve.csv", "mean")
    assert np.all(np.diff(curve) <= 1e-12)
    assert list(read_column(cal_dir / "thresholds.csv", "target_pfa")) == [0.1, 0.5, 0.9]
    model = read_json(cal_dir / "first_stage_model.json")
    assert "portmanteau_pvalue" in model["residual_whiteness"]
    assert "note" in first_line(cal_dir / "fa_curve.csv")
    assert not (cal_dir / "marginal_check.csv").exists()


def test_calibrate_with_oracle_column(tmp_path, sim_dir):
    orc = tmp_path / "orc"
    assert run("oracle", "--out", orc, *SMALL, "--set", "n_mc=300") == EXIT_OK
    cal = tmp_path / "cal"
    rc = run(
        "calibrate", "--out", cal, "--train", f"{sim_dir}/train_*.csv",
        "--observation", sim_dir / "observation.csv", "--oracle", orc / "oracle_maxima.csv",
        *SMALL, "--set", "B=2", "--set", "b=20",
    )
    assert rc == EXIT_OK
    o = read_column(cal / "fa_curve.csv", "oracle")
    assert np.all((o >= 0) & (o <= 1))


def test_even_sampling_marginal_table(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--out", sim, "--set", "n_grid=128", "--set", "n_keep=null") == EXIT_OK
    cal = tmp_path / "cal"
    rc = run(
        "calibrate", "--out", cal, "--train", f"{sim}/train_*.csv", "--observation", sim / "observation.csv",
        "--set", "B=2", "--set", "b=10", "--set", "marginal_draws=300",
    )
    assert rc == EXIT_OK
    fq = read_column(cal / "marginal_check.csv", "f_quantile")
    eq = read_column(cal / "marginal_check.csv", "empirical_quantile")
    levels = read_column(cal / "marginal_check.csv", "level")
    # F(2, 2L) has a closed-form quantile: (2L/2) * ((1 - q)^(-1/L) - 1)
    assert np.allclose(fq, 20 * ((1 - levels) ** (-1 / 20) - 1), rtol=1e-9)
    mid = slice(1, -1)
    assert np.allclose(eq[mid], fq[mid], rtol=0.15)


def test_oracle_outputs(tmp_path):
    assert run("oracle", "--out", tmp_path, *SMALL, "--set", "n_mc=200", "--set", "n_gamma=50") == EXIT_OK
    m = read_column(tmp_path / "oracle_maxima.csv", "maximum")
    assert m.size == 200 and np.all(np.diff(m) >= 0)
    assert read_column(tmp_path / "oracle_curve.csv", "pfa").size == 50
    thr = read_column(tmp_path / "oracle_thresholds.csv", "gamma")
    assert np.all(np.diff(thr) < 0)  # higher target, lower threshold


def test_baseline_outputs(tmp_path, sim_dir):
    rc = run("baseline", "--out", tmp_path, "--observation", sim_dir / "observation.csv", *SMALL,
             "--set", "n_perm=100", "--set", "n_mc=100")
    assert rc == EXIT_OK
    assert read_column(tmp_path / "baseline_maxima.csv", "maximum").size == 100
    assert read_column(tmp_path / "baseline_curve.csv", "true_pfa").size == 200


def test_test_verdict(tmp_path, sim_dir, cal_dir):
    rc = run("test", "--out", tmp_path, "--observation", sim_dir / "observation.csv",
             "--calibration", cal_dir / "farun.json", "--train", f"{sim_dir}/train_*.csv", *SMALL)
    assert rc == EXIT_OK
    v = read_json(tmp_path / "verdict.json")
    assert v["statistic"] > 0
    assert [t["target_pfa"] for t in v["targets"]] == [0.1, 0.5, 0.9]
    for t in v["targets"]:
        lo, hi = t["threshold_ci95"]
        assert lo <= t["threshold"] <= hi
        assert t["exceeded"] == (v["statistic"] > t["threshold"])


def test_scheme_mismatch_is_hard_error(tmp_path, sim_dir, cal_dir):
    other = tmp_path / "other"
    assert run("simulate", "--out", other, *SMALL, "--set", "sampling_seed=9") == EXIT_OK
    rc = run("test", "--out", tmp_path, "--observation", other / "observation.csv",
             "--calibration", cal_dir / "farun.json", "--train", f"{sim_dir}/train_*.csv", *SMALL)
    assert rc == EXIT_CONFIG


def test_injected_signal_detected(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--scenario", "inject", "--out", sim, "--set", "n_grid=256") == EXIT_OK
    cal = tmp_path / "cal"
    common = ["--scenario", "inject", "--set", "n_grid=256", "--train", f"{sim}/train_*.csv",
              "--observation", sim / "observation.csv"]
    assert run("calibrate", "--out", cal, *common, "--set", "B=5", "--set", "b=100", "--set", "marginal_draws=10") == 0
    assert run("test", "--out", tmp_path / "v", *common, "--calibration", cal / "farun.json") == EXIT_OK
    v = read_json(tmp_path / "v" / "verdict.json")
    assert v["argmax_frequency"] == pytest.approx(0.125)
    assert v["targets"][0]["exceeded"]


def test_sweep(tmp_path, sim_dir):
    rc = run("sweep", "--out", tmp_path, "--train", f"{sim_dir}/train_*.csv",
             "--observation", sim_dir / "observation.csv", *SMALL,
             "--set", "sweep_b=[10, 40]", "--set", "sweep_B=[3]", "--set", "gamma_ref=10.0")
    assert rc == EXIT_OK
    variants = open(tmp_path / "sweep.csv").read().splitlines()[2:]
    assert [r.split(",")[0] for r in variants] == ["b0", "b0", "bstar"]  # no GEV below b=20
    cost = read_column(tmp_path / "sweep.csv", "simulated_series")
    assert cost[0] < cost[1]


def test_bstar_small_b_exit_code(tmp_path, sim_dir):
    rc = run("calibrate", "--out", tmp_path, "--train", f"{sim_dir}/train_*.csv", "--variant", "bstar", "--set", "b=10")
    assert rc == EXIT_CONFIG


def test_unknown_key_exit_code(tmp_path):
    assert run("simulate", "--out", tmp_path, "--set", "nonsense=1") == EXIT_CONFIG


def test_off_grid_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x\n0,1\n0.5,1\n1,2\n")
    assert run("baseline", "--out", tmp_path, "--observation", bad) == EXIT_IO


def test_missing_file_exit_code(tmp_path):
    assert run("calibrate", "--out", tmp_path, "--train", tmp_path / "nope_*.csv") == EXIT_IO
    assert run("baseline", "--out", tmp_path, "--observation", tmp_path / "nope.csv") == EXIT_IO


def test_fit_failure_exit_code(tmp_path):
    # every 10th instant only: lag 1 never observed, the AR fit cannot proceed
    for ell in range(3):
        rows = "\n".join(f"{t},{float(v)!r}" for t, v in zip(range(0, 500, 10), np.random.default_rng(ell).standard_normal(50)))
        (tmp_path / f"train_{ell}.csv").write_text("t,x\n" + rows + "\n")
    rc = run("calibrate", "--out", tmp_path / "o", "--train", f"{tmp_path}/train_*.csv",
             "--set", "L=3", "--set", "max_order=3", "--set", "B=1", "--set", "b=1")
    assert rc == EXIT_NUMERICAL


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_grid: 128\nn_keep: 30\nL: 2\nseed: 1\n")
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o", "--seed", 5) == EXIT_OK
    meta = first_line(tmp_path / "o" / "observation.csv")
    assert meta["seed"] == 5 and meta["config"]["n_grid"] == 128
    assert len(list((tmp_path / "o").glob("train_*.csv"))) == 2
