"""Command-line driver: simulate, calibrate, oracle, baseline, test, sweep.

Exit codes: 0 success, 2 config / argument error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from . import rng as rngmod
from .armodel import ARModel, OrderSelectionConfig, residual_whiteness, simulate_batch
from .bootstrap import (
    B0,
    BSTAR,
    BootstrapConfig,
    baseline_oracle,
    empirical_pfa,
    fa_distribution,
    mc_oracle,
    permutation_baseline,
    run_b0,
    threshold_for,
)
from .config import SCENARIOS, ConfigError, ExperimentConfig, build_config, load_config_file, parse_override
from .errors import InvalidArgumentError, NotOnGridError, NumericalError, PfaBootError
from .sampling import SamplingScheme, TimeSeries, make_uneven
from .spectral import FrequencyGrid, averaged_periodogram, kernel_for, max_stat, periodogram, standardize

log = logging.getLogger("pfaboot")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

BASELINE_NOTE = "variance-normalized Schuster periodogram under random permutations (stand-in for GLS)"
THRESHOLD_NOTE = "even-sampling analytic thresholds not reproduced; see marginal_check.csv and bootstrap thresholds"


# ---------------------------------------------------------------- helpers


# keys that never change results stay out of the echo, so outputs compare bit-for-bit
_NOT_ECHOED = ("out", "threads")


def _meta(cfg: ExperimentConfig, command: str) -> dict:
    echo = {k: v for k, v in cfg.to_dict().items() if k not in _NOT_ECHOED}
    return {"command": command, "seed": int(cfg.seed), "config": echo}


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model(cfg: ExperimentConfig) -> ARModel:
    if cfg.fit_from_files:
        raise ConfigError("this command needs an explicit AR model (ar_coeffs), not 'fit-from-files'")
    try:
        return ARModel.from_coeffs(cfg.ar_coeffs, cfg.innovation_variance)
    except InvalidArgumentError as exc:
        raise ConfigError(f"invalid AR model: {exc}") from exc


def _on_grid(scheme: SamplingScheme, train_scheme: SamplingScheme | None) -> SamplingScheme:
    """Instants read from a file span only up to their last sample; place them on the training grid."""
    if train_scheme is None or scheme.n_grid == train_scheme.n_grid:
        return scheme
    if scheme.n_grid > train_scheme.n_grid:
        raise InvalidArgumentError("analysis instants extend past the end of the training series")
    return SamplingScheme(scheme.delta_t, train_scheme.n_grid, scheme.indices)


def _analysis_scheme(cfg: ExperimentConfig, train_scheme: SamplingScheme | None = None) -> SamplingScheme:
    """Observation file, then times file, then the uneven training scheme, then random subsampling."""
    if cfg.observation_file:
        return _on_grid(io.read_series_csv(cfg.observation_file, cfg.delta_t).scheme, train_scheme)
    if cfg.times_file:
        return _on_grid(io.read_times_csv(cfg.times_file, cfg.delta_t), train_scheme)
    n_grid = train_scheme.n_grid if train_scheme is not None else cfg.n_grid
    if train_scheme is not None and not train_scheme.is_even:
        return train_scheme
    if cfg.n_keep is None or cfg.n_keep == n_grid:
        return SamplingScheme.regular(n_grid, cfg.delta_t)
    return make_uneven(n_grid, cfg.n_keep, rngmod.stream(cfg.sampling_seed, rngmod.SAMPLING), cfg.delta_t)


def _train_files(cfg: ExperimentConfig) -> list[str]:
    given = cfg.train_files
    if not given:
        raise ConfigError("no training files given (train_files)")
    patterns = [given] if isinstance(given, str) else list(given)
    files: list[str] = []
    for p in patterns:
        hits = sorted(glob.glob(p))
        if not hits:
            raise FileNotFoundError(f"training file pattern matched nothing: {p}")
        files.extend(hits)
    return files


def _load_training(cfg: ExperimentConfig) -> list[TimeSeries]:
    train = [io.read_series_csv(f, cfg.delta_t) for f in _train_files(cfg)]
    # files may end on different last instants; align on a common grid length
    n_grid = max(s.scheme.n_grid for s in train)
    train = [TimeSeries(SamplingScheme(s.scheme.delta_t, n_grid, s.scheme.indices), s.values) for s in train]
    first = train[0].scheme
    for f, s in zip(_train_files(cfg), train):
        if s.scheme != first:
            raise InvalidArgumentError(f"{f}: sampling differs from the first training file")
    return train


def _restrict(train: list[TimeSeries], scheme: SamplingScheme) -> np.ndarray:
    """Training values at the analysis instants, shape (L, N)."""
    src = train[0].scheme
    pos = np.searchsorted(src.indices, scheme.indices)
    if np.any(pos >= src.n) or np.any(src.indices[np.minimum(pos, src.n - 1)] != scheme.indices):
        raise InvalidArgumentError("observation instants are not covered by the training series")
    return np.stack([s.values[pos] for s in train])


def _gamma_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _grid(cfg: ExperimentConfig, scheme: SamplingScheme) -> FrequencyGrid:
    return FrequencyGrid.for_scheme(scheme, cfg.oversample)


def _threads(cfg: ExperimentConfig) -> int:
    return cfg.threads or os.cpu_count() or 1


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    """Training CSVs, an observation CSV (optionally with an injected sinusoid), its periodogram."""
    model = _model(cfg)
    out = _out(cfg)
    meta = _meta(cfg, "simulate")
    scheme = _analysis_scheme(cfg)
    train_scheme = SamplingScheme.regular(scheme.n_grid, cfg.delta_t) if cfg.training_grid == "regular" else scheme
    files = {"train": []}
    for ell in range(cfg.L):
        x = simulate_batch(model, train_scheme, rngmod.stream(cfg.seed, rngmod.SIMULATE, 0, ell), 1)[0]
        path = io.write_series_csv(out / f"train_{ell:03d}.csv", TimeSeries(train_scheme, x), meta)
        files["train"].append(str(path))
    noise = simulate_batch(model, scheme, rngmod.stream(cfg.seed, rngmod.SIMULATE, 1, 0), 1)[0]
    t = scheme.times
    signal = cfg.inject_amplitude * np.sin(2 * np.pi * cfg.inject_frequency * t + cfg.inject_phase)
    obs = TimeSeries(scheme, noise + signal) if cfg.inject_amplitude else TimeSeries(scheme, noise)
    files["observation"] = str(io.write_series_csv(out / "observation.csv", obs, meta))
    grid = _grid(cfg, scheme)
    files["periodogram"] = str(io.write_periodogram_csv(out / "observation_periodogram.csv", periodogram(obs, grid), meta))
    io.write_json(out / "true_model.json", {"model": model.to_dict()}, meta)
    return files


def _marginal_check(cfg, model: ARModel, scheme: SamplingScheme, grid: FrequencyGrid, meta) -> Path:
    """Pooled standardized ordinates under the fitted model against F(2, 2L)."""
    kernel = kernel_for(scheme, grid)
    L = cfg.L
    interior = grid.frequencies < 0.5 / scheme.delta_t  # the Nyquist ordinate has 1 degree of freedom
    ratios = []
    for j in range(cfg.marginal_draws):
        X = simulate_batch(model, scheme, rngmod.stream(cfg.seed, rngmod.MARGINAL, j), L + 1)
        P = kernel(X)
        ratios.append(P[0, interior] / P[1:, interior].mean(axis=0))
    r = np.concatenate(ratios)
    levels = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99]
    f = stats.f(2, 2 * L)
    ks = stats.kstest(r, f.cdf).statistic
    rows = [(q, float(f.ppf(q)), float(np.quantile(r, q)), ks) for q in levels]
    return io.write_csv(
        Path(cfg.out) / "marginal_check.csv", ["level", "f_quantile", "empirical_quantile", "ks_pooled"], rows, meta
    )


def cmd_calibrate(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    meta = _meta(cfg, "calibrate")
    meta["note"] = THRESHOLD_NOTE
    train = _load_training(cfg)
    scheme = _analysis_scheme(cfg, train[0].scheme)
    grid = _grid(cfg, scheme)
    bcfg = BootstrapConfig(cfg.L, cfg.B, cfg.b, grid, OrderSelectionConfig(cfg.max_order), cfg.variant, cfg.seed, scheme)
    run = run_b0(train, bcfg, threads=_threads(cfg))
    files = {}
    files["maxima"] = str(io.write_maxima_csv(out / "maxima.csv", run.maxima, meta))
    files["farun"] = str(io.write_json(out / "farun.json", io.farun_to_dict(run, "maxima.csv"), meta))

    oracle = None
    if cfg.oracle_file:
        oracle = np.sort(io.read_column(cfg.oracle_file, "maximum"))
    gammas = _gamma_grid(float(run.maxima[:, 0].min()), float(run.maxima[:, -1].max()), cfg.n_gamma)
    curves = run.curves(gammas)
    rows = []
    for n, g in enumerate(gammas):
        s = fa_distribution(run, g)
        row = [run.variant, g, s.mean, s.std, s.ci95[0], s.ci95[1], curves[:, n].min(), curves[:, n].max()]
        if oracle is not None:
            row.append(empirical_pfa(oracle, g, presorted=True))
        rows.append(row)
    header = ["variant", "gamma", "mean", "std", "lo", "hi", "min", "max"] + (["oracle"] if oracle is not None else [])
    files["fa_curve"] = str(io.write_csv(out / "fa_curve.csv", header, rows, meta))

    trows = []
    for target in cfg.targets:
        s = threshold_for(run, float(target))
        trows.append([run.variant, target, s.mean, s.std, s.ci95[0], s.ci95[1]])
    files["thresholds"] = str(
        io.write_csv(out / "thresholds.csv", ["variant", "target_pfa", "mean", "std", "lo", "hi"], trows, meta)
    )

    values = np.stack([s.values for s in train])
    diag = residual_whiteness(run.first_stage, values, train[0].scheme)
    files["model"] = str(
        io.write_json(out / "first_stage_model.json", {"model": run.first_stage.to_dict(), "residual_whiteness": diag}, meta)
    )
    if scheme.is_even:
        files["marginal_check"] = str(_marginal_check(cfg, run.first_stage, scheme, grid, meta))
    return files


def cmd_oracle(cfg: ExperimentConfig) -> dict:
    model = _model(cfg)
    out = _out(cfg)
    meta = _meta(cfg, "oracle")
    scheme = _analysis_scheme(cfg)
    grid = _grid(cfg, scheme)
    maxima = mc_oracle(model, scheme, grid, cfg.L, cfg.n_mc, seed=cfg.seed)
    files = {"maxima": str(io.write_csv(out / "oracle_maxima.csv", ["maximum"], ([m] for m in maxima), meta))}
    gammas = _gamma_grid(float(maxima[0]), float(maxima[-1]), cfg.n_gamma)
    pfa = empirical_pfa(maxima, gammas, presorted=True)
    files["curve"] = str(io.write_csv(out / "oracle_curve.csv", ["gamma", "pfa"], zip(gammas, pfa), meta))
    rows = [[t, float(np.quantile(maxima, 1 - t))] for t in cfg.targets]
    files["thresholds"] = str(io.write_csv(out / "oracle_thresholds.csv", ["target_pfa", "gamma"], rows, meta))
    return files


def cmd_baseline(cfg: ExperimentConfig) -> dict:
    if not cfg.observation_file:
        raise ConfigError("baseline needs observation_file")
    out = _out(cfg)
    meta = _meta(cfg, "baseline")
    meta["note"] = BASELINE_NOTE
    obs = io.read_series_csv(cfg.observation_file, cfg.delta_t)
    grid = _grid(cfg, obs.scheme)
    maxima = permutation_baseline(obs, grid, cfg.n_perm, rngmod.stream(cfg.seed, rngmod.PERMUTE))
    files = {"maxima": str(io.write_csv(out / "baseline_maxima.csv", ["maximum"], ([m] for m in maxima), meta))}
    gammas = _gamma_grid(float(maxima[0]), float(maxima[-1]), cfg.n_gamma)
    cols = [gammas, empirical_pfa(maxima, gammas, presorted=True)]
    header = ["gamma", "pfa"]
    if not cfg.fit_from_files:
        truth = baseline_oracle(_model(cfg), obs.scheme, grid, cfg.n_mc, seed=cfg.seed)
        cols.append(empirical_pfa(truth, gammas, presorted=True))
        header.append("true_pfa")
    files["curve"] = str(io.write_csv(out / "baseline_curve.csv", header, zip(*cols), meta))
    return files


def cmd_test(cfg: ExperimentConfig) -> dict:
    if not cfg.observation_file or not cfg.calibration_file:
        raise ConfigError("test needs observation_file and calibration_file")
    out = _out(cfg)
    meta = _meta(cfg, "test")
    obs = io.read_series_csv(cfg.observation_file, cfg.delta_t)
    run = io.load_farun(cfg.calibration_file)
    if obs.scheme.n_grid <= run.scheme.n_grid:
        obs = TimeSeries(_on_grid(obs.scheme, run.scheme), obs.values)
    if obs.scheme != run.scheme:
        raise InvalidArgumentError("observation sampling does not match the calibration's analysis instants")
    train = _load_training(cfg)
    den_values = _restrict(train, obs.scheme)
    grid = run.config.grid
    den = averaged_periodogram([TimeSeries(obs.scheme, v) for v in den_values], grid)
    p = standardize(periodogram(obs, grid), den)
    stat, k = max_stat(p)
    pfa = fa_distribution(run, stat)
    verdict = {
        "statistic": stat,
        "argmax_index": k,
        "argmax_frequency": float(grid.frequencies[k]),
        "variant": run.variant,
        "pfa_of_statistic": pfa.to_dict(),
        "targets": [],
    }
    for target in cfg.targets:
        s = threshold_for(run, float(target))
        verdict["targets"].append(
            {"target_pfa": float(target), "threshold": s.mean, "threshold_ci95": list(s.ci95), "exceeded": bool(stat > s.mean)}
        )
    return {"verdict": str(io.write_json(out / "verdict.json", verdict, meta))}


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    """Dispersion of b0 and bstar FA estimates at a reference threshold over a (B, b) grid.

    Compute is reported as the number of simulated series, a hardware-free
    proxy for wall-clock time.
    """
    out = _out(cfg)
    meta = _meta(cfg, "sweep")
    train = _load_training(cfg)
    scheme = _analysis_scheme(cfg, train[0].scheme)
    grid = _grid(cfg, scheme)
    gamma_ref, truth = cfg.gamma_ref, None
    if cfg.oracle_file:
        oracle = np.sort(io.read_column(cfg.oracle_file, "maximum"))
        if gamma_ref is None:
            gamma_ref = float(np.quantile(oracle, 0.9))
        truth = float(empirical_pfa(oracle, gamma_ref, presorted=True))
    if gamma_ref is None:
        raise ConfigError("sweep needs gamma_ref or oracle_file")
    rows = []
    for B in cfg.sweep_B:
        for b in cfg.sweep_b:
            bcfg = BootstrapConfig(cfg.L, int(B), int(b), grid, OrderSelectionConfig(cfg.max_order), B0, cfg.seed, scheme)
            run = run_b0(train, bcfg, threads=_threads(cfg))
            views = [(B0, run)]
            if b >= 20:
                views.append((BSTAR, run.with_gev()))
            cost = int(B) * (int(b) * (cfg.L + 1) + cfg.L)
            for variant, r in views:
                s = fa_distribution(r, gamma_ref)
                bias = "" if truth is None else s.mean - truth
                rows.append([variant, int(B), int(b), cost, gamma_ref, s.mean, s.std, bias])
    header = ["variant", "B", "b", "simulated_series", "gamma", "mean", "std", "bias"]
    return {"sweep": str(io.write_csv(out / "sweep.csv", header, rows, meta))}


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "oracle": cmd_oracle,
    "baseline": cmd_baseline,
    "test": cmd_test,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfaboot", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="flat YAML key-value file")
    p.add_argument("--scenario", help="preset: " + ", ".join(sorted(SCENARIOS)))
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--variant", choices=[B0, BSTAR])
    p.add_argument("--train", nargs="+", dest="train_files", help="training CSV files or globs")
    p.add_argument("--observation", dest="observation_file")
    p.add_argument("--calibration", dest="calibration_file")
    p.add_argument("--oracle", dest="oracle_file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = dict(parse_override(s) for s in args.set)
        for key in ("scenario", "seed", "threads", "out", "variant", "train_files", "observation_file", "calibration_file", "oracle_file"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        cfg = build_config(file_values, overrides)
        files = COMMANDS[args.command](cfg)
    except (io.DataFormatError, NotOnGridError) as exc:
        print(f"pfaboot {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"pfaboot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"pfaboot {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, UnicodeDecodeError) as exc:
        print(f"pfaboot {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PfaBootError as exc:
        print(f"pfaboot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for name, path in files.items():
        log.info("%s: %s", name, path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
