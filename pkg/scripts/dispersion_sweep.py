"""Dispersion of the B0 and GEV-smoothed FA estimates against compute.

For each inner sample size b, one bootstrap run supplies both estimators
(the GEV view reuses the same maxima). Compute is counted in simulated
series, so the table does not depend on the machine.

    python scripts/dispersion_sweep.py --small --out out/sweep
"""

import argparse
from pathlib import Path

import numpy as np

from pfaboot import (
    ARModel,
    BootstrapConfig,
    FrequencyGrid,
    OrderSelectionConfig,
    SamplingScheme,
    empirical_pfa,
    fa_distribution,
    make_uneven,
    mc_oracle,
    run_b0,
    simulate,
)
from pfaboot import rng as R
from pfaboot.config import FIG1_COEFFS
from pfaboot.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--small", action="store_true", help="256-point grid, 60 samples")
    ap.add_argument("--B", type=int, default=50)
    ap.add_argument("--b", type=int, nargs="+", default=[50, 100, 200, 500, 1000])
    ap.add_argument("--n-mc", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args()

    n_grid, n_keep = (256, 60) if args.small else (1024, 103)
    model = ARModel.from_coeffs(FIG1_COEFFS)
    scheme = make_uneven(n_grid, n_keep, R.stream(args.seed, R.SAMPLING))
    grid = FrequencyGrid.for_scheme(scheme)
    gen = R.stream(args.seed, R.SIMULATE, 0)
    train = [simulate(model, SamplingScheme.regular(n_grid), gen) for _ in range(20)]
    oracle = mc_oracle(model, scheme, grid, 20, args.n_mc, seed=args.seed)
    gamma = float(np.quantile(oracle, 0.9))
    truth = float(empirical_pfa(oracle, gamma, presorted=True))

    rows = []
    for b in args.b:
        cfg = BootstrapConfig(20, args.B, b, grid, OrderSelectionConfig(20), "b0", args.seed, scheme)
        run = run_b0(train, cfg, threads=args.threads)
        cost = args.B * (b * 21 + 20)
        for variant, view in (("b0", run), ("bstar", run.with_gev() if b >= 20 else None)):
            if view is None:
                continue
            s = fa_distribution(view, gamma, variant)
            rows.append([variant, b, cost, s.mean, s.std, s.mean - truth])
            print(f"b={b:5d} {variant:5s} series={cost:9d} mean={s.mean:.4f} std={s.std:.4f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"script": "dispersion_sweep", "seed": args.seed, "gamma": gamma, "oracle_pfa": truth}
    write_csv(out / "dispersion.csv", ["variant", "b", "simulated_series", "mean", "std", "bias"], rows, meta)
    print(f"wrote {out / 'dispersion.csv'}")


if __name__ == "__main__":
    main()
