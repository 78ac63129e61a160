"""CSV / JSON readers and writers.

CSV files may start with ``#`` metadata lines; the first other line is the
header. Floats are written with ``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .armodel import ARModel, OrderSelectionConfig
from .bootstrap import BootstrapConfig, FaRun
from .errors import InvalidArgumentError
from .gev import FitReport, GEVParams
from .sampling import SamplingScheme, TimeSeries, validate_on_grid
from .spectral import FrequencyGrid, Periodogram


class DataFormatError(InvalidArgumentError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def meta_line(meta: dict | None) -> str:
    return "# " + json.dumps({"pfaboot": __version__, **(meta or {})}, sort_keys=True, separators=(",", ":"))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(meta_line(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]], int]:
    """Return ``(header, rows, header_line_number)``."""
    with open(path, newline="") as fh:
        lines = [(n, line) for n, line in enumerate(fh, start=1) if line.strip() and not line.startswith("#")]
    if not lines:
        raise DataFormatError(f"{path}: no header row")
    reader = csv.reader(line for _, line in lines)
    rows = list(reader)
    return [h.strip() for h in rows[0]], rows[1:], lines[0][0]


def read_series_csv(path, delta_t: float = 1.0) -> TimeSeries:
    """Ingest a ``t,x`` CSV; instants must sit on the ``delta_t`` grid."""
    header, rows, line0 = read_csv(path)
    if header[:2] != ["t", "x"]:
        raise DataFormatError(f"{path}:{line0}: expected header 't,x', got {','.join(header)}")
    t = np.empty(len(rows))
    x = np.empty(len(rows))
    for n, row in enumerate(rows):
        try:
            t[n], x[n] = float(row[0]), float(row[1])
        except (ValueError, IndexError) as exc:
            raise DataFormatError(f"{path}: data row {n + 1}: {exc}") from exc
    try:
        return TimeSeries(validate_on_grid(t, delta_t), x)
    except InvalidArgumentError as exc:
        exc.args = (f"{path}: {exc}",)
        raise


def write_series_csv(path, ts: TimeSeries, meta: dict | None = None) -> Path:
    return write_csv(path, ["t", "x"], zip(ts.times, ts.values), meta)


def read_times_csv(path, delta_t: float = 1.0) -> SamplingScheme:
    header, rows, _ = read_csv(path)
    if header[0] != "t":
        raise DataFormatError(f"{path}: first column must be 't'")
    return validate_on_grid([float(r[0]) for r in rows], delta_t)


def write_periodogram_csv(path, p: Periodogram, meta: dict | None = None) -> Path:
    return write_csv(path, ["nu", "ordinate"], zip(p.frequencies, p.ordinates), meta)


def read_column(path, name: str) -> np.ndarray:
    header, rows, _ = read_csv(path)
    if name not in header:
        raise DataFormatError(f"{path}: no column {name!r}")
    j = header.index(name)
    return np.array([float(r[j]) for r in rows])


def write_json(path, obj: dict, meta: dict | None = None) -> Path:
    path = Path(path)
    payload = {"meta": {"pfaboot": __version__, **(meta or {})}, **obj}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_maxima_csv(path, maxima: np.ndarray, meta: dict | None = None) -> Path:
    """One row per replicate: ``replicate, m_1, ..., m_b``."""
    b = maxima.shape[1]
    header = ["replicate"] + [f"m{j + 1}" for j in range(b)]
    return write_csv(path, header, ([i, *row] for i, row in enumerate(maxima)), meta)


def read_maxima_csv(path) -> np.ndarray:
    _, rows, _ = read_csv(path)
    return np.array([[float(v) for v in r[1:]] for r in rows])


def farun_to_dict(run: FaRun, maxima_file: str) -> dict:
    d = {
        "config": run.config.to_dict(),
        "variant": run.variant,
        "scheme": scheme_to_dict(run.scheme),
        "training_scheme": scheme_to_dict(run.training_scheme),
        "first_stage": run.first_stage.to_dict(),
        "replicate_models": [m.to_dict() for m in run.models],
        "maxima_file": maxima_file,
        "frequencies": [float(f) for f in run.config.grid.frequencies],
    }
    if run.gev is not None:
        d["gev"] = [
            None if g is None else {**g.to_dict(), **(r.to_dict() if r else {})}
            for g, r in zip(run.gev, run.gev_reports)
        ]
    return d


def scheme_to_dict(s: SamplingScheme) -> dict:
    return {"delta_t": s.delta_t, "n_grid": s.n_grid, "indices": [int(i) for i in s.indices]}


def scheme_from_dict(d: dict) -> SamplingScheme:
    return SamplingScheme(d["delta_t"], d["n_grid"], d["indices"])


def load_farun(path) -> FaRun:
    """Rebuild a :class:`FaRun` from its JSON and the maxima CSV it references."""
    path = Path(path)
    d = read_json(path)
    c = d["config"]
    scheme = scheme_from_dict(d["scheme"])
    cfg = BootstrapConfig(
        c["L"],
        c["B"],
        c["b"],
        FrequencyGrid(d["frequencies"]),
        OrderSelectionConfig(c["max_order"], c["criterion"]),
        c["variant"],
        c["master_seed"],
        scheme,
    )
    maxima = read_maxima_csv(path.parent / d["maxima_file"])
    gev = reports = None
    if d.get("gev") is not None:
        gev = tuple(None if g is None else GEVParams(g["mu"], g["sigma"], g["xi"]) for g in d["gev"])
        reports = tuple(
            None
            if g is None
            else FitReport(g["log_likelihood"], g["iterations"], g["evaluations"], g["converged"])
            for g in d["gev"]
        )
    return FaRun(
        cfg,
        scheme,
        scheme_from_dict(d["training_scheme"]),
        ARModel.from_dict(d["first_stage"]),
        tuple(ARModel.from_dict(m) for m in d["replicate_models"]),
        maxima,
        gev,
        reports,
    )
