"""Command-line pipeline: ingest, simulate, fit, evaluate and plotdata.

Every command writes ``manifest.json`` into its output directory before any
result file, then rewrites it with the results once the run finishes.
Exit codes: 0 success, 2 bad config or input, 3 simulation failure,
4 fit failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as dt
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import FitParameters, FixedRates, PopulationConfig
from .fitting import (
    LM_SETTINGS,
    SERIES_KINDS,
    TABLE_I_FITTED,
    TABLE_I_SPECS,
    FitError,
    ModelContext,
    ObservedSeries,
    ParamSpec,
    fit,
    params_from_values,
)
from .ingest import (
    clean_cumulative,
    parse_jhu_timeseries,
    read_vaccination_csv,
    weekly_to_daily_vaccination,
)
from .integrate import COLUMNS, IntegrationError, default_initial_state, simulate
from .metrics import evaluate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SIMULATION = 3
EXIT_FIT = 4

DEFAULT_START = "2020-01-22"

DEFAULTS = {
    "population": {"n": 1.38e9, "beds_0": None},
    "rates": {
        "sigma": 0.2,
        "gamma": 1.0 / 9.0,
        "days_i_to_c": 12.0,
        "days_c_to_d": 7.5,
        "days_c_to_r": 6.5,
        "rsus": 0.01,
        "immunity_lag_days": 30,
    },
    "parameters": dict(TABLE_I_FITTED),
    "specs": [
        {"name": s.name, "initial_value": s.initial_value, "min": s.min, "max": s.max, "vary": s.vary}
        for s in TABLE_I_SPECS
    ],
    "data": {"deaths": None, "confirmed": None, "vaccination": None},
    "country": "India",
    "target": "cumulative_deaths",
    "start_date": None,
    "n_days": None,
    "horizon_days": 585,
    "substeps": 4,
    "seed_exposed": 1.0,
    "method": "trf",
    "jacobian": None,
    "out": "seirwave_out",
}


class InputError(ValueError):
    """Bad configuration or unreadable input; maps to exit code 2."""


# --------------------------------------------------------------------------
# config


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise InputError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and key != "parameters":
            if not isinstance(val, dict):
                raise InputError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], val, f"{where}{key}.")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path, flags: dict) -> dict:
    """Resolve flags > config file > defaults.

    Data paths in a config file are relative to that file; the output
    directory and flag paths are relative to the working directory.
    """
    cfg = copy.deepcopy(DEFAULTS)
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise InputError("config must be a JSON object")
        cfg = _merge(cfg, user)
        base = path.resolve().parent
    for key, val in flags.items():
        if val is None:
            continue
        if key in ("deaths", "confirmed", "vaccination"):
            cfg["data"][key] = str(Path(val).resolve())
        else:
            cfg[key] = val
    for key, val in cfg["data"].items():
        if val is not None:
            p = Path(val)
            cfg["data"][key] = str(p if p.is_absolute() else (base / p).resolve())
    cfg["out"] = str(Path(cfg["out"]).resolve())
    return cfg


def _check_config(cfg: dict, need_data: tuple = ()):
    for key in need_data:
        if cfg["data"][key] is None:
            raise InputError(f"config needs data.{key}")
    for key, val in cfg["data"].items():
        if val is not None and not Path(val).is_file():
            raise InputError(f"data file not found: {val}")
    if cfg["target"] not in SERIES_KINDS:
        raise InputError(f"target must be one of {SERIES_KINDS}")
    if not isinstance(cfg["substeps"], int) or cfg["substeps"] < 1:
        raise InputError("substeps must be a positive integer")
    if not isinstance(cfg["horizon_days"], int) or cfg["horizon_days"] < 1:
        raise InputError("horizon_days must be a positive integer")
    if cfg["n_days"] is not None and (not isinstance(cfg["n_days"], int) or cfg["n_days"] < 2):
        raise InputError("n_days must be an integer >= 2")
    if not float(cfg["seed_exposed"]) >= 0:
        raise InputError("seed_exposed must be non-negative")
    if cfg["method"] not in ("trf", "lm"):
        raise InputError("method must be 'trf' or 'lm'")
    if cfg["jacobian"] not in (None, "sensitivity", "fd"):
        raise InputError("jacobian must be 'sensitivity' or 'fd'")
    try:
        _specs(cfg)
        _rates(cfg)
        _population(cfg)
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"invalid config: {exc}") from None


def _rates(cfg) -> FixedRates:
    return FixedRates(**cfg["rates"])


def _population(cfg) -> PopulationConfig:
    return PopulationConfig(**cfg["population"])


def _specs(cfg) -> list:
    return [ParamSpec(**s) for s in cfg["specs"]]


def _params(cfg) -> FitParameters:
    try:
        return params_from_values({k: float(v) for k, v in cfg["parameters"].items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid parameters: {exc}") from None


def _parse_date(text, what):
    try:
        return dt.date.fromisoformat(text)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be an ISO date, got {text!r}") from None


def _context(cfg, vacc=None) -> ModelContext:
    pop = _population(cfg)
    y0 = default_initial_state(pop, float(cfg["seed_exposed"]))
    return ModelContext(rates=_rates(cfg), pop=pop, y0=y0, vacc=vacc, substeps_per_day=cfg["substeps"])


def _vaccination(cfg, origin: dt.date):
    path = cfg["data"]["vaccination"]
    if path is None:
        return None
    try:
        records = read_vaccination_csv(Path(path).read_text(encoding="utf-8"))
        if records and records[0][0] < origin:
            raise ValueError(f"data starts before day 0 ({origin})")
        return weekly_to_daily_vaccination(records, cfg["rates"]["immunity_lag_days"], origin=origin)
    except (ValueError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="")


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    _write_text(path, buf.getvalue())


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Output directory plus the manifest that describes it."""

    def __init__(self, command: str, cfg: dict, inputs=()):
        self.out = Path(cfg["out"])
        self.manifest = {
            "tool": "seirwave",
            "version": __version__,
            "command": command,
            "config": cfg,
            "resolved_defaults": {
                "sigma": cfg["rates"]["sigma"],
                "gamma": cfg["rates"]["gamma"],
                "beds_0": _population(cfg).beds_0,
                "substeps_per_day": cfg["substeps"],
                "seed_exposed": float(cfg["seed_exposed"]),
                "optimizer": dict(LM_SETTINGS),
            },
            "inputs": {str(p): _sha256(p) for p in inputs if p is not None},
            "status": "started",
        }

    def start(self):
        self.out.mkdir(parents=True, exist_ok=True)
        self._flush()

    def finish(self, outputs, **results):
        self.manifest["status"] = "completed"
        self.manifest["outputs"] = sorted(outputs)
        self.manifest.update(results)
        self._flush()

    def fail(self, message):
        self.manifest["status"] = "failed"
        self.manifest["error"] = message
        self._flush()

    def _flush(self):
        _write_text(self.out / "manifest.json", dumps(self.manifest))


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg) -> int:
    _check_config(cfg)
    params = _params(cfg)
    start = _parse_date(cfg["start_date"] or DEFAULT_START, "start_date")
    vacc = _vaccination(cfg, start)
    run = Run("simulate", cfg, [cfg["data"]["vaccination"]])
    run.start()
    ctx = _context(cfg, vacc)
    try:
        traj = simulate(params, ctx.rates, ctx.pop, vacc=vacc, y0=ctx.y0,
                        horizon_days=cfg["horizon_days"], substeps_per_day=cfg["substeps"],
                        start_date=start)
    except IntegrationError as exc:
        run.fail(str(exc))
        raise
    daily = traj.daily_deaths
    rows = []
    for k, d in enumerate(traj.dates()):
        rows.append([int(traj.t[k]), d.isoformat(), *traj.states[k], daily[k],
                     traj.r0[k], traj.beta[k], traj.beds[k]])
    _write_csv(run.out / "trajectory.csv",
               ["day", "date", *COLUMNS, "daily_deaths", "R0", "beta", "beds"], rows)
    run.finish(["trajectory.csv"], summary={
        "final_deaths": float(traj.d[-1]),
        "peak_daily_deaths": float(daily.max()),
        "peak_day": int(np.argmax(daily)),
    })
    return EXIT_OK


def _observed(cfg):
    kind = cfg["target"]
    path = cfg["data"]["confirmed" if kind == "cumulative_confirmed" else "deaths"]
    try:
        series = parse_jhu_timeseries(Path(path).read_text(encoding="utf-8"), cfg["country"])
    except (ValueError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    series, n_adjusted = clean_cumulative(series)
    if cfg["start_date"] is not None:
        try:
            series = series.since(_parse_date(cfg["start_date"], "start_date"))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if cfg["n_days"] is not None:
        if cfg["n_days"] > len(series):
            raise InputError(f"n_days={cfg['n_days']} exceeds the {len(series)} days available")
        series = series.truncate(cfg["n_days"])
    values = series.daily() if kind == "daily_deaths" else series.values
    try:
        observed = ObservedSeries(values, kind, series.start_date)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return observed, series, n_adjusted, path


def cmd_fit(cfg) -> int:
    need = ("confirmed",) if cfg["target"] == "cumulative_confirmed" else ("deaths",)
    _check_config(cfg, need)
    observed, series, n_adjusted, path = _observed(cfg)
    vacc = _vaccination(cfg, series.start_date)
    run = Run("fit", cfg, [path, cfg["data"]["vaccination"]])
    run.start()
    ctx = _context(cfg, vacc)
    try:
        result = fit(_specs(cfg), observed, ctx, method=cfg["method"], jacobian=cfg["jacobian"])
    except FitError as exc:
        run.fail(str(exc))
        raise
    report = evaluate(observed.values, result.model, result.n_varys)
    fit_doc = result.to_dict()
    fit_doc["observed_start_date"] = series.start_date.isoformat()
    fit_doc["country"] = cfg["country"]
    _write_text(run.out / "fit.json", dumps(fit_doc))
    _write_text(run.out / "metrics.json", dumps(report.to_dict()))
    rows = [[k, d.isoformat(), float(o), float(m)]
            for k, (d, o, m) in enumerate(zip(series.dates(), observed.values, result.model))]
    _write_csv(run.out / "fitted_vs_observed.csv", ["day", "date", "observed", "model"], rows)
    run.finish(["fit.json", "fitted_vs_observed.csv", "metrics.json"],
               fit=fit_doc, metrics=report.to_dict(),
               metrics_series={"kind": observed.kind, "scope": "fitted window"},
               cleaning={"adjusted_points": n_adjusted})
    return EXIT_OK


def _read_column(path, column=None) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {path}")
    rows = [r for r in csv.reader(io.StringIO(p.read_text(encoding="utf-8"))) if r]
    if not rows:
        raise InputError(f"{path} is empty")
    header = None
    try:
        [float(c) for c in rows[0] if c.strip()]
    except ValueError:
        header, rows = rows[0], rows[1:]
    if column is None:
        idx = -1
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        raise InputError(f"{path} has no column {column!r}")
    try:
        return np.array([float(r[idx]) for r in rows])
    except (ValueError, IndexError):
        raise InputError(f"{path} has non-numeric or missing values") from None


def cmd_evaluate(cfg, observed_path, predicted_path, n_varys, column=None) -> int:
    y = _read_column(observed_path, column)
    yhat = _read_column(predicted_path, column)
    try:
        report = evaluate(y, yhat, n_varys)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    run = Run("evaluate", cfg, [observed_path, predicted_path])
    run.start()
    _write_text(run.out / "metrics.json", dumps(report.to_dict()))
    _write_text(run.out / "metrics.csv", report.to_csv())
    run.finish(["metrics.csv", "metrics.json"], metrics=report.to_dict(), n_varys=n_varys)
    return EXIT_OK


# -- plotdata --


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.3g}"
    return f"{v:g}"


def render_svg(days, series: dict, title="", x_label="day", y_label="value",
               width=800, height=480) -> str:
    """Deterministic multi-series line chart."""
    left, right, top, bottom = 80, 170, 40, 60
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = float(min(days)), float(max(days))
    allv = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    y0, y1 = float(allv.min()), float(allv.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for j in range(5):
        xv = x0 + (x1 - x0) * j / 4
        yv = y0 + (y1 - y0) * j / 4
        out.append(f'<text x="{_fmt(sx(xv))}" y="{top + ph + 18}" text-anchor="middle">{_nice_label(xv)}</text>')
        out.append(f'<text x="{left - 6}" y="{_fmt(sy(yv) + 4)}" text-anchor="end">{_nice_label(yv)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 15}" text-anchor="middle">{_esc(x_label)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">{_esc(y_label)}</text>')
    for n, (name, vals) in enumerate(series.items()):
        color = _PALETTE[n % len(_PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(days, vals))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 10 + 18 * n
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def cmd_plotdata(cfg, input_path, series_names=None, svg=True) -> int:
    p = Path(input_path)
    if not p.is_file():
        raise InputError(f"file not found: {input_path}")
    rows = list(csv.reader(io.StringIO(p.read_text(encoding="utf-8"))))
    if len(rows) < 2 or "day" not in rows[0]:
        raise InputError(f"{input_path} is not a trajectory or fit output (needs a 'day' column and data rows)")
    header = rows[0]
    numeric = [h for h in header if h not in ("day", "date")]
    names = numeric if series_names is None else series_names
    if not names:
        raise InputError("no series selected")
    missing = [n for n in names if n not in header]
    if missing:
        raise InputError(f"{input_path} has no series {missing}; available: {numeric}")
    di = header.index("day")
    try:
        days = [int(r[di]) for r in rows[1:]]
        data = {n: [float(r[header.index(n)]) for r in rows[1:]] for n in names}
    except (ValueError, IndexError):
        raise InputError(f"{input_path} has malformed rows") from None
    run = Run("plotdata", cfg, [input_path])
    run.start()
    _write_csv(run.out / "plot_long.csv", ["series", "day", "value"],
               [[n, d, v] for n in names for d, v in zip(days, data[n])])
    outputs = ["plot_long.csv"]
    if svg:
        _write_text(run.out / "plot.svg", render_svg(days, data, title=p.name))
        outputs.append("plot.svg")
    run.finish(outputs, series=list(names), n_rows=len(days) * len(names))
    return EXIT_OK


def cmd_ingest(cfg) -> int:
    _check_config(cfg, ("deaths",))
    run_inputs = [cfg["data"][k] for k in ("deaths", "confirmed", "vaccination")]
    columns = {}
    cleaning = {}
    start = None
    for key in ("deaths", "confirmed"):
        path = cfg["data"][key]
        if path is None:
            continue
        try:
            s = parse_jhu_timeseries(Path(path).read_text(encoding="utf-8"), cfg["country"])
        except (ValueError, UnicodeDecodeError) as exc:
            raise InputError(f"{path}: {exc}") from None
        s, n_adj = clean_cumulative(s)
        if start is None:
            start = s.start_date
        elif s.start_date != start:
            raise InputError("deaths and confirmed files start on different dates")
        columns[f"cumulative_{key}"] = s
        cleaning[key] = n_adj
    n = min(len(s) for s in columns.values())
    vacc = _vaccination(cfg, start)
    run = Run("ingest", cfg, run_inputs)
    run.start()
    dates = columns["cumulative_deaths"].dates()[:n]
    deaths = columns["cumulative_deaths"]
    header = ["day", "date", "cumulative_deaths", "daily_deaths"]
    cols = [deaths.values[:n], deaths.daily()[:n]]
    if "cumulative_confirmed" in columns:
        header.append("cumulative_confirmed")
        cols.append(columns["cumulative_confirmed"].values[:n])
    rows = [[k, d.isoformat(), *(float(c[k]) for c in cols)] for k, d in enumerate(dates)]
    _write_csv(run.out / "observed.csv", header, rows)
    outputs = ["observed.csv"]
    if vacc is not None:
        v = vacc.effective_rates(n)
        doses = np.zeros(n)
        m = min(n, vacc.daily_doses.size)
        doses[:m] = vacc.daily_doses[:m]
        _write_csv(run.out / "vaccination_daily.csv", ["day", "date", "first_doses", "v"],
                   [[k, d.isoformat(), float(doses[k]), float(v[k])] for k, d in enumerate(dates)])
        outputs.append("vaccination_daily.csv")
    run.finish(outputs, cleaning={"adjusted_points": cleaning}, n_days=n,
               start_date=start.isoformat())
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--country", help="country name as spelled in the JHU file")
    common.add_argument("--target", choices=SERIES_KINDS, help="series to fit")
    common.add_argument("--substeps", type=int, help="RK4 substeps per day")
    common.add_argument("--seed-exposed", type=float, dest="seed_exposed",
                        help="exposed people on day 0")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--deaths", help="JHU cumulative deaths CSV")
    data.add_argument("--confirmed", help="JHU cumulative confirmed CSV")
    data.add_argument("--vaccination", help="weekly first-dose CSV (week_start,first_doses)")

    ap = argparse.ArgumentParser(prog="seirwave", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, data], help="run the model forward")
    p.add_argument("--horizon", type=int, dest="horizon_days", help="days to simulate")
    p.add_argument("--start-date", dest="start_date", help="calendar date of day 0")

    p = sub.add_parser("fit", parents=[common, data], help="calibrate to observed data")
    p.add_argument("--n-days", type=int, dest="n_days", help="observed days to use")
    p.add_argument("--start-date", dest="start_date", help="first observed date to use")
    p.add_argument("--method", choices=("trf", "lm"))
    p.add_argument("--jacobian", choices=("sensitivity", "fd"))

    p = sub.add_parser("evaluate", parents=[common], help="score a prediction")
    p.add_argument("observed")
    p.add_argument("predicted")
    p.add_argument("--n-varys", type=int, default=0, dest="n_varys")
    p.add_argument("--column", help="column to read from both files (default: last)")

    p = sub.add_parser("plotdata", parents=[common], help="long-format CSV and SVG chart")
    p.add_argument("input", help="trajectory.csv or fitted_vs_observed.csv")
    p.add_argument("--series", help="comma-separated series names (default: all)")
    p.add_argument("--no-svg", action="store_true")

    sub.add_parser("ingest", parents=[common, data], help="clean and align source data")
    return ap


_FLAG_KEYS = ("out", "country", "target", "substeps", "seed_exposed", "deaths", "confirmed",
              "vaccination", "horizon_days", "start_date", "n_days", "method", "jacobian")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: getattr(args, k) for k in _FLAG_KEYS if hasattr(args, k)}
    try:
        cfg = load_config(args.config, flags)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.observed, args.predicted, args.n_varys, args.column)
        if args.command == "plotdata":
            names = None
            if args.series is not None:
                names = [s.strip() for s in args.series.split(",") if s.strip()]
            return cmd_plotdata(cfg, args.input, names, svg=not args.no_svg)
        return cmd_ingest(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
