"""Command-line entry point.

Subcommands: ``synth`` (generate a ground-truth dataset), ``fit`` (rolling
parameter estimation), ``predict`` (day-ahead power from the dynamic model),
``benchmark`` (full model comparison with studies), ``report`` (SVG charts
from a benchmark report).  Exit codes: 0 success, 2 configuration error,
3 data error, 4 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import charts, fitting, iotools, synth
from .benchmark import RunConfig, run_benchmark
from .exceptions import ConfigError, DataError, NumericalError
from .sdm import SdmParamsRef

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _load_config(args) -> RunConfig:
    try:
        raw = iotools.read_json(args.config)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.models is not None:
        raw["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    return RunConfig.from_dict(raw)


def _load_series(cfg: RunConfig, base_dir, verbose):
    if cfg.telemetry_path is None:
        raise ConfigError("configuration has no data.telemetry path")
    path = os.path.join(base_dir, cfg.telemetry_path) \
        if not os.path.isabs(cfg.telemetry_path) else cfg.telemetry_path
    mapping = None
    if cfg.mapping_path:
        mpath = os.path.join(base_dir, cfg.mapping_path) \
            if not os.path.isabs(cfg.mapping_path) else cfg.mapping_path
        mapping = iotools.read_mapping(mpath)
    series, diagnostics = iotools.read_telemetry_csv(path, mapping)
    if verbose and diagnostics:
        for line_no, msg in diagnostics:
            print(f"{path}:{line_no}: {msg}", file=sys.stderr)
    if verbose:
        print(f"loaded {len(series)} records "
              f"({len(diagnostics)} rejected)", file=sys.stderr)
    return series


def _synth_from_config(cfg: RunConfig):
    if cfg.synth is None:
        raise ConfigError("configuration has no 'synth' section")
    s = dict(cfg.synth)
    tp = s.pop("true_params", None)
    if tp is None:
        raise ConfigError("synth section needs 'true_params'")
    true_params = SdmParamsRef(**{k: float(v) for k, v in tp.items()})
    scenario_d = s.pop("scenario", {}) or {}
    trajectories = {}
    for name, spec in scenario_d.items():
        kind = spec[0]
        if kind == "linear":
            trajectories[name] = ("linear", float(spec[1]))
        elif kind == "step":
            trajectories[name] = ("step", float(spec[1]), float(spec[2]))
        else:
            raise ConfigError(f"unknown trajectory kind {kind!r}")
    scenario = synth.DegradationScenario(trajectories)
    noise_v = float(s.pop("noise_v", 0.005))
    noise_i = float(s.pop("noise_i", 0.005))
    alpha_isc = float(s.pop("alpha_isc",
                            cfg.datasheet.alpha_isc if cfg.datasheet else 0.0))
    profile = synth.WeatherProfile(seed=cfg.seed,
                                   **{k: (tuple(v) if k == "cloud_days" else v)
                                      for k, v in s.items()})
    return synth.generate_dataset(true_params, cfg.topology, profile,
                                  scenario, noise_v, noise_i, alpha_isc)


def cmd_synth(args):
    cfg = _load_config(args)
    series, log = _synth_from_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    iotools.write_telemetry_csv(os.path.join(args.out, "telemetry.csv"), series)
    iotools.write_json(os.path.join(args.out, "ground_truth.json"),
                       log.to_json_dict())
    if args.verbose:
        print(f"wrote {len(series)} records to {args.out}/telemetry.csv",
              file=sys.stderr)
    return EXIT_OK


def cmd_fit(args):
    cfg = _load_config(args)
    series = _load_series(cfg, os.path.dirname(args.config), args.verbose)
    init = fitting.initial_guess(cfg.datasheet)
    results = fitting.rolling_fit(
        series, cfg.topology,
        np.timedelta64(int(cfg.window_days * 86400), "s"),
        np.timedelta64(int(cfg.update_days * 86400), "s"),
        init, cfg.fit_options(), preprocess=cfg.preprocess,
        warm_start=cfg.warm_start)
    os.makedirs(args.out, exist_ok=True)
    iotools.write_trajectory_csv(os.path.join(args.out, "trajectory.csv"),
                                 results)
    if args.verbose:
        ok = sum(r.converged for r in results)
        print(f"{ok}/{len(results)} windows converged", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args):
    cfg = _load_config(args)
    series = _load_series(cfg, os.path.dirname(args.config), args.verbose)
    pvpro_cfg = RunConfig.from_dict({**cfg.raw, "models": ["pvpro"],
                                     "studies": {}})
    report = run_benchmark(pvpro_cfg, series)
    os.makedirs(args.out, exist_ok=True)
    iotools.write_forecast_csv(os.path.join(args.out, "forecast.csv"),
                               report.forecasts)
    return EXIT_OK


def cmd_benchmark(args):
    cfg = _load_config(args)
    series = _load_series(cfg, os.path.dirname(args.config), args.verbose)
    report = run_benchmark(cfg, series)
    os.makedirs(args.out, exist_ok=True)
    iotools.write_json(os.path.join(args.out, "report.json"),
                       report.to_json_dict())
    iotools.write_forecast_csv(os.path.join(args.out, "forecasts.csv"),
                               report.forecasts)
    iotools.write_trajectory_csv(os.path.join(args.out, "trajectory.csv"),
                                 report.trajectory)
    _write_metric_csvs(args.out, report)
    if args.verbose:
        for name, agg in report.aggregate.items():
            if agg:
                print(f"{name}: nMAE {agg['nmae']:.4%} "
                      f"nRMSE {agg['nrmse']:.4%}", file=sys.stderr)
    return EXIT_OK


def _write_metric_csvs(out_dir, report):
    import csv
    with open(os.path.join(out_dir, "daily_metrics.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "model", "n_samples", "nmae", "nrmse",
                         "nbe_mean", "skipped"])
        for model, rows in report.daily.items():
            for row in rows:
                if "skipped" in row:
                    writer.writerow([row["day"], model, "", "", "", "",
                                     row["skipped"]])
                else:
                    writer.writerow([
                        row["day"], model, row["n_samples"],
                        iotools.format_float(row["nmae"]),
                        iotools.format_float(row["nrmse"]),
                        iotools.format_float(row["nbe_mean"]), ""])
    with open(os.path.join(out_dir, "aggregate_metrics.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "n_samples", "nmae", "nrmse", "nbe_mean"])
        for model, agg in report.aggregate.items():
            if agg is None:
                writer.writerow([model, 0, "", "", ""])
            else:
                writer.writerow([model, agg["n_samples"],
                                 iotools.format_float(agg["nmae"]),
                                 iotools.format_float(agg["nrmse"]),
                                 iotools.format_float(agg["nbe_mean"])])


def cmd_report(args):
    report_path = args.report or os.path.join(args.out, "report.json")
    try:
        doc = iotools.read_json(report_path)
    except FileNotFoundError as exc:
        raise DataError(f"report not found: {exc}") from exc
    os.makedirs(args.out, exist_ok=True)

    daily_nmae = {}
    day_labels = None
    for model, rows in sorted(doc.get("daily", {}).items()):
        days = [r["day"] for r in rows]
        if day_labels is None or len(days) > len(day_labels):
            day_labels = days
        daily_nmae[model] = [r.get("nmae", float("nan")) for r in rows]
    if daily_nmae:
        svg = charts.line_chart(daily_nmae, "Daily day-ahead nMAE",
                                "nMAE (fraction of nominal)",
                                x_labels=day_labels)
        with open(os.path.join(args.out, "daily_nmae.svg"), "w",
                  encoding="utf-8") as fh:
            fh.write(svg)

    nbe = {model: agg["nbe_series"]
           for model, agg in sorted((doc.get("aggregate") or {}).items())
           if agg and "nbe_series" in agg}
    if nbe:
        svg = charts.histogram(nbe, "Distribution of normalized bias error",
                               "nBE (fraction of nominal)")
        with open(os.path.join(args.out, "nbe_histogram.svg"), "w",
                  encoding="utf-8") as fh:
            fh.write(svg)

    sweep = (doc.get("studies") or {}).get("sweep")
    if sweep:
        for feature, data in sorted(sweep.items()):
            svg = charts.line_chart(
                {name: curve for name, curve in sorted(data["curves"].items())},
                f"Predicted power vs {feature}", "power (W)",
                x_values=data["grid"])
            with open(os.path.join(args.out, f"sweep_{feature}.svg"), "w",
                      encoding="utf-8") as fh:
                fh.write(svg)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pvprof",
        description="Single-diode PV modeling, day-ahead power conversion "
                    "and forecast benchmarking")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("synth", cmd_synth), ("fit", cmd_fit),
                     ("predict", cmd_predict), ("benchmark", cmd_benchmark),
                     ("report", cmd_report)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "report"),
                       help="path to the JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--models", default=None,
                       help="comma-separated roster override")
        p.add_argument("--verbose", action="store_true")
        if name == "report":
            p.add_argument("--report", default=None,
                           help="path to report.json (default: <out>/report.json)")
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
