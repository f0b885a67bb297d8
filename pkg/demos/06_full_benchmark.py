"""The full benchmark pipeline, end to end through the CLI entry points.

Builds a run configuration, generates a month of synthetic telemetry with a
step fault, benchmarks the whole model roster day by day with studies on,
and renders the SVG report charts -- the same flow as:

    pvprof synth     --config config.json --out out/
    pvprof benchmark --config config.json --out out/
    pvprof report    --config config.json --out out/
"""

import json
import os

from pvprof.cli import main

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "output", "benchmark")
os.makedirs(OUT, exist_ok=True)

config = {
    # resolved relative to the config file's directory (demos/output/)
    "data": {"telemetry": "benchmark/telemetry.csv"},
    "system": {
        "topology": {"cells_in_series": 72, "modules_per_string": 12,
                     "strings_in_parallel": 8},
        "datasheet": {"v_oc": 49.173233960313716, "i_sc": 9.491694765844741,
                      "v_mp": 40.03260387410554, "i_mp": 8.906280334902181,
                      "alpha_isc": 0.004, "beta_voc": -0.17644040663146326,
                      "cells_in_series": 72},
    },
    "models": ["pvpro", "smart_persistence", "naive_persistence",
               "nominal", "lr", "kr"],
    "regressors": {"lambda_grid": [1e-3, 1e-1], "gamma_grid": [0.5, 2.0],
                   "training_lengths_days": [3, 7]},
    "studies": {"seasonal": True, "weather_cases": True, "sweep": True,
                "training_length": True},
    "seed": 314,
    "synth": {
        "days": 30, "cloud_days": [3, 8, 14, 15, 22, 27], "cloud_depth": 0.55,
        "true_params": {"i_ph_ref": 9.5, "i_0_ref": 3e-10, "r_s": 0.35,
                        "r_sh_ref": 400.0, "n_diode": 1.1},
        "scenario": {"i_ph_ref": ["step", 20, -0.12]},
        "alpha_isc": 0.004,
    },
}
cfg_path = os.path.join(HERE, "output", "benchmark_config.json")
with open(cfg_path, "w") as fh:
    json.dump(config, fh, indent=2)

for argv in (["synth", "--config", cfg_path, "--out", OUT],
             ["benchmark", "--config", cfg_path, "--out", OUT, "--verbose"],
             ["report", "--config", cfg_path, "--out", OUT]):
    code = main(argv)
    assert code == 0, f"{argv[0]} exited with {code}"

report = json.load(open(os.path.join(OUT, "report.json")))
print("\naggregate nMAE over the evaluation span:")
for model, agg in sorted(report["aggregate"].items()):
    if agg:
        print(f"  {model:>18}: {agg['nmae']:.3%}  "
              f"(nBE>10% density {agg['exceedance']['0.1']:.2%})")
cv = (report["studies"].get("weather_cases") or {}).get("cv_of_cases", {})
if cv:
    print("weather-case CV (nMAE):",
          {m: round(v["nmae"], 3) for m, v in sorted(cv.items())})
print("\ncharts and tables in", OUT)
