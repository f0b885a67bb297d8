"""Estimation of single-diode parameters from production telemetry.

The estimator minimizes the mean nameplate-normalized squared mismatch
between measured and simulated DC voltage/current over a window of retained
records, using bounded L-BFGS-B with central-finite-difference gradients.
Saturation current and shunt resistance are optimized in log10 space.
Rolling re-fits warm-start each window from the previous result.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from . import baselines, sdm
from .exceptions import (ConfigError, ExtractionError, FitDegeneracyError,
                         InsufficientDataError, NumericalError)
from .preprocess import PreprocessConfig, apply_quality_pipeline
from .series import DAY, ForecastSeries, TelemetrySeries, WeatherSeries

PARAM_ORDER = sdm.PARAM_NAMES
DEFAULT_LOG_PARAMS = ("i_0_ref", "r_sh_ref")


def default_bounds(i_sc_datasheet):
    """Fitting box covering healthy to degraded crystalline-silicon modules."""
    return {
        "i_ph_ref": (0.1 * i_sc_datasheet, 2.0 * i_sc_datasheet),
        "i_0_ref": (1e-13, 1e-5),
        "r_s": (1e-4, 5.0),
        "r_sh_ref": (10.0, 1e5),
        "n_diode": (0.5, 2.5),
    }


@dataclass(frozen=True)
class FitOptions:
    """Loss normalization, bounds and optimizer settings for one system."""

    bounds: dict
    v_scale: float
    i_scale: float
    max_iterations: int = 200
    loss_tolerance: float = 1e-10
    log_space_params: tuple = DEFAULT_LOG_PARAMS
    fd_step: float = 1e-6
    alpha_isc: float = 0.0

    def __post_init__(self):
        if self.v_scale <= 0 or self.i_scale <= 0:
            raise ConfigError("loss scales must be positive")
        for name in PARAM_ORDER:
            if name not in self.bounds:
                raise ConfigError(f"bounds missing parameter {name}")
            lo, hi = self.bounds[name]
            if not lo < hi:
                raise ConfigError(f"empty bound interval for {name}")

    @classmethod
    def for_system(cls, datasheet, topo: sdm.ArrayTopology, **overrides):
        """Nameplate-normalized options: scales from the datasheet MPP."""
        return cls(bounds=default_bounds(datasheet.i_sc),
                   v_scale=datasheet.v_mp * topo.modules_per_string,
                   i_scale=datasheet.i_mp * topo.strings_in_parallel,
                   alpha_isc=datasheet.alpha_isc, **overrides)


@dataclass
class FitWindowResult:
    """Outcome of one window fit."""

    window_start: np.datetime64
    window_end: np.datetime64
    params: sdm.SdmParamsRef
    final_loss: float
    iterations: int
    converged: bool
    n_points: int
    error: str | None = None


def initial_guess(datasheet) -> sdm.SdmParamsRef:
    """Starting parameters for the first fit of a system.

    Delegates to the datasheet extraction; if that fails to converge, falls
    back to heuristic seeds (photocurrent at Isc, ideality 1.1, half the
    (Voc-Vmp)/Imp slope as series resistance, a generous shunt, and the
    saturation current solved from the open-circuit condition), clipped into
    the default fitting bounds.
    """
    try:
        return baselines.fit_desoto_from_datasheet(datasheet)
    except ExtractionError:
        pass
    bounds = default_bounds(datasheet.i_sc)
    n = 1.1
    a = n * datasheet.cells_in_series * sdm.K_BOLTZMANN * sdm.T_REF_K \
        / sdm.Q_ELEMENTARY
    i_ph = datasheet.i_sc
    r_s = 0.5 * (datasheet.v_oc - datasheet.v_mp) / datasheet.i_mp
    r_sh = 10.0 * datasheet.v_mp / datasheet.i_mp * datasheet.cells_in_series
    i_0 = max((i_ph - datasheet.v_oc / r_sh) / math.expm1(datasheet.v_oc / a),
              1e-24)
    raw = np.array([i_ph, i_0, r_s, r_sh, n])
    lo = np.array([bounds[k][0] for k in PARAM_ORDER])
    hi = np.array([bounds[k][1] for k in PARAM_ORDER])
    return sdm.SdmParamsRef.from_array(np.clip(raw, lo, hi))


def _log_mask(opts: FitOptions):
    return np.array([name in opts.log_space_params for name in PARAM_ORDER])


def _to_transformed(nat, log_mask):
    x = np.array(nat, dtype=float)
    x[..., log_mask] = np.log10(x[..., log_mask])
    return x

def _to_natural(x, log_mask):
    nat = np.array(x, dtype=float)
    nat[..., log_mask] = 10.0 ** nat[..., log_mask]
    return nat


def _loss_rows(nat, window: TelemetrySeries, topo, opts: FitOptions):
    """Mean normalized squared residual per parameter row.

    ``nat`` has shape (P, 5) in natural parameter space.  Unsolvable records
    (non-finite simulation) are skipped and counted per row.
    """
    cols = [nat[:, j:j + 1] for j in range(5)]
    v_sim, i_sim, _ = sdm.simulate_array_mpp_arrays(
        *cols, window.g_poa, window.t_module, topo, opts.alpha_isc)
    rv = (window.v_dc - v_sim) / opts.v_scale
    ri = (window.i_dc - i_sim) / opts.i_scale
    sq = rv * rv + ri * ri
    finite = np.isfinite(sq)
    skipped = sq.shape[1] - finite.sum(axis=1)
    with np.errstate(invalid="ignore"):
        total = np.where(finite, sq, 0.0).sum(axis=1)
        counts = np.maximum(finite.sum(axis=1), 1)
        out = np.where(finite.any(axis=1), total / counts, np.inf)
    return out, skipped


def loss(params: sdm.SdmParamsRef, window: TelemetrySeries,
         topo: sdm.ArrayTopology, opts: FitOptions):
    """Loss of one parameter set over a window of retained records."""
    if len(window) == 0:
        raise InsufficientDataError("empty window")
    values, skipped = _loss_rows(params.as_array()[None, :], window, topo, opts)
    if skipped[0] > 0.1 * len(window):
        raise FitDegeneracyError(
            f"{skipped[0]} of {len(window)} records unsolvable")
    return float(values[0])


def fit_window(window: TelemetrySeries, topo: sdm.ArrayTopology,
               init: sdm.SdmParamsRef, opts: FitOptions) -> FitWindowResult:
    """Fit the five parameters to one window of retained telemetry.

    Bounded quasi-Newton minimization with central finite differences in the
    transformed (log/linear) parameter space; the reported parameters are the
    best iterate seen.  ``converged`` reflects the relative-improvement stop.
    """
    if len(window) < 50:
        raise InsufficientDataError(
            f"window has {len(window)} retained records, need >= 50")
    span = window.timestamp[-1] - window.timestamp[0]
    if span < DAY:
        raise InsufficientDataError("window must span at least one day")

    log_mask = _log_mask(opts)
    lo = np.array([opts.bounds[n][0] for n in PARAM_ORDER])
    hi = np.array([opts.bounds[n][1] for n in PARAM_ORDER])
    x0 = _to_transformed(np.clip(init.as_array(), lo, hi), log_mask)
    x_lo = _to_transformed(lo, log_mask)
    x_hi = _to_transformed(hi, log_mask)

    best = {"f": np.inf, "x": x0.copy()}

    def value_and_grad(x):
        h = opts.fd_step * np.maximum(1.0, np.abs(x))
        probes = np.empty((11, 5))
        probes[0] = x
        for j in range(5):
            probes[1 + 2 * j] = x
            probes[1 + 2 * j][j] += h[j]
            probes[2 + 2 * j] = x
            probes[2 + 2 * j][j] -= h[j]
        vals, _ = _loss_rows(_to_natural(probes, log_mask), window, topo, opts)
        f = vals[0]
        with np.errstate(invalid="ignore"):
            grad = (vals[1::2] - vals[2::2]) / (2.0 * h)
        if np.isfinite(f) and f < best["f"]:
            best["f"] = f
            best["x"] = np.array(x)
        return f, grad

    f0, _ = value_and_grad(x0)
    if not np.isfinite(f0):
        raise NumericalError("non-finite loss at the initial guess")

    # stop on *relative* loss improvement below loss_tolerance; the solver's
    # own ftol has an absolute floor near zero loss and would quit too early
    state = {"f_prev": f0, "tol_stop": False}

    def on_iteration(intermediate_result):
        f = float(intermediate_result.fun)
        improved = state["f_prev"] - f
        if improved < opts.loss_tolerance * max(abs(state["f_prev"]), 1e-300):
            state["tol_stop"] = True
            raise StopIteration
        state["f_prev"] = f

    res = minimize(value_and_grad, x0, jac=True, method="L-BFGS-B",
                   bounds=list(zip(x_lo, x_hi)), callback=on_iteration,
                   options={"maxiter": opts.max_iterations,
                            "ftol": 1e-16, "gtol": 1e-16,
                            "maxcor": 20, "maxls": 50})

    x_best = best["x"] if best["f"] <= res.fun else np.asarray(res.x)
    f_best = min(best["f"], float(res.fun))
    nat = np.clip(_to_natural(x_best, log_mask), lo, hi)
    return FitWindowResult(
        window_start=window.timestamp[0], window_end=window.timestamp[-1],
        params=sdm.SdmParamsRef.from_array(nat),
        final_loss=float(f_best), iterations=int(res.nit),
        converged=bool(state["tol_stop"] or res.success), n_points=len(window))


def rolling_fit(series: TelemetrySeries, topo: sdm.ArrayTopology,
                window_length, update_period, init: sdm.SdmParamsRef,
                opts: FitOptions,
                preprocess: PreprocessConfig = PreprocessConfig(),
                warm_start=True):
    """Periodic re-fits over trailing windows.

    One result per update instant; the first window starts from ``init`` and
    later ones warm-start from the previous converged fit (unless disabled).
    Window-level failures are recorded on the result, not raised.
    """
    window_length = np.timedelta64(window_length)
    update_period = np.timedelta64(update_period)
    if len(series) < 2:
        raise InsufficientDataError("series too short for rolling fits")
    data_end = series.timestamp[-1] + series.cadence()
    t0 = series.timestamp[0]
    if data_end - t0 < window_length:
        raise InsufficientDataError("series shorter than one window")

    results = []
    current = init
    u = t0 + window_length
    while u <= data_end:
        win = series.slice_time(u - window_length, u)
        try:
            mask = apply_quality_pipeline(win, preprocess)
            retained = win.select(mask.retained)
            result = fit_window(retained, topo, current, opts)
            result = replace(result, window_start=u - window_length, window_end=u)
            if warm_start and result.converged:
                current = result.params
        except (InsufficientDataError, NumericalError) as exc:
            result = FitWindowResult(
                window_start=u - window_length, window_end=u, params=current,
                final_loss=float("nan"), iterations=0, converged=False,
                n_points=len(win), error=str(exc))
        results.append(result)
        u = u + update_period
    return results


def simulate_power(params: sdm.SdmParamsRef, weather: WeatherSeries,
                   topo: sdm.ArrayTopology, g_min=50.0, alpha_isc=0.0):
    """Array MPP power at each weather sample; zero below ``g_min``."""
    _, _, p = sdm.simulate_array_mpp_arrays(
        params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
        params.n_diode, weather.g_poa, weather.t_cell, topo, alpha_isc)
    return np.where(weather.g_poa < g_min, 0.0, p)


def predict_power(result: FitWindowResult, weather: WeatherSeries,
                  topo: sdm.ArrayTopology, g_min=50.0,
                  alpha_isc=0.0) -> ForecastSeries:
    """Power forecast from one fitted window over a weather sequence."""
    if not result.converged:
        raise ValueError("prediction requires a converged fit result")
    p = simulate_power(result.params, weather, topo, g_min, alpha_isc)
    return ForecastSeries(weather.timestamp, p, model="pvpro")
