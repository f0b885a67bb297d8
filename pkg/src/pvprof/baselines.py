"""Comparison models for day-ahead power conversion.

Smart and naive persistence, the nominal datasheet-parameterized diode model
(five-condition extraction at standard test conditions), and closed-form
linear / RBF-kernel ridge regressors with a grid search that treats the
training-data length as a hyperparameter.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import sdm
from .exceptions import (ConfigError, DataError, ExtractionError,
                         InsufficientDataError, TrainingError)
from .series import (ForecastSeries, hour_of_day, require_aligned,
                     _as_timestamps)

_VTH_REF = sdm.K_BOLTZMANN * sdm.T_REF_K / sdm.Q_ELEMENTARY


@dataclass(frozen=True)
class Datasheet:
    """Module nameplate values at standard test conditions."""

    v_oc: float
    i_sc: float
    v_mp: float
    i_mp: float
    alpha_isc: float      # A/degC
    beta_voc: float       # V/degC
    cells_in_series: int

    def __post_init__(self):
        if not 0 < self.v_mp < self.v_oc:
            raise ValueError(f"need 0 < v_mp < v_oc, got {self.v_mp}, {self.v_oc}")
        if not 0 < self.i_mp < self.i_sc:
            raise ValueError(f"need 0 < i_mp < i_sc, got {self.i_mp}, {self.i_sc}")
        if not self.v_mp * self.i_mp < self.v_oc * self.i_sc:
            raise ValueError("MPP power must lie below v_oc * i_sc")
        if self.cells_in_series < 1:
            raise ValueError("cells_in_series must be >= 1")

    @classmethod
    def from_dict(cls, d):
        required = ("v_oc", "i_sc", "v_mp", "i_mp", "beta_voc", "cells_in_series")
        missing = [k for k in required if k not in d]
        if missing:
            raise ConfigError(f"datasheet missing fields: {', '.join(missing)}")
        try:
            return cls(v_oc=float(d["v_oc"]), i_sc=float(d["i_sc"]),
                       v_mp=float(d["v_mp"]), i_mp=float(d["i_mp"]),
                       alpha_isc=float(d.get("alpha_isc", 0.0)),
                       beta_voc=float(d["beta_voc"]),
                       cells_in_series=int(d["cells_in_series"]))
        except ValueError as exc:
            raise ConfigError(f"invalid datasheet: {exc}") from exc


def synthesize_datasheet(params: sdm.SdmParamsRef, cells_in_series,
                         alpha_isc=0.0) -> Datasheet:
    """Nameplate values a module with these parameters would carry.

    The Voc temperature coefficient is the 25->35 degC finite difference of
    the modeled open-circuit voltage.
    """
    stc = sdm.OperatingConditions(sdm.G_REF, sdm.T_REF_C)
    op25 = sdm.translate_to_operating(params, stc, cells_in_series, alpha_isc)
    op35 = sdm.translate_to_operating(params, sdm.OperatingConditions(sdm.G_REF, 35.0),
                                      cells_in_series, alpha_isc)
    mpp = sdm.find_mpp(op25)
    voc25 = sdm.open_circuit_voltage(op25)
    voc35 = sdm.open_circuit_voltage(op35)
    return Datasheet(v_oc=voc25, i_sc=sdm.short_circuit_current(op25),
                     v_mp=mpp.v, i_mp=mpp.i, alpha_isc=alpha_isc,
                     beta_voc=(voc35 - voc25) / 10.0,
                     cells_in_series=cells_in_series)


def _voc_model(i_l, i_0, r_s, r_sh, a_ref, ds: Datasheet, t_cell):
    n = a_ref / (ds.cells_in_series * _VTH_REF)
    i_ph, i_0t, _, r_sht, a_t = sdm.translate_arrays(
        i_l, i_0, r_s, r_sh, n, sdm.G_REF, t_cell, ds.cells_in_series,
        alpha_isc=ds.alpha_isc)
    return float(sdm.open_circuit_diode_voltage_arrays(i_ph, i_0t, r_sht, a_t))


def _extraction_residuals(z, ds: Datasheet):
    i_l, ln_i0, r_s, ln_rsh, a = z
    i_0 = math.exp(ln_i0)
    r_sh = math.exp(ln_rsh)
    isc, voc, vmp, imp = ds.i_sc, ds.v_oc, ds.v_mp, ds.i_mp
    f = np.empty(5)
    f[0] = (i_l - i_0 * math.expm1(isc * r_s / a) - isc * r_s / r_sh - isc) / isc
    f[1] = (i_l - i_0 * math.expm1(voc / a) - voc / r_sh) / isc
    vd = vmp + imp * r_s
    e = math.exp(min(vd / a, 600.0))
    f[2] = (i_l - i_0 * (e - 1.0) - vd / r_sh - imp) / isc
    di_dv = -(i_0 * e / a + 1.0 / r_sh) / (1.0 + i_0 * e * r_s / a + r_s / r_sh)
    f[3] = (imp + vmp * di_dv) / isc
    dvoc = (_voc_model(i_l, i_0, r_s, r_sh, a, ds, 35.0)
            - _voc_model(i_l, i_0, r_s, r_sh, a, ds, 25.0)) / 10.0
    f[4] = (dvoc - ds.beta_voc) / max(abs(ds.beta_voc), 1e-3)
    return f


def _safe_residuals(z, ds):
    # off-domain probes come back as a failed (infinite) residual
    if not (z[4] > 1e-6 and -60.0 < z[1] < 0.0 and abs(z[3]) < 40.0
            and z[2] > -1.0):
        return np.full(5, np.inf)
    try:
        with np.errstate(all="ignore"):
            return _extraction_residuals(z, ds)
    except (OverflowError, ZeroDivisionError, ValueError):
        return np.full(5, np.inf)


def _damped_newton(z0, ds, max_iterations):
    z = np.array(z0, dtype=float)
    f = _safe_residuals(z, ds)
    norm = float(np.max(np.abs(f)))
    for _ in range(max_iterations):
        if norm < 1e-11:
            return z, norm
        jac = np.empty((5, 5))
        for j in range(5):
            h = 1e-6 * max(1.0, abs(z[j]))
            zp = z.copy(); zp[j] += h
            zm = z.copy(); zm[j] -= h
            jac[:, j] = (_safe_residuals(zp, ds)
                         - _safe_residuals(zm, ds)) / (2.0 * h)
        if not np.all(np.isfinite(jac)):
            return z, norm
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return z, norm
        t = 1.0
        while t > 1e-4:
            f_try = _safe_residuals(z + t * step, ds)
            norm_try = float(np.max(np.abs(f_try)))
            if np.isfinite(norm_try) and norm_try < norm:
                z, f, norm = z + t * step, f_try, norm_try
                break
            t *= 0.5
        else:
            return z, norm
    return z, norm


def fit_desoto_from_datasheet(ds: Datasheet, max_iterations=100) -> sdm.SdmParamsRef:
    """Extract the five diode parameters from nameplate values.

    Solves the five STC conditions -- the I-V curve through (0, Isc),
    (Voc, 0) and (Vmp, Imp), zero power slope at the MPP, and the modeled
    Voc temperature coefficient matching beta_voc -- by damped Newton
    iteration from a ladder of heuristic seeds.

    Raises
    ------
    ExtractionError
        If no seed converges within ``max_iterations``, with the residual
        report of the best attempt.
    """
    rs0 = max(0.5 * (ds.v_oc - ds.v_mp) / ds.i_mp, 1e-3)
    best = None
    for n0 in (1.5, 1.1, 2.0):
        for rsh_factor in (100.0, 10.0, 1000.0):
            a0 = n0 * ds.cells_in_series * _VTH_REF
            rsh0 = rsh_factor * ds.v_mp / ds.i_mp
            i00 = max((ds.i_sc - ds.v_oc / rsh0) / math.expm1(ds.v_oc / a0), 1e-25)
            z0 = np.array([ds.i_sc, math.log(i00), rs0, math.log(rsh0), a0])
            z, norm = _damped_newton(z0, ds, max_iterations)
            if best is None or norm < best[1]:
                best = (z, norm)
            if norm < 1e-11:
                break
        if best[1] < 1e-11:
            break
    z, norm = best
    if norm >= 1e-11:
        raise ExtractionError(
            f"datasheet extraction stalled at scaled residual {norm:.3e}; "
            f"residuals {_extraction_residuals(z, ds)}")
    i_l, ln_i0, r_s, ln_rsh, a = (float(v) for v in z)
    try:
        params = sdm.SdmParamsRef(i_l, math.exp(ln_i0), r_s, math.exp(ln_rsh),
                                  a / (ds.cells_in_series * _VTH_REF))
    except ValueError as exc:
        raise ExtractionError(f"extracted parameters unphysical: {exc}") from exc

    stc = sdm.OperatingConditions(sdm.G_REF, sdm.T_REF_C)
    op = sdm.translate_to_operating(params, stc, ds.cells_in_series, ds.alpha_isc)
    isc_m = sdm.short_circuit_current(op)
    voc_m = sdm.open_circuit_voltage(op)
    pmp_m = sdm.find_mpp(op).p
    checks = (abs(isc_m - ds.i_sc) / ds.i_sc,
              abs(voc_m - ds.v_oc) / ds.v_oc,
              abs(pmp_m - ds.v_mp * ds.i_mp) / (ds.v_mp * ds.i_mp))
    if max(checks) > 1e-3:
        raise ExtractionError(
            f"extraction verification failed: Isc/Voc/Pmp relative errors {checks}")
    return params


def smart_persistence(p_hist: ForecastSeries | tuple, g_hist, g_future,
                      horizon=np.timedelta64(24, "h"),
                      g_min=50.0) -> ForecastSeries:
    """Scale the power observed one horizon ago by the irradiance ratio.

    ``p_hist`` and ``g_hist`` are (timestamps, values) pairs on the same
    axis; ``g_future`` holds the target timestamps and their irradiance.
    When the anchor sample is darker than ``g_min`` the anchor moves to the
    nearest earlier same-day sample at or above ``g_min`` (prediction is 0
    if the target is dark too, or no valid anchor exists).
    """
    ts_h, p = p_hist
    ts_g, g = g_hist
    ts_h = require_aligned(ts_h, ts_g, "power/irradiance histories")
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    ts_f, g_f = g_future
    ts_f = _as_timestamps(ts_f)
    g_f = np.asarray(g_f, dtype=float)
    horizon = np.timedelta64(horizon)

    source = ts_f - horizon
    idx = np.searchsorted(ts_h, source)
    ok = (idx < ts_h.size) & (ts_h[np.minimum(idx, ts_h.size - 1)] == source)
    if not np.all(ok):
        raise DataError("history does not contain the horizon-shifted timestamps")

    base_p = p[idx]
    base_g = g[idx]
    pred = np.zeros(ts_f.size)
    lit = base_g >= g_min
    pred[lit] = base_p[lit] * g_f[lit] / base_g[lit]
    day_of = ts_h.astype("datetime64[D]")
    for k in np.flatnonzero(~lit):
        if g_f[k] < g_min:
            continue
        j = idx[k] - 1
        src_day = source[k].astype("datetime64[D]")
        while j >= 0 and day_of[j] == src_day:
            if g[j] >= g_min:
                pred[k] = p[j] * g_f[k] / g[j]
                break
            j -= 1
    return ForecastSeries(ts_f, pred, model="smart_persistence")


def naive_persistence(p_hist, target_timestamps,
                      horizon=np.timedelta64(24, "h")) -> ForecastSeries:
    """Repeat the power observed one horizon earlier."""
    ts_h, p = p_hist
    ts_h = _as_timestamps(ts_h)
    p = np.asarray(p, dtype=float)
    ts_f = _as_timestamps(target_timestamps)
    source = ts_f - np.timedelta64(horizon)
    idx = np.searchsorted(ts_h, source)
    ok = (idx < ts_h.size) & (ts_h[np.minimum(idx, ts_h.size - 1)] == source)
    if not np.all(ok):
        raise DataError("history does not contain the horizon-shifted timestamps")
    return ForecastSeries(ts_f, p[idx], model="naive_persistence")


@dataclass(frozen=True)
class FeatureVector:
    """Regressor inputs: irradiance, module temperature, normalized hour."""

    g_poa: float
    t_module: float
    hod: float    # hour of day / 24, in [0, 1)

    def __post_init__(self):
        if not 0.0 <= self.hod < 1.0:
            raise ValueError(f"hod must lie in [0, 1), got {self.hod}")

    def as_array(self):
        return np.array([self.g_poa, self.t_module, self.hod])


def feature_matrix(timestamps, g_poa, t_module):
    """(n, 3) matrix of [g_poa, t_module, hour/24] rows."""
    hod = hour_of_day(timestamps) / 24.0
    return np.column_stack([np.asarray(g_poa, dtype=float),
                            np.asarray(t_module, dtype=float), hod])


@dataclass
class RegressorModel:
    family: str
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    hyperparams: dict
    weights: np.ndarray | None = None      # linear family
    dual_coef: np.ndarray | None = None    # kernel family
    x_train: np.ndarray | None = None      # standardized training inputs

    def to_json_dict(self):
        d = {"family": self.family, "x_mean": self.x_mean.tolist(),
             "x_std": self.x_std.tolist(), "y_mean": self.y_mean,
             "hyperparams": dict(self.hyperparams)}
        if self.weights is not None:
            d["weights"] = self.weights.tolist()
        if self.dual_coef is not None:
            d["dual_coef"] = self.dual_coef.tolist()
            d["x_train"] = self.x_train.tolist()
        return d


def train_regressor(family, features, targets, hyperparams=None) -> RegressorModel:
    """Closed-form ridge fit on standardized features.

    ``linear`` solves the 3x3 normal equations with an unpenalized intercept;
    ``kernel_ridge`` solves the dual system with an RBF kernel
    exp(-gamma * ||x - x'||^2).
    """
    hyperparams = dict(hyperparams or {})
    lam = float(hyperparams.setdefault("lam", 1e-3))
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("features/targets shape mismatch")
    if X.shape[0] < 20:
        raise InsufficientDataError(
            f"regressor training needs >= 20 pairs, have {X.shape[0]}")
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    if np.any(x_std <= 1e-12 * (np.abs(x_mean) + 1.0)):
        raise TrainingError("constant feature column")
    Xs = (X - x_mean) / x_std
    y_mean = float(y.mean())
    yc = y - y_mean

    if family == "linear":
        A = Xs.T @ Xs + lam * np.eye(Xs.shape[1])
        try:
            w = np.linalg.solve(A, Xs.T @ yc)
        except np.linalg.LinAlgError as exc:
            raise TrainingError(f"singular normal equations: {exc}") from exc
        return RegressorModel("linear", x_mean, x_std, y_mean,
                              hyperparams, weights=w)
    if family == "kernel_ridge":
        gamma = float(hyperparams.setdefault("gamma", 1.0))
        K = np.exp(-gamma * cdist(Xs, Xs, "sqeuclidean"))
        try:
            dual = np.linalg.solve(K + lam * np.eye(Xs.shape[0]), yc)
        except np.linalg.LinAlgError as exc:
            raise TrainingError(f"singular kernel system: {exc}") from exc
        return RegressorModel("kernel_ridge", x_mean, x_std, y_mean,
                              hyperparams, dual_coef=dual, x_train=Xs)
    raise ConfigError(f"unknown regressor family {family!r}")


def predict_regressor(model: RegressorModel, features):
    """Evaluate a trained regressor; negative power is clamped to zero."""
    X = np.asarray(features, dtype=float)
    Xs = (X - model.x_mean) / model.x_std
    if model.family == "linear":
        y = Xs @ model.weights + model.y_mean
    else:
        gamma = model.hyperparams["gamma"]
        y = np.exp(-gamma * cdist(Xs, model.x_train, "sqeuclidean")) \
            @ model.dual_coef + model.y_mean
    return np.maximum(y, 0.0)


DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_GAMMA_GRID = (0.1, 0.5, 1.0, 2.0, 5.0)
DEFAULT_TRAINING_LENGTHS = (3, 7, 14, 30, 60, 90)


@dataclass(frozen=True)
class GridSearchSpec:
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    training_lengths_days: tuple = DEFAULT_TRAINING_LENGTHS
    holdout_days: float = 1.0

    def __post_init__(self):
        if not self.lambda_grid or not self.training_lengths_days:
            raise ConfigError("grids must be nonempty")
        if list(self.training_lengths_days) != sorted(self.training_lengths_days):
            raise ConfigError("training lengths must be ascending")


@dataclass
class GridSearchResult:
    family: str
    best_hyperparams: dict
    best_length_days: float
    best_nmae: float
    table: list = field(default_factory=list)


def grid_search(spec: GridSearchSpec, family, timestamps, features, targets,
                p_nominal, g_min=50.0) -> GridSearchResult:
    """Exhaustive hyperparameter x training-length search.

    Validation is a trailing holdout immediately before the data end; the
    selection minimizes holdout nMAE with ties broken toward smaller
    training length, then smaller lambda, then smaller gamma.  Cells without
    enough history are recorded as invalid and excluded.
    """
    ts = _as_timestamps(timestamps)
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    cadence = np.median(np.diff(ts).astype("timedelta64[s]").astype(np.int64))
    data_end = ts[-1] + np.timedelta64(int(cadence), "s")
    holdout_start = data_end - np.timedelta64(
        int(round(spec.holdout_days * 86400)), "s")
    daylight = X[:, 0] >= g_min
    val = (ts >= holdout_start) & daylight
    if not np.any(val):
        raise InsufficientDataError("no daylight samples in the holdout")

    gamma_grid = spec.gamma_grid if family == "kernel_ridge" else (None,)
    table = []
    best = None
    for length in spec.training_lengths_days:
        train_start = holdout_start - np.timedelta64(int(length * 86400), "s")
        covered = ts[0] <= train_start
        train = (ts >= train_start) & (ts < holdout_start) & daylight
        for lam in spec.lambda_grid:
            for gamma in gamma_grid:
                hp = {"lam": lam}
                if gamma is not None:
                    hp["gamma"] = gamma
                row = {"length_days": length, **hp}
                if not covered or train.sum() < 20:
                    row["valid"] = False
                    row["note"] = "insufficient history"
                    table.append(row)
                    continue
                try:
                    model = train_regressor(family, X[train], y[train], hp)
                except (TrainingError, InsufficientDataError) as exc:
                    row["valid"] = False
                    row["note"] = str(exc)
                    table.append(row)
                    continue
                pred = predict_regressor(model, X[val])
                nmae = float(np.mean(np.abs(pred - y[val])) / p_nominal)
                row["valid"] = True
                row["nmae"] = nmae
                table.append(row)
                if best is None or nmae < best[0]:
                    best = (nmae, hp, length)
    if best is None:
        raise InsufficientDataError("no valid grid cell")
    return GridSearchResult(family=family, best_hyperparams=best[1],
                            best_length_days=best[2], best_nmae=best[0],
                            table=table)
