"""Error metrics and evaluation studies.

Nameplate-normalized error metrics (nMAE, nRMSE, per-sample bias) plus the
study suite: seasonal partition, weather-condition train/test cases,
bias-exceedance densities, one-feature interpretability sweeps, and the
training-length sweep.
"""

from dataclasses import dataclass, field

import numpy as np

from . import baselines, fitting, sdm
from .exceptions import ConfigError, DataError, InsufficientDataError
from .preprocess import PreprocessConfig, apply_quality_pipeline
from .series import DAY, TelemetrySeries, WeatherSeries, _as_timestamps

DEFAULT_EXCEEDANCE_THRESHOLDS = (0.10, 0.20)
DEFAULT_CLEAR_THRESHOLD = 0.05
WEATHER_CASES = (("clear", "clear"), ("clear", "cloudy"),
                 ("cloudy", "clear"), ("cloudy", "cloudy"),
                 ("mix", "clear"), ("mix", "cloudy"))


@dataclass
class MetricsReport:
    """Normalized error statistics of one prediction/measurement pairing."""

    n_samples: int
    nmae: float
    nrmse: float
    nbe_series: np.ndarray
    nbe_mean: float
    exceedance: dict

    def to_json_dict(self, with_series=False):
        d = {"n_samples": self.n_samples, "nmae": self.nmae,
             "nrmse": self.nrmse, "nbe_mean": self.nbe_mean,
             "exceedance": {f"{tau:g}": v for tau, v in self.exceedance.items()}}
        if with_series:
            d["nbe_series"] = self.nbe_series.tolist()
        return d


@dataclass
class StudyResult:
    study_id: str
    groups: dict
    cv_of_cases: dict | None = None
    notes: list = field(default_factory=list)


WEATHER_SENSITIVE_CV = 0.20


def coefficient_of_variation(values):
    """Population standard deviation over mean."""
    vals = np.asarray(values, dtype=float)
    mean = float(vals.mean())
    return float(vals.std() / mean) if mean != 0 else 0.0


def exceedance_density(nbe_series, thresholds=DEFAULT_EXCEEDANCE_THRESHOLDS):
    """Fraction of samples whose signed bias exceeds each threshold."""
    nbe = np.asarray(nbe_series, dtype=float)
    if nbe.size == 0:
        raise InsufficientDataError("empty bias series")
    return {float(tau): float(np.mean(nbe > tau)) for tau in thresholds}


def compute_metrics(pred, meas, p_nominal, daylight_only=True, g_poa=None,
                    g_min=50.0,
                    thresholds=DEFAULT_EXCEEDANCE_THRESHOLDS) -> MetricsReport:
    """nMAE, nRMSE and bias statistics, normalized by nameplate power.

    With ``daylight_only`` (the default) samples whose measured irradiance
    falls below ``g_min`` are excluded, since night zeros deflate the errors;
    that mode requires the ``g_poa`` series.
    """
    pred = np.asarray(pred, dtype=float)
    meas = np.asarray(meas, dtype=float)
    if pred.shape != meas.shape:
        raise DataError("prediction and measurement series differ in length")
    if p_nominal <= 0:
        raise ConfigError("nominal power must be positive")
    if daylight_only:
        if g_poa is None:
            raise ConfigError("daylight_only metrics need the irradiance series")
        g = np.asarray(g_poa, dtype=float)
        if g.shape != meas.shape:
            raise DataError("irradiance series differs in length")
        keep = g >= g_min
    else:
        keep = np.ones(meas.shape, dtype=bool)
    n = int(keep.sum())
    if n == 0:
        raise InsufficientDataError("no samples left after daylight filtering")
    resid = (pred[keep] - meas[keep]) / p_nominal
    nbe = resid
    return MetricsReport(
        n_samples=n,
        nmae=float(np.mean(np.abs(resid))),
        nrmse=float(np.sqrt(np.mean(resid ** 2))),
        nbe_series=nbe,
        nbe_mean=float(np.mean(nbe)),
        exceedance=exceedance_density(nbe, thresholds))


_SEASON_BY_MONTH = {3: "spring", 4: "spring", 5: "spring",
                    6: "summer", 7: "summer", 8: "summer",
                    9: "fall", 10: "fall", 11: "fall",
                    12: "winter", 1: "winter", 2: "winter"}
SEASONS = ("spring", "summer", "fall", "winter")


def season_of(timestamps):
    """Season label per timestamp; December groups with the following
    January/February (leap days are winter)."""
    ts = _as_timestamps(timestamps)
    months = ts.astype("datetime64[M]").astype(int) % 12 + 1
    return np.array([_SEASON_BY_MONTH[m] for m in months])


def seasonal_partition(timestamps, pred, meas, p_nominal, g_poa=None,
                       daylight_only=True, g_min=50.0) -> StudyResult:
    """Metrics aggregated inside the four calendar season windows."""
    labels = season_of(timestamps)
    groups = {}
    for season in SEASONS:
        sel = labels == season
        if not np.any(sel):
            groups[season] = None
            continue
        try:
            groups[season] = compute_metrics(
                np.asarray(pred)[sel], np.asarray(meas)[sel], p_nominal,
                daylight_only=daylight_only,
                g_poa=None if g_poa is None else np.asarray(g_poa)[sel],
                g_min=g_min)
        except InsufficientDataError:
            groups[season] = None
    return StudyResult("seasonal", groups)


def classify_days(series: TelemetrySeries, g_min=50.0,
                  threshold=DEFAULT_CLEAR_THRESHOLD):
    """Label each day clear or cloudy from its power fluctuation.

    The variability index is the mean absolute sample-to-sample power change
    over daylight samples, relative to the day's peak daylight power; a day
    is clear iff the index falls below ``threshold``.  Days with fewer than
    three daylight samples are skipped.
    """
    p = series.power
    days = series.day_index()
    daylight = series.g_poa >= g_min
    labels = {}
    for day in np.unique(days):
        sel = (days == day) & daylight
        pd = p[sel]
        if pd.size < 3:
            continue
        peak = float(pd.max())
        if peak <= 0:
            continue
        index = float(np.mean(np.abs(np.diff(pd)))) / peak
        labels[day] = "clear" if index < threshold else "cloudy"
    return labels


def _split_pool(days):
    train = [d for k, d in enumerate(days) if k % 2 == 0]
    test = [d for k, d in enumerate(days) if k % 2 == 1]
    return train, test


def _records_of_days(series, mask_retained, day_list):
    days = series.day_index()
    sel = np.isin(days, np.array(day_list, dtype="datetime64[D]")) & mask_retained
    return series.select(sel)


def _train_case_model(model_name, train: TelemetrySeries, topo, datasheet,
                      fit_options, regressor_hyperparams):
    if model_name == "pvpro":
        init = fitting.initial_guess(datasheet)
        result = fitting.fit_window(train, topo, init, fit_options)
        return ("params", result.params)
    if model_name == "nominal":
        return ("params", baselines.fit_desoto_from_datasheet(datasheet))
    if model_name in ("lr", "kr"):
        family = "linear" if model_name == "lr" else "kernel_ridge"
        X = baselines.feature_matrix(train.timestamp, train.g_poa, train.t_module)
        model = baselines.train_regressor(family, X, train.power,
                                          regressor_hyperparams.get(model_name))
        return ("regressor", model)
    raise ConfigError(f"model {model_name!r} is not trainable in weather cases")


def _predict_case_model(kind, model, test: TelemetrySeries, topo, datasheet,
                        g_min):
    if kind == "params":
        weather = WeatherSeries.from_telemetry(test)
        return fitting.simulate_power(model, weather, topo, g_min=g_min,
                                      alpha_isc=datasheet.alpha_isc)
    X = baselines.feature_matrix(test.timestamp, test.g_poa, test.t_module)
    return baselines.predict_regressor(model, X)


def weather_case_study(series: TelemetrySeries, labels, models, *,
                       topo: sdm.ArrayTopology, datasheet,
                       p_nominal, fit_options=None,
                       regressor_hyperparams=None,
                       preprocess: PreprocessConfig = PreprocessConfig(),
                       g_min=50.0) -> StudyResult:
    """Six train/test weather combinations and the spread across them.

    Labeled days are split alternately into train and test pools per label;
    each case trains on clear, cloudy or mixed train-pool days and scores on
    clear or cloudy test-pool days.  Per model the study reports the six
    nMAE/nRMSE values and their coefficient of variation (population standard
    deviation over mean).
    """
    if fit_options is None:
        fit_options = fitting.FitOptions.for_system(datasheet, topo)
    regressor_hyperparams = dict(regressor_hyperparams or
                                 {"lr": {"lam": 1e-3},
                                  "kr": {"lam": 1e-3, "gamma": 1.0}})
    mask = apply_quality_pipeline(series, preprocess)
    retained = mask.retained

    clear_days = sorted(d for d, lab in labels.items() if lab == "clear")
    cloudy_days = sorted(d for d, lab in labels.items() if lab == "cloudy")
    if len(clear_days) < 2 or len(cloudy_days) < 2:
        raise InsufficientDataError(
            f"need >= 2 clear and >= 2 cloudy days, have "
            f"{len(clear_days)} clear / {len(cloudy_days)} cloudy")
    clear_train, clear_test = _split_pool(clear_days)
    cloudy_train, cloudy_test = _split_pool(cloudy_days)
    train_pool = {"clear": clear_train, "cloudy": cloudy_train,
                  "mix": sorted(clear_train + cloudy_train)}
    test_pool = {"clear": clear_test, "cloudy": cloudy_test}

    groups = {}
    cv = {}
    notes = []
    for name in models:
        case_reports = {}
        for train_kind, test_kind in WEATHER_CASES:
            train = _records_of_days(series, retained, train_pool[train_kind])
            test = _records_of_days(series, retained, test_pool[test_kind])
            if len(train) < 50 or len(test) == 0:
                raise InsufficientDataError(
                    f"case {train_kind}/{test_kind} unfillable: "
                    f"{len(train)} train / {len(test)} test records")
            kind, model = _train_case_model(name, train, topo, datasheet,
                                            fit_options, regressor_hyperparams)
            pred = _predict_case_model(kind, model, test, topo, datasheet, g_min)
            case_reports[f"{train_kind}/{test_kind}"] = compute_metrics(
                pred, test.power, p_nominal, daylight_only=True,
                g_poa=test.g_poa, g_min=g_min)
        groups[name] = case_reports
        cv[name] = {metric: coefficient_of_variation(
            [getattr(r, metric) for r in case_reports.values()])
            for metric in ("nmae", "nrmse")}
        if cv[name]["nmae"] > WEATHER_SENSITIVE_CV:
            notes.append(f"{name} flagged weather-sensitive "
                         f"(CV > {WEATHER_SENSITIVE_CV:.0%})")
    return StudyResult("weather_cases", groups, cv_of_cases=cv, notes=notes)


def interpretability_sweep(model, varied, value_range, fixed=None, *,
                           topo=None, datasheet=None, reference_params=None,
                           n_points=101, g_min=0.0) -> StudyResult:
    """Predicted power while one input varies and the others stay fixed.

    ``model`` may be a trained regressor, a reference parameter set, or a
    fitted window result (physical models ignore the hour feature).  When
    ``reference_params`` is given a reference curve simulated from those
    parameters is emitted alongside.
    """
    if fixed is None:
        fixed = baselines.FeatureVector(g_poa=1000.0, t_module=25.0, hod=0.5)
    if varied not in ("g_poa", "t_module", "hod"):
        raise ConfigError(f"unknown sweep feature {varied!r}")
    grid = np.linspace(float(value_range[0]), float(value_range[1]), n_points)

    def physical_curve(params):
        if topo is None:
            raise ConfigError("physical sweep needs the array topology")
        alpha = datasheet.alpha_isc if datasheet is not None else 0.0
        g = np.full(n_points, fixed.g_poa)
        t = np.full(n_points, fixed.t_module)
        if varied == "g_poa":
            g = grid
        elif varied == "t_module":
            t = grid
        _, _, p = sdm.simulate_array_mpp_arrays(
            params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
            params.n_diode, g, t, topo, alpha)
        return np.where(g < g_min, 0.0, p)

    curves = {}
    if isinstance(model, baselines.RegressorModel):
        X = np.tile(fixed.as_array(), (n_points, 1))
        X[:, ("g_poa", "t_module", "hod").index(varied)] = grid
        curves["model"] = baselines.predict_regressor(model, X)
    elif isinstance(model, fitting.FitWindowResult):
        curves["model"] = physical_curve(model.params)
    elif isinstance(model, sdm.SdmParamsRef):
        curves["model"] = physical_curve(model)
    else:
        raise ConfigError(f"cannot sweep a {type(model).__name__}")
    if reference_params is not None:
        curves["reference"] = physical_curve(reference_params)
    return StudyResult("sweep", {"feature": varied, "grid": grid,
                                 "curves": curves})


def training_length_sweep(model_name, series: TelemetrySeries, lengths_days, *,
                          topo, datasheet, p_nominal, fit_options=None,
                          regressor_hyperparams=None, n_eval_days=5,
                          preprocess: PreprocessConfig = PreprocessConfig(),
                          g_min=50.0) -> StudyResult:
    """Day-ahead error of one model as a function of training-window length.

    Every length is scored over the same trailing evaluation days; each
    evaluation day is predicted from its own measured weather by a model
    trained only on the preceding ``length`` days.  Lengths that do not fit
    the available history are skipped with a note.
    """
    if fit_options is None and model_name == "pvpro":
        fit_options = fitting.FitOptions.for_system(datasheet, topo)
    regressor_hyperparams = dict(regressor_hyperparams or
                                 {"lr": {"lam": 1e-3},
                                  "kr": {"lam": 1e-3, "gamma": 1.0}})
    mask = apply_quality_pipeline(series, preprocess)
    days = series.days()
    if len(days) < n_eval_days + 1:
        raise InsufficientDataError("series too short for the evaluation span")
    eval_days = days[-n_eval_days:]
    groups = {}
    notes = []
    for length in lengths_days:
        need = np.timedelta64(int(length), "D")
        if eval_days[0].astype("datetime64[D]") - need < days[0]:
            groups[float(length)] = None
            notes.append(f"length {length} d skipped: insufficient history")
            continue
        preds, meas, gs = [], [], []
        for day in eval_days:
            day = day.astype("datetime64[s]")
            train = series.slice_time(day - need, day)
            train_mask = mask.retained[np.searchsorted(series.timestamp,
                                                       train.timestamp)]
            train = train.select(train_mask)
            test = series.slice_time(day, day + DAY)
            if model_name == "pvpro":
                result = fitting.fit_window(train, topo,
                                            fitting.initial_guess(datasheet),
                                            fit_options)
                weather = WeatherSeries.from_telemetry(test)
                pred = fitting.simulate_power(result.params, weather, topo,
                                              g_min=g_min,
                                              alpha_isc=datasheet.alpha_isc)
            elif model_name in ("lr", "kr"):
                family = "linear" if model_name == "lr" else "kernel_ridge"
                X = baselines.feature_matrix(train.timestamp, train.g_poa,
                                             train.t_module)
                model = baselines.train_regressor(
                    family, X, train.power, regressor_hyperparams.get(model_name))
                Xq = baselines.feature_matrix(test.timestamp, test.g_poa,
                                              test.t_module)
                pred = baselines.predict_regressor(model, Xq)
            else:
                raise ConfigError(f"unsupported model {model_name!r}")
            preds.append(pred)
            meas.append(test.power)
            gs.append(test.g_poa)
        report = compute_metrics(np.concatenate(preds), np.concatenate(meas),
                                 p_nominal, daylight_only=True,
                                 g_poa=np.concatenate(gs), g_min=g_min)
        groups[float(length)] = report
    return StudyResult("training_length", groups, notes=notes)
