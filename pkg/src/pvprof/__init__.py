"""pvprof: single-diode PV performance modeling and forecast benchmarking.

The package covers the full loop: clean production telemetry, re-fit the
five-parameter equivalent circuit from recent data, convert measured
plane-of-array irradiance and module temperature into day-ahead DC power,
and benchmark the dynamic model against persistence, datasheet and
regression baselines.
"""

from .analysis import (MetricsReport, StudyResult, classify_days,
                       compute_metrics, exceedance_density,
                       interpretability_sweep, seasonal_partition,
                       training_length_sweep, weather_case_study)
from .baselines import (Datasheet, FeatureVector, GridSearchSpec,
                        RegressorModel, feature_matrix,
                        fit_desoto_from_datasheet, grid_search,
                        naive_persistence, predict_regressor,
                        smart_persistence, synthesize_datasheet,
                        train_regressor)
from .benchmark import BenchmarkReport, RunConfig, run_benchmark
from .exceptions import (ConfigError, DataError, ExtractionError,
                         FitDegeneracyError, InsufficientDataError,
                         NumericalError, PvprofError, SolverError,
                         TrainingError)
from .fitting import (FitOptions, FitWindowResult, default_bounds, fit_window,
                      initial_guess, loss, predict_power, rolling_fit,
                      simulate_power)
from .preprocess import (PreprocessConfig, QualityMask,
                         apply_quality_pipeline, filter_clipping,
                         filter_night, remove_outliers_regression)
from .sdm import (ArrayTopology, IvPoint, OperatingConditions,
                  SdmParamsOperating, SdmParamsRef, find_mpp,
                  open_circuit_voltage, short_circuit_current,
                  simulate_array_mpp, solve_current, solve_voltage,
                  translate_to_operating)
from .series import (ForecastSeries, TelemetryRecord, TelemetrySeries,
                     WeatherSeries)
from .synth import (DegradationScenario, GroundTruthLog, WeatherProfile,
                    apply_clouds, clear_sky_profile, generate_dataset,
                    module_temperature)

__version__ = "0.1.0"
