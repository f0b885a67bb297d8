import numpy as np
import pytest
import scipy.linalg

from pvprof import baselines, sdm
from pvprof.exceptions import (DataError, ExtractionError,
                               InsufficientDataError, TrainingError)
from conftest import CELLS, CSI_PARAMS, draw_csi_like

H24 = np.timedelta64(24, "h")


def _axis(start, n, minutes=15):
    return np.datetime64(start, "s") + np.arange(n) * np.timedelta64(
        minutes * 60, "s")


class TestSmartPersistence:
    def test_equal_irradiance_repeats_history(self):
        ts = _axis("2024-06-01T00:00", 192)
        g = np.tile(np.concatenate([np.zeros(24), 800 * np.sin(
            np.linspace(0, np.pi, 48)), np.zeros(24)]), 2)
        p = 30.0 * g
        fc = baselines.smart_persistence((ts, p), (ts, g),
                                         (ts[96:] + H24, g[96:]))
        assert np.allclose(fc.p_pred, p[96:], atol=1e-9)

    def test_dark_future_is_zero(self):
        ts = _axis("2024-06-01T12:00", 4)
        fc = baselines.smart_persistence(
            (ts, [100.0] * 4), (ts, [500.0] * 4),
            (ts + H24, [0.0] * 4))
        assert np.all(fc.p_pred == 0.0)

    def test_direct_ratio_arithmetic(self):
        ts = _axis("2024-06-01T12:00", 1)
        fc = baselines.smart_persistence(
            (ts, [100_000.0]), (ts, [500.0]), (ts + H24, [750.0]))
        assert fc.p_pred[0] == pytest.approx(150_000.0, rel=1e-14)

    def test_dark_anchor_falls_back_to_earlier_sample(self):
        ts = _axis("2024-06-01T12:00", 3)
        p = np.array([80_000.0, 70_000.0, 100.0])
        g = np.array([400.0, 350.0, 10.0])     # last anchor below g_min
        future = (ts[2:] + H24, np.array([700.0]))
        fc = baselines.smart_persistence((ts, p), (ts, g), future)
        assert fc.p_pred[0] == pytest.approx(70_000.0 * 700.0 / 350.0)

    def test_dark_anchor_without_fallback_is_zero(self):
        ts = _axis("2024-06-01T00:00", 2)
        fc = baselines.smart_persistence(
            (ts, [0.0, 0.0]), (ts, [0.0, 5.0]),
            (ts + H24, [600.0, 600.0]))
        assert np.all(fc.p_pred == 0.0)

    def test_misaligned_histories_rejected(self):
        ts = _axis("2024-06-01T00:00", 4)
        with pytest.raises(DataError):
            baselines.smart_persistence((ts, np.ones(4)),
                                        (ts + np.timedelta64(60, "s"),
                                         np.ones(4)),
                                        (ts + H24, np.ones(4)))

    def test_missing_history_rejected(self):
        ts = _axis("2024-06-01T00:00", 4)
        with pytest.raises(DataError):
            baselines.smart_persistence((ts, np.ones(4)), (ts, np.ones(4)),
                                        (ts + np.timedelta64(36, "h"),
                                         np.ones(4)))


class TestNaivePersistence:
    def test_constant_history(self):
        ts = _axis("2024-06-01T00:00", 96)
        fc = baselines.naive_persistence((ts, np.full(96, 5.0)), ts[48:] + H24)
        assert np.all(fc.p_pred == 5.0)

    def test_zero_horizon_is_identity(self):
        ts = _axis("2024-06-01T00:00", 8)
        p = np.arange(8.0)
        fc = baselines.naive_persistence((ts, p), ts,
                                         horizon=np.timedelta64(0, "s"))
        assert np.array_equal(fc.p_pred, p)

    def test_day_shift_error_matches_direct_computation(self):
        ts = _axis("2024-06-01T00:00", 192)
        h = np.arange(192) % 96 * 0.25
        p = np.maximum(0.0, np.sin(np.pi * (h - 6.0) / 12.0)) * 50_000.0
        p[96:] *= 0.8  # next day scaled
        fc = baselines.naive_persistence((ts, p), ts[96:])
        nominal = 50_000.0
        direct = np.mean(np.abs(p[:96] - p[96:])) / nominal
        lib = np.mean(np.abs(fc.p_pred - p[96:])) / nominal
        assert lib == pytest.approx(direct, rel=1e-12)


class TestDatasheetExtraction:
    def test_round_trip_canonical(self, datasheet):
        rec = baselines.fit_desoto_from_datasheet(datasheet)
        rel = np.abs(rec.as_array() - CSI_PARAMS.as_array()) \
            / CSI_PARAMS.as_array()
        assert np.all(rel < 0.005)

    def test_nameplate_postconditions(self, datasheet):
        rec = baselines.fit_desoto_from_datasheet(datasheet)
        op = sdm.translate_to_operating(
            rec, sdm.OperatingConditions(1000.0, 25.0), CELLS,
            datasheet.alpha_isc)
        assert abs(sdm.short_circuit_current(op) - datasheet.i_sc) \
            / datasheet.i_sc < 1e-3
        assert abs(sdm.open_circuit_voltage(op) - datasheet.v_oc) \
            / datasheet.v_oc < 1e-3
        assert abs(sdm.find_mpp(op).p - datasheet.v_mp * datasheet.i_mp) \
            / (datasheet.v_mp * datasheet.i_mp) < 1e-3

    def test_infeasible_datasheet_rejected(self):
        with pytest.raises(ValueError):
            baselines.Datasheet(v_oc=40.0, i_sc=9.0, v_mp=45.0, i_mp=8.5,
                                alpha_isc=0.0, beta_voc=-0.15,
                                cells_in_series=72)

    def test_unreachable_fill_factor_raises(self):
        ds = baselines.Datasheet(v_oc=49.0, i_sc=9.5, v_mp=48.5, i_mp=9.45,
                                 alpha_isc=0.0, beta_voc=-0.15,
                                 cells_in_series=72)
        with pytest.raises(ExtractionError):
            baselines.fit_desoto_from_datasheet(ds)

    def test_round_trip_property_quick(self):
        rng = np.random.default_rng(17)
        for params in draw_csi_like(rng, 10):
            ds = baselines.synthesize_datasheet(params, CELLS,
                                                alpha_isc=0.002)
            rec = baselines.fit_desoto_from_datasheet(ds)
            rel = np.abs(rec.as_array() - params.as_array()) \
                / params.as_array()
            assert np.all(rel < 0.005)


def _training_data(n=60, seed=0):
    rng = np.random.default_rng(seed)
    ts = _axis("2024-06-01T08:00", n, minutes=5)
    g = rng.uniform(100.0, 1000.0, n)
    t = 20.0 + g / 800.0 * 28.0 + rng.uniform(-3, 3, n)
    X = baselines.feature_matrix(ts, g, t)
    return X


class TestRegressors:
    def test_affine_target_reproduced(self):
        X = _training_data()
        y = 30.0 * X[:, 0] + 5.0 * X[:, 1] + 123.0
        model = baselines.train_regressor("linear", X, y, {"lam": 1e-12})
        pred = baselines.predict_regressor(model, X)
        assert np.allclose(pred, y, rtol=1e-8)

    def test_kernel_ridge_matches_dense_solve(self):
        X = _training_data(n=50)
        rng = np.random.default_rng(2)
        y = 25.0 * X[:, 0] + 2000.0 * np.sin(X[:, 2] * 6.0) \
            + rng.normal(0, 50.0, 50)
        lam, gamma = 1e-3, 0.7
        model = baselines.train_regressor("kernel_ridge", X, y,
                                          {"lam": lam, "gamma": gamma})
        pred = baselines.predict_regressor(model, X)
        # independent dense solve on the standardized features
        mu, sd = X.mean(0), X.std(0)
        Z = (X - mu) / sd
        sq = ((Z[:, None, :] - Z[None, :, :]) ** 2).sum(-1)
        K = np.exp(-gamma * sq)
        alpha = scipy.linalg.solve(K + lam * np.eye(50), y - y.mean())
        expect = np.maximum(K @ alpha + y.mean(), 0.0)
        assert np.allclose(pred, expect, rtol=1e-8, atol=1e-8)

    def test_constant_feature_rejected(self):
        X = _training_data()
        X[:, 1] = 25.0
        with pytest.raises(TrainingError):
            baselines.train_regressor("linear", X, X[:, 0] * 2.0)

    def test_too_few_pairs_rejected(self):
        X = _training_data(n=10)
        with pytest.raises(InsufficientDataError):
            baselines.train_regressor("linear", X, X[:, 0])

    def test_negative_predictions_clamped(self):
        X = _training_data()
        y = 30.0 * X[:, 0] - 25_000.0  # strongly negative at low irradiance
        model = baselines.train_regressor("linear", X, y, {"lam": 1e-9})
        Xq = X.copy()
        Xq[:, 0] = 1.0
        assert np.all(baselines.predict_regressor(model, Xq) >= 0.0)

    def test_affine_reencoding_invariance(self):
        X = _training_data(seed=5)
        rng = np.random.default_rng(6)
        y = 20.0 * X[:, 0] + 900.0 * X[:, 2] + rng.normal(0, 30.0, len(X))
        for family, hp in (("linear", {"lam": 1e-2}),
                           ("kernel_ridge", {"lam": 1e-2, "gamma": 1.3})):
            base = baselines.train_regressor(family, X, y, dict(hp))
            shifted = X.copy()
            shifted[:, 1] += 10.0
            other = baselines.train_regressor(family, shifted, y, dict(hp))
            q = X[::7].copy()
            q_shift = q.copy()
            q_shift[:, 1] += 10.0
            assert np.allclose(baselines.predict_regressor(base, q),
                               baselines.predict_regressor(other, q_shift),
                               rtol=1e-9, atol=1e-9)


class TestGridSearch:
    def _series(self, days=10, seed=0, const_power=None):
        n = days * 96
        ts = _axis("2024-06-01T00:00", n)
        h = np.arange(n) % 96 * 0.25
        g = np.maximum(0.0, np.sin(np.pi * (h - 6.0) / 12.0)) * 900.0
        rng = np.random.default_rng(seed)
        t = 20.0 + g / 800.0 * 28.0
        X = baselines.feature_matrix(ts, g, t)
        if const_power is not None:
            y = np.full(n, const_power)
        else:
            y = 32.0 * g + rng.normal(0.0, 100.0, n)
        return ts, X, y

    def test_single_cell_selected(self):
        ts, X, y = self._series()
        spec = baselines.GridSearchSpec(lambda_grid=(1e-2,), gamma_grid=(1.0,),
                                        training_lengths_days=(3,))
        res = baselines.grid_search(spec, "linear", ts, X, y, 30_000.0)
        assert res.best_length_days == 3
        assert res.best_hyperparams == {"lam": 1e-2}

    def test_exact_tie_prefers_small_length_lambda_gamma(self):
        # constant target: every cell predicts it exactly, all errors tie at 0
        ts, X, y = self._series(const_power=5_000.0)
        spec = baselines.GridSearchSpec(lambda_grid=(1e-3, 1e-1),
                                        gamma_grid=(0.5, 2.0),
                                        training_lengths_days=(3, 7))
        res = baselines.grid_search(spec, "kernel_ridge", ts, X, y, 30_000.0)
        assert res.best_nmae == 0.0
        assert res.best_length_days == 3
        assert res.best_hyperparams == {"lam": 1e-3, "gamma": 0.5}

    def test_infeasible_length_marked_invalid(self):
        ts, X, y = self._series(days=10)
        spec = baselines.GridSearchSpec(lambda_grid=(1e-2,), gamma_grid=(1.0,),
                                        training_lengths_days=(3, 90))
        res = baselines.grid_search(spec, "linear", ts, X, y, 30_000.0)
        invalid = [row for row in res.table if not row["valid"]]
        assert {row["length_days"] for row in invalid} == {90}
        assert res.best_length_days == 3

    def test_best_never_worse_than_shortest_length(self):
        for seed in range(3):
            ts, X, y = self._series(days=20, seed=seed)
            spec = baselines.GridSearchSpec(lambda_grid=(1e-3, 1e-1),
                                            gamma_grid=(1.0,),
                                            training_lengths_days=(3, 7, 14))
            res = baselines.grid_search(spec, "linear", ts, X, y, 30_000.0)
            three_day = [row["nmae"] for row in res.table
                         if row["valid"] and row["length_days"] == 3]
            assert res.best_nmae <= min(three_day) + 1e-15

    def test_deterministic_selection(self):
        ts, X, y = self._series(days=12, seed=4)
        spec = baselines.GridSearchSpec(lambda_grid=(1e-3, 1e-2),
                                        gamma_grid=(0.5,),
                                        training_lengths_days=(3, 7))
        r1 = baselines.grid_search(spec, "kernel_ridge", ts, X, y, 30_000.0)
        r2 = baselines.grid_search(spec, "kernel_ridge", ts, X, y, 30_000.0)
        assert r1.best_hyperparams == r2.best_hyperparams
        assert r1.best_length_days == r2.best_length_days
        assert r1.table == r2.table
