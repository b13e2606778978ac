import json
import math
import tempfile
from decimal import Decimal
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy import signal

from core.exceptions import EmptySeriesError, PreconditionError, SchemaError
from core.models import BlockRecord, BlockSeries, MempoolSnapshot, TxRecord
from explore.services.correlation import acf
from forecast.models import ArimaModel, ComparisonRow, MeanModel, NeuralNetModel, TrainConfig
from forecast.services.arima import check_stationarity, fit_ar, fit_arima, fit_arimax
from forecast.services.compare import compare_models, comparison_table, fit_model
from forecast.services.datasets import block_dataset, confirmation_dataset, intensity_series
from forecast.services.evaluation import (
    error_metrics,
    evaluate,
    forecast_one_step,
    naive_mean_baseline,
    predict_series,
)
from forecast.services.neural import train_nar, train_narx
from forecast.services.persistence import load_model, save_model

LIGHT = TrainConfig(seed=3, weight_decay=1e-7)


def arma_series(phi, theta, n, seed, intercept=0.0, burn_in=500):
    noise = np.random.default_rng(seed).standard_normal(n + burn_in)
    eta = signal.lfilter(np.r_[1.0, theta], np.r_[1.0, -np.asarray(phi, dtype=float)], noise)
    return eta[burn_in:] + intercept


def within(model, phi, theta, tolerance):
    return (
        np.all(np.abs(np.subtract(model.ar_coeffs, phi)) <= tolerance)
        and np.all(np.abs(np.subtract(model.ma_coeffs, theta)) <= tolerance)
    )


class FitArTest(SimpleTestCase):
    """Test fit_ar"""

    def test_order_one_is_lag_one_autocorrelation(self):
        y = arma_series([0.6], [], 500, seed=1)
        model = fit_ar(y, 1)
        self.assertAlmostEqual(model.ar_coeffs[0], acf(y, 1).values[1], places=12)
        self.assertAlmostEqual(model.intercept, y.mean())

    def test_recovers_ar2(self):
        model = fit_ar(arma_series([0.5, -0.3], [], 10_000, seed=2), 2)
        self.assertTrue(within(model, (0.5, -0.3), (), 0.05), model.ar_coeffs)
        self.assertEqual(model.order, (2, 0, 0))

    def test_constant_series(self):
        with self.assertRaises(PreconditionError):
            fit_ar([4.0] * 20, 2)

    def test_too_short(self):
        with self.assertRaises(EmptySeriesError):
            fit_ar([1.0, 2.0, 3.0], 2)


class FitArimaTest(SimpleTestCase):
    """Test fit_arima"""

    def test_intercept_only(self):
        y = [3.0, 5.0, 4.0, 8.0]
        model = fit_arima(y, 0, 0, 0)
        self.assertEqual(model.order, (0, 0, 0))
        self.assertAlmostEqual(model.intercept, 5.0)
        self.assertAlmostEqual(forecast_one_step(model, y), 5.0)

    def test_differencing_removes_linear_trend(self):
        y = 3.0 + 2.0 * np.arange(50)
        model = fit_arima(y, 0, 1, 0)
        self.assertAlmostEqual(model.intercept, 2.0)
        self.assertAlmostEqual(model.noise_variance, 0.0)
        self.assertAlmostEqual(forecast_one_step(model, y), 103.0)

    def test_recovers_arma11(self):
        model = fit_arima(arma_series([0.5], [0.3], 10_000, seed=4), 1, 0, 1)
        self.assertTrue(model.converged)
        self.assertTrue(within(model, (0.5,), (0.3,), 0.05), (model.ar_coeffs, model.ma_coeffs))
        self.assertAlmostEqual(model.noise_variance, 1.0, delta=0.05)

    def test_recovery_across_orders(self):
        cases = (((0.7,), ()), ((0.5, -0.3), ()), ((0.5,), (0.3,)))
        for phi, theta in cases:
            hits = sum(
                within(fit_arima(arma_series(phi, theta, 10_000, seed=seed), len(phi), 0, len(theta)), phi, theta, 0.05)
                for seed in range(10, 30)
            )
            self.assertGreaterEqual(hits, 19, (phi, theta))

    def test_recovers_arma22(self):
        """
        phi = (0.4, 0.2), theta = (0.3, -0.2): the AR and MA parts nearly
        cancel, so the estimates need 2e5 points to settle within 0.05.
        """
        phi, theta = (0.4, 0.2), (0.3, -0.2)
        hits = sum(
            within(fit_arima(arma_series(phi, theta, 200_000, seed=seed), 2, 0, 2), phi, theta, 0.05)
            for seed in range(100, 120)
        )
        self.assertGreaterEqual(hits, 19)

    def test_shift_changes_only_the_intercept(self):
        y = arma_series([0.5], [0.3], 2000, seed=5)
        model = fit_arima(y, 1, 0, 1)
        shifted = fit_arima(y + 100.0, 1, 0, 1)
        np.testing.assert_allclose(shifted.ar_coeffs, model.ar_coeffs, atol=1e-6)
        np.testing.assert_allclose(shifted.ma_coeffs, model.ma_coeffs, atol=1e-6)
        self.assertAlmostEqual(shifted.intercept - model.intercept, 100.0, delta=1e-6)

    def test_invalid_orders(self):
        with self.assertRaises(PreconditionError):
            fit_arima(np.arange(20.0), -1, 0, 0)
        with self.assertRaises(EmptySeriesError):
            fit_arima([1.0, 2.0, 3.0, 4.0], 2, 0, 2)

    def test_stationarity_warning(self):
        with self.assertLogs('forecast.services.arima', 'WARNING'):
            self.assertFalse(check_stationarity(ArimaModel(p=1, d=0, q=0, ar_coeffs=(1.2,))))
        self.assertTrue(check_stationarity(ArimaModel(p=2, d=0, q=0, ar_coeffs=(0.5, -0.3))))


class FitArimaxTest(SimpleTestCase):
    """Test fit_arimax"""

    def test_null_regressor(self):
        y = arma_series([0.5], [0.3], 3000, seed=6, intercept=4.0)
        with self.assertLogs('forecast.services.arima', 'WARNING'):
            model = fit_arimax(y, np.zeros(len(y)), 1, 0, 1)
        plain = fit_arima(y[1:], 1, 0, 1)
        self.assertEqual(model.exog_coeffs, (0.0,))
        np.testing.assert_allclose(model.ar_coeffs, plain.ar_coeffs, atol=1e-6)
        np.testing.assert_allclose(model.ma_coeffs, plain.ma_coeffs, atol=1e-6)
        self.assertAlmostEqual(model.intercept, plain.intercept, delta=1e-6)

    def test_planted_lagged_dependence(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(10_000)
        y = np.r_[0.0, 2.0 * x[:-1]] + 0.5 * rng.standard_normal(10_000)
        model = fit_arimax(y, x, 1, 0, 0)
        self.assertAlmostEqual(model.exog_coeffs[0], 2.0, delta=0.1)
        self.assertEqual(model.warm_up, 2)

    def test_duplicated_column_warns(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(500)
        y = rng.standard_normal(500)
        with self.assertLogs('forecast.services.arima', 'WARNING') as logs:
            fit_arimax(y, np.column_stack([x, x]), 1, 0, 0)
        self.assertTrue(any('rank deficient' in line for line in logs.output))

    def test_length_mismatch(self):
        with self.assertRaises(PreconditionError):
            fit_arimax(np.arange(50.0), np.arange(49.0), 1, 0, 0)


class ForecastOneStepTest(SimpleTestCase):
    """Test forecast_one_step and predict_series"""

    def test_ar1(self):
        model = ArimaModel(p=1, d=0, q=0, ar_coeffs=(0.5,), intercept=0.0)
        self.assertAlmostEqual(forecast_one_step(model, [7.0, 2.0]), 1.0)

    def test_intercept_only(self):
        model = ArimaModel(p=0, d=0, q=0, intercept=3.5)
        self.assertEqual(forecast_one_step(model, []), 3.5)
        self.assertEqual(forecast_one_step(model, [10.0, -4.0]), 3.5)

    def test_insufficient_history(self):
        model = ArimaModel(p=2, d=1, q=0, ar_coeffs=(0.5, 0.1))
        with self.assertRaises(PreconditionError):
            forecast_one_step(model, [1.0, 2.0])

    def test_affine_in_history(self):
        model = ArimaModel(p=2, d=0, q=1, ar_coeffs=(0.4, 0.2), ma_coeffs=(0.3,), intercept=1.5)
        rng = np.random.default_rng(9)
        first, second = rng.standard_normal(40), rng.standard_normal(40)
        a = 0.3
        mixed = forecast_one_step(model, a * first + (1 - a) * second)
        expected = a * forecast_one_step(model, first) + (1 - a) * forecast_one_step(model, second)
        self.assertAlmostEqual(mixed, expected, delta=1e-9)

    def test_rolling_predictions_match_one_step(self):
        model = ArimaModel(p=1, d=1, q=1, ar_coeffs=(0.3,), ma_coeffs=(-0.4,), intercept=0.2)
        y = np.cumsum(np.random.default_rng(10).standard_normal(30))
        predictions = predict_series(model, y)
        for t in range(model.warm_up, len(y)):
            self.assertAlmostEqual(predictions[t - model.warm_up], forecast_one_step(model, y[:t]), places=9)

    def test_exogenous_history(self):
        model = ArimaModel(p=0, d=0, q=0, intercept=1.0, exog_coeffs=(2.0,))
        self.assertAlmostEqual(forecast_one_step(model, [0.0, 0.0], exog=[[5.0], [3.0]]), 7.0)


class EvaluateTest(SimpleTestCase):
    """Test evaluate, error_metrics and naive_mean_baseline"""

    def test_hand_residuals(self):
        mae, rmse = error_metrics([1, -1, 2])
        self.assertAlmostEqual(mae, 4 / 3)
        self.assertAlmostEqual(rmse, math.sqrt(2))

    def test_single_residual(self):
        evaluation = evaluate(MeanModel(mean=2.0), [5.0])
        self.assertEqual((evaluation.mae, evaluation.rmse, evaluation.n), (3.0, 3.0, 1))

    def test_perfect_predictions(self):
        evaluation = evaluate(naive_mean_baseline([4.0, 4.0]), [4.0, 4.0, 4.0])
        self.assertEqual((evaluation.mae, evaluation.rmse), (0.0, 0.0))

    def test_rmse_dominates_mae(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            mae, rmse = error_metrics(rng.standard_normal(int(rng.integers(1, 30))))
            self.assertGreaterEqual(rmse, mae - 1e-12)

    def test_empty_test_set(self):
        with self.assertRaises(EmptySeriesError):
            evaluate(MeanModel(mean=0.0), [])

    def test_baseline_predicts_training_mean(self):
        baseline = naive_mean_baseline([1.0, 2.0, 3.0])
        self.assertEqual(forecast_one_step(baseline, [100.0]), 2.0)
        with self.assertRaises(EmptySeriesError):
            naive_mean_baseline([])

    def test_history_supplies_lags(self):
        model = ArimaModel(p=1, d=0, q=0, ar_coeffs=(1.0,))
        evaluation = evaluate(model, [3.0, 4.0], history=[1.0, 2.0])
        self.assertEqual(evaluation.predictions, (2.0, 3.0))
        self.assertEqual(evaluation.n, 2)

    def test_ramp_beats_baseline(self):
        y = np.arange(200.0)
        train, test = y[:150], y[150:]
        ar = evaluate(fit_ar(train, 1), test, history=train)
        baseline = evaluate(naive_mean_baseline(train), test, history=train)
        self.assertLess(ar.rmse, 0.5 * baseline.rmse)

    def test_memoryless_intervals_defeat_every_model(self):
        """i.i.d. exponential gaps: nothing beats the training mean by more than 5%"""
        rng = np.random.default_rng(12)
        y = rng.exponential(600.0, 50_000)
        x = rng.exponential(1.0, (50_000, 1))
        results = compare_models({('All', 'interblock'): (y, x)}, ('ar', 'arima', 'arimax', 'nar', 'narx', 'mean'))
        rows = {row.model: row for row, _, _ in results}
        for kind, row in rows.items():
            self.assertGreaterEqual(row.rmse, 0.95 * rows['mean'].rmse, kind)


class NeuralTest(SimpleTestCase):
    """Test train_nar and train_narx"""

    def test_constant_series(self):
        y = np.full(40, 7.5)
        model = train_nar(y, 2, 4)
        self.assertLess(evaluate(model, y).rmse, 1e-6)
        self.assertEqual(forecast_one_step(model, y), 7.5)

    def test_noiseless_ar1(self):
        y = 10.0 * 0.9 ** np.arange(60)
        model = train_nar(y, 1, train_cfg=LIGHT)
        self.assertLess(evaluate(model, y).rmse, 0.01 * y.std())

    def test_narx_learns_identity_on_previous_input(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(0.0, 1.0, 300)
        y = np.r_[0.5, x[:-1]]
        model = train_narx(y, x, 1, train_cfg=LIGHT)

        fresh = rng.uniform(0.05, 0.95, 50)
        history_y = np.r_[0.5, fresh[:-1]]
        for t in range(1, len(fresh)):
            prediction = forecast_one_step(model, history_y[:t], exog=fresh[:t])
            self.assertLess(abs(prediction - fresh[t - 1]), 1e-3)

    def test_exogenous_inputs_pay_off(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal(2000)
        y = np.r_[0.0, x[:-1]] + 0.3 * rng.standard_normal(2000)
        results = compare_models({('All', 'size'): (y, x[:, None])}, ('arima', 'arimax', 'nar', 'narx'))
        rmse = {row.model: row.rmse for row, _, _ in results}
        self.assertLessEqual(rmse['narx'], 0.8 * rmse['nar'])
        self.assertLessEqual(rmse['arimax'], 0.9 * rmse['arima'])

    def test_training_is_deterministic(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal(200)
        y = np.r_[0.0, np.tanh(x[:-1])] + 0.1 * rng.standard_normal(200)
        cfg = TrainConfig(seed=5, max_iterations=50)
        self.assertEqual(train_nar(y, 2, 5, cfg), train_nar(y, 2, 5, cfg))
        self.assertEqual(train_narx(y, x, 2, 5, cfg), train_narx(y, x, 2, 5, cfg))
        self.assertNotEqual(train_nar(y, 2, 5, cfg), train_nar(y, 2, 5, TrainConfig(seed=6, max_iterations=50)))

    def test_evidence_updates_weight_decay(self):
        y = arma_series([0.6], [], 300, seed=16)
        model = train_nar(y, 2, 5, TrainConfig(seed=1, max_iterations=50, evidence=True, evidence_rounds=3))
        log = model.training_log
        self.assertTrue(math.isfinite(log.weight_decay))
        self.assertGreater(log.weight_decay, 0)
        self.assertNotEqual(log.weight_decay, TrainConfig().weight_decay)
        self.assertTrue(np.all(np.isfinite(predict_series(model, y))))

    def test_too_short(self):
        with self.assertRaises(EmptySeriesError):
            train_nar(np.arange(10.0), 2, 10)

    def test_weight_shapes_checked(self):
        with self.assertRaises(PreconditionError):
            NeuralNetModel(
                input_delays=2, exog_delays=0, hidden_units=2,
                hidden_weights=((1.0,), (1.0,)), hidden_biases=(0.0, 0.0),
                output_weights=(1.0, 1.0), output_bias=0.0, y_bounds=(0.0, 1.0),
            )


class PersistenceTest(SimpleTestCase):
    """Test save_model and load_model"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_round_trip_predicts_identically(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal(120)
        y = np.r_[0.0, x[:-1]] + 0.1 * rng.standard_normal(120)
        models = (
            fit_arimax(y, x, 1, 0, 1),
            train_narx(y, x, 2, 3, TrainConfig(max_iterations=20)),
            naive_mean_baseline(y),
        )
        for index, model in enumerate(models):
            path = save_model(model, self.dir / f"model{index}.json")
            loaded = load_model(path)
            self.assertEqual(loaded, model)
            np.testing.assert_array_equal(predict_series(loaded, y, x), predict_series(model, y, x))

    def test_unknown_kind(self):
        path = self.dir / 'bad.json'
        path.write_text(json.dumps({'kind': 'forest'}))
        with self.assertRaises(SchemaError):
            load_model(path)

    def test_inconsistent_orders(self):
        path = self.dir / 'bad.json'
        path.write_text(json.dumps({
            'kind': 'arima', 'p': 2, 'd': 0, 'q': 0, 'ar_coeffs': [0.5],
            'ma_coeffs': [], 'intercept': 0.0, 'noise_variance': 1.0,
        }))
        with self.assertRaises(SchemaError):
            load_model(path)

    def test_missing_and_malformed(self):
        with self.assertRaises(PreconditionError) as ctx:
            load_model(self.dir / 'absent.json')
        self.assertEqual(ctx.exception.code, 'missing_file')
        path = self.dir / 'broken.json'
        path.write_text('{"kind": ')
        with self.assertRaises(SchemaError):
            load_model(path)


class DatasetTest(SimpleTestCase):
    """Test block_dataset, intensity_series and confirmation_dataset"""

    def test_block_dataset_drops_first_block(self):
        blocks = [
            BlockRecord(height=h, timestamp=t, miner='A', size=s, tx_count=n, avg_fee=Decimal(f),
                        mempool=MempoolSnapshot(tx_count=m))
            for h, t, s, n, f, m in (
                (1, 0, 100, 1, '0.1', 5), (2, 600, 200, 2, '0.2', 6), (3, 900, 300, 3, '0.3', 7),
            )
        ]
        y, x = block_dataset(BlockSeries.from_blocks(blocks), 'size', ('interblock', 'avg_fee', 'mempool_tx_count'))
        np.testing.assert_array_equal(y, [200, 300])
        np.testing.assert_array_equal(x, [[600, 0.2, 6], [300, 0.3, 7]])

    def test_block_dataset_needs_two_blocks(self):
        block = BlockRecord(height=1, timestamp=0, miner='A', size=1, tx_count=1, avg_fee=Decimal('0'))
        with self.assertRaises(EmptySeriesError):
            block_dataset(BlockSeries.from_blocks([block]), 'size')

    def test_intensity_series(self):
        np.testing.assert_array_equal(intensity_series([0, 10, 70, 130, 150], 60), [2.0, 1.0])

    def test_confirmation_dataset_in_arrival_order(self):
        txs = [
            TxRecord(id='b', arrival_ts=20, confirm_ts=50, fee=Decimal('0.0002'), size=300),
            TxRecord(id='a', arrival_ts=10, confirm_ts=100, fee=Decimal('0.0001'), size=200),
            TxRecord(id='c', arrival_ts=15, confirm_ts=None, fee=Decimal('0.0001'), size=200),
        ]
        y, x = confirmation_dataset(txs)
        np.testing.assert_array_equal(y, [90, 30])
        np.testing.assert_array_equal(x, [[200, 0.0001], [300, 0.0002]])


class CompareModelsTest(SimpleTestCase):
    """Test compare_models and comparison_table"""

    def test_workers_do_not_change_results(self):
        y = arma_series([0.5], [], 400, seed=18)
        x = np.random.default_rng(19).standard_normal((400, 1))
        datasets = {('Working', 'size'): (y, x), ('All', 'size'): (y[::-1].copy(), x)}
        kinds = ('ar', 'arimax', 'nar', 'mean')
        cfg = TrainConfig(max_iterations=30)
        serial = [row for row, _, _ in compare_models(datasets, kinds, train_cfg=cfg, workers=1)]
        parallel = [row for row, _, _ in compare_models(datasets, kinds, train_cfg=cfg, workers=4)]
        self.assertEqual(serial, parallel)
        self.assertEqual([(r.day_class, r.model) for r in serial][:4], [('Working', k) for k in kinds])
        self.assertEqual(serial[0].n, 60)

    def test_unknown_model(self):
        with self.assertRaises(PreconditionError):
            compare_models({('All', 'size'): (np.arange(50.0), None)}, ('forest',))
        with self.assertRaises(PreconditionError):
            fit_model('narx', np.arange(50.0))

    def test_table_layout(self):
        rows = [
            ComparisonRow('narx', 'Weekend', 'size', 0.1, 0.2, 10),
            ComparisonRow('narx', 'All', 'size', 0.3, 0.4, 10),
            ComparisonRow('ar', 'Weekend', 'size', 0.5, 0.6, 10),
        ]
        table = comparison_table(rows)
        self.assertEqual(list(table), ['model', 'weekend_size_mae', 'weekend_size_rmse', 'all_size_mae', 'all_size_rmse'])
        self.assertEqual(table['model'], ['narx', 'ar'])
        self.assertEqual(table['all_size_rmse'], [0.4, None])
