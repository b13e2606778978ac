import math
from decimal import Decimal

import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import solve_toeplitz

from core.exceptions import EmptySeriesError, PreconditionError
from core.models import BlockRecord, BlockSeries, DayClass, TxRecord
from explore.models import Consistency, PoissonFit
from explore.services.correlation import acf, order_selection, pacf
from explore.services.distributions import ecdf, fit_exponential
from explore.services.intensity import fit_poisson_slots, poisson_consistency
from explore.services.miners import (
    attribute_relation,
    interblock_by_miner,
    miner_block_counts,
    summary_by_miner,
)
from explore.services.transactions import (
    confirmation_by_fee_quartile,
    tx_confirmation_times,
    tx_interarrival_times,
)
from simulate.models import ArrivalModel, MinerPolicy, SimConfig
from simulate.services.arrivals import sample_arrivals
from simulate.services.engine import run_simulation
from simulate.services.scenarios import default_config

THURSDAY = 1551916800


def block(height, timestamp, miner='A', size=1_000_000, tx_count=1000, avg_fee='0.0001'):
    return BlockRecord(
        height=height, timestamp=timestamp, miner=miner, size=size,
        tx_count=tx_count, avg_fee=Decimal(avg_fee),
    )


def series_of(*blocks):
    return BlockSeries.from_blocks(blocks)


def confirmed_tx(ident, fee, wait, arrival=0):
    return TxRecord(id=ident, arrival_ts=arrival, confirm_ts=arrival + wait, fee=Decimal(fee), size=250)


def ar_series(phi, n, seed, intercept=0.0):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n + 200)
    y = np.zeros(n + 200)
    for t in range(len(phi), n + 200):
        y[t] = sum(p * y[t - k - 1] for k, p in enumerate(phi)) + noise[t]
    return y[200:] + intercept


def blocks_only(seed, horizon, pools=None, **kwargs):
    return SimConfig(
        seed=seed,
        horizon=horizon,
        block_interval_mean=600.0,
        tx_arrival=kwargs.pop('tx_arrival', ArrivalModel.poisson(1e-9)),
        fee_dist=(-9.9, 1.0),
        tx_size_dist=(6.0, 0.6),
        pools=pools or (MinerPolicy('A', 1.0, 1_000_000),),
        **kwargs,
    )


class EcdfTest(SimpleTestCase):
    """Test ecdf"""

    def test_single_sample(self):
        self.assertEqual(ecdf([5]).evaluate(5), 1.0)

    def test_order_statistics(self):
        self.assertEqual(ecdf([1, 2, 3, 4]).evaluate(2), 0.5)

    def test_ties(self):
        self.assertAlmostEqual(ecdf([1, 1, 2]).evaluate(1), 2 / 3)

    def test_below_and_between_samples(self):
        table = ecdf([1, 2, 3, 4])
        self.assertEqual(table.evaluate(0.5), 0.0)
        self.assertEqual(table.evaluate(2.5), 0.5)
        self.assertEqual(table.evaluate(100), 1.0)

    def test_permutation_invariant_and_monotone(self):
        rng = np.random.default_rng(1)
        samples = rng.exponential(size=200).round(2)
        table = ecdf(samples)
        self.assertEqual(table, ecdf(rng.permutation(samples)))
        self.assertTrue(all(a <= b for a, b in zip(table.probabilities, table.probabilities[1:])))
        self.assertEqual(table.probabilities[-1], 1.0)

    def test_empty(self):
        with self.assertRaises(EmptySeriesError):
            ecdf([])


class FitExponentialTest(SimpleTestCase):
    """Test fit_exponential"""

    def test_rate_is_inverse_mean(self):
        self.assertAlmostEqual(fit_exponential([2, 2, 2]).rate, 0.5)

    def test_exact_quantiles_fit_closely(self):
        n = 1000
        quantiles = -np.log(1 - (np.arange(1, n + 1) - 0.5) / n)
        self.assertLess(fit_exponential(quantiles).ks_stat, 0.01)

    def test_two_atoms(self):
        fit = fit_exponential([1, 3])
        self.assertAlmostEqual(fit.rate, 0.5)
        # largest gap is just below the first atom: F(1) - 0
        self.assertAlmostEqual(fit.ks_stat, 1 - math.exp(-0.5))

    def test_scale_equivariance(self):
        samples = np.random.default_rng(3).exponential(5.0, size=500)
        fit = fit_exponential(samples)
        scaled = fit_exponential(samples * 7)
        self.assertAlmostEqual(scaled.rate, fit.rate / 7)
        self.assertAlmostEqual(scaled.ks_stat, fit.ks_stat, places=12)

    def test_non_positive_samples(self):
        with self.assertRaises(PreconditionError):
            fit_exponential([1, 0, 2])
        fit = fit_exponential([1, 0, -4, 3], exclude_nonpositive=True)
        self.assertEqual(fit.n, 2)
        self.assertEqual(fit.n_excluded, 2)
        self.assertAlmostEqual(fit.rate, 0.5)

    def test_empty(self):
        with self.assertRaises(EmptySeriesError):
            fit_exponential([])


class AcfTest(SimpleTestCase):
    """Test acf and pacf"""

    def test_lag_zero_is_one(self):
        self.assertEqual(acf([3, 1, 4, 1, 5], 2).values[0], 1.0)

    def test_hand_computed_lag_one(self):
        self.assertAlmostEqual(acf([1, 2, 3, 4], 1).values[1], 0.25)

    def test_white_noise(self):
        noise = np.random.default_rng(12).standard_normal(10_000)
        result = acf(noise, 20)
        bound = 4 / math.sqrt(len(noise))
        self.assertTrue(all(abs(r) < bound for r in result.values[1:]))
        self.assertAlmostEqual(result.confidence_band, 1.96 / 100)

    def test_affine_invariance(self):
        y = ar_series([0.6], 500, seed=2)
        np.testing.assert_allclose(acf(-3 * y + 10, 5).values, acf(y, 5).values, atol=1e-12)

    def test_values_bounded(self):
        result = acf(ar_series([0.9], 300, seed=4), 30)
        self.assertTrue(all(-1 <= r <= 1 for r in result.values))

    def test_too_short(self):
        with self.assertRaises(EmptySeriesError):
            acf([1, 2, 3], 3)

    def test_partial_lag_beyond_half_the_series(self):
        y = [1, 3, 2, 5, 4, 6]
        self.assertEqual(len(pacf(y, 3).values), 4)
        with self.assertRaises(EmptySeriesError):
            pacf(y, 4)

    def test_constant_series_partial(self):
        with self.assertRaises(PreconditionError):
            pacf([2, 2, 2, 2], 1)

    def test_constant_series(self):
        with self.assertRaises(PreconditionError):
            acf([2, 2, 2, 2], 1)

    def test_pacf_matches_yule_walker(self):
        """The lag-k partial autocorrelation is the last order-k Yule-Walker coefficient"""
        y = ar_series([0.5, -0.3], 2000, seed=5)
        r = np.asarray(acf(y, 4).values)
        partial = pacf(y, 4).values
        for k in range(1, 5):
            coefficients = solve_toeplitz(r[:k], r[1:k + 1])
            self.assertAlmostEqual(partial[k], coefficients[-1], places=10)

    def test_pacf_of_ar1(self):
        partial = pacf(ar_series([0.6], 5000, seed=6), 3).values
        self.assertAlmostEqual(partial[1], 0.6, delta=0.05)
        self.assertLess(abs(partial[2]), 0.05)

    def test_order_selection_finds_ar_order(self):
        y = ar_series([0.5, -0.3], 5000, seed=7)
        p, q = order_selection(y, 10)
        self.assertGreaterEqual(p, 2)
        self.assertGreaterEqual(q, 1)
        self.assertLess(abs(pacf(y, 3).values[3]), 0.06)


class FitPoissonSlotsTest(SimpleTestCase):
    """Test fit_poisson_slots"""

    def test_hand_partition(self):
        fit = fit_poisson_slots([10, 20, 70, 80], 60, window=(10, 130))
        self.assertEqual(fit.counts, (2, 2))
        self.assertEqual(fit.intensity, 2)

    def test_trailing_partial_slot_dropped(self):
        fit = fit_poisson_slots([0, 10, 70, 130, 150], 60)
        self.assertEqual(fit.n_slots, 2)
        self.assertEqual(fit.counts, (2, 1))

    def test_no_events(self):
        fit = fit_poisson_slots([], 100, window=(0, 500))
        self.assertEqual(fit.n_slots, 5)
        self.assertEqual(fit.intensity, 0)

    def test_span_shorter_than_a_slot(self):
        with self.assertRaises(PreconditionError):
            fit_poisson_slots([0, 50], 60)

    def test_homogeneous_poisson(self):
        rate, slot, horizon = 0.01, 1000, 2_000_000
        times = sample_arrivals(ArrivalModel.poisson(rate), horizon, seed=8)
        fit = fit_poisson_slots(times, slot, window=(0, horizon))
        expected = rate * slot
        self.assertLess(abs(fit.intensity - expected), 3 * math.sqrt(expected / fit.n_slots))
        self.assertAlmostEqual(fit.dispersion_index, 1.0, delta=0.15)

    def test_histogram_method_on_poisson_counts(self):
        times = sample_arrivals(ArrivalModel.poisson(0.01), 2_000_000, seed=9)
        fit = fit_poisson_slots(times, 1000, window=(0, 2_000_000), method='histogram')
        self.assertEqual(fit.method, 'histogram')
        self.assertAlmostEqual(fit.intensity, 10, delta=0.6)

    def test_unknown_method(self):
        with self.assertRaises(PreconditionError):
            fit_poisson_slots([0, 100], 10, method='median')


class PoissonConsistencyTest(SimpleTestCase):
    """Test poisson_consistency"""

    def test_published_intensities_are_inconsistent(self):
        ratio, verdict = poisson_consistency(
            PoissonFit(slot_len=6000, intensity=9.44707, n_slots=1),
            PoissonFit(slot_len=60000, intensity=103.184, n_slots=1),
            0.05,
        )
        self.assertAlmostEqual(ratio, 1.0922, places=4)
        self.assertEqual(verdict, Consistency.INCONSISTENT)

    def test_exact_scaling(self):
        for tolerance in (0.0, 0.05):
            ratio, verdict = poisson_consistency(
                PoissonFit(slot_len=6000, intensity=5, n_slots=1),
                PoissonFit(slot_len=60000, intensity=50, n_slots=1),
                tolerance,
            )
            self.assertAlmostEqual(ratio, 1.0)
            self.assertEqual(verdict, Consistency.CONSISTENT)

    def test_zero_intensity(self):
        with self.assertRaises(PreconditionError):
            poisson_consistency(
                PoissonFit(slot_len=60, intensity=0, n_slots=1),
                PoissonFit(slot_len=600, intensity=1, n_slots=1),
                0.05,
            )

    def test_equal_slot_lengths(self):
        fit = PoissonFit(slot_len=60, intensity=1, n_slots=1)
        with self.assertRaises(PreconditionError):
            poisson_consistency(fit, fit, 0.05)

    def test_poisson_data_is_consistent(self):
        """500 large slots per trial, several seeds"""
        horizon = 500 * 60000
        for seed in range(5):
            times = sample_arrivals(ArrivalModel.poisson(1 / 600), horizon, seed=seed)
            fit_a = fit_poisson_slots(times, 6000, window=(0, horizon))
            fit_b = fit_poisson_slots(times, 60000, window=(0, horizon))
            self.assertEqual(poisson_consistency(fit_a, fit_b, 0.05)[1], Consistency.CONSISTENT)

    def test_simulated_homogeneous_blocks(self):
        output = run_simulation(blocks_only(seed=31, horizon=200 * 60000))
        timestamps = output.blocks.timestamps
        fit_a = fit_poisson_slots(timestamps, 6000)
        fit_b = fit_poisson_slots(timestamps, 60000)
        ratio, verdict = poisson_consistency(fit_a, fit_b, 0.05)
        self.assertLess(abs(ratio - 1), 0.03)
        self.assertEqual(verdict, Consistency.CONSISTENT)

    def test_modulated_block_intervals(self):
        """Block rate that follows a slow two-state chain breaks the scaling"""
        switching = ArrivalModel.mmpp2(1e-6, 1e-6, 1 / 10800, 1 / 10800)
        output = run_simulation(blocks_only(
            seed=32, horizon=200 * 60000, tx_arrival=switching, interval_modulation=0.5,
        ))
        timestamps = output.blocks.timestamps
        fit_a = fit_poisson_slots(timestamps, 6000, method='histogram')
        fit_b = fit_poisson_slots(timestamps, 60000, method='histogram')
        ratio, verdict = poisson_consistency(fit_a, fit_b, 0.05)
        self.assertGreater(abs(ratio - 1), 0.05)
        self.assertEqual(verdict, Consistency.INCONSISTENT)
        self.assertGreater(fit_a.dispersion_index, 1.5)


class MinerStatisticsTest(SimpleTestCase):
    """Test summary_by_miner, miner_block_counts and interblock_by_miner"""

    def test_singleton(self):
        [row] = summary_by_miner(series_of(block(1, 0)))
        self.assertEqual(row.count, 1)
        self.assertEqual((row.size.mean, row.size.min, row.size.max), (1.0, 1.0, 1.0))
        self.assertEqual(row.tx_count.mean, 1000)
        self.assertAlmostEqual(row.avg_fee.mean, 1e-4)
        self.assertEqual((row.size.std, row.tx_count.std, row.avg_fee.std), (0.0, 0.0, 0.0))

    def test_sample_standard_deviation(self):
        [row] = summary_by_miner(series_of(block(1, 0, size=1_000_000), block(2, 600, size=3_000_000)))
        self.assertAlmostEqual(row.size.mean, 2.0)
        self.assertAlmostEqual(row.size.std, math.sqrt(2))
        self.assertLessEqual(row.size.min, row.size.mean)
        self.assertLessEqual(row.size.mean, row.size.max)

    def test_one_miner(self):
        series = series_of(*(block(h, 600 * h) for h in range(7)))
        rows = summary_by_miner(series)
        self.assertEqual([(r.miner, r.count) for r in rows], [('A', 7)])

    def test_rows_ordered_by_block_count(self):
        series = series_of(block(1, 0, 'B'), block(2, 1, 'A'), block(3, 2, 'A'), block(4, 3, '?'))
        self.assertEqual([r.miner for r in summary_by_miner(series)], ['A', '?', 'B'])

    def test_empty_summary(self):
        with self.assertRaises(EmptySeriesError):
            summary_by_miner(BlockSeries())

    def test_counts(self):
        series = series_of(block(1, 0, 'A'), block(2, 1, 'A'), block(3, 2, 'B'), block(4, 3, 'A'))
        self.assertEqual(miner_block_counts(series), {'A': 3, 'B': 1})
        self.assertEqual(miner_block_counts(BlockSeries()), {})

    def test_counts_by_day_class(self):
        saturday = THURSDAY + 2 * 86400
        series = series_of(block(1, THURSDAY, 'A'), block(2, saturday, 'A'), block(3, saturday + 60, 'B'))
        counts = miner_block_counts(series, by_day_class=True)
        self.assertEqual(counts[DayClass.WORKING], {'A': 1})
        self.assertEqual(counts[DayClass.WEEKEND], {'A': 1, 'B': 1})
        self.assertEqual(sum(sum(c.values()) for c in counts.values()), 3)

    def test_simulated_shares(self):
        pools = (MinerPolicy('A', 0.6, 1_000_000), MinerPolicy('B', 0.4, 1_000_000))
        output = run_simulation(blocks_only(seed=33, horizon=20_500 * 600, pools=pools))
        counts = miner_block_counts(output.blocks)
        total = sum(counts.values())
        self.assertEqual(total, len(output.blocks))
        self.assertGreaterEqual(total, 20_000)
        self.assertAlmostEqual(counts['A'] / total, 0.6, delta=0.02)
        self.assertAlmostEqual(counts['B'] / total, 0.4, delta=0.02)

    def test_interblock_by_miner(self):
        series = series_of(block(1, 0, 'A'), block(2, 100, 'B'), block(3, 90, 'A'), block(4, 400, 'B'))
        rows = {row.miner: row for row in interblock_by_miner(series)}
        self.assertEqual(rows['B'].count, 2)
        self.assertEqual(rows['B'].mean, 205)
        self.assertEqual(rows['A'].min, -10)
        self.assertEqual(rows['A'].n_nonpositive, 1)


class AttributeRelationTest(SimpleTestCase):
    """Test attribute_relation"""

    def test_pairs_preceding_gap_with_block(self):
        series = series_of(
            block(1, 0, size=10), block(2, 100, size=200), block(3, 400, size=600), block(4, 450, size=100),
        )
        relation = attribute_relation(series, 'size')
        self.assertEqual(relation.x, (100.0, 300.0, 50.0))
        self.assertEqual(relation.y, (200.0, 600.0, 100.0))
        self.assertEqual(len(relation.miners), 3)
        self.assertAlmostEqual(relation.pearson, 1.0)
        self.assertAlmostEqual(relation.spearman, 1.0)

    def test_between_block_attributes(self):
        series = series_of(*(block(h, 600 * h, size=1000 * h, tx_count=2 * h) for h in range(1, 6)))
        relation = attribute_relation(series, 'tx_count', against='size')
        self.assertEqual(len(relation.x), 5)
        self.assertAlmostEqual(relation.pearson, 1.0)

    def test_constant_column_has_no_correlation(self):
        series = series_of(*(block(h, 600 * h) for h in range(5)))
        self.assertTrue(math.isnan(attribute_relation(series, 'size').pearson))


class FeeQuartileTest(SimpleTestCase):
    """Test confirmation_by_fee_quartile"""

    def test_equal_fees_are_degenerate(self):
        txs = [confirmed_tx(str(i), '0.0001', 60 * i) for i in range(8)]
        report = confirmation_by_fee_quartile(txs)
        self.assertTrue(report.degenerate)
        self.assertEqual([b.count for b in report.buckets], [8, 0, 0, 0])
        self.assertIsNone(report.buckets[3].mean)

    def test_hand_assignment(self):
        txs = [confirmed_tx(str(fee), str(fee), wait) for fee, wait in zip((1, 2, 3, 4), (40, 30, 20, 10))]
        report = confirmation_by_fee_quartile(txs)
        self.assertEqual(report.means, (40, 30, 20, 10))
        self.assertEqual(report.breakpoints, (1.75, 2.5, 3.25))
        self.assertEqual(report.overall_mean, 25)
        self.assertFalse(report.degenerate)

    def test_breakpoint_ties_go_to_lower_bucket(self):
        txs = [confirmed_tx(str(i), fee, 10) for i, fee in enumerate(('1', '1', '1', '2', '3', '4', '5', '6', '7'))]
        report = confirmation_by_fee_quartile(txs)
        # Q1 is 1, so all three fee-1 transactions belong to the first bucket
        self.assertEqual(report.breakpoints[0], 1.0)
        self.assertEqual(report.buckets[0].count, 3)

    def test_buckets_partition_confirmed_set(self):
        rng = np.random.default_rng(10)
        txs = [
            confirmed_tx(str(i), f"{rng.lognormal(-9, 1):.8f}", int(rng.integers(1, 5000)))
            for i in range(101)
        ]
        txs.append(TxRecord(id='pending', arrival_ts=0, confirm_ts=None, fee=Decimal('1'), size=100))
        report = confirmation_by_fee_quartile(txs)
        self.assertEqual(sum(b.count for b in report.buckets), 101)
        self.assertEqual(report.total, 101)

    def test_too_few_confirmed(self):
        with self.assertRaises(PreconditionError):
            confirmation_by_fee_quartile([confirmed_tx(str(i), '1', 10) for i in range(3)])

    def test_greedy_packing_favours_high_fees(self):
        """Default scenario: confirmation time falls from Q1 to Q4, Q4 under half of Q1"""
        output = run_simulation(default_config(seed=42, horizon=2 * 24 * 3600))
        means = confirmation_by_fee_quartile(output.txs).means
        self.assertTrue(all(a > b for a, b in zip(means, means[1:])), means)
        self.assertLess(means[3], 0.5 * means[0])


class TransactionSeriesTest(SimpleTestCase):
    """Test tx_interarrival_times and tx_confirmation_times"""

    def test_interarrival(self):
        txs = [confirmed_tx('a', '1', 5, arrival=10), confirmed_tx('b', '1', 5, arrival=4), confirmed_tx('c', '1', 5, arrival=30)]
        np.testing.assert_array_equal(tx_interarrival_times(txs), [6, 20])

    def test_confirmation_in_arrival_order(self):
        txs = [
            confirmed_tx('a', '1', 50, arrival=10),
            confirmed_tx('b', '1', 7, arrival=4),
            TxRecord(id='c', arrival_ts=1, confirm_ts=None, fee=Decimal('1'), size=1),
        ]
        np.testing.assert_array_equal(tx_confirmation_times(txs), [7, 50])
