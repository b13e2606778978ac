from datetime import datetime, timezone
from decimal import Decimal

from django.test import SimpleTestCase

from core.exceptions import DuplicateHeightError, EmptySeriesError
from core.models import BlockRecord, BlockSeries, DayClass, MempoolSnapshot, TxRecord
from core.services.series import (
    attribute_column,
    derive_interblock_times,
    tag_day_class,
    validate_series,
)


def utc(*args):
    return int(datetime(*args, tzinfo=timezone.utc).timestamp())


def make_block(height, timestamp, miner='F2Pool', size=1_000_000, tx_count=2000,
               avg_fee='0.00010000', mempool=None):
    return BlockRecord(
        height=height,
        timestamp=timestamp,
        miner=miner,
        size=size,
        tx_count=tx_count,
        avg_fee=Decimal(avg_fee),
        mempool=mempool or MempoolSnapshot(),
    )


class InterblockTimesTest(SimpleTestCase):
    """Test derive_interblock_times"""

    def test_direct_subtraction(self):
        """Gaps are consecutive timestamp differences"""
        blocks = [make_block(i, ts) for i, ts in enumerate([0, 300, 900])]
        self.assertEqual(derive_interblock_times(blocks), [300, 600])

    def test_identical_timestamps(self):
        blocks = [make_block(0, 100), make_block(1, 100)]
        self.assertEqual(derive_interblock_times(blocks), [0])

    def test_negative_gap_is_preserved_and_flagged(self):
        """Non-monotonic miner timestamps keep their sign"""
        series = BlockSeries.from_blocks(
            make_block(i, ts) for i, ts in enumerate([600, 550, 1200])
        )
        self.assertEqual(list(series.interblock), [-50, 650])
        self.assertEqual(validate_series(series).n_negative_intervals, 1)

    def test_too_few_blocks(self):
        with self.assertRaises(EmptySeriesError):
            derive_interblock_times([make_block(0, 0)])

    def test_translation_invariance_and_telescoping_sum(self):
        """Shifting every timestamp leaves gaps unchanged; gaps sum to the span"""
        stamps = [1551916800, 1551917400, 1551917350, 1551918900, 1551920000]
        blocks = [make_block(i, ts) for i, ts in enumerate(stamps)]
        shifted = [make_block(i, ts + 123456) for i, ts in enumerate(stamps)]
        gaps = derive_interblock_times(blocks)
        self.assertEqual(gaps, derive_interblock_times(shifted))
        self.assertEqual(sum(gaps), stamps[-1] - stamps[0])


class DayClassTest(SimpleTestCase):
    """Test tag_day_class"""

    def test_saturday_is_weekend(self):
        self.assertIs(tag_day_class(utc(2019, 3, 9, 12, 0)), DayClass.WEEKEND)

    def test_dataset_start_thursday_is_working(self):
        self.assertIs(tag_day_class(utc(2019, 3, 7, 0, 0)), DayClass.WORKING)

    def test_sunday_last_minute_is_weekend(self):
        self.assertIs(tag_day_class(utc(2019, 3, 10, 23, 59)), DayClass.WEEKEND)

    def test_monday_midnight_is_working(self):
        self.assertIs(tag_day_class(utc(2019, 3, 11, 0, 0)), DayClass.WORKING)

    def test_weekly_periodicity(self):
        """Every timestamp maps to the same class one week later"""
        start = utc(2019, 3, 7)
        for offset in range(0, 14 * 86400, 3607):
            ts = start + offset
            self.assertIs(tag_day_class(ts), tag_day_class(ts + 7 * 86400))

    def test_parse_is_case_insensitive(self):
        self.assertIs(DayClass.parse('weekend'), DayClass.WEEKEND)
        self.assertIs(DayClass.parse('Working'), DayClass.WORKING)
        with self.assertRaises(ValueError):
            DayClass.parse('holiday')


class ValidateSeriesTest(SimpleTestCase):
    """Test validate_series"""

    def test_well_formed_series(self):
        series = BlockSeries.from_blocks(make_block(i, 600 * i) for i in range(3))
        report = validate_series(series)
        self.assertEqual(report.n_records, 3)
        self.assertEqual(report.n_negative_intervals, 0)
        self.assertEqual(report.n_schema_errors, 0)
        self.assertTrue(report.is_clean)

    def test_negative_size_names_the_field(self):
        series = BlockSeries.from_blocks([make_block(0, 0), make_block(1, 600, size=-5)])
        report = validate_series(series)
        self.assertGreaterEqual(report.n_schema_errors, 1)
        self.assertTrue(any('size' in message for message in report.messages))

    def test_empty_mempool_with_bytes_is_inconsistent(self):
        bad = MempoolSnapshot(tx_count=0, total_bytes=10, total_fee=Decimal('0'))
        series = BlockSeries.from_blocks([make_block(0, 0, mempool=bad)])
        self.assertEqual(validate_series(series).n_schema_errors, 1)

    def test_input_is_not_mutated(self):
        blocks = [make_block(i, ts) for i, ts in enumerate([0, -10, 50])]
        series = BlockSeries.from_blocks(blocks)
        before = series.blocks
        validate_series(series)
        self.assertEqual(series.blocks, before)


class BlockSeriesTest(SimpleTestCase):
    """Test BlockSeries construction and columnar views"""

    def test_from_blocks_sorts_by_height(self):
        series = BlockSeries.from_blocks([make_block(2, 20), make_block(0, 0), make_block(1, 10)])
        self.assertEqual(series.heights, [0, 1, 2])

    def test_duplicate_heights_rejected(self):
        with self.assertRaises(DuplicateHeightError):
            BlockSeries.from_blocks([make_block(1, 0), make_block(1, 5)])

    def test_attribute_columns(self):
        series = BlockSeries.from_blocks([
            make_block(0, 0, size=100, avg_fee='0.00000010'),
            make_block(1, 600, size=300, avg_fee='0.00000030'),
        ])
        self.assertEqual(attribute_column(series, 'size').tolist(), [100.0, 300.0])
        self.assertEqual(attribute_column(series, 'interblock').tolist(), [600.0])
        self.assertAlmostEqual(attribute_column(series, 'avg_fee')[1], 3e-7)


class TxRecordTest(SimpleTestCase):
    """Test TxRecord helpers"""

    def test_confirmation_time(self):
        tx = TxRecord(id='a', arrival_ts=100, confirm_ts=700, fee=Decimal('0.0001'), size=250)
        self.assertTrue(tx.confirmed)
        self.assertEqual(tx.confirmation_time, 600)

    def test_unconfirmed(self):
        tx = TxRecord(id='b', arrival_ts=100, confirm_ts=None, fee=Decimal('0.0001'), size=250)
        self.assertFalse(tx.confirmed)
        self.assertIsNone(tx.confirmation_time)
