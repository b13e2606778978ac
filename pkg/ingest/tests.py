import random
import tempfile
from decimal import Decimal
from pathlib import Path
from unittest import mock

import requests
from django.test import SimpleTestCase

from core.exceptions import (
    ChainpulseError,
    DuplicateHeightError,
    HeaderMismatchError,
    HeightBeyondTipError,
    NodeAuthError,
    ParseError,
    PreconditionError,
)
from core.models import BlockRecord, BlockSeries, DayClass, MempoolSnapshot
from core.services.series import tag_day_class
from ingest.config import BLOCK_COLUMNS, TX_COLUMNS
from ingest.models import NodeEndpoint, SplitSpec
from ingest.services.csv_io import format_btc, load_block_csv, load_tx_csv, save_block_csv, save_tx_csv
from ingest.services.node import BitcoinRPC, collect_from_node, miner_from_coinbase
from ingest.services.split import (
    filter_day_class,
    merge_series,
    split_counts,
    split_dataset,
    stratified_split,
)

THURSDAY = 1551916800  # 2019-03-07T00:00:00Z
BLOCK_HEADER = ','.join(BLOCK_COLUMNS)
TX_HEADER = ','.join(TX_COLUMNS)


def synthetic_series(count, start=THURSDAY, gap=600, miners=('F2Pool', 'AntPool')):
    return BlockSeries(blocks=tuple(
        BlockRecord(
            height=h,
            timestamp=start + gap * h,
            miner=miners[h % len(miners)],
            size=1_000_000,
            tx_count=2000,
            avg_fee=Decimal('0.0001'),
            mempool=MempoolSnapshot(),
        )
        for h in range(count)
    ))


class CsvTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, name, text):
        path = Path(self.tmp.name) / name
        path.write_text(text, encoding='utf-8', newline='')
        return path


class LoadBlockCsvTest(CsvTestCase):
    """Test load_block_csv"""

    def test_parses_example_row(self):
        """The documented example row maps field by field"""
        path = self.write('b.csv', BLOCK_HEADER + '\n630001,1588250000,F2Pool,1240000,2300,0.00018,12000,45000000,1.2\n')
        series = load_block_csv(path)
        self.assertEqual(len(series), 1)
        block = series[0]
        self.assertEqual(block.height, 630001)
        self.assertEqual(block.timestamp, 1588250000)
        self.assertEqual(block.miner, 'F2Pool')
        self.assertEqual(block.size, 1240000)
        self.assertEqual(block.tx_count, 2300)
        self.assertEqual(block.avg_fee, Decimal('0.00018'))
        self.assertEqual(block.mempool.tx_count, 12000)
        self.assertEqual(block.mempool.total_bytes, 45000000)
        self.assertEqual(block.mempool.total_fee, Decimal('1.2'))
        self.assertTrue(series.report.is_clean)

    def test_empty_data_section(self):
        series = load_block_csv(self.write('b.csv', BLOCK_HEADER + '\n'))
        self.assertEqual(len(series), 0)
        self.assertTrue(series.report.messages)

    def test_blank_miner_is_unknown(self):
        path = self.write('b.csv', BLOCK_HEADER + '\n1,1588250000,,100,1,0,0,0,0\n')
        self.assertEqual(load_block_csv(path)[0].miner, '?')

    def test_rows_sorted_by_height(self):
        path = self.write('b.csv', BLOCK_HEADER + '\n2,1200,A,1,1,0,0,0,0\n1,600,B,1,1,0,0,0,0\n')
        self.assertEqual(load_block_csv(path).heights, [1, 2])

    def test_missing_file(self):
        with self.assertRaises(PreconditionError):
            load_block_csv(Path(self.tmp.name) / 'absent.csv')

    def test_header_mismatch_lists_both(self):
        path = self.write('b.csv', 'height,timestamp,miner\n1,2,A\n')
        with self.assertRaises(HeaderMismatchError) as ctx:
            load_block_csv(path)
        self.assertIn('mempool_fee_btc', str(ctx.exception))
        self.assertIn('height,timestamp,miner', str(ctx.exception))

    def test_unparseable_cell_reports_row_and_column(self):
        path = self.write('b.csv', BLOCK_HEADER + '\n1,600,A,1,1,0,0,0,0\n2,1200,A,big,1,0,0,0,0\n')
        with self.assertRaises(ParseError) as ctx:
            load_block_csv(path)
        self.assertEqual(ctx.exception.row, 3)
        self.assertEqual(ctx.exception.column, 'size_bytes')

    def test_negative_interval_counted_in_report(self):
        path = self.write('b.csv', BLOCK_HEADER + '\n1,600,A,1,1,0,0,0,0\n2,550,A,1,1,0,0,0,0\n3,1200,A,1,1,0,0,0,0\n')
        self.assertEqual(load_block_csv(path).report.n_negative_intervals, 1)

    def test_negative_size_is_rejected_and_counted(self):
        """A row with a negative size is left out and reported; the other rows load"""
        path = self.write('b.csv', BLOCK_HEADER + '\n1,600,A,1,1,0,0,0,0\n2,1200,A,-5,1,0,0,0,0\n3,1800,A,1,1,0,0,0,0\n')
        series = load_block_csv(path)
        self.assertEqual(series.heights, [1, 3])
        self.assertEqual(series.report.n_schema_errors, 1)
        self.assertFalse(series.report.is_clean)
        self.assertTrue(any('row 3' in m and 'size_bytes' in m for m in series.report.messages))

    def test_duplicate_height_rejected(self):
        path = self.write('b.csv', BLOCK_HEADER + '\n1,600,A,1,1,0,0,0,0\n1,700,A,1,1,0,0,0,0\n')
        with self.assertRaises(DuplicateHeightError):
            load_block_csv(path)

    def test_canonical_round_trip_is_byte_identical(self):
        text = (
            BLOCK_HEADER + '\n'
            '630001,1588250000,F2Pool,1240000,2300,0.00018,12000,45000000,1.2\n'
            '630002,1588250420,?,998000,1804,0.0001234,0,0,0\n'
            '630003,1588250380,"Pool, Inc",5,1,0,7,1800,0.01\n'
        )
        source = self.write('in.csv', text)
        target = Path(self.tmp.name) / 'out.csv'
        save_block_csv(load_block_csv(source), target)
        self.assertEqual(target.read_bytes(), source.read_bytes())


class LoadTxCsvTest(CsvTestCase):
    """Test load_tx_csv"""

    def test_blank_confirmation_is_unconfirmed(self):
        txs = load_tx_csv(self.write('t.csv', TX_HEADER + '\na,100,,0.0001,250\n'))
        self.assertFalse(txs[0].confirmed)

    def test_confirmation_before_arrival_is_rejected(self):
        txs = load_tx_csv(self.write('t.csv', TX_HEADER + '\na,100,50,0.0001,250\nb,100,700,0.0002,300\n'))
        self.assertEqual(len(txs), 1)
        self.assertEqual(txs.report.n_schema_errors, 1)

    def test_file_order_kept(self):
        txs = load_tx_csv(self.write(
            't.csv', TX_HEADER + '\nc,300,900,0.0001,250\na,100,700,0.0002,300\nb,200,,0.00005,120\n'
        ))
        self.assertEqual([tx.id for tx in txs], ['c', 'a', 'b'])

    def test_zero_size_is_rejected_and_counted(self):
        txs = load_tx_csv(self.write('t.csv', TX_HEADER + '\na,100,700,0.0001,0\nb,100,700,0.0002,300\n'))
        self.assertEqual([tx.id for tx in txs], ['b'])
        self.assertEqual(txs.report.n_schema_errors, 1)
        self.assertIn('size_bytes', txs.report.messages[0])

    def test_round_trip(self):
        text = TX_HEADER + '\na,100,700,0.0001,250\nb,200,,0.00000001,120\n'
        source = self.write('t.csv', text)
        target = Path(self.tmp.name) / 'out.csv'
        save_tx_csv(load_tx_csv(source), target)
        self.assertEqual(target.read_text(), text)

    def test_format_btc(self):
        self.assertEqual(format_btc(Decimal('0.00018000')), '0.00018')
        self.assertEqual(format_btc(Decimal('0E-8')), '0')
        self.assertEqual(format_btc(Decimal('12.00000000')), '12')


class SplitDatasetTest(SimpleTestCase):
    """Test split_dataset"""

    def test_division_of_all_blocks(self):
        """80,408 blocks at 70/15/15 give the published division"""
        train, test, validation = split_dataset(synthetic_series(80408), SplitSpec(0.70, 0.15, 0.15))
        self.assertEqual((len(train), len(test), len(validation)), (56286, 12061, 12061))

    def test_weekend_division(self):
        self.assertEqual(split_counts(23128, SplitSpec()), (16190, 3469, 3469))

    def test_ten_records(self):
        self.assertEqual(split_counts(10, SplitSpec(0.7, 0.15, 0.15)), (7, 1, 2))

    def test_everything_in_train(self):
        series = synthetic_series(13)
        train, test, validation = split_dataset(series, SplitSpec(1, 0, 0))
        self.assertEqual(len(train), 13)
        self.assertEqual(len(test) + len(validation), 0)

    def test_partition_property(self):
        """Parts are disjoint, ordered and concatenate back to the input"""
        series = synthetic_series(257)
        train, test, validation = split_dataset(series, SplitSpec())
        self.assertEqual(train.blocks + test.blocks + validation.blocks, series.blocks)

    def test_counts_for_random_sizes(self):
        rng = random.Random(7)
        spec = SplitSpec()
        for _ in range(500):
            total = rng.randint(1, 10**6)
            n_train, n_test, n_val = split_counts(total, spec)
            self.assertEqual(n_train + n_test + n_val, total)
            self.assertGreaterEqual(min(n_train, n_test, n_val), 0)
            self.assertEqual(n_test, (total * 15) // 100)
            self.assertEqual(n_train, -((-total * 70) // 100))

    def test_empty_series(self):
        from core.exceptions import EmptySeriesError
        with self.assertRaises(EmptySeriesError):
            split_dataset(BlockSeries(), SplitSpec())

    def test_invalid_spec(self):
        with self.assertRaises(PreconditionError):
            SplitSpec(0.5, 0.3, 0.3)


class DayClassFilterTest(SimpleTestCase):
    """Test filter_day_class"""

    def test_saturday_series(self):
        saturday = THURSDAY + 2 * 86400
        series = synthetic_series(20, start=saturday, gap=1800)
        self.assertEqual(filter_day_class(series, DayClass.WEEKEND).blocks, series.blocks)
        self.assertEqual(len(filter_day_class(series, DayClass.WORKING)), 0)

    def test_week_covers_two_weekend_days(self):
        series = synthetic_series(7 * 24, gap=3600)
        weekend = filter_day_class(series, DayClass.WEEKEND)
        days = {b.timestamp // 86400 for b in weekend}
        self.assertEqual(len(days), 2)
        self.assertEqual(len(weekend), 48)

    def test_union_is_the_series(self):
        series = synthetic_series(500, gap=1000)
        working = filter_day_class(series, DayClass.WORKING)
        weekend = filter_day_class(series, DayClass.WEEKEND)
        self.assertEqual(sorted(working.heights + weekend.heights), series.heights)
        self.assertTrue(all(tag_day_class(b.timestamp) is DayClass.WORKING for b in working))

    def test_interblock_recomputed(self):
        series = synthetic_series(7 * 24, gap=3600)
        weekend = filter_day_class(series, 'weekend')
        self.assertEqual(len(weekend.interblock), len(weekend) - 1)
        self.assertTrue(all(g == 3600 for g in weekend.interblock))


class StratifiedSplitTest(SimpleTestCase):
    """Test stratified_split"""

    def test_every_class_in_every_part(self):
        labels = ['A'] * 100 + ['B'] * 20
        train, test, validation = stratified_split(labels, SplitSpec())
        self.assertEqual(len(train) + len(test) + len(validation), 120)
        for part in (train, test, validation):
            self.assertEqual({labels[i] for i in part}, {'A', 'B'})


class MergeSeriesTest(SimpleTestCase):
    """Test merge_series"""

    def test_disjoint_ranges_merge(self):
        series = synthetic_series(10)
        merged = merge_series([series[5:], series[:5]])
        self.assertEqual(merged.heights, list(range(10)))

    def test_duplicate_heights_are_an_error(self):
        series = synthetic_series(10)
        with self.assertRaises(DuplicateHeightError):
            merge_series([series[:6], series[4:]])


def rpc_response(result=None, status=200, error=None):
    response = mock.Mock()
    response.status_code = status
    response.json.return_value = {'result': result, 'error': error, 'id': 1}
    return response


class FakeNode:
    """Serves canned blocks over the JSON-RPC method set."""

    def __init__(self, blocks, fail_first=0, status=200):
        self.blocks = blocks
        self.fail_first = fail_first
        self.status = status
        self.calls = []

    def post(self, url, json=None, timeout=None):
        self.calls.append(json['method'])
        if self.fail_first:
            self.fail_first -= 1
            raise requests.ConnectionError('connection refused')
        if self.status != 200:
            return rpc_response(status=self.status)
        method, params = json['method'], json['params']
        if method == 'getblockcount':
            return rpc_response(len(self.blocks) - 1)
        if method == 'getblockhash':
            return rpc_response(f"hash{params[0]}")
        if method == 'getblock':
            return rpc_response(self.blocks[int(params[0][4:])])
        if method == 'getmempoolinfo':
            return rpc_response({'size': 5, 'bytes': 1200, 'total_fee': Decimal('0.0005')})
        return rpc_response(error={'message': 'Method not found'})


def canned_block(height):
    coinbase = ('03' + 'f2pool'.encode().hex()) if height % 2 == 0 else '03abcdef'
    return {
        'height': height,
        'time': THURSDAY + 600 * height,
        'size': 1000 + height,
        'nTx': 3,
        'tx': [
            {'vin': [{'coinbase': coinbase}]},
            {'fee': Decimal('0.0001')},
            {'fee': Decimal('0.0003')},
        ],
    }


class CollectFromNodeTest(SimpleTestCase):
    """Test collect_from_node against a scripted node"""

    def setUp(self):
        patcher = mock.patch('ingest.services.node.time.sleep')
        self.sleep = patcher.start()
        self.addCleanup(patcher.stop)
        self.endpoint = NodeEndpoint(url='http://node:8332', credentials=('u', 'p'), poll_interval=0.1)

    def rpc_for(self, node, **kwargs):
        client = BitcoinRPC(self.endpoint, timeout=1, max_retries=kwargs.get('max_retries', 2), backoff=0.01)
        client.session.post = node.post
        return client

    def test_three_canned_blocks(self):
        node = FakeNode([canned_block(h) for h in range(3)])
        series = collect_from_node(self.endpoint, (0, 2), client=self.rpc_for(node))
        self.assertEqual(series.heights, [0, 1, 2])
        self.assertEqual([b.miner for b in series], ['F2Pool', '?', 'F2Pool'])
        self.assertEqual(series[1].size, 1001)
        self.assertEqual(series[0].tx_count, 3)
        self.assertEqual(series[0].avg_fee, Decimal('0.0002'))
        self.assertEqual(series[0].mempool.tx_count, 5)

    def test_start_beyond_tip_names_tip(self):
        node = FakeNode([canned_block(h) for h in range(3)])
        with self.assertRaises(HeightBeyondTipError) as ctx:
            collect_from_node(self.endpoint, (5, 6), client=self.rpc_for(node))
        self.assertEqual(ctx.exception.tip, 2)
        self.assertIn('2', str(ctx.exception))

    def test_single_failure_is_retried(self):
        node = FakeNode([canned_block(h) for h in range(3)], fail_first=1)
        client = self.rpc_for(node)
        series = collect_from_node(self.endpoint, (0, 2), client=client)
        self.assertEqual(len(series), 3)
        self.assertEqual(client.retries, 1)

    def test_persistent_failure_returns_partial_result(self):
        node = FakeNode([canned_block(h) for h in range(3)])
        client = self.rpc_for(node, max_retries=1)
        original = node.post

        def flaky(url, json=None, timeout=None):
            if json['method'] == 'getblockhash' and json['params'][0] == 2:
                raise requests.ConnectionError('gone')
            return original(url, json=json, timeout=timeout)

        client.session.post = flaky
        series = collect_from_node(self.endpoint, (0, 2), client=client)
        self.assertEqual(series.heights, [0, 1])
        self.assertTrue(any('aborted at height 2' in m for m in series.report.messages))

    def test_rpc_error_returns_partial_result(self):
        """Test a block the node cannot serve ends collection with what was gathered"""
        node = FakeNode([canned_block(h) for h in range(4)])
        original = node.post

        def pruned(url, json=None, timeout=None):
            if json['method'] == 'getblock' and json['params'][0] == 'hash2':
                return rpc_response(error={'code': -1, 'message': 'Block not available (pruned data)'})
            return original(url, json=json, timeout=timeout)

        client = self.rpc_for(node)
        client.session.post = pruned
        series = collect_from_node(self.endpoint, (0, 3), client=client)
        self.assertEqual(series.heights, [0, 1])
        self.assertTrue(any('aborted at height 2' in m and 'pruned' in m for m in series.report.messages))

    def test_non_json_reply(self):
        response = rpc_response(status=503)
        response.json.side_effect = ValueError('Expecting value')
        client = self.rpc_for(FakeNode([]))
        client.session.post = lambda url, json=None, timeout=None: response
        with self.assertRaises(ChainpulseError) as ctx:
            client.getblockcount()
        self.assertEqual(ctx.exception.code, 'rpc_error')
        self.assertIn('503', str(ctx.exception))

    def test_authentication_failure(self):
        node = FakeNode([canned_block(0)], status=401)
        with self.assertRaises(NodeAuthError):
            collect_from_node(self.endpoint, (0, 0), client=self.rpc_for(node))

    def test_poll_interval_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            NodeEndpoint(url='http://node', poll_interval=0)

    def test_unknown_coinbase_tag(self):
        self.assertEqual(miner_from_coinbase(''), '?')
        self.assertEqual(miner_from_coinbase('416e74506f6f6c'), 'AntPool')
