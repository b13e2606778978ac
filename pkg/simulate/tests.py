import itertools
import tempfile
from collections import defaultdict
from dataclasses import replace
from decimal import Decimal
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import PreconditionError
from core.models import TxRecord
from core.units import to_btc
from explore.services.correlation import acf
from explore.services.distributions import fit_exponential
from simulate.models import ArrivalModel, MinerPolicy, Selection, SimConfig
from simulate.services.arrivals import sample_arrivals
from simulate.services.engine import run_simulation
from simulate.services.export import read_truth, write_simulation
from simulate.services.packing import pack_block
from simulate.services.scenarios import default_config, default_pools, distinct_pool_config

QUIET = ArrivalModel.poisson(1e-12)


def quiet_config(seed=1, horizon=1e6, pools=None, **kwargs):
    """Blocks only: the arrival rate is too small to produce a transaction."""
    return SimConfig(
        seed=seed,
        horizon=horizon,
        block_interval_mean=kwargs.pop('block_interval_mean', 600.0),
        tx_arrival=kwargs.pop('tx_arrival', QUIET),
        fee_dist=kwargs.pop('fee_dist', (-9.9, 1.0)),
        tx_size_dist=kwargs.pop('tx_size_dist', (6.0, 0.6)),
        pools=pools if pools is not None else default_pools(),
        **kwargs,
    )


def tx(ident, arrival, fee, size):
    return TxRecord(id=ident, arrival_ts=arrival, confirm_ts=None, fee=Decimal(fee), size=size)


class SampleArrivalsTest(SimpleTestCase):
    """Test sample_arrivals"""

    def test_poisson_count(self):
        """Rate 10/s over 10^4 s stays within 3 sigma of 10^5"""
        times = sample_arrivals(ArrivalModel.poisson(10.0), 1e4, seed=3)
        self.assertLess(abs(len(times) - 1e5), 3 * np.sqrt(1e5))

    def test_strictly_increasing_within_horizon(self):
        times = sample_arrivals(ArrivalModel.mmpp2(0.5, 5.0, 0.01, 0.02), 5000, seed=4)
        self.assertTrue(np.all(np.diff(times) > 0))
        self.assertGreaterEqual(times[0], 0)
        self.assertLess(times[-1], 5000)

    def test_degenerate_mmpp_is_poisson(self):
        """Equal rates leave the gaps uncorrelated"""
        times = sample_arrivals(ArrivalModel.mmpp2(5.0, 5.0, 0.01, 0.01), 2e4, seed=5)
        gaps = np.diff(times)
        r1 = acf(gaps, 1).values[1]
        self.assertLess(abs(r1), 3 / np.sqrt(len(gaps)))

    def test_slow_switching_correlates_gaps(self):
        times = sample_arrivals(ArrivalModel.mmpp2(1.0, 10.0, 1e-3, 1e-3), 1e5, seed=6)
        gaps = np.diff(times)
        self.assertGreaterEqual(len(gaps), 10**5)
        self.assertGreater(acf(gaps, 1).values[1], 0.05)

    def test_same_seed_same_arrivals(self):
        model = ArrivalModel.mmpp2(1.0, 3.0, 0.01, 0.01)
        np.testing.assert_array_equal(sample_arrivals(model, 1000, 9), sample_arrivals(model, 1000, 9))

    def test_rates_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            ArrivalModel.poisson(0)
        with self.assertRaises(PreconditionError):
            ArrivalModel.mmpp2(1.0, 2.0, 0.0, 1.0)


class PackBlockTest(SimpleTestCase):
    """Test pack_block"""

    def setUp(self):
        self.greedy = MinerPolicy('A', 1.0, size_cap=2)

    def test_greedy_picks_highest_fees(self):
        mempool = [tx('a', 0, 5, 1), tx('b', 1, 4, 1), tx('c', 2, 3, 1)]
        picked = pack_block(mempool, self.greedy)
        self.assertEqual([t.id for t in picked], ['a', 'b'])
        self.assertEqual(sum(t.fee for t in picked), 9)

    def test_greedy_is_optimal_for_equal_sizes(self):
        """Brute force over every subset that fits agrees with the greedy fee"""
        mempool = [tx(str(i), i, fee, 1) for i, fee in enumerate([3, 9, 1, 7, 7, 2])]
        policy = MinerPolicy('A', 1.0, size_cap=3)
        best = max(
            sum(t.fee for t in subset)
            for k in range(4)
            for subset in itertools.combinations(mempool, k)
        )
        self.assertEqual(sum(t.fee for t in pack_block(mempool, policy)), best)

    def test_empty_mempool(self):
        self.assertEqual(pack_block([], self.greedy), [])

    def test_fee_floor_above_every_rate(self):
        policy = MinerPolicy('A', 1.0, size_cap=10, min_fee_rate=100)
        self.assertEqual(pack_block([tx('a', 0, 5, 1), tx('b', 1, 4, 1)], policy), [])

    def test_ties_go_to_earlier_arrival(self):
        mempool = [tx('late', 5, 2, 1), tx('early', 1, 2, 1)]
        picked = pack_block(mempool, MinerPolicy('A', 1.0, size_cap=1))
        self.assertEqual([t.id for t in picked], ['early'])

    def test_fifo_keeps_arrival_order(self):
        mempool = [tx('a', 0, 1, 1), tx('b', 1, 9, 1), tx('c', 2, 5, 1)]
        policy = MinerPolicy('A', 1.0, size_cap=2, selection=Selection.FIFO)
        self.assertEqual([t.id for t in pack_block(mempool, policy)], ['a', 'b'])

    def test_stops_at_first_transaction_that_does_not_fit(self):
        mempool = [tx('big', 0, 10, 3), tx('small', 1, 1, 1)]
        policy = MinerPolicy('A', 1.0, size_cap=2, selection=Selection.FIFO)
        self.assertEqual(pack_block(mempool, policy), [])


class RunSimulationTest(SimpleTestCase):
    """Test run_simulation"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.output = run_simulation(default_config(seed=11, horizon=6 * 3600))

    def test_no_transactions_means_empty_blocks(self):
        output = run_simulation(quiet_config())
        self.assertGreater(len(output.blocks), 0)
        self.assertEqual(len(output.txs), 0)
        for block in output.blocks:
            self.assertEqual(block.tx_count, 0)
            self.assertEqual(block.avg_fee, 0)

    def test_single_pool_mines_everything(self):
        pools = (MinerPolicy('Solo', 1.0, size_cap=1_000_000),)
        output = run_simulation(quiet_config(pools=pools, horizon=2e5))
        self.assertEqual({block.miner for block in output.blocks}, {'Solo'})

    def test_no_pools(self):
        with self.assertRaises(PreconditionError):
            run_simulation(quiet_config(pools=()))

    def test_shares_must_sum_to_one(self):
        pools = (MinerPolicy('A', 0.5, 1000), MinerPolicy('B', 0.4, 1000))
        with self.assertRaises(PreconditionError):
            run_simulation(quiet_config(pools=pools))

    def test_invalid_horizon(self):
        with self.assertRaises(PreconditionError):
            quiet_config(horizon=0)

    def test_conservation(self):
        """Every arrival is either confirmed or still pending"""
        output = self.output
        confirmed = [t for t in output.txs if t.confirmed]
        self.assertGreater(len(confirmed), 0)
        self.assertEqual(len(confirmed) + len(output.unconfirmed), len(output.txs))

    def test_blocks_match_their_transactions(self):
        by_block = defaultdict(list)
        for t in self.output.txs:
            if t.confirmed:
                by_block[t.confirm_ts].append(t)
        timestamps = [block.timestamp for block in self.output.blocks]
        self.assertEqual(len(set(timestamps)), len(timestamps))
        self.assertTrue(set(by_block) <= set(timestamps))
        for block in self.output.blocks:
            packed = by_block.get(block.timestamp, [])
            self.assertEqual(block.tx_count, len(packed))
            self.assertEqual(block.size, sum(t.size for t in packed))
            self.assertLessEqual(block.size, 1_000_000)
            if packed:
                self.assertEqual(block.avg_fee, to_btc(sum(t.fee for t in packed) / len(packed)))
            else:
                self.assertEqual(block.avg_fee, 0)

    def test_confirmation_never_precedes_arrival(self):
        for t in self.output.txs:
            if t.confirmed:
                self.assertGreaterEqual(t.confirm_ts, t.arrival_ts)

    def test_snapshot_includes_packed_transactions(self):
        for block in self.output.blocks:
            self.assertGreaterEqual(block.mempool.tx_count, block.tx_count)
            self.assertGreaterEqual(block.mempool.total_bytes, block.size)

    def test_higher_fee_never_confirms_later(self):
        """Equal sizes under fee-rate greedy packing, checked over every pair"""
        pools = (MinerPolicy('A', 1.0, size_cap=403 * 5),)
        output = run_simulation(quiet_config(
            seed=21,
            horizon=20000,
            pools=pools,
            tx_arrival=ArrivalModel.poisson(0.02),
            tx_size_dist=(np.log(403), 0.0),
        ))
        txs = output.txs
        self.assertTrue(all(t.size == 403 for t in txs))
        self.assertGreater(len(output.unconfirmed), 0)
        never = float('inf')
        for a, b in itertools.combinations(txs, 2):
            confirm_a = a.confirm_ts if a.confirmed else never
            confirm_b = b.confirm_ts if b.confirmed else never
            if max(a.arrival_ts, b.arrival_ts) >= min(confirm_a, confirm_b) or a.fee == b.fee:
                continue
            high, low = (a, b) if a.fee > b.fee else (b, a)
            high_at = high.confirm_ts if high.confirmed else never
            low_at = low.confirm_ts if low.confirmed else never
            self.assertLessEqual(high_at, low_at)

    def test_block_shares_follow_hash_power(self):
        output = run_simulation(quiet_config(seed=8, horizon=20_500 * 600))
        total = len(output.blocks)
        self.assertGreaterEqual(total, 20_000)
        counts = defaultdict(int)
        for block in output.blocks:
            counts[block.miner] += 1
        for pool in default_pools():
            self.assertAlmostEqual(counts[pool.name] / total, pool.hash_share, delta=0.02)

    def test_interblock_times_are_exponential(self):
        """50,000 blocks at a 600 s mean"""
        output = run_simulation(quiet_config(seed=2, horizon=51_000 * 600))
        gaps = output.blocks.interblock
        self.assertGreaterEqual(len(gaps), 50_000)
        fit = fit_exponential(gaps)
        self.assertAlmostEqual(1 / fit.rate, 600, delta=12)
        self.assertLess(fit.ks_stat, 0.01)

    def test_interval_modulation_changes_block_rate_by_state(self):
        arrivals = ArrivalModel.mmpp2(1e-4, 2e-4, 1e-5, 1e-5)
        plain = run_simulation(quiet_config(seed=5, horizon=3e6, tx_arrival=arrivals))
        modulated = run_simulation(quiet_config(
            seed=5, horizon=3e6, tx_arrival=arrivals, interval_modulation=0.8,
        ))
        plain_cv = np.std(plain.blocks.interblock) / np.mean(plain.blocks.interblock)
        modulated_cv = np.std(modulated.blocks.interblock) / np.mean(modulated.blocks.interblock)
        # a mixture of two exponentials is over-dispersed
        self.assertLess(abs(plain_cv - 1), 0.1)
        self.assertGreater(modulated_cv, 1.2)

    def test_distinct_pool_mines_smaller_blocks(self):
        output = run_simulation(distinct_pool_config(seed=4, horizon=24 * 3600))
        f2pool = [b.size for b in output.blocks if b.miner == 'F2Pool']
        others = [b.size for b in output.blocks if b.miner != 'F2Pool']
        self.assertTrue(f2pool and others)
        self.assertLessEqual(max(f2pool), 400_000)
        self.assertGreater(np.mean(others), np.mean(f2pool))


class DeterminismTest(SimpleTestCase):
    """Test that identical configurations give identical files"""

    def test_byte_identical_runs(self):
        config = default_config(seed=42, horizon=4 * 3600)
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            write_simulation(run_simulation(config), first)
            write_simulation(run_simulation(config), second)
            for name in ('blocks.csv', 'txs.csv', 'truth.json'):
                self.assertEqual(
                    (Path(first) / name).read_bytes(),
                    (Path(second) / name).read_bytes(),
                    name,
                )

    def test_different_seeds_differ(self):
        first = run_simulation(default_config(seed=1, horizon=3600))
        second = run_simulation(default_config(seed=2, horizon=3600))
        self.assertNotEqual(first.blocks.timestamps, second.blocks.timestamps)


class TruthSidecarTest(SimpleTestCase):
    """Test write_simulation / read_truth"""

    def test_truth_round_trip(self):
        config = replace(distinct_pool_config(seed=7, horizon=1800.0), interval_modulation=0.25)
        with tempfile.TemporaryDirectory() as directory:
            write_simulation(run_simulation(config), directory)
            text = (Path(directory) / 'truth.json').read_text()
            self.assertEqual(read_truth(Path(directory) / 'truth.json'), config)
        self.assertIn('"interval_modulation": 0.25', text)
        self.assertTrue(text.endswith('}\n'))

    def test_invalid_truth(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'truth.json'
            path.write_text('{"seed": 1}')
            from core.exceptions import SchemaError
            with self.assertRaises(SchemaError):
                read_truth(path)
