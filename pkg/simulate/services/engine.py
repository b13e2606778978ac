"""
Discrete-event simulation of the transaction workflow: transactions arrive
at the node's mempool, pools find blocks at exponential intervals and the
winning pool packs the block under its own policy.
"""
import heapq
import itertools
import logging
from decimal import Decimal

import numpy as np

from core.exceptions import PreconditionError
from core.models import BlockRecord, BlockSeries, MempoolSnapshot, TxRecord
from core.units import SATOSHI, SATOSHIS_PER_BTC, ZERO_BTC, satoshi_to_btc, to_btc
from simulate.config import SHARE_TOLERANCE
from simulate.models import ArrivalKind, SimConfig, SimOutput
from simulate.services.arrivals import HIGH, generate_arrivals
from simulate.services.packing import select_positions

logger = logging.getLogger(__name__)

BLOCK_FOUND = 0
STATE_SWITCH = 1


def check_pools(pools):
    if not pools:
        raise PreconditionError('simulation needs at least one mining pool')
    total = sum(pool.hash_share for pool in pools)
    if abs(total - 1.0) > SHARE_TOLERANCE:
        raise PreconditionError(f"pool hash shares must sum to 1, got {total!r}")
    names = [pool.name for pool in pools]
    if len(set(names)) != len(names):
        raise PreconditionError(f"pool names must be distinct, got {names}")


def average_fee(fee_sat) -> Decimal:
    if not len(fee_sat):
        return ZERO_BTC
    return to_btc(Decimal(int(fee_sat.sum())) / len(fee_sat) * SATOSHI)


class Simulation:
    """
    One run of the event loop. Events are ``(time, seq, kind, payload)``
    tuples; ``seq`` breaks time ties deterministically.
    """

    def __init__(self, config: SimConfig):
        check_pools(config.pools)
        self.config = config
        arrival_seed, tx_seed, block_seed, miner_seed = np.random.SeedSequence(config.seed).spawn(4)
        self.block_rng = np.random.default_rng(block_seed)
        self.miner_rng = np.random.default_rng(miner_seed)

        self.trace = generate_arrivals(
            config.tx_arrival, config.horizon, np.random.default_rng(arrival_seed)
        )
        tx_rng = np.random.default_rng(tx_seed)
        count = len(self.trace)
        fees = tx_rng.lognormal(*config.fee_dist, size=count)
        self.fee_sat = np.rint(fees * SATOSHIS_PER_BTC).astype(np.int64)
        sizes = tx_rng.lognormal(*config.tx_size_dist, size=count)
        self.sizes = np.maximum(1, np.rint(sizes)).astype(np.int64)
        self.fee_btc = self.fee_sat / SATOSHIS_PER_BTC

        self.modulated = config.interval_modulation > 0
        if self.modulated and config.tx_arrival.kind is not ArrivalKind.MMPP2:
            logger.warning('interval_modulation needs MMPP2 arrivals; ignoring it for Poisson arrivals')
            self.modulated = False

        shares = np.array([pool.hash_share for pool in config.pools])
        self.shares = shares / shares.sum()

    def interval_mean(self, state):
        mean = self.config.block_interval_mean
        if not self.modulated:
            return mean
        m = self.config.interval_modulation
        return mean * (1 - m) if state == HIGH else mean * (1 + m)

    def run(self) -> SimOutput:
        config = self.config
        seq = itertools.count()
        queue = []

        state = int(self.trace.segment_states[0])
        epoch = 0
        if self.modulated:
            for when, new_state in zip(self.trace.segment_starts[1:], self.trace.segment_states[1:]):
                heapq.heappush(queue, (float(when), next(seq), STATE_SWITCH, int(new_state)))
        first = self.block_rng.exponential(self.interval_mean(state))
        heapq.heappush(queue, (first, next(seq), BLOCK_FOUND, epoch))

        pending = np.empty(0, dtype=np.int64)
        admitted = 0
        confirm_block = np.full(len(self.trace), -1, dtype=np.int64)
        blocks = []
        last_ts = None

        while queue:
            now, _, kind, payload = heapq.heappop(queue)
            if now >= config.horizon:
                break

            if kind == STATE_SWITCH:
                # block discovery is memoryless, so redraw under the new mean
                state = payload
                epoch += 1
                delay = self.block_rng.exponential(self.interval_mean(state))
                heapq.heappush(queue, (now + delay, next(seq), BLOCK_FOUND, epoch))
                continue
            if payload != epoch:
                continue

            arrived = int(np.searchsorted(self.trace.times, now, side='right'))
            if arrived > admitted:
                pending = np.concatenate([pending, np.arange(admitted, arrived, dtype=np.int64)])
                admitted = arrived

            pool = config.pools[int(self.miner_rng.choice(len(config.pools), p=self.shares))]
            snapshot = MempoolSnapshot(
                tx_count=len(pending),
                total_bytes=int(self.sizes[pending].sum()),
                total_fee=satoshi_to_btc(int(self.fee_sat[pending].sum())),
            )
            picked = select_positions(self.fee_btc[pending], self.sizes[pending], pool)
            chosen = pending[picked]
            keep = np.ones(len(pending), dtype=bool)
            keep[picked] = False
            pending = pending[keep]

            # at most one block per second, so a confirmation time names its block
            timestamp = config.start_ts + int(np.floor(now))
            if last_ts is not None and timestamp <= last_ts:
                timestamp = last_ts + 1
            last_ts = timestamp

            height = len(blocks)
            confirm_block[chosen] = height
            blocks.append(BlockRecord(
                height=height,
                timestamp=timestamp,
                miner=pool.name,
                size=int(self.sizes[chosen].sum()),
                tx_count=len(chosen),
                avg_fee=average_fee(self.fee_sat[chosen]),
                mempool=snapshot,
            ))
            delay = self.block_rng.exponential(self.interval_mean(state))
            heapq.heappush(queue, (now + delay, next(seq), BLOCK_FOUND, epoch))

        txs = self.transactions(blocks, confirm_block)
        logger.info(
            f"Simulated {len(blocks)} blocks and {len(txs)} transactions "
            f"over {config.horizon:g}s (seed {config.seed}, {len(pending)} pending at horizon)"
        )
        return SimOutput(blocks=BlockSeries(blocks=tuple(blocks)), txs=txs, truth=config)

    def transactions(self, blocks, confirm_block):
        block_ts = [block.timestamp for block in blocks]
        arrival_ts = self.config.start_ts + np.floor(self.trace.times).astype(np.int64)
        width = len(str(max(len(arrival_ts) - 1, 0)))
        return tuple(
            TxRecord(
                id=f"tx{index:0{width}d}",
                arrival_ts=int(arrival_ts[index]),
                confirm_ts=block_ts[confirm_block[index]] if confirm_block[index] >= 0 else None,
                fee=satoshi_to_btc(self.fee_sat[index]),
                size=int(self.sizes[index]),
            )
            for index in range(len(arrival_ts))
        )


def run_simulation(config: SimConfig) -> SimOutput:
    """
    Run the workflow to ``config.horizon``. Identical configs (seed included)
    give identical outputs.
    """
    return Simulation(config).run()
