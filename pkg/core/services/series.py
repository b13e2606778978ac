"""
Derived views over block series: inter-block times, day classes, the
columnar attribute vectors used by the analysis, and report-only validation.
"""
import logging
from datetime import datetime, timezone

import numpy as np

from core.exceptions import EmptySeriesError, PreconditionError
from core.models import BlockSeries, DayClass, ValidationReport

logger = logging.getLogger(__name__)

ATTRIBUTES = (
    'size',
    'tx_count',
    'avg_fee',
    'interblock',
    'mempool_tx_count',
    'mempool_bytes',
    'mempool_fee',
)


def derive_interblock_times(blocks):
    """
    Gaps between consecutive block timestamps, in seconds.

    Miner timestamps are not monotonic, so negative gaps are kept as they are;
    ``validate_series`` counts them.
    """
    blocks = list(blocks)
    if len(blocks) < 2:
        raise EmptySeriesError(
            f"inter-block times need at least 2 blocks, got {len(blocks)}"
        )
    timestamps = [b.timestamp for b in blocks]
    return [later - earlier for earlier, later in zip(timestamps, timestamps[1:])]


def tag_day_class(timestamp) -> DayClass:
    """
    Weekend iff the UTC calendar day is a Saturday or Sunday.
    """
    weekday = datetime.fromtimestamp(int(timestamp), tz=timezone.utc).weekday()
    return DayClass.WEEKEND if weekday >= 5 else DayClass.WORKING


def validate_series(series: BlockSeries) -> ValidationReport:
    """
    Count schema violations and negative inter-block times. Never raises and
    never touches the input.
    """
    messages = []
    schema_errors = 0

    for block in series.blocks:
        problems = []
        if block.height < 0:
            problems.append('height')
        if block.size < 0:
            problems.append('size')
        if block.tx_count < 0:
            problems.append('tx_count')
        if block.avg_fee < 0:
            problems.append('avg_fee')
        mempool = block.mempool
        if mempool.tx_count < 0:
            problems.append('mempool.tx_count')
        if mempool.total_bytes < 0:
            problems.append('mempool.total_bytes')
        if mempool.total_fee < 0:
            problems.append('mempool.total_fee')
        if mempool.tx_count == 0 and (mempool.total_bytes != 0 or mempool.total_fee != 0):
            problems.append('mempool (empty backlog with nonzero bytes or fee)')
        for name in problems:
            messages.append(f"block {block.height}: negative or inconsistent {name}")
        schema_errors += len(problems)

    heights = series.heights
    for prev, cur in zip(heights, heights[1:]):
        if cur <= prev:
            schema_errors += 1
            messages.append(f"heights not strictly increasing at {prev} -> {cur}")

    negatives = 0
    if len(series.blocks) >= 2:
        for block, gap in zip(series.blocks[1:], series.interblock):
            if gap < 0:
                negatives += 1
                messages.append(f"block {block.height}: negative inter-block time {gap}s")
    if negatives:
        logger.warning(f"{negatives} negative inter-block times in a series of {len(series)} blocks")

    return ValidationReport(
        n_records=len(series.blocks),
        n_negative_intervals=negatives,
        n_schema_errors=schema_errors,
        messages=tuple(messages),
    )


def attribute_column(series: BlockSeries, name: str) -> np.ndarray:
    """
    Column of one block attribute as floats (bytes, counts, BTC, seconds).
    ``miner`` gives the labels instead.

    ``interblock`` has one value fewer than the series: element i is the gap
    that precedes block i + 1.
    """
    if name == 'interblock':
        return np.asarray(series.interblock, dtype=float)
    if name == 'miner':
        return np.asarray([b.miner for b in series.blocks], dtype=object)
    getters = {
        'size': lambda b: b.size,
        'tx_count': lambda b: b.tx_count,
        'avg_fee': lambda b: float(b.avg_fee),
        'timestamp': lambda b: b.timestamp,
        'mempool_tx_count': lambda b: b.mempool.tx_count,
        'mempool_bytes': lambda b: b.mempool.total_bytes,
        'mempool_fee': lambda b: float(b.mempool.total_fee),
    }
    if name not in getters:
        raise PreconditionError(
            f"unknown attribute {name!r}; expected one of {', '.join(ATTRIBUTES)}"
        )
    getter = getters[name]
    return np.asarray([getter(b) for b in series.blocks], dtype=float)


def filter_by_day_class(blocks, day_class):
    day_class = DayClass.parse(day_class)
    return [b for b in blocks if tag_day_class(b.timestamp) is day_class]
