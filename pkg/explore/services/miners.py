"""
Per-pool tallies and attribute summaries.
"""
from collections import Counter, defaultdict

import numpy as np
from scipy import stats

from core.exceptions import EmptySeriesError
from core.models import BlockSeries, DayClass
from core.services.series import attribute_column, tag_day_class
from core.units import to_megabytes
from explore.models import AttributeRelation, AttributeStats, InterblockSummary, MinerSummary


def _stats(values) -> AttributeStats:
    x = np.asarray(values, dtype=float)
    return AttributeStats(
        mean=float(x.mean()),
        std=float(x.std(ddof=1)) if len(x) > 1 else 0.0,
        min=float(x.min()),
        max=float(x.max()),
    )


def _by_count(counts):
    """Miners by block count, largest first, then by label."""
    return sorted(counts, key=lambda miner: (-counts[miner], miner))


def miner_block_counts(series: BlockSeries, by_day_class=False):
    if not by_day_class:
        counts = Counter(block.miner for block in series)
        return {miner: counts[miner] for miner in _by_count(counts)}
    split = {day_class: Counter() for day_class in DayClass}
    for block in series:
        split[tag_day_class(block.timestamp)][block.miner] += 1
    return {
        day_class: {miner: counts[miner] for miner in _by_count(counts)}
        for day_class, counts in split.items()
    }


def summary_by_miner(series: BlockSeries):
    """
    Mean, standard deviation (n - 1), min and max of size (MB), transaction
    count and average fee (BTC) per pool. A single block reports std 0.
    """
    if not len(series):
        raise EmptySeriesError('summary of an empty series')
    groups = defaultdict(list)
    for block in series:
        groups[block.miner].append(block)
    counts = {miner: len(blocks) for miner, blocks in groups.items()}

    rows = []
    for miner in _by_count(counts):
        blocks = groups[miner]
        rows.append(MinerSummary(
            miner=miner,
            count=len(blocks),
            size=_stats([to_megabytes(b.size) for b in blocks]),
            tx_count=_stats([b.tx_count for b in blocks]),
            avg_fee=_stats([float(b.avg_fee) for b in blocks]),
        ))
    return rows


def interblock_by_miner(series: BlockSeries):
    """
    Statistics of the inter-block time preceding each pool's blocks.
    Non-positive gaps are included and counted.
    """
    gaps = attribute_column(series, 'interblock')
    groups = defaultdict(list)
    for block, gap in zip(series.blocks[1:], gaps):
        groups[block.miner].append(gap)
    counts = {miner: len(values) for miner, values in groups.items()}

    rows = []
    for miner in _by_count(counts):
        values = np.asarray(groups[miner])
        rows.append(InterblockSummary(
            miner=miner,
            count=len(values),
            mean=float(values.mean()),
            median=float(np.median(values)),
            min=float(values.min()),
            max=float(values.max()),
            n_nonpositive=int((values <= 0).sum()),
        ))
    return rows


def _correlation(function, x, y):
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return float('nan')
    return float(function(x, y)[0])


def attribute_relation(series: BlockSeries, attr, against='interblock') -> AttributeRelation:
    """
    Paired (against_i, attr_i) values per block with Pearson and Spearman
    correlation. When either side is the inter-block time the first block is
    dropped.
    """
    x = attribute_column(series, against)
    y = attribute_column(series, attr)
    miners = [block.miner for block in series]
    if 'interblock' in (attr, against):
        if against != 'interblock':
            x = x[1:]
        if attr != 'interblock':
            y = y[1:]
        miners = miners[1:]
    return AttributeRelation(
        x_name=against,
        y_name=attr,
        x=tuple(x.tolist()),
        y=tuple(y.tolist()),
        miners=tuple(miners),
        pearson=_correlation(stats.pearsonr, x, y),
        spearman=_correlation(stats.spearmanr, x, y),
    )
