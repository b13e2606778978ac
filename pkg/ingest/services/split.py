"""
Dataset division and day-class filtering.
"""
import logging
import math
from collections import defaultdict
from fractions import Fraction

from core.exceptions import EmptySeriesError
from core.models import BlockSeries
from core.services.series import filter_by_day_class
from ingest.models import SplitSpec

logger = logging.getLogger(__name__)


def split_counts(total: int, spec: SplitSpec):
    """
    Chronological split sizes for ``total`` records.

    Training takes ceil(M * train_frac), test takes floor(M * test_frac) and
    validation keeps the remainder. Fractions are evaluated exactly so that
    e.g. 10 * 0.7 is 7 and not 7.000000000000001.
    """
    train = math.ceil(total * Fraction(repr(spec.train_frac)))
    test = math.floor(total * Fraction(repr(spec.test_frac)))
    test = min(test, total - train)
    return train, test, total - train - test


def split_dataset(series: BlockSeries, spec: SplitSpec):
    if not len(series):
        raise EmptySeriesError("cannot split an empty series")
    n_train, n_test, n_val = split_counts(len(series), spec)
    blocks = series.blocks
    train = BlockSeries(blocks=blocks[:n_train])
    test = BlockSeries(blocks=blocks[n_train:n_train + n_test])
    validation = BlockSeries(blocks=blocks[n_train + n_test:])
    logger.info(f"Split {len(series)} blocks into {n_train}/{n_test}/{n_val}")
    return train, test, validation


def filter_day_class(series: BlockSeries, day_class) -> BlockSeries:
    """
    Blocks whose UTC timestamp falls on the given day class, in order.
    Inter-block times are recomputed over the retained blocks.
    """
    return BlockSeries(blocks=tuple(filter_by_day_class(series.blocks, day_class)))


def stratified_split(labels, spec: SplitSpec):
    """
    Per-class chronological split, so rare classes appear in every part.
    Returns sorted row indices for (train, test, validation).
    """
    by_class = defaultdict(list)
    for index, label in enumerate(labels):
        by_class[label].append(index)

    train, test, validation = [], [], []
    for label in sorted(by_class):
        indices = by_class[label]
        n_train, n_test, _ = split_counts(len(indices), spec)
        train.extend(indices[:n_train])
        test.extend(indices[n_train:n_train + n_test])
        validation.extend(indices[n_train + n_test:])
    return sorted(train), sorted(test), sorted(validation)


def merge_series(parts) -> BlockSeries:
    """
    Combine collector results for disjoint height ranges; a height seen
    twice is an error rather than an overwrite.
    """
    blocks = [block for part in parts for block in part]
    return BlockSeries.from_blocks(blocks)
