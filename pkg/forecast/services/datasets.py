"""
Aligned (target, exogenous) arrays for the forecasting pipelines.
"""
import numpy as np

from core.exceptions import EmptySeriesError, PreconditionError
from core.models import BlockSeries
from core.services.series import attribute_column
from explore.services.intensity import slot_counts
from forecast.config import DEFAULT_EXOG


def _block_column(series, name):
    if name == 'miner':
        raise PreconditionError('miner labels are not a numeric series')
    column = attribute_column(series, name)
    # interblock already lacks the first block
    return column if name == 'interblock' else column[1:]


def block_dataset(series: BlockSeries, target, exog_columns=DEFAULT_EXOG):
    """
    y = the target attribute per block, X = one column per exogenous
    attribute, rows aligned by block. The first block is dropped since it
    has no inter-block time.
    """
    if len(series) < 2:
        raise EmptySeriesError(f"forecasting datasets need at least 2 blocks, got {len(series)}")
    y = _block_column(series, target)
    columns = [_block_column(series, name) for name in exog_columns]
    x = np.column_stack(columns) if columns else np.empty((len(y), 0))
    return y, x


def intensity_series(timestamps, slot_len, window=None):
    """Blocks per slot, as a series to forecast."""
    return slot_counts(timestamps, slot_len, window).astype(float)


def confirmation_dataset(txs):
    """
    Confirmation times of the confirmed transactions in arrival order, with
    (size, fee) as exogenous columns.
    """
    confirmed = sorted((tx for tx in txs if tx.confirmed), key=lambda tx: (tx.arrival_ts, tx.id))
    if not confirmed:
        raise EmptySeriesError('no confirmed transactions')
    y = np.asarray([tx.confirmation_time for tx in confirmed], dtype=float)
    x = np.asarray([(tx.size, float(tx.fee)) for tx in confirmed], dtype=float)
    return y, x
