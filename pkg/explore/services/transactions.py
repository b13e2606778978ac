"""
Transaction-side series: inter-arrival and confirmation times, and
confirmation time by fee quartile.
"""
import logging

import numpy as np

from core.exceptions import PreconditionError
from explore.config import QUARTILE_LABELS, QUARTILES
from explore.models import QuartileBucket, QuartileReport

logger = logging.getLogger(__name__)


def tx_interarrival_times(txs):
    arrivals = np.sort(np.asarray([tx.arrival_ts for tx in txs], dtype=float))
    return np.diff(arrivals)


def tx_confirmation_times(txs):
    """
    Confirmation delays of the confirmed transactions, in arrival order.
    """
    confirmed = sorted((tx for tx in txs if tx.confirmed), key=lambda tx: tx.arrival_ts)
    return np.asarray([tx.confirmation_time for tx in confirmed], dtype=float)


def confirmation_by_fee_quartile(txs) -> QuartileReport:
    """
    Confirmation time per fee bucket (0, Q1], (Q1, Q2], (Q2, Q3], (Q3, inf).

    Breakpoints are linearly interpolated quantiles; a fee equal to a
    breakpoint goes to the lower bucket.
    """
    confirmed = [tx for tx in txs if tx.confirmed]
    if len(confirmed) < 4:
        raise PreconditionError(
            f"fee quartiles need at least 4 confirmed transactions, got {len(confirmed)}"
        )
    fees = np.asarray([float(tx.fee) for tx in confirmed])
    waits = np.asarray([tx.confirmation_time for tx in confirmed], dtype=float)
    breakpoints = np.quantile(fees, QUARTILES)
    bucket_of = np.searchsorted(breakpoints, fees, side='left')

    edges = [0.0, *breakpoints.tolist(), float('inf')]
    buckets = []
    for index, label in enumerate(QUARTILE_LABELS):
        members = waits[bucket_of == index]
        buckets.append(QuartileBucket(
            label=label,
            lower=edges[index],
            upper=edges[index + 1],
            count=int(members.size),
            mean=float(members.mean()) if members.size else None,
            median=float(np.median(members)) if members.size else None,
        ))

    report = QuartileReport(
        breakpoints=tuple(float(b) for b in breakpoints),
        buckets=tuple(buckets),
        overall_mean=float(waits.mean()),
        total=len(confirmed),
    )
    if report.degenerate:
        logger.warning(f"Fee quartiles are degenerate (Q1 = Q3 = {report.breakpoints[0]:g})")
    return report
