"""
Block template selection.
"""
import numpy as np

from simulate.models import MinerPolicy, Selection


def select_positions(fees, sizes, policy: MinerPolicy) -> np.ndarray:
    """
    Positions (into arrival-ordered ``fees``/``sizes``) of the transactions a
    miner puts in its block, in pick order.

    Transactions below ``min_fee_rate`` are skipped. Picking stops at the
    first transaction that would push the block over ``size_cap``.
    """
    fees = np.asarray(fees, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if not len(fees):
        return np.empty(0, dtype=np.intp)

    rates = fees / sizes
    eligible = np.flatnonzero(rates >= policy.min_fee_rate)
    if policy.selection is Selection.FEE_RATE_GREEDY:
        # fee rate descending, arrival order on ties
        order = eligible[np.lexsort((eligible, -rates[eligible]))]
    else:
        order = eligible
    fits = np.cumsum(sizes[order]) <= policy.size_cap
    return order[fits]


def pack_block(mempool, policy: MinerPolicy):
    """
    Pending transactions chosen for the next block under ``policy``.
    """
    pending = sorted(mempool, key=lambda tx: tx.arrival_ts)
    if not pending:
        return []
    fees = [float(tx.fee) for tx in pending]
    sizes = [tx.size for tx in pending]
    return [pending[i] for i in select_positions(fees, sizes, policy)]
