"""
Event intensity per fixed-length slot and the cross-scale Poisson check.
"""
import logging
import math

import numpy as np
from scipy import optimize, stats

from core.exceptions import EmptySeriesError, PreconditionError
from explore.config import HISTOGRAM_GRID_POINTS, SLOT_METHODS
from explore.models import Consistency, PoissonFit

logger = logging.getLogger(__name__)


def slot_counts(timestamps, slot_len, window=None):
    """
    Event counts in consecutive full slots of ``slot_len`` seconds.

    ``window`` is ``(start, end)``; by default it spans the first to the last
    event. A trailing partial slot is dropped.
    """
    if not slot_len > 0:
        raise PreconditionError(f"slot length must be positive, got {slot_len}")
    t = np.sort(np.asarray(timestamps, dtype=float))
    if window is None:
        if t.size < 2:
            raise EmptySeriesError('need at least two events to infer the observation window')
        window = (t[0], t[-1])
    start, end = window
    n_slots = int(math.floor((end - start) / slot_len))
    if n_slots < 1:
        raise PreconditionError(
            f"span of {end - start:g}s is shorter than one {slot_len:g}s slot"
        )
    stop = start + n_slots * slot_len
    inside = t[(t >= start) & (t < stop)]
    index = np.minimum(((inside - start) // slot_len).astype(np.int64), n_slots - 1)
    return np.bincount(index, minlength=n_slots)


def _histogram_intensity(counts):
    """
    Least-squares fit of the Poisson pmf to the normalized histogram of slot
    counts.
    """
    if counts.max() == 0:
        return 0.0
    support = np.arange(counts.max() + 1)
    frequencies = np.bincount(counts) / len(counts)

    def squared_error(lam):
        return float(np.sum((stats.poisson.pmf(support, lam) - frequencies) ** 2))

    grid = np.linspace(max(counts.min(), 1e-6), counts.max() + 1, HISTOGRAM_GRID_POINTS)
    errors = [squared_error(lam) for lam in grid]
    best = int(np.argmin(errors))
    lower = grid[max(best - 1, 0)]
    upper = grid[min(best + 1, len(grid) - 1)]
    if upper <= lower:
        return float(grid[best])
    result = optimize.minimize_scalar(squared_error, bounds=(lower, upper), method='bounded')
    return float(result.x) if result.fun <= errors[best] else float(grid[best])


def fit_poisson_slots(timestamps, slot_len, window=None, method='mean') -> PoissonFit:
    """
    Poisson intensity (expected events per slot).

    ``method='mean'`` is the maximum-likelihood estimate, the mean count per
    slot. ``method='histogram'`` fits the Poisson pmf to the histogram of
    slot counts by least squares.
    """
    if method not in SLOT_METHODS:
        raise PreconditionError(f"unknown method {method!r}; expected one of {', '.join(SLOT_METHODS)}")
    counts = slot_counts(timestamps, slot_len, window)
    if method == 'mean':
        intensity = float(counts.mean())
    else:
        intensity = _histogram_intensity(counts)
    return PoissonFit(
        slot_len=float(slot_len),
        intensity=intensity,
        n_slots=len(counts),
        counts=tuple(int(c) for c in counts),
        method=method,
    )


def poisson_consistency(fit_a: PoissonFit, fit_b: PoissonFit, tolerance):
    """
    Compare two slot scales: a Poisson process has intensities proportional
    to the slot length, so ``ratio`` should be 1.
    """
    if fit_a.slot_len == fit_b.slot_len:
        raise PreconditionError('consistency check needs two different slot lengths')
    if fit_a.intensity == 0:
        raise PreconditionError('intensity at the first scale is zero')
    expected = fit_a.intensity * fit_b.slot_len / fit_a.slot_len
    ratio = fit_b.intensity / expected
    verdict = Consistency.CONSISTENT if abs(ratio - 1) <= tolerance else Consistency.INCONSISTENT
    logger.info(
        f"Slot intensities {fit_a.intensity:g}/{fit_a.slot_len:g}s and "
        f"{fit_b.intensity:g}/{fit_b.slot_len:g}s: ratio {ratio:.4f} ({verdict.value})"
    )
    return ratio, verdict
