"""
Sample autocorrelation, partial autocorrelation and order suggestions.
"""
import math

import numpy as np
from statsmodels.tsa import stattools

from core.exceptions import EmptySeriesError, PreconditionError
from explore.config import CONFIDENCE_Z
from explore.models import AcfResult


def _check(series, max_lag):
    y = np.asarray(series, dtype=float)
    if max_lag < 0:
        raise PreconditionError(f"max_lag must be non-negative, got {max_lag}")
    if len(y) <= max_lag:
        raise EmptySeriesError(f"series of length {len(y)} is too short for lag {max_lag}")
    if np.ptp(y) == 0:
        raise PreconditionError('autocorrelation of a constant series is undefined')
    return y


def acf(series, max_lag) -> AcfResult:
    """
    Biased autocorrelation r_k = c_k / c_0, both sums divided by N.
    """
    y = _check(series, max_lag)
    values = stattools.acf(y, nlags=max_lag, adjusted=False, fft=False)
    return AcfResult(
        values=tuple(float(v) for v in values[:max_lag + 1]),
        confidence_band=CONFIDENCE_Z / math.sqrt(len(y)),
        n=len(y),
    )


def pacf(series, max_lag) -> AcfResult:
    """
    Partial autocorrelation by the Levinson-Durbin recursion on the biased
    autocovariance; lags beyond half the series are refused.
    """
    y = _check(series, max_lag)
    if max_lag > len(y) // 2:
        raise EmptySeriesError(f"series of length {len(y)} is too short for partial lag {max_lag}")
    values = stattools.pacf(y, nlags=max_lag, method='ldb')
    return AcfResult(
        values=tuple(float(v) for v in values[:max_lag + 1]),
        confidence_band=CONFIDENCE_Z / math.sqrt(len(y)),
        n=len(y),
        kind='pacf',
    )


def _cutoff(result: AcfResult):
    for lag in range(1, len(result.values)):
        if abs(result.values[lag]) <= result.confidence_band:
            return lag - 1
    return result.max_lag


def order_selection(series, max_lag):
    """
    Suggested (p, q): the last lag before the PACF (for p) or the ACF (for q)
    first falls inside the confidence band.
    """
    return _cutoff(pacf(series, max_lag)), _cutoff(acf(series, max_lag))
