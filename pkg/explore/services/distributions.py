"""
Empirical distribution functions and exponential fits.
"""
import logging

import numpy as np
from scipy import stats

from core.exceptions import EmptySeriesError, PreconditionError
from explore.models import EcdfTable, ExponentialFit

logger = logging.getLogger(__name__)


def ecdf(samples) -> EcdfTable:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySeriesError('ecdf of an empty sample')
    values, counts = np.unique(x, return_counts=True)
    probabilities = np.cumsum(counts) / x.size
    probabilities[-1] = 1.0
    return EcdfTable(
        values=tuple(values.tolist()),
        probabilities=tuple(probabilities.tolist()),
        n=int(x.size),
    )


def fit_exponential(samples, exclude_nonpositive=False) -> ExponentialFit:
    """
    Maximum-likelihood exponential fit (rate = 1 / sample mean) with the
    Kolmogorov-Smirnov distance to the fitted distribution.

    Non-positive samples are an error unless ``exclude_nonpositive`` is set,
    in which case they are dropped and counted in ``n_excluded``.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySeriesError('exponential fit of an empty sample')

    nonpositive = x <= 0
    excluded = int(nonpositive.sum())
    if excluded:
        if not exclude_nonpositive:
            raise PreconditionError(
                f"{excluded} non-positive samples; exponential fits need positive values"
            )
        logger.warning(f"Excluding {excluded} non-positive samples from the exponential fit")
        x = x[~nonpositive]
        if x.size == 0:
            raise EmptySeriesError('no positive samples left to fit')

    rate = 1.0 / x.mean()
    ks_stat = stats.kstest(x, 'expon', args=(0, 1.0 / rate)).statistic
    return ExponentialFit(rate=float(rate), n=int(x.size), ks_stat=float(ks_stat), n_excluded=excluded)


def histogram_density(samples, bins):
    """
    Density-normalized histogram as (left edges, right edges, densities).
    """
    x = np.asarray(samples, dtype=float)
    density, edges = np.histogram(x, bins=bins, density=True)
    return edges[:-1], edges[1:], density
