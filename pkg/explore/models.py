"""
Result records of the exploratory statistics.
"""
import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class EcdfTable:
    """
    Distinct sample values with the fraction of samples at or below each.
    """
    values: Tuple[float, ...]
    probabilities: Tuple[float, ...]
    n: int

    def evaluate(self, x):
        index = int(np.searchsorted(self.values, x, side='right'))
        return 0.0 if index == 0 else self.probabilities[index - 1]


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    n: int
    ks_stat: float
    n_excluded: int = 0

    @property
    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class PoissonFit:
    slot_len: float
    intensity: float
    n_slots: int
    counts: Tuple[int, ...] = ()
    method: str = 'mean'

    @property
    def dispersion_index(self):
        """Variance over mean of the slot counts; 1 for a Poisson process."""
        counts = np.asarray(self.counts, dtype=float)
        if len(counts) < 2 or counts.mean() == 0:
            return float('nan')
        return float(counts.var(ddof=1) / counts.mean())


class Consistency(str, enum.Enum):
    CONSISTENT = 'Consistent'
    INCONSISTENT = 'Inconsistent'


@dataclass(frozen=True)
class AcfResult:
    values: Tuple[float, ...]
    confidence_band: float
    n: int
    kind: str = 'acf'

    @property
    def lags(self):
        return tuple(range(len(self.values)))

    @property
    def max_lag(self):
        return len(self.values) - 1


@dataclass(frozen=True)
class AttributeStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class MinerSummary:
    """
    One pool's block attributes: size in MB, transaction count and average
    fee in BTC.
    """
    miner: str
    count: int
    size: AttributeStats
    tx_count: AttributeStats
    avg_fee: AttributeStats


@dataclass(frozen=True)
class InterblockSummary:
    """
    Inter-block times preceding one pool's blocks.
    """
    miner: str
    count: int
    mean: float
    median: float
    min: float
    max: float
    n_nonpositive: int


@dataclass(frozen=True)
class AttributeRelation:
    x_name: str
    y_name: str
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    miners: Tuple[str, ...]
    pearson: float
    spearman: float


@dataclass(frozen=True)
class QuartileBucket:
    label: str
    lower: float
    upper: float
    count: int
    mean: Optional[float]
    median: Optional[float]


@dataclass(frozen=True)
class QuartileReport:
    breakpoints: Tuple[float, float, float]
    buckets: Tuple[QuartileBucket, ...]
    overall_mean: float
    total: int

    @property
    def degenerate(self):
        return self.breakpoints[0] == self.breakpoints[2]

    @property
    def means(self):
        return tuple(bucket.mean for bucket in self.buckets)
