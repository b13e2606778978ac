"""
Simulator parameters and results.
"""
import enum
from dataclasses import dataclass
from typing import Optional, Tuple

from core.exceptions import PreconditionError
from core.models import BlockSeries, TxRecord
from simulate.config import SIM_EPOCH


class Selection(str, enum.Enum):
    FEE_RATE_GREEDY = 'FeeRateGreedy'
    FIFO = 'Fifo'


@dataclass(frozen=True)
class MinerPolicy:
    name: str
    hash_share: float
    size_cap: int
    min_fee_rate: float = 0.0
    selection: Selection = Selection.FEE_RATE_GREEDY

    def __post_init__(self):
        if not 0 <= self.hash_share <= 1:
            raise PreconditionError(f"pool {self.name}: hash_share must lie in [0, 1]")
        if self.size_cap < 0:
            raise PreconditionError(f"pool {self.name}: size_cap must be non-negative")
        if self.min_fee_rate < 0:
            raise PreconditionError(f"pool {self.name}: min_fee_rate must be non-negative")
        object.__setattr__(self, 'selection', Selection(self.selection))


class ArrivalKind(str, enum.Enum):
    POISSON = 'Poisson'
    MMPP2 = 'MMPP2'


@dataclass(frozen=True)
class ArrivalModel:
    """
    Transaction arrival process.

    Poisson uses ``rate``. MMPP2 switches between ``rate_low`` and
    ``rate_high`` with exponential sojourns: the chain leaves the low state
    at ``switch_up`` and the high state at ``switch_down`` (per second).
    """
    kind: ArrivalKind
    rate: Optional[float] = None
    rate_low: Optional[float] = None
    rate_high: Optional[float] = None
    switch_up: Optional[float] = None
    switch_down: Optional[float] = None

    def __post_init__(self):
        kind = ArrivalKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind is ArrivalKind.POISSON:
            required = {'rate': self.rate}
        else:
            required = {
                'rate_low': self.rate_low,
                'rate_high': self.rate_high,
                'switch_up': self.switch_up,
                'switch_down': self.switch_down,
            }
        for name, value in required.items():
            if value is None or not value > 0:
                raise PreconditionError(f"{kind.value} arrivals need {name} > 0, got {value}")

    @classmethod
    def poisson(cls, rate):
        return cls(kind=ArrivalKind.POISSON, rate=rate)

    @classmethod
    def mmpp2(cls, rate_low, rate_high, switch_up, switch_down):
        return cls(
            kind=ArrivalKind.MMPP2,
            rate_low=rate_low,
            rate_high=rate_high,
            switch_up=switch_up,
            switch_down=switch_down,
        )

    @property
    def high_state_probability(self):
        if self.kind is ArrivalKind.POISSON:
            return 0.0
        return self.switch_up / (self.switch_up + self.switch_down)

    @property
    def mean_rate(self):
        if self.kind is ArrivalKind.POISSON:
            return self.rate
        p_high = self.high_state_probability
        return (1 - p_high) * self.rate_low + p_high * self.rate_high


@dataclass(frozen=True)
class SimConfig:
    seed: int
    horizon: float
    block_interval_mean: float
    tx_arrival: ArrivalModel
    fee_dist: Tuple[float, float]
    tx_size_dist: Tuple[float, float]
    pools: Tuple[MinerPolicy, ...]
    interval_modulation: float = 0.0
    start_ts: int = SIM_EPOCH

    def __post_init__(self):
        if not self.horizon > 0:
            raise PreconditionError(f"horizon must be positive, got {self.horizon}")
        if not self.block_interval_mean > 0:
            raise PreconditionError(
                f"block_interval_mean must be positive, got {self.block_interval_mean}"
            )
        if not 0 <= self.interval_modulation < 1:
            raise PreconditionError(
                f"interval_modulation must lie in [0, 1), got {self.interval_modulation}"
            )
        object.__setattr__(self, 'fee_dist', tuple(self.fee_dist))
        object.__setattr__(self, 'tx_size_dist', tuple(self.tx_size_dist))
        object.__setattr__(self, 'pools', tuple(self.pools))


@dataclass(frozen=True)
class SimOutput:
    blocks: BlockSeries
    txs: Tuple[TxRecord, ...]
    truth: SimConfig

    @property
    def unconfirmed(self):
        return [tx for tx in self.txs if not tx.confirmed]
