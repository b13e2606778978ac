"""
Domain records shared by every chainpulse app.

These are immutable value objects, not ORM models: datasets live in flat
files and in memory only.
"""
import enum
from dataclasses import dataclass, field
from decimal import Decimal
from functools import cached_property
from typing import Optional, Tuple

from core.units import ZERO_BTC

UNKNOWN_MINER = '?'


class DayClass(str, enum.Enum):
    WORKING = 'Working'
    WEEKEND = 'Weekend'

    @classmethod
    def parse(cls, value):
        """
        Accept 'working', 'Weekend', 'WEEKEND' ... as used on the command line.
        """
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).strip().lower():
                return member
        raise ValueError(f"unknown day class {value!r}; expected working or weekend")


@dataclass(frozen=True)
class MempoolSnapshot:
    """
    Backlog state seen by the node when a block arrived.
    """
    tx_count: int = 0
    total_bytes: int = 0
    total_fee: Decimal = ZERO_BTC


EMPTY_MEMPOOL = MempoolSnapshot()


@dataclass(frozen=True)
class BlockRecord:
    height: int
    timestamp: int
    miner: str
    size: int
    tx_count: int
    avg_fee: Decimal
    mempool: MempoolSnapshot = EMPTY_MEMPOOL


@dataclass(frozen=True)
class ValidationReport:
    n_records: int = 0
    n_negative_intervals: int = 0
    n_schema_errors: int = 0
    messages: Tuple[str, ...] = ()

    @property
    def is_clean(self):
        return self.n_negative_intervals == 0 and self.n_schema_errors == 0

    def with_messages(self, *messages, schema_errors=0):
        return ValidationReport(
            n_records=self.n_records,
            n_negative_intervals=self.n_negative_intervals,
            n_schema_errors=self.n_schema_errors + schema_errors,
            messages=self.messages + tuple(messages),
        )


@dataclass(frozen=True)
class BlockSeries:
    """
    Blocks ordered by height, with the inter-block times derived from them.

    Build instances with ``BlockSeries.from_blocks`` so ordering and height
    uniqueness are enforced; the plain constructor trusts its input.
    """
    blocks: Tuple[BlockRecord, ...] = ()
    report: Optional[ValidationReport] = field(default=None, compare=False)

    @classmethod
    def from_blocks(cls, blocks, report=None):
        from core.exceptions import DuplicateHeightError

        ordered = tuple(sorted(blocks, key=lambda b: b.height))
        for prev, cur in zip(ordered, ordered[1:]):
            if prev.height == cur.height:
                raise DuplicateHeightError(f"height {cur.height} appears more than once")
        return cls(blocks=ordered, report=report)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return BlockSeries(blocks=self.blocks[index])
        return self.blocks[index]

    @cached_property
    def interblock(self) -> Tuple[int, ...]:
        if len(self.blocks) < 2:
            return ()
        from core.services.series import derive_interblock_times
        return tuple(derive_interblock_times(self.blocks))

    @property
    def heights(self):
        return [b.height for b in self.blocks]

    @property
    def timestamps(self):
        return [b.timestamp for b in self.blocks]


@dataclass(frozen=True)
class TxRecord:
    id: str
    arrival_ts: int
    confirm_ts: Optional[int]
    fee: Decimal
    size: int

    @property
    def confirmed(self):
        return self.confirm_ts is not None

    @property
    def confirmation_time(self):
        if self.confirm_ts is None:
            return None
        return self.confirm_ts - self.arrival_ts

    @property
    def fee_rate(self):
        """BTC per byte."""
        return self.fee / self.size
