"""
Ingestion value types: split fractions, node endpoints and loaded
transaction sets.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

from core.exceptions import PreconditionError
from core.models import TxRecord, ValidationReport
from ingest.config import DEFAULT_SPLIT, SPLIT_TOLERANCE


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = DEFAULT_SPLIT[0]
    test_frac: float = DEFAULT_SPLIT[1]
    val_frac: float = DEFAULT_SPLIT[2]

    def __post_init__(self):
        fractions = (self.train_frac, self.test_frac, self.val_frac)
        if any(f < 0 or f > 1 for f in fractions):
            raise PreconditionError(f"split fractions must lie in [0, 1], got {fractions}")
        if abs(sum(fractions) - 1.0) > SPLIT_TOLERANCE:
            raise PreconditionError(f"split fractions must sum to 1, got {sum(fractions)!r}")


@dataclass(frozen=True)
class NodeEndpoint:
    url: str
    credentials: Tuple[str, str] = field(default=('', ''), repr=False)
    poll_interval: float = 1.0

    def __post_init__(self):
        if not self.poll_interval > 0:
            raise PreconditionError(f"poll_interval must be positive, got {self.poll_interval}")

    @classmethod
    def from_settings(cls):
        from django.conf import settings

        return cls(
            url=settings.RPC_URL,
            credentials=(settings.RPC_USER, settings.RPC_PASS),
            poll_interval=settings.RPC_POLL_INTERVAL,
        )


@dataclass(frozen=True)
class TxDataset:
    records: Tuple[TxRecord, ...] = ()
    report: Optional[ValidationReport] = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    @property
    def confirmed(self):
        return [tx for tx in self.records if tx.confirmed]
