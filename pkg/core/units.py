"""
Unit handling: fees are BTC decimals with 8 places, sizes are bytes.
Megabytes only appear in reports.
"""
from decimal import Decimal, ROUND_HALF_UP

SATOSHI = Decimal('0.00000001')
SATOSHIS_PER_BTC = 100_000_000
BYTES_PER_MB = 1_000_000

ZERO_BTC = Decimal('0.00000000')


def to_btc(value) -> Decimal:
    """
    Quantize any numeric value to an 8-place BTC decimal.
    """
    if not isinstance(value, Decimal):
        value = Decimal(str(value))
    return value.quantize(SATOSHI, rounding=ROUND_HALF_UP)


def satoshi_to_btc(satoshis: int) -> Decimal:
    return (Decimal(int(satoshis)) * SATOSHI).quantize(SATOSHI)


def to_megabytes(size_bytes) -> float:
    return float(size_bytes) / BYTES_PER_MB
