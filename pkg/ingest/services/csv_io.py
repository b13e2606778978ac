"""
Block and transaction CSV files.

Canonical form: the column order of ``ingest.config``, no padding, LF line
endings, integers as plain digits and BTC amounts in plain decimal notation
without trailing zeros. Saving a loaded canonical file reproduces it byte for
byte.
"""
import csv
import io
import logging
from pathlib import Path

from core.exceptions import HeaderMismatchError, ParseError, PreconditionError
from core.models import BlockRecord, BlockSeries, MempoolSnapshot, TxRecord, ValidationReport
from core.services.files import atomic_write_text
from core.services.series import validate_series
from ingest.config import BLOCK_COLUMNS, TX_COLUMNS, VALUE_RULE_CODES
from ingest.models import TxDataset
from ingest.serializers import BlockRowSerializer, TxRowSerializer

logger = logging.getLogger(__name__)


def format_btc(amount) -> str:
    """
    Plain decimal text with trailing zeros removed ("0.00018", "1.2", "0").
    """
    text = format(amount, 'f')
    if '.' in text:
        text = text.rstrip('0').rstrip('.')
    return text or '0'


def _read_rows(path, expected_columns):
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"no such file: {path}", code='missing_file')
    with path.open('r', encoding='utf-8', newline='') as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != tuple(expected_columns):
            raise HeaderMismatchError(expected_columns, header or [])
        # data rows are numbered from 2 (the header is line 1)
        return [(line_no, row) for line_no, row in enumerate(reader, start=2) if row]


def _check_row(serializer, line_no):
    """
    Validated data of one row, or None when the row is well formed but
    breaks a value rule (a negative count, confirmation before arrival ...).
    Cells that do not parse at all raise ParseError.
    """
    if serializer.is_valid():
        return serializer.validated_data
    errors = dict(serializer.errors)
    for column, messages in errors.items():
        if column == 'non_field_errors':
            continue
        if any(getattr(m, 'code', None) not in VALUE_RULE_CODES for m in messages):
            raise ParseError(line_no, column, '; '.join(str(m) for m in messages))
    return None


def _rejection(line_no, errors):
    reasons = '; '.join(
        str(m) if column == 'non_field_errors' else f"{column}: {m}"
        for column, messages in errors.items()
        for m in messages
    )
    return f"row {line_no}: rejected ({reasons})"


def load_block_csv(path) -> BlockSeries:
    """
    Blocks sorted by height. Rows with out-of-range values are rejected and
    counted in the report; an unparseable cell aborts the load.
    """
    rows = _read_rows(path, BLOCK_COLUMNS)
    blocks = []
    messages = []
    for line_no, row in rows:
        if len(row) != len(BLOCK_COLUMNS):
            raise ParseError(line_no, 'row', f"expected {len(BLOCK_COLUMNS)} cells, found {len(row)}")
        serializer = BlockRowSerializer(data=dict(zip(BLOCK_COLUMNS, row)))
        data = _check_row(serializer, line_no)
        if data is None:
            messages.append(_rejection(line_no, serializer.errors))
            continue
        blocks.append(BlockRecord(
            height=data['height'],
            timestamp=data['timestamp'],
            miner=data['miner'],
            size=data['size_bytes'],
            tx_count=data['tx_count'],
            avg_fee=data['avg_fee_btc'],
            mempool=MempoolSnapshot(
                tx_count=data['mempool_tx_count'],
                total_bytes=data['mempool_bytes'],
                total_fee=data['mempool_fee_btc'],
            ),
        ))

    series = BlockSeries.from_blocks(blocks)
    report = validate_series(series)
    if messages:
        report = report.with_messages(*messages, schema_errors=len(messages))
        logger.warning(f"Rejected {len(messages)} block rows from {path}")
    if not blocks:
        report = report.with_messages(f"{path}: no data rows")
        logger.warning(f"Block file {path} has no data rows")
    logger.info(f"Loaded {len(series)} blocks from {path}")
    return BlockSeries(blocks=series.blocks, report=report)


def load_tx_csv(path) -> TxDataset:
    """
    Transactions in file order. Rows whose confirmation precedes arrival, or
    with out-of-range values, are rejected and counted; any other bad cell
    aborts the load.
    """
    rows = _read_rows(path, TX_COLUMNS)
    records = []
    messages = []
    for line_no, row in rows:
        if len(row) != len(TX_COLUMNS):
            raise ParseError(line_no, 'row', f"expected {len(TX_COLUMNS)} cells, found {len(row)}")
        values = dict(zip(TX_COLUMNS, row))
        if not values['confirm_ts'].strip():
            values['confirm_ts'] = None
        serializer = TxRowSerializer(data=values)
        data = _check_row(serializer, line_no)
        if data is None:
            messages.append(_rejection(line_no, serializer.errors))
            continue
        records.append(TxRecord(
            id=data['id'],
            arrival_ts=data['arrival_ts'],
            confirm_ts=data['confirm_ts'],
            fee=data['fee_btc'],
            size=data['size_bytes'],
        ))

    rejected = len(messages)
    if rejected:
        logger.warning(f"Rejected {rejected} transaction rows from {path}")
    if not records:
        messages.append(f"{path}: no usable rows")
    report = ValidationReport(
        n_records=len(records),
        n_schema_errors=rejected,
        messages=tuple(messages),
    )
    logger.info(f"Loaded {len(records)} transactions from {path}")
    return TxDataset(records=tuple(records), report=report)


def block_rows(series):
    for block in series:
        yield (
            block.height,
            block.timestamp,
            block.miner,
            block.size,
            block.tx_count,
            format_btc(block.avg_fee),
            block.mempool.tx_count,
            block.mempool.total_bytes,
            format_btc(block.mempool.total_fee),
        )


def tx_rows(txs):
    for tx in txs:
        yield (
            tx.id,
            tx.arrival_ts,
            '' if tx.confirm_ts is None else tx.confirm_ts,
            format_btc(tx.fee),
            tx.size,
        )


def render_csv(columns, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def save_block_csv(series, path):
    atomic_write_text(path, render_csv(BLOCK_COLUMNS, block_rows(series)))
    logger.info(f"Wrote {len(series)} blocks to {path}")


def save_tx_csv(txs, path):
    txs = list(txs)
    atomic_write_text(path, render_csv(TX_COLUMNS, tx_rows(txs)))
    logger.info(f"Wrote {len(txs)} transactions to {path}")
