"""
Collection of block records from a Bitcoin-Core-compatible node over
JSON-RPC (getblockcount, getblockhash, getblock, getmempoolinfo).
"""
import itertools
import logging
import time
from decimal import Decimal

import requests
from django.conf import settings

from core.exceptions import (
    ChainpulseError,
    HeightBeyondTipError,
    NodeAuthError,
    NodeUnreachableError,
    PreconditionError,
)
from core.models import UNKNOWN_MINER, BlockRecord, BlockSeries, MempoolSnapshot
from core.services.series import validate_series
from core.units import ZERO_BTC, to_btc
from ingest.config import POOL_TAGS
from ingest.models import NodeEndpoint

logger = logging.getLogger(__name__)


class BitcoinRPC:
    """
    Minimal JSON-RPC client. Connection failures are retried with
    exponential backoff; authentication failures are not.
    """

    def __init__(self, endpoint: NodeEndpoint, timeout=None, max_retries=None, backoff=None):
        self.endpoint = endpoint
        self.timeout = settings.RPC_TIMEOUT if timeout is None else timeout
        self.max_retries = settings.RPC_MAX_RETRIES if max_retries is None else max_retries
        self.backoff = settings.RPC_BACKOFF if backoff is None else backoff
        self.retries = 0
        self.session = requests.Session()
        if any(endpoint.credentials):
            self.session.auth = tuple(endpoint.credentials)
        self._ids = itertools.count(1)

    def call(self, method, *params):
        payload = {
            'jsonrpc': '1.0',
            'id': next(self._ids),
            'method': method,
            'params': list(params),
        }
        attempt = 0
        while True:
            try:
                response = self.session.post(self.endpoint.url, json=payload, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                if attempt >= self.max_retries:
                    raise NodeUnreachableError(
                        f"{self.endpoint.url} unreachable after {attempt + 1} attempts: {exc}"
                    ) from exc
                delay = self.backoff * (2 ** attempt)
                attempt += 1
                self.retries += 1
                logger.warning(f"RPC {method} failed ({exc}); retry {attempt} in {delay:.2f}s")
                time.sleep(delay)
                continue

            if response.status_code in (401, 403):
                raise NodeAuthError(f"{self.endpoint.url} answered HTTP {response.status_code}")
            try:
                body = response.json(parse_float=Decimal)
            except ValueError as exc:
                raise ChainpulseError(
                    f"RPC {method} answered HTTP {response.status_code} without a JSON body", code='rpc_error'
                ) from exc
            if body.get('error'):
                error = body['error']
                raise ChainpulseError(
                    f"RPC {method} failed: {error.get('message', error)}", code='rpc_error'
                )
            return body['result']

    def getblockcount(self):
        return int(self.call('getblockcount'))

    def getblockhash(self, height):
        return self.call('getblockhash', height)

    def getblock(self, block_hash, verbosity=2):
        return self.call('getblock', block_hash, verbosity)

    def getmempoolinfo(self):
        return self.call('getmempoolinfo')


def miner_from_coinbase(coinbase_hex) -> str:
    """
    Pool label from the tag miners embed in the coinbase script.
    """
    if not coinbase_hex:
        return UNKNOWN_MINER
    try:
        text = bytes.fromhex(coinbase_hex).decode('utf-8', errors='ignore').lower()
    except ValueError:
        return UNKNOWN_MINER
    for label, tags in POOL_TAGS:
        if any(tag in text for tag in tags):
            return label
    return UNKNOWN_MINER


def block_record_from_rpc(block, mempool_info) -> BlockRecord:
    transactions = block.get('tx') or []
    coinbase = ''
    if transactions and isinstance(transactions[0], dict):
        vin = transactions[0].get('vin') or [{}]
        coinbase = vin[0].get('coinbase', '')

    fees = [Decimal(tx['fee']) for tx in transactions if isinstance(tx, dict) and 'fee' in tx]
    avg_fee = to_btc(sum(fees) / len(fees)) if fees else ZERO_BTC

    pool_count = int(mempool_info.get('size', 0))
    return BlockRecord(
        height=int(block['height']),
        timestamp=int(block['time']),
        miner=miner_from_coinbase(coinbase),
        size=int(block['size']),
        tx_count=int(block.get('nTx', len(transactions))),
        avg_fee=avg_fee,
        mempool=MempoolSnapshot(
            tx_count=pool_count,
            total_bytes=int(mempool_info.get('bytes', 0)) if pool_count else 0,
            total_fee=to_btc(mempool_info.get('total_fee', 0)) if pool_count else ZERO_BTC,
        ),
    )


def collect_from_node(ep: NodeEndpoint, height_range, client=None) -> BlockSeries:
    """
    Fetch blocks ``height_range = (start, stop)`` (inclusive) one at a time.

    If the node stops answering or rejects a request part way, the blocks gathered so far are
    returned and the abort is described in the series report.
    """
    start, stop = height_range
    if start < 0 or stop < start:
        raise PreconditionError(f"invalid height range [{start}, {stop}]")

    client = client or BitcoinRPC(ep)
    tip = client.getblockcount()
    if start > tip:
        raise HeightBeyondTipError(start, tip)
    if stop > tip:
        raise HeightBeyondTipError(stop, tip)

    blocks = []
    abort = None
    for height in range(start, stop + 1):
        try:
            block_hash = client.getblockhash(height)
            block = client.getblock(block_hash, 2)
            mempool_info = client.getmempoolinfo()
        except NodeAuthError:
            raise
        except ChainpulseError as exc:
            abort = f"collection aborted at height {height}: {exc}"
            logger.error(abort)
            break
        blocks.append(block_record_from_rpc(block, mempool_info))
        if height < stop:
            time.sleep(ep.poll_interval)

    series = BlockSeries.from_blocks(blocks)
    report = validate_series(series)
    messages = [f"collected {len(blocks)} of {stop - start + 1} blocks, {client.retries} retries"]
    if abort:
        messages.append(abort)
    logger.info(messages[0])
    return BlockSeries(blocks=series.blocks, report=report.with_messages(*messages))
