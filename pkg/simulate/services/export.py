"""
Simulation output on disk: the ingest CSV formats plus a JSON truth sidecar
holding every SimConfig field.
"""
import json
import logging
from dataclasses import asdict
from enum import Enum
from pathlib import Path

from core.exceptions import PreconditionError, SchemaError
from core.services.files import atomic_write_text
from ingest.config import BLOCK_COLUMNS, TX_COLUMNS
from ingest.services.csv_io import block_rows, render_csv, tx_rows
from simulate.models import SimConfig, SimOutput
from simulate.serializers import SimConfigSerializer

logger = logging.getLogger(__name__)

BLOCKS_FILE = 'blocks.csv'
TXS_FILE = 'txs.csv'
TRUTH_FILE = 'truth.json'


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def truth_json(config: SimConfig) -> str:
    return json.dumps(_plain(asdict(config)), sort_keys=True, indent=2) + '\n'


def render_simulation(output: SimOutput):
    """
    ``{file name: text}`` for one run.
    """
    return {
        BLOCKS_FILE: render_csv(BLOCK_COLUMNS, block_rows(output.blocks)),
        TXS_FILE: render_csv(TX_COLUMNS, tx_rows(output.txs)),
        TRUTH_FILE: truth_json(output.truth),
    }


def write_simulation(output: SimOutput, directory):
    directory = Path(directory)
    for name, text in sorted(render_simulation(output).items()):
        atomic_write_text(directory / name, text)
    logger.info(f"Wrote simulation ({len(output.blocks)} blocks) to {directory}")
    return directory


def read_truth(path) -> SimConfig:
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"no such file: {path}", code='missing_file')
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})")
    serializer = SimConfigSerializer(data=data)
    if not serializer.is_valid():
        raise SchemaError(f"{path}: {serializer.errors}")
    return serializer.save()
