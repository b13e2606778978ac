"""
Fitted models as JSON files. Floats are written with ``repr`` precision so
a loaded model predicts exactly like the saved one.
"""
import json
import logging
from dataclasses import asdict
from pathlib import Path

from core.exceptions import PreconditionError, SchemaError
from core.services.files import atomic_write_text
from forecast.models import ArimaModel, MeanModel, NeuralNetModel
from forecast.serializers import ArimaModelSerializer, MeanModelSerializer, NeuralNetModelSerializer

logger = logging.getLogger(__name__)

SERIALIZERS = {
    'arima': (ArimaModel, ArimaModelSerializer),
    'neural': (NeuralNetModel, NeuralNetModelSerializer),
    'mean': (MeanModel, MeanModelSerializer),
}


def model_json(model) -> str:
    for kind, (model_class, _) in SERIALIZERS.items():
        if isinstance(model, model_class):
            return json.dumps({'kind': kind, **asdict(model)}, sort_keys=True, indent=2) + '\n'
    raise PreconditionError(f"cannot save {type(model).__name__}")


def save_model(model, path):
    path = Path(path)
    atomic_write_text(path, model_json(model))
    logger.info(f"Saved {type(model).__name__} to {path}")
    return path


def parse_model(data, source='model'):
    if not isinstance(data, dict) or data.get('kind') not in SERIALIZERS:
        raise SchemaError(f"{source}: expected an object with kind in {sorted(SERIALIZERS)}")
    fields = {key: value for key, value in data.items() if key != 'kind'}
    serializer = SERIALIZERS[data['kind']][1](data=fields)
    if not serializer.is_valid():
        raise SchemaError(f"{source}: {serializer.errors}")
    try:
        return serializer.save()
    except PreconditionError as exc:
        raise SchemaError(f"{source}: {exc}")


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"no such file: {path}", code='missing_file')
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})")
    return parse_model(data, source=str(path))
