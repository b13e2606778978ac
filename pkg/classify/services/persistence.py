"""
Classifiers as JSON files; thresholds and weights keep full precision.
"""
import json
import logging
from dataclasses import asdict
from pathlib import Path

from classify.models import ClassifierModel
from classify.serializers import ClassifierModelSerializer
from core.exceptions import PreconditionError, SchemaError
from core.services.files import atomic_write_text

logger = logging.getLogger(__name__)


def classifier_json(model: ClassifierModel) -> str:
    data = asdict(model)
    data['kind'] = model.kind.value
    return json.dumps(data, sort_keys=True, indent=2) + '\n'


def save_classifier(model: ClassifierModel, path):
    path = Path(path)
    atomic_write_text(path, classifier_json(model))
    logger.info(f"Saved {model.kind.value} classifier with {len(model.trees)} trees to {path}")
    return path


def parse_classifier(data, source='classifier'):
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: expected a JSON object")
    serializer = ClassifierModelSerializer(data=data)
    if not serializer.is_valid():
        raise SchemaError(f"{source}: {serializer.errors}")
    try:
        return serializer.save()
    except PreconditionError as exc:
        raise SchemaError(f"{source}: {exc}")


def load_classifier(path):
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"no such file: {path}", code='missing_file')
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})")
    return parse_classifier(data, source=str(path))
