"""
Block features labelled by mining pool.
"""
import logging
from collections import Counter

import numpy as np

from classify import config
from classify.models import FeatureMatrix
from core.exceptions import EmptySeriesError, PreconditionError, UnknownLabelError
from core.models import BlockSeries
from core.services.series import attribute_column

logger = logging.getLogger(__name__)


def build_feature_matrix(series: BlockSeries, top_k=config.DEFAULT_TOP_K, include_mempool=False,
                         other_label=config.OTHER_LABEL) -> FeatureMatrix:
    """
    Rows of (avg_fee, size, tx_count, interblock) for every block after the
    first, whose inter-block time is unknown. Pools outside the ``top_k``
    by block count share ``other_label``.
    """
    if top_k < 1:
        raise PreconditionError(f"top_k must be at least 1, got {top_k}")
    if len(series) < 2:
        raise EmptySeriesError(f"features need at least 2 blocks, got {len(series)}")

    names = config.FEATURES + (config.MEMPOOL_FEATURES if include_mempool else ())
    columns = [
        attribute_column(series, name) if name == 'interblock' else attribute_column(series, name)[1:]
        for name in names
    ]
    miners = attribute_column(series, 'miner')[1:]
    counts = Counter(miners)
    kept = set(sorted(counts, key=lambda miner: (-counts[miner], miner))[:top_k])
    labels = [miner if miner in kept else other_label for miner in miners]
    if len(kept) < len(counts):
        logger.info(f"{len(counts) - len(kept)} pools outside the top {top_k} relabelled {other_label!r}")
    return FeatureMatrix.from_arrays(np.column_stack(columns), labels, names)


def restrict_classes(matrix: FeatureMatrix, labels) -> FeatureMatrix:
    """Only the rows of the given classes, in their original order."""
    wanted = set(labels)
    missing = sorted(wanted - set(matrix.labels))
    if missing:
        raise UnknownLabelError(f"labels {missing} do not occur in the feature matrix")
    return matrix.take([i for i, label in enumerate(matrix.labels) if label in wanted])
