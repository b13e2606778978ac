"""
Feature matrices, tree ensembles and their evaluations.
"""
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from classify.config import DISTRIBUTION_TOLERANCE
from core.exceptions import PreconditionError


class ClassifierKind(str, enum.Enum):
    CART = 'cart'
    BOOSTED = 'boosted'
    RUSBOOST = 'rusboost'


@dataclass(frozen=True)
class FeatureMatrix:
    """One row of block features per labelled block."""
    rows: Tuple[Tuple[float, ...], ...]
    labels: Tuple[str, ...]
    feature_names: Tuple[str, ...]

    def __post_init__(self):
        if len(self.rows) != len(self.labels):
            raise PreconditionError(f"{len(self.rows)} feature rows for {len(self.labels)} labels")
        width = len(self.feature_names)
        for index, row in enumerate(self.rows):
            if len(row) != width:
                raise PreconditionError(f"row {index} has {len(row)} features, expected {width}")
            if not all(math.isfinite(value) for value in row):
                raise PreconditionError(f"row {index} has a missing feature value")

    @classmethod
    def from_arrays(cls, values, labels, feature_names):
        values = np.asarray(values, dtype=float).reshape(len(labels), len(feature_names))
        return cls(
            rows=tuple(tuple(row) for row in values.tolist()),
            labels=tuple(str(label) for label in labels),
            feature_names=tuple(feature_names),
        )

    def __len__(self):
        return len(self.rows)

    @cached_property
    def values(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float).reshape(len(self.rows), len(self.feature_names))

    @property
    def classes(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    def label_indices(self, classes):
        position = {label: index for index, label in enumerate(classes)}
        return np.asarray([position[label] for label in self.labels], dtype=np.int64)

    def take(self, indices):
        return FeatureMatrix(
            rows=tuple(self.rows[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
            feature_names=self.feature_names,
        )


@dataclass(frozen=True)
class TreeNode:
    """
    A split when ``feature`` is set: rows whose value is <= ``threshold``
    go left. Otherwise a leaf holding the class distribution.
    """
    distribution: Tuple[float, ...] = ()
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional['TreeNode'] = None
    right: Optional['TreeNode'] = None

    @property
    def is_leaf(self):
        return self.feature is None

    @property
    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth)

    def leaves(self):
        if self.is_leaf:
            yield self
            return
        yield from self.left.leaves()
        yield from self.right.leaves()

    def splits(self):
        if self.is_leaf:
            return
        yield self
        yield from self.left.splits()
        yield from self.right.splits()

    @classmethod
    def from_dict(cls, data):
        if data.get('feature') is None:
            return cls(distribution=tuple(float(p) for p in data['distribution']))
        return cls(
            feature=int(data['feature']),
            threshold=float(data['threshold']),
            left=cls.from_dict(data['left']),
            right=cls.from_dict(data['right']),
        )


@dataclass(frozen=True)
class Hyperparameters:
    max_depth: int
    min_leaf: int
    rounds: int = 0
    seed: Optional[int] = None


@dataclass(frozen=True)
class ClassifierModel:
    """
    A single CART tree (weight 1) or a weighted ensemble. ``classes`` fixes
    the order of every leaf distribution and score vector.
    """
    kind: ClassifierKind
    classes: Tuple[str, ...]
    feature_names: Tuple[str, ...]
    trees: Tuple[TreeNode, ...]
    tree_weights: Tuple[float, ...]
    hyperparameters: Hyperparameters
    fitted_on: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'kind', ClassifierKind(self.kind))
        object.__setattr__(self, 'classes', tuple(self.classes))
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        object.__setattr__(self, 'trees', tuple(self.trees))
        object.__setattr__(self, 'tree_weights', tuple(float(w) for w in self.tree_weights))
        if not self.trees or len(self.trees) != len(self.tree_weights):
            raise PreconditionError(f"{len(self.trees)} trees for {len(self.tree_weights)} weights")
        if not all(math.isfinite(w) and w > 0 for w in self.tree_weights):
            raise PreconditionError(f"tree weights must be finite and positive, got {self.tree_weights}")
        for tree in self.trees:
            for leaf in tree.leaves():
                if len(leaf.distribution) != len(self.classes):
                    raise PreconditionError(
                        f"leaf distribution has {len(leaf.distribution)} entries for {len(self.classes)} classes"
                    )
                if min(leaf.distribution) < 0 or abs(sum(leaf.distribution) - 1.0) > DISTRIBUTION_TOLERANCE:
                    raise PreconditionError(f"leaf distribution {leaf.distribution} does not sum to 1")
            for node in tree.splits():
                if not 0 <= node.feature < len(self.feature_names):
                    raise PreconditionError(f"split on feature {node.feature} of {len(self.feature_names)}")


@dataclass(frozen=True)
class RocCurve:
    label: str
    fpr: Tuple[float, ...]
    tpr: Tuple[float, ...]
    auc: float


@dataclass(frozen=True)
class ClassRate:
    label: str
    support: int
    tpr: Optional[float]
    fnr: Optional[float]


@dataclass(frozen=True)
class ClassifierEvaluation:
    """
    Confusion rows are true classes, columns predicted ones. ``sensitivity``
    is the macro mean true-positive rate over the classes present in the
    test set; ``miss_rate`` is its complement.
    """
    classes: Tuple[str, ...]
    confusion: Tuple[Tuple[int, ...], ...]
    accuracy: float
    sensitivity: float
    miss_rate: float
    roc: Tuple[RocCurve, ...] = ()
    macro_auc: Optional[float] = None

    def __post_init__(self):
        if any(count < 0 for row in self.confusion for count in row):
            raise PreconditionError('confusion counts must be non-negative')

    @property
    def total(self):
        return sum(sum(row) for row in self.confusion)

    @property
    def support(self):
        return tuple(sum(row) for row in self.confusion)
