"""
CART decision trees grown greedily on weighted Gini impurity.
"""
import logging

import numpy as np

from classify import config
from classify.models import ClassifierKind, ClassifierModel, FeatureMatrix, Hyperparameters, TreeNode
from core.exceptions import EmptySeriesError, PreconditionError

logger = logging.getLogger(__name__)


def gini(weights):
    """1 - sum p_k^2 of a vector of class counts or weights."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        return 0.0
    p = w / total
    return float(1.0 - p @ p)


def _gini_rows(counts, totals):
    p = np.divide(counts, totals[:, None], out=np.zeros_like(counts), where=totals[:, None] > 0)
    return 1.0 - (p * p).sum(axis=1)


def _best_split(x, y, w, n_classes, min_leaf):
    """
    (weighted child impurity, feature, threshold) of the best split, or
    None when no cut leaves ``min_leaf`` rows on both sides. Candidate
    thresholds are midpoints between consecutive distinct values.
    """
    n = len(y)
    total = np.bincount(y, weights=w, minlength=n_classes)
    weight = total.sum()
    left_rows = np.arange(1, n)
    allowed = (left_rows >= min_leaf) & (n - left_rows >= min_leaf)
    best = None
    for feature in range(x.shape[1]):
        order = np.argsort(x[:, feature], kind='stable')
        values = x[order, feature]
        valid = allowed & (values[1:] > values[:-1])
        if not valid.any():
            continue
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y[order]] = w[order]
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        left_weight, right_weight = left.sum(axis=1), right.sum(axis=1)
        impurity = (_gini_rows(left, left_weight) * left_weight + _gini_rows(right, right_weight) * right_weight) / weight
        impurity = np.where(valid, np.round(impurity, config.IMPURITY_DECIMALS), np.inf)
        cut = int(np.argmin(impurity))
        if best is None or impurity[cut] < best[0]:
            low, high = float(values[cut]), float(values[cut + 1])
            threshold = (low + high) / 2
            # adjacent floats have no midpoint strictly between them
            best = (float(impurity[cut]), feature, threshold if threshold < high else low)
    return best


def _leaf(counts):
    return TreeNode(distribution=tuple((counts / counts.sum()).tolist()))


def grow_tree(x, y, weights, n_classes, max_depth, min_leaf, depth=0):
    """
    Grow a tree on rows ``x`` with class indices ``y`` and positive row
    weights. Ties go to the lowest feature index, then the lowest threshold.
    """
    counts = np.bincount(y, weights=weights, minlength=n_classes)
    if depth >= max_depth or gini(counts) == 0 or len(y) < 2 * min_leaf:
        return _leaf(counts)
    split = _best_split(x, y, weights, n_classes, min_leaf)
    if split is None:
        return _leaf(counts)
    _, feature, threshold = split
    goes_left = x[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=grow_tree(x[goes_left], y[goes_left], weights[goes_left], n_classes, max_depth, min_leaf, depth + 1),
        right=grow_tree(x[~goes_left], y[~goes_left], weights[~goes_left], n_classes, max_depth, min_leaf, depth + 1),
    )


def tree_distributions(node, x, n_classes):
    """Leaf distribution reached by every row of ``x``."""
    out = np.empty((len(x), n_classes))
    _fill(node, x, np.arange(len(x)), out)
    return out


def _fill(node, x, rows, out):
    if node.is_leaf:
        out[rows] = node.distribution
        return
    goes_left = x[rows, node.feature] <= node.threshold
    _fill(node.left, x, rows[goes_left], out)
    _fill(node.right, x, rows[~goes_left], out)


def check_tree_parameters(max_depth, min_leaf):
    if max_depth < 1:
        raise PreconditionError(f"max_depth must be at least 1, got {max_depth}")
    if min_leaf < 1:
        raise PreconditionError(f"min_leaf must be at least 1, got {min_leaf}")


def fit_cart(data: FeatureMatrix, max_depth=config.DEFAULT_MAX_DEPTH, min_leaf=config.DEFAULT_MIN_LEAF, fitted_on=''):
    check_tree_parameters(max_depth, min_leaf)
    if not len(data):
        raise EmptySeriesError('no rows to train on')
    classes = data.classes
    hyperparameters = Hyperparameters(max_depth=max_depth, min_leaf=min_leaf)
    if len(classes) < 2:
        logger.warning(f"Training data holds the single class {classes[0]!r}; the tree is one leaf")
        return ClassifierModel(
            kind=ClassifierKind.CART,
            classes=classes,
            feature_names=data.feature_names,
            trees=(TreeNode(distribution=(1.0,)),),
            tree_weights=(1.0,),
            hyperparameters=hyperparameters,
            fitted_on=fitted_on,
        )

    root = grow_tree(
        data.values,
        data.label_indices(classes),
        np.ones(len(data)),
        len(classes),
        max_depth,
        min_leaf,
    )
    logger.info(
        f"Grew a CART tree of depth {root.depth} with {sum(1 for _ in root.leaves())} leaves "
        f"on {len(data)} rows and {len(classes)} classes"
    )
    return ClassifierModel(
        kind=ClassifierKind.CART,
        classes=classes,
        feature_names=data.feature_names,
        trees=(root,),
        tree_weights=(1.0,),
        hyperparameters=hyperparameters,
        fitted_on=fitted_on,
    )
