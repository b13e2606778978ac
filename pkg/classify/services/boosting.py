"""
Multi-class adaptive boosting (SAMME) of shallow CART trees, optionally
with random undersampling of every class before each round (RUSBoost).
"""
import logging
import math

import numpy as np

from classify import config
from classify.models import ClassifierKind, ClassifierModel, FeatureMatrix, Hyperparameters
from classify.services.trees import check_tree_parameters, grow_tree, tree_distributions
from core.exceptions import BoostingError, EmptySeriesError, PreconditionError

logger = logging.getLogger(__name__)


def undersample(y, rng):
    """
    Row indices keeping a random ``minority count`` rows of every class
    present in ``y``.
    """
    counts = np.bincount(y)
    present = np.flatnonzero(counts)
    minority = int(counts[present].min())
    picked = [rng.choice(np.flatnonzero(y == k), size=minority, replace=False) for k in present]
    return np.sort(np.concatenate(picked))


def _boost(data, kind, rounds, max_depth, min_leaf, seed, fitted_on):
    if rounds < 1:
        raise PreconditionError(f"boosting needs at least one round, got {rounds}")
    check_tree_parameters(max_depth, min_leaf)
    if not len(data):
        raise EmptySeriesError('no rows to train on')
    classes = data.classes
    n_classes = len(classes)
    if n_classes < 2:
        raise PreconditionError(f"boosting needs at least two classes, got {list(classes)}")

    x = data.values
    y = data.label_indices(classes)
    n = len(y)
    rng = np.random.default_rng(seed) if kind is ClassifierKind.RUSBOOST else None
    chance = 1.0 - 1.0 / n_classes
    weights = np.full(n, 1.0 / n)
    trees, alphas = [], []
    discarded = 0

    for round_ in range(rounds):
        rows = undersample(y, rng) if rng is not None else np.arange(n)
        tree = grow_tree(
            x[rows], y[rows], weights[rows] / weights[rows].sum(),
            n_classes, max_depth, min_leaf,
        )
        wrong = tree_distributions(tree, x, n_classes).argmax(axis=1) != y
        error = float(weights[wrong].sum() / weights.sum())

        if error >= chance:
            discarded += 1
            logger.debug(f"Round {round_}: weighted error {error:.4f} is no better than chance; weights reset")
            weights = np.full(n, 1.0 / n)
            continue
        if error <= 0:
            trees.append(tree)
            alphas.append(1.0)
            logger.info(f"Round {round_}: weak learner classifies every row; stopping")
            break

        alpha = math.log((1.0 - error) / error) + math.log(n_classes - 1)
        trees.append(tree)
        alphas.append(alpha)
        weights = weights * np.exp(alpha * wrong)
        weights /= weights.sum()

    if not trees:
        raise BoostingError(
            f"all {rounds} rounds discarded: depth-{max_depth} trees never beat the "
            f"{chance:.3f} chance error on {n_classes} classes"
        )
    if discarded:
        logger.warning(f"{discarded} of {rounds} boosting rounds were discarded")
    logger.info(f"Boosted {len(trees)} trees ({kind.value}) on {n} rows and {n_classes} classes")
    return ClassifierModel(
        kind=kind,
        classes=classes,
        feature_names=data.feature_names,
        trees=tuple(trees),
        tree_weights=tuple(alphas),
        hyperparameters=Hyperparameters(
            max_depth=max_depth,
            min_leaf=min_leaf,
            rounds=rounds,
            seed=seed if kind is ClassifierKind.RUSBOOST else None,
        ),
        fitted_on=fitted_on,
    )


def fit_boosted(data: FeatureMatrix, rounds=config.DEFAULT_ROUNDS, max_depth=config.WEAK_MAX_DEPTH,
                min_leaf=config.DEFAULT_MIN_LEAF, fitted_on=''):
    """
    SAMME boosting: a round with weighted error e gets weight
    log((1 - e) / e) + log(K - 1) and multiplies the weights of the rows it
    misclassifies by exp of that. Rounds no better than chance (e >= 1 - 1/K)
    are dropped and the weights start over.
    """
    return _boost(data, ClassifierKind.BOOSTED, rounds, max_depth, min_leaf, None, fitted_on)


def fit_rusboost(data: FeatureMatrix, rounds=config.DEFAULT_ROUNDS, max_depth=config.WEAK_MAX_DEPTH,
                 seed=42, min_leaf=config.DEFAULT_MIN_LEAF, fitted_on=''):
    """
    ``fit_boosted`` where each round's tree sees a class-balanced random
    subset; the weights are still updated on every row.
    """
    return _boost(data, ClassifierKind.RUSBOOST, rounds, max_depth, min_leaf, seed, fitted_on)
