"""
Prediction with fitted classifiers, confusion matrices, sensitivity and
one-vs-rest ROC curves.
"""
import logging

import numpy as np
from sklearn import metrics

from classify.models import ClassifierEvaluation, ClassRate, FeatureMatrix, RocCurve
from classify.services.trees import tree_distributions
from core.exceptions import EmptySeriesError, PreconditionError, UnknownLabelError

logger = logging.getLogger(__name__)


def predict_scores(model, rows):
    """
    (n, K) class scores: the tree-weighted mean of the leaf distributions
    each row reaches, columns in ``model.classes`` order.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != len(model.feature_names):
        raise PreconditionError(
            f"model expects {len(model.feature_names)} features ({', '.join(model.feature_names)}), "
            f"got {x.shape[-1] if x.ndim else 0}"
        )
    n_classes = len(model.classes)
    scores = np.zeros((len(x), n_classes))
    for tree, weight in zip(model.trees, model.tree_weights):
        scores += weight * tree_distributions(tree, x, n_classes)
    return scores / sum(model.tree_weights)


def predict(model, row):
    """
    (label, {class: score}) for one feature row. Equal top scores go to the
    class listed first in ``model.classes``.
    """
    scores = predict_scores(model, row)
    if len(scores) != 1:
        raise PreconditionError(f"predict takes one row, got {len(scores)}")
    scores = scores[0]
    return model.classes[int(np.argmax(scores))], dict(zip(model.classes, scores.tolist()))


def predict_labels(model, rows):
    return [model.classes[k] for k in predict_scores(model, rows).argmax(axis=1)]


def miss_rate(sensitivity):
    return 1.0 - sensitivity


def confusion_metrics(confusion):
    """
    (accuracy, sensitivity, miss rate) of a confusion matrix with true
    classes as rows. Classes without support do not enter the sensitivity.
    """
    matrix = np.asarray(confusion, dtype=float)
    total = matrix.sum()
    if total == 0:
        raise EmptySeriesError('confusion matrix is empty')
    support = matrix.sum(axis=1)
    present = support > 0
    sensitivity = float((np.diag(matrix)[present] / support[present]).mean())
    return float(np.trace(matrix) / total), sensitivity, miss_rate(sensitivity)


def roc_auc(scores, labels):
    """
    ROC points (fpr, tpr) swept over the distinct scores from the highest
    down, starting at (0, 0), and the area under them by the trapezoid rule.
    Rows sharing a score enter together.
    """
    s = np.asarray(scores, dtype=float)
    positive = np.asarray(labels, dtype=bool)
    if s.ndim != 1 or s.shape != positive.shape:
        raise PreconditionError(f"{s.size} scores for {positive.size} labels")
    if positive.all() or not positive.any():
        raise PreconditionError('ROC needs both positive and negative labels')

    fpr, tpr, _ = metrics.roc_curve(positive.astype(int), s, pos_label=1, drop_intermediate=False)
    return tuple(zip(fpr.tolist(), tpr.tolist())), float(metrics.auc(fpr, tpr))


def evaluate_classifier(model, test: FeatureMatrix) -> ClassifierEvaluation:
    if not len(test):
        raise EmptySeriesError('empty test set')
    if tuple(test.feature_names) != tuple(model.feature_names):
        raise PreconditionError(
            f"test features {list(test.feature_names)} differ from the model's {list(model.feature_names)}"
        )
    unknown = sorted(set(test.labels) - set(model.classes))
    if unknown:
        raise UnknownLabelError(f"labels {unknown} were not seen in training (classes {list(model.classes)})")

    n_classes = len(model.classes)
    truth = test.label_indices(model.classes)
    scores = predict_scores(model, test.values)
    predicted = scores.argmax(axis=1)
    confusion = metrics.confusion_matrix(truth, predicted, labels=np.arange(n_classes))
    accuracy, sensitivity, missed = confusion_metrics(confusion)

    curves = []
    for k, label in enumerate(model.classes):
        positive = truth == k
        if positive.all() or not positive.any():
            logger.debug(f"No ROC for {label!r}: the test set lacks positives or negatives")
            continue
        points, auc = roc_auc(scores[:, k], positive)
        fpr, tpr = zip(*points)
        curves.append(RocCurve(label=label, fpr=fpr, tpr=tpr, auc=auc))

    evaluation = ClassifierEvaluation(
        classes=model.classes,
        confusion=tuple(tuple(row) for row in confusion.tolist()),
        accuracy=accuracy,
        sensitivity=sensitivity,
        miss_rate=missed,
        roc=tuple(curves),
        macro_auc=float(np.mean([curve.auc for curve in curves])) if curves else None,
    )
    logger.info(
        f"{model.kind.value} on {len(test)} rows: accuracy {accuracy:.3f}, "
        f"sensitivity {sensitivity:.3f}, miss rate {missed:.3f}"
    )
    return evaluation


def per_class_rates(evaluation: ClassifierEvaluation):
    """True-positive and false-negative rate per class; None without support."""
    rates = []
    for k, (label, row) in enumerate(zip(evaluation.classes, evaluation.confusion)):
        support = sum(row)
        tpr = row[k] / support if support else None
        rates.append(ClassRate(
            label=label,
            support=support,
            tpr=tpr,
            fnr=1.0 - tpr if tpr is not None else None,
        ))
    return rates
