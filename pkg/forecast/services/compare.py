"""
Model comparison over chronologically split datasets.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from core.exceptions import EmptySeriesError, PreconditionError
from forecast import config
from forecast.models import ComparisonRow, MeanModel, TrainConfig
from forecast.services.arima import fit_ar, fit_arima, fit_arimax
from forecast.services.evaluation import evaluate, naive_mean_baseline
from forecast.services.neural import train_nar, train_narx
from ingest.models import SplitSpec
from ingest.services.split import split_counts

logger = logging.getLogger(__name__)


def fit_model(kind, y, exog=None, order=(config.DEFAULT_P, config.DEFAULT_D, config.DEFAULT_Q),
              hidden_units=config.HIDDEN_UNITS, train_cfg=None, fitted_on=''):
    p, d, q = order
    if kind in config.EXOGENOUS_KINDS and (exog is None or np.shape(exog)[-1] == 0):
        raise PreconditionError(f"model {kind} needs exogenous columns")
    if kind == 'ar':
        return fit_ar(y, p, fitted_on=fitted_on)
    if kind == 'arima':
        return fit_arima(y, p, d, q, fitted_on=fitted_on)
    if kind == 'arimax':
        return fit_arimax(y, exog, p, d, q, fitted_on=fitted_on)
    if kind == 'nar':
        return train_nar(y, p, hidden_units, train_cfg, fitted_on=fitted_on)
    if kind == 'narx':
        return train_narx(y, exog, p, hidden_units, train_cfg, fitted_on=fitted_on)
    if kind == 'mean':
        return naive_mean_baseline(y, fitted_on=fitted_on)
    raise PreconditionError(f"unknown model {kind!r}; expected one of {', '.join(config.MODEL_KINDS)}")


def _converged(model):
    if isinstance(model, MeanModel):
        return True
    log = getattr(model, 'training_log', None)
    return log.converged if log is not None else model.converged


def _run(task, spec, order, hidden_units, train_cfg):
    (day_class, target), (y, x), kind = task
    n_train, n_test, _ = split_counts(len(y), spec)
    if n_test == 0:
        raise EmptySeriesError(f"{day_class}/{target}: the split leaves no test points")
    uses_exog = kind in config.EXOGENOUS_KINDS
    train_x = x[:n_train] if uses_exog else None
    test_x = x[n_train:n_train + n_test] if uses_exog else None
    model = fit_model(
        kind, y[:n_train], train_x, order, hidden_units, train_cfg,
        fitted_on=f"{day_class}/{target}",
    )
    evaluation = evaluate(model, y[n_train:n_train + n_test], test_x, history=y[:n_train], history_exog=train_x)
    logger.info(f"{kind} on {day_class}/{target}: MAE {evaluation.mae:.6g} RMSE {evaluation.rmse:.6g}")
    row = ComparisonRow(
        model=kind,
        day_class=day_class,
        target=target,
        mae=evaluation.mae,
        rmse=evaluation.rmse,
        n=evaluation.n,
        converged=_converged(model),
    )
    return row, model, evaluation


def compare_models(datasets, models, spec=None, order=(config.DEFAULT_P, config.DEFAULT_D, config.DEFAULT_Q),
                   hidden_units=config.HIDDEN_UNITS, train_cfg=None, workers=1):
    """
    Fit every model on the training span of every dataset and score it on
    the test span.

    ``datasets`` maps ``(day_class, target)`` to ``(y, X)``. Returns
    ``(row, fitted model, evaluation)`` triples in dataset then model
    order, whatever the number of workers.
    """
    spec = spec or SplitSpec()
    train_cfg = train_cfg or TrainConfig()
    unknown = [kind for kind in models if kind not in config.MODEL_KINDS]
    if unknown:
        raise PreconditionError(f"unknown models {unknown}; expected a subset of {', '.join(config.MODEL_KINDS)}")
    tasks = [(key, datasets[key], kind) for key in datasets for kind in models]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(_run, task, spec, order, hidden_units, train_cfg) for task in tasks]
        return [future.result() for future in futures]


def comparison_table(rows):
    """
    One row per model with a ``<day class>_<target>_mae`` and ``_rmse``
    column per dataset, in first-seen order.
    """
    models = list(dict.fromkeys(row.model for row in rows))
    keys = list(dict.fromkeys((row.day_class, row.target) for row in rows))
    lookup = {(row.model, row.day_class, row.target): row for row in rows}
    table = {'model': models}
    for day_class, target in keys:
        prefix = f"{day_class.lower()}_{target}"
        for metric in ('mae', 'rmse'):
            table[f"{prefix}_{metric}"] = [
                getattr(lookup[(model, day_class, target)], metric)
                if (model, day_class, target) in lookup else None
                for model in models
            ]
    return table
