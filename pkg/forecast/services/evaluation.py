"""
Rolling one-step prediction and MAE/RMSE scoring.
"""
import logging
import math

import numpy as np

from core.exceptions import EmptySeriesError, PreconditionError
from forecast.models import ArimaModel, ForecastEvaluation, MeanModel, NeuralNetModel
from forecast.services.arima import arima_predictions, as_exog, as_series
from forecast.services.neural import network_predictions

logger = logging.getLogger(__name__)


def naive_mean_baseline(train_series, fitted_on=''):
    y = as_series(train_series)
    if not len(y):
        raise EmptySeriesError('baseline of an empty training series')
    return MeanModel(mean=float(y.mean()), fitted_on=fitted_on)


def predict_series(model, series, exog=None):
    """
    One-step predictions for every index from ``model.warm_up`` on, each
    using the observed values before it.
    """
    if isinstance(model, ArimaModel):
        return arima_predictions(model, series, exog)
    if isinstance(model, NeuralNetModel):
        return network_predictions(model, series, exog)
    if isinstance(model, MeanModel):
        return np.full(len(as_series(series)), model.mean)
    raise PreconditionError(f"cannot predict with {type(model).__name__}")


def forecast_one_step(model, history, exog=None):
    """
    Prediction of the value that follows ``history``. For exogenous models
    ``exog`` holds the rows aligned with ``history``; its last row is the
    input for the next step.
    """
    y = as_series(history)
    if len(y) < model.warm_up:
        raise PreconditionError(f"history of {len(y)} values is shorter than the {model.warm_up} the model needs")
    padded_exog = None
    if exog is not None:
        x = as_exog(exog, len(y))
        padded_exog = np.vstack([x, np.zeros((1, x.shape[1]))])
    predictions = predict_series(model, np.r_[y, 0.0], padded_exog)
    return float(predictions[-1])


def error_metrics(residuals):
    """(MAE, RMSE) of the residuals e_i = y_i - prediction_i."""
    e = np.asarray(residuals, dtype=float)
    if not e.size:
        raise EmptySeriesError('no residuals to score')
    return float(np.abs(e).mean()), float(math.sqrt(e @ e / e.size))


def evaluate(model, test_series, test_exog=None, history=None, history_exog=None):
    """
    Score rolling one-step predictions over ``test_series``. ``history``
    (usually the training span) precedes the test span and supplies the
    lags for its first points; without it the first ``warm_up`` test
    points only serve as lags.
    """
    y_test = as_series(test_series)
    if not len(y_test):
        raise EmptySeriesError('empty test set')
    start = 0
    y, x = y_test, test_exog
    if history is not None:
        y_history = as_series(history)
        start = len(y_history)
        y = np.r_[y_history, y_test]
        if test_exog is not None:
            x = np.vstack([
                as_exog(history_exog, len(y_history)),
                as_exog(test_exog, len(y_test)),
            ])

    first = max(start, model.warm_up)
    if first >= len(y):
        raise EmptySeriesError(f"no test points left after a warm-up of {model.warm_up}")
    predictions = predict_series(model, y, x)[first - model.warm_up:]
    actuals = y[first:]
    residuals = actuals - predictions
    mae, rmse = error_metrics(residuals)
    return ForecastEvaluation(
        mae=mae,
        rmse=rmse,
        n=len(residuals),
        residuals=tuple(residuals.tolist()),
        predictions=tuple(predictions.tolist()),
        actuals=tuple(actuals.tolist()),
    )
