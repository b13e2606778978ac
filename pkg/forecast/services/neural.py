"""
NAR and NARX networks trained open loop by Levenberg-Marquardt on a
weight-decay objective.
"""
import logging
import math

import numpy as np
from scipy import optimize

from core.exceptions import EmptySeriesError, PreconditionError
from forecast import config
from forecast.models import NeuralNetModel, TrainConfig, TrainingLog
from forecast.services.arima import as_exog, as_series

logger = logging.getLogger(__name__)


def _scale(values, bounds):
    low, high = config.NORMALIZED_RANGE
    lo, hi = bounds
    if hi == lo:
        return np.zeros_like(values, dtype=float)
    return low + (values - lo) * (high - low) / (hi - lo)


def _unscale(values, bounds):
    low, high = config.NORMALIZED_RANGE
    lo, hi = bounds
    return lo + (values - low) * (hi - lo) / (high - low)


def _delays(values, delays, start):
    """Rows t = start .. n-1 of (v_{t-1}, ..., v_{t-delays})."""
    n = len(values)
    return np.column_stack([values[start - k:n - k] for k in range(1, delays + 1)])


def _inputs(y_scaled, x_scaled, delays, exog_delays, start):
    blocks = [_delays(y_scaled, delays, start)]
    for column in x_scaled.T:
        blocks.append(_delays(column, exog_delays, start))
    return np.hstack(blocks)


def _unpack(params, n_inputs, hidden):
    split = hidden * n_inputs
    weights = params[:split].reshape(hidden, n_inputs)
    biases = params[split:split + hidden]
    output_weights = params[split + hidden:split + 2 * hidden]
    return weights, biases, output_weights, params[-1]


def _forward(params, inputs, hidden):
    weights, biases, output_weights, output_bias = _unpack(params, inputs.shape[1], hidden)
    activation = np.tanh(inputs @ weights.T + biases)
    return activation @ output_weights + output_bias, activation


def _output_jacobian(params, inputs, hidden):
    _, _, output_weights, _ = _unpack(params, inputs.shape[1], hidden)
    _, activation = _forward(params, inputs, hidden)
    slope = output_weights * (1.0 - activation ** 2)
    d_weights = (slope[:, :, None] * inputs[:, None, :]).reshape(len(inputs), -1)
    return np.hstack([d_weights, slope, activation, np.ones((len(inputs), 1))])


def _initial_parameters(n_inputs, hidden, seed):
    rng = np.random.default_rng(seed)
    return np.r_[
        rng.uniform(-1.0, 1.0, hidden * n_inputs) / math.sqrt(n_inputs),
        rng.uniform(-1.0, 1.0, hidden),
        rng.uniform(-0.5, 0.5, hidden),
        0.0,
    ]


def _levenberg_marquardt(x0, inputs, target, hidden, weight_decay, max_iterations):
    root = math.sqrt(weight_decay)
    identity = np.eye(len(x0))

    def residuals(params):
        outputs, _ = _forward(params, inputs, hidden)
        return np.r_[outputs - target, root * params]

    def jacobian(params):
        return np.vstack([_output_jacobian(params, inputs, hidden), root * identity])

    return optimize.least_squares(
        residuals, x0,
        jac=jacobian,
        method='lm',
        ftol=config.TRAIN_FTOL,
        xtol=config.TRAIN_FTOL,
        gtol=config.TRAIN_FTOL,
        max_nfev=max_iterations,
    )


def _reestimate_decay(params, inputs, target, hidden, weight_decay):
    """
    Evidence update of the decay ratio alpha / beta from the effective
    number of parameters gamma.
    """
    outputs, _ = _forward(params, inputs, hidden)
    errors = outputs - target
    sse = float(errors @ errors)
    ssw = float(params @ params)
    if sse == 0 or ssw == 0:
        return weight_decay
    jac = _output_jacobian(params, inputs, hidden)
    hessian = jac.T @ jac + weight_decay * np.eye(len(params))
    gamma = len(params) - weight_decay * np.trace(np.linalg.pinv(hessian))
    gamma = min(max(gamma, 0.0), float(len(params)))
    if len(target) - gamma <= 0:
        return weight_decay
    return gamma * sse / (ssw * (len(target) - gamma))


def _train(y, x, delays, exog_delays, hidden_units, train_cfg, fitted_on):
    if delays < 1 or hidden_units < 1 or (x.shape[1] and exog_delays < 1):
        raise PreconditionError('delays and hidden units must be at least 1')
    if len(y) <= delays + hidden_units:
        raise EmptySeriesError(
            f"training needs more than {delays + hidden_units} observations, got {len(y)}"
        )
    y_bounds = (float(y.min()), float(y.max()))
    x_bounds = tuple((float(column.min()), float(column.max())) for column in x.T)
    x_scaled = np.column_stack([_scale(column, b) for column, b in zip(x.T, x_bounds)]) if x_bounds else x
    warm_up = max(delays, exog_delays if x_bounds else 0)
    inputs = _inputs(_scale(y, y_bounds), x_scaled, delays, exog_delays, warm_up)
    target = _scale(y, y_bounds)[warm_up:]

    params = _initial_parameters(inputs.shape[1], hidden_units, train_cfg.seed)
    weight_decay = train_cfg.weight_decay
    rounds = train_cfg.evidence_rounds if train_cfg.evidence else 1
    iterations = 0
    for round_ in range(rounds):
        if round_:
            weight_decay = _reestimate_decay(params, inputs, target, hidden_units, weight_decay)
            logger.debug(f"Evidence update: weight decay {weight_decay:.6g}")
        result = _levenberg_marquardt(params, inputs, target, hidden_units, weight_decay, train_cfg.max_iterations)
        params, iterations = result.x, iterations + int(result.nfev)

    converged = result.status > 0
    if not converged:
        logger.warning(f"Network training stopped after {iterations} evaluations without converging")
    weights, biases, output_weights, output_bias = _unpack(params, inputs.shape[1], hidden_units)
    log = TrainingLog(
        iterations=iterations,
        objective=float(2 * result.cost),
        weight_decay=float(weight_decay),
        converged=bool(converged),
    )
    logger.info(
        f"Trained {'NARX' if x_bounds else 'NAR'} ({delays} delays, {hidden_units} hidden) "
        f"on {len(target)} patterns: objective {log.objective:.6g}"
    )
    return NeuralNetModel(
        input_delays=delays,
        exog_delays=exog_delays if x_bounds else 0,
        hidden_units=hidden_units,
        hidden_weights=tuple(tuple(row) for row in weights.tolist()),
        hidden_biases=tuple(biases.tolist()),
        output_weights=tuple(output_weights.tolist()),
        output_bias=float(output_bias),
        y_bounds=y_bounds,
        x_bounds=x_bounds,
        training_log=log,
        fitted_on=fitted_on,
    )


def train_nar(series, delays, hidden_units=config.HIDDEN_UNITS, train_cfg=None, fitted_on=''):
    y = as_series(series)
    return _train(y, np.empty((len(y), 0)), delays, 0, hidden_units, train_cfg or TrainConfig(), fitted_on)


def train_narx(series, exog, delays, hidden_units=config.HIDDEN_UNITS, train_cfg=None,
               exog_delays=None, fitted_on=''):
    """
    Like ``train_nar`` with ``exog_delays`` (default ``delays``) past rows
    of every exogenous column as extra inputs.
    """
    y = as_series(series)
    x = as_exog(exog, len(y))
    if x.shape[1] == 0:
        raise PreconditionError('NARX needs at least one exogenous column')
    return _train(
        y, x, delays, delays if exog_delays is None else exog_delays,
        hidden_units, train_cfg or TrainConfig(), fitted_on,
    )


def network_predictions(model: NeuralNetModel, series, exog=None):
    """One-step predictions for indices ``model.warm_up`` onwards."""
    y = as_series(series)
    if model.has_exog:
        if exog is None:
            raise PreconditionError('NARX model needs exogenous inputs')
        x = as_exog(exog, len(y))
        if x.shape[1] != len(model.x_bounds):
            raise PreconditionError(f"model expects {len(model.x_bounds)} exogenous columns, got {x.shape[1]}")
        x_scaled = np.column_stack([_scale(column, b) for column, b in zip(x.T, model.x_bounds)])
    else:
        x_scaled = np.empty((len(y), 0))
    if len(y) <= model.warm_up:
        return np.empty(0)
    params = np.concatenate([
        np.ravel(model.hidden_weights),
        model.hidden_biases,
        model.output_weights,
        [model.output_bias],
    ])
    inputs = _inputs(_scale(y, model.y_bounds), x_scaled, model.input_delays, model.exog_delays, model.warm_up)
    outputs, _ = _forward(params, inputs, model.hidden_units)
    return _unscale(outputs, model.y_bounds)
