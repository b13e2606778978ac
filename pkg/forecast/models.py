"""
Fitted forecasting models and their evaluations.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from core.exceptions import PreconditionError
from forecast.config import EVIDENCE_ROUNDS, TRAIN_MAX_ITERATIONS, WEIGHT_DECAY


@dataclass(frozen=True)
class ArimaModel:
    """
    y_i = intercept + beta . x_{i-1} + eta_i, where the d-times differenced
    eta follows an ARMA(p, q) with innovations of variance noise_variance:

        eta_i = sum phi_k eta_{i-k} + sum theta_k eps_{i-k} + eps_i

    With d > 0 the intercept is the drift of the differenced series.
    """
    p: int
    d: int
    q: int
    ar_coeffs: Tuple[float, ...] = ()
    ma_coeffs: Tuple[float, ...] = ()
    intercept: float = 0.0
    exog_coeffs: Tuple[float, ...] = ()
    noise_variance: float = 0.0
    fitted_on: str = ''
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise PreconditionError(f"orders must be non-negative, got ({self.p}, {self.d}, {self.q})")
        if len(self.ar_coeffs) != self.p or len(self.ma_coeffs) != self.q:
            raise PreconditionError(
                f"expected {self.p} AR and {self.q} MA coefficients, "
                f"got {len(self.ar_coeffs)} and {len(self.ma_coeffs)}"
            )
        if not self.noise_variance >= 0:
            raise PreconditionError(f"noise variance must be non-negative, got {self.noise_variance}")
        object.__setattr__(self, 'ar_coeffs', tuple(float(c) for c in self.ar_coeffs))
        object.__setattr__(self, 'ma_coeffs', tuple(float(c) for c in self.ma_coeffs))
        object.__setattr__(self, 'exog_coeffs', tuple(float(c) for c in self.exog_coeffs))

    @property
    def has_exog(self):
        return bool(self.exog_coeffs)

    @property
    def warm_up(self):
        """Observations consumed before the first one-step prediction."""
        return self.p + self.d + (1 if self.has_exog else 0)

    @property
    def order(self):
        return self.p, self.d, self.q


@dataclass(frozen=True)
class TrainingLog:
    iterations: int = 0
    objective: float = 0.0
    weight_decay: float = 0.0
    converged: bool = True


@dataclass(frozen=True)
class NeuralNetModel:
    """
    Single hidden tanh layer with a linear output over tapped delays of the
    series (and of each exogenous column), on inputs scaled to [-1, 1].
    """
    input_delays: int
    exog_delays: int
    hidden_units: int
    hidden_weights: Tuple[Tuple[float, ...], ...]
    hidden_biases: Tuple[float, ...]
    output_weights: Tuple[float, ...]
    output_bias: float
    y_bounds: Tuple[float, float]
    x_bounds: Tuple[Tuple[float, float], ...] = ()
    training_log: TrainingLog = field(default_factory=TrainingLog)
    fitted_on: str = ''

    def __post_init__(self):
        n_inputs = self.input_delays + self.exog_delays * len(self.x_bounds)
        shape = np.shape(self.hidden_weights)
        if self.hidden_units < 1 or shape != (self.hidden_units, n_inputs):
            raise PreconditionError(
                f"hidden weights of shape {shape} do not match "
                f"({self.hidden_units}, {n_inputs})"
            )
        if len(self.hidden_biases) != self.hidden_units or len(self.output_weights) != self.hidden_units:
            raise PreconditionError('hidden biases and output weights need one entry per hidden unit')
        bounds = (self.y_bounds, *self.x_bounds)
        if not all(math.isfinite(v) for pair in bounds for v in pair):
            raise PreconditionError('normalization bounds must be finite')

    @property
    def has_exog(self):
        return bool(self.x_bounds)

    @property
    def warm_up(self):
        return max(self.input_delays, self.exog_delays if self.has_exog else 0)


@dataclass(frozen=True)
class MeanModel:
    """Predicts the training mean whatever the history."""
    mean: float
    fitted_on: str = ''

    warm_up = 0
    has_exog = False


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 42
    max_iterations: int = TRAIN_MAX_ITERATIONS
    weight_decay: float = WEIGHT_DECAY
    evidence: bool = False
    evidence_rounds: int = EVIDENCE_ROUNDS

    def __post_init__(self):
        if self.max_iterations < 1:
            raise PreconditionError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.weight_decay < 0:
            raise PreconditionError(f"weight decay must be non-negative, got {self.weight_decay}")


@dataclass(frozen=True)
class ForecastEvaluation:
    mae: float
    rmse: float
    n: int
    residuals: Tuple[float, ...] = ()
    predictions: Tuple[float, ...] = ()
    actuals: Tuple[float, ...] = ()


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    day_class: str
    target: str
    mae: float
    rmse: float
    n: int
    converged: Optional[bool] = None
