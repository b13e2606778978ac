"""
Linear forecasting models: AR by Yule-Walker, ARIMA and ARIMAX by
conditional sum of squares.
"""
import logging

import numpy as np
from scipy import linalg, optimize, signal

from core.exceptions import EmptySeriesError, PreconditionError
from explore.services.correlation import acf
from forecast import config
from forecast.models import ArimaModel

logger = logging.getLogger(__name__)


def as_series(values):
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise PreconditionError(f"expected a one-dimensional series, got shape {y.shape}")
    return y


def as_exog(exog, length):
    """
    Exogenous inputs as an (n, k) matrix; a flat sequence is one column.
    """
    x = np.asarray(exog, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != length:
        raise PreconditionError(
            f"exogenous matrix has {x.shape[0] if x.ndim else 0} rows for a series of length {length}"
        )
    return x


def difference(values, d):
    return np.diff(values, n=d, axis=0) if d else np.asarray(values, dtype=float)


def _roots_outside(polynomial):
    """``polynomial`` holds coefficients in increasing powers of z."""
    roots = np.roots(np.asarray(polynomial)[::-1])
    return bool(np.all(np.abs(roots) > 1.0))


def check_stationarity(model: ArimaModel):
    """
    True when every root of 1 - phi_1 z - ... - phi_p z^p lies outside the
    unit circle. A violation is logged, not raised.
    """
    if not model.p or _roots_outside(np.r_[1.0, -np.asarray(model.ar_coeffs)]):
        return True
    roots = np.roots(np.r_[-np.asarray(model.ar_coeffs)[::-1], 1.0])
    logger.warning(
        f"AR polynomial of {model.fitted_on or 'the model'} is not stationary "
        f"(smallest root modulus {np.abs(roots).min():.4f})"
    )
    return False


def _check_orders(p, d, q):
    if min(p, d, q) < 0:
        raise PreconditionError(f"orders must be non-negative, got ({p}, {d}, {q})")


def fit_ar(series, p, fitted_on=''):
    """
    AR(p) from the Yule-Walker equations on the biased sample ACF. The
    intercept is the sample mean.
    """
    _check_orders(p, 0, 0)
    y = as_series(series)
    if len(y) <= p + 1:
        raise EmptySeriesError(f"AR({p}) needs more than {p + 1} observations, got {len(y)}")
    mean = float(y.mean())
    if p == 0:
        return ArimaModel(p=0, d=0, q=0, intercept=mean, noise_variance=float(y.var()), fitted_on=fitted_on)

    r = np.asarray(acf(y, p).values)
    try:
        phi = linalg.solve_toeplitz(r[:p], r[1:p + 1])
    except np.linalg.LinAlgError as exc:
        raise PreconditionError(f"autocorrelation system is singular: {exc}")
    noise_variance = max(float(y.var() * (1.0 - phi @ r[1:p + 1])), 0.0)
    model = ArimaModel(
        p=p, d=0, q=0,
        ar_coeffs=tuple(phi),
        intercept=mean,
        noise_variance=noise_variance,
        fitted_on=fitted_on,
    )
    check_stationarity(model)
    logger.info(f"Fitted AR({p}) on {len(y)} points: phi={np.round(phi, 4).tolist()}")
    return model


def _prepare(y, exog, d):
    """
    Differenced target and lagged regressors, plus the index in ``y`` of
    the first differenced value. Row i of the regressors is x_{i-1}.
    """
    if exog is None:
        target, lagged, offset = y, np.empty((len(y), 0)), 0
    else:
        target, lagged, offset = y[1:], exog[:-1], 1
    return difference(target, d), difference(lagged, d), offset + d


def _innovations(w, z, intercept, beta, phi, theta):
    """
    eps_t for t >= p, conditioning on the first p values and taking earlier
    innovations as zero.
    """
    eta = w - intercept - z @ beta
    u = signal.lfilter(np.r_[1.0, -phi], [1.0], eta)[len(phi):]
    return signal.lfilter([1.0], np.r_[1.0, theta], u)


def _lagged_columns(values, lags, start):
    n = len(values)
    return [values[start - k:n - k] for k in range(1, lags + 1)]


def _hannan_rissanen(eta, p, q):
    """
    Starting ARMA coefficients: a long autoregression estimates the
    innovations, then eta is regressed on its own lags and on those.
    """
    phi, theta = np.zeros(p), np.zeros(q)
    n = len(eta)
    if p + q == 0 or np.ptp(eta) == 0:
        return phi, theta

    residuals = np.zeros(n)
    start = p
    if q:
        order = min(config.INIT_AR_ORDER, max(p + q, n // 10))
        if n - order <= order:
            return phi, theta
        lags = np.column_stack(_lagged_columns(eta, order, order))
        long_ar, *_ = np.linalg.lstsq(lags, eta[order:], rcond=None)
        residuals[order:] = eta[order:] - lags @ long_ar
        start = max(p, order + q)
    if n - start <= p + q:
        return phi, theta

    design = np.column_stack(_lagged_columns(eta, p, start) + _lagged_columns(residuals, q, start))
    coefficients, *_ = np.linalg.lstsq(design, eta[start:], rcond=None)
    phi, theta = coefficients[:p], coefficients[p:]
    if not _roots_outside(np.r_[1.0, -phi]):
        phi = np.zeros(p)
    if not _roots_outside(np.r_[1.0, theta]):
        theta = np.zeros(q)
    return phi, theta


def _free_columns(z):
    """
    Regressors that vary; constant ones are collinear with the intercept and
    keep a zero coefficient.
    """
    free = [j for j in range(z.shape[1]) if np.ptp(z[:, j]) > 0]
    fixed = z.shape[1] - len(free)
    if fixed:
        logger.warning(f"{fixed} constant exogenous column(s) are collinear with the intercept; coefficient fixed at 0")
    if free and np.linalg.matrix_rank(z[:, free] - z[:, free].mean(axis=0)) < len(free):
        logger.warning('Exogenous matrix is rank deficient; coefficients are not identifiable')
    return free


def _fit_css(y, exog, p, d, q, fitted_on):
    w, z, _ = _prepare(y, exog, d)
    free = _free_columns(z) if exog is not None else []
    k = len(free)
    n_params = 1 + k + p + q
    if len(w) - p < n_params:
        raise EmptySeriesError(
            f"{len(y)} observations are too few for {n_params} parameters at order ({p}, {d}, {q})"
        )

    # centring keeps the fit invariant to shifts of the series
    level = float(w.mean())
    z_mean = z.mean(axis=0)
    wc = w - level
    zc = (z - z_mean)[:, free]

    design = np.column_stack([np.ones(len(wc)), zc])
    linear, *_ = np.linalg.lstsq(design, wc, rcond=None)
    phi0, theta0 = _hannan_rissanen(wc - design @ linear, p, q)

    def unpack(params):
        return params[0], params[1:1 + k], params[1 + k:1 + k + p], params[1 + k + p:]

    def residuals(params):
        mu, beta, phi, theta = unpack(params)
        return _innovations(wc, zc, mu, beta, phi, theta)

    x0 = np.r_[linear, phi0, theta0]
    if n_params == 1:
        params, converged, iterations = x0, True, 0
    else:
        result = optimize.least_squares(
            residuals, x0,
            method='lm',
            ftol=config.CSS_FTOL,
            xtol=config.CSS_FTOL,
            max_nfev=config.CSS_MAX_ITERATIONS * (n_params + 1),
        )
        params, converged, iterations = result.x, result.status > 0, int(result.nfev)
        if not converged:
            logger.warning(f"CSS fit of ({p}, {d}, {q}) stopped after {iterations} evaluations without converging")

    mu, beta_free, phi, theta = unpack(params)
    eps = residuals(params)
    beta = np.zeros(z.shape[1])
    beta[free] = beta_free
    return ArimaModel(
        p=p, d=d, q=q,
        ar_coeffs=tuple(phi),
        ma_coeffs=tuple(theta),
        intercept=float(level + mu - beta @ z_mean),
        exog_coeffs=tuple(beta),
        noise_variance=float(eps @ eps / len(eps)) if len(eps) else 0.0,
        fitted_on=fitted_on,
        converged=bool(converged),
        iterations=iterations,
    )


def fit_arima(series, p, d, q, fitted_on=''):
    """
    ARIMA(p, d, q): difference d times, then minimize the conditional sum of
    squared innovations over (intercept, phi, theta) by Levenberg-Marquardt.
    """
    _check_orders(p, d, q)
    y = as_series(series)
    if len(y) <= p + q + d + 1:
        raise EmptySeriesError(f"ARIMA({p}, {d}, {q}) needs more than {p + q + d + 1} observations, got {len(y)}")
    model = _fit_css(y, None, p, d, q, fitted_on)
    check_stationarity(model)
    logger.info(
        f"Fitted ARIMA({p}, {d}, {q}) on {len(y)} points: phi={np.round(model.ar_coeffs, 4).tolist()} "
        f"theta={np.round(model.ma_coeffs, 4).tolist()} sigma2={model.noise_variance:.6g}"
    )
    return model


def fit_arimax(series, exog, p, d, q, fitted_on=''):
    """
    Regression with ARIMA errors on the previous row of ``exog``:
    y_i = intercept + beta . x_{i-1} + eta_i. All coefficients are
    estimated jointly as in ``fit_arima``.
    """
    _check_orders(p, d, q)
    y = as_series(series)
    x = as_exog(exog, len(y))
    if x.shape[1] == 0:
        raise PreconditionError('ARIMAX needs at least one exogenous column')
    if len(y) <= p + q + d + 2:
        raise EmptySeriesError(f"ARIMAX({p}, {d}, {q}) needs more than {p + q + d + 2} observations, got {len(y)}")
    model = _fit_css(y, x, p, d, q, fitted_on)
    check_stationarity(model)
    logger.info(
        f"Fitted ARIMAX({p}, {d}, {q}) on {len(y)} points with {x.shape[1]} regressors: "
        f"beta={np.round(model.exog_coeffs, 4).tolist()}"
    )
    return model


def arima_predictions(model: ArimaModel, series, exog=None):
    """
    One-step predictions for indices ``model.warm_up`` onwards, each from
    the observed past. Since the innovations are the one-step errors,
    prediction = observation - innovation.
    """
    y = as_series(series)
    x = None
    if model.has_exog:
        if exog is None:
            raise PreconditionError('model has exogenous coefficients but no exogenous inputs were given')
        x = as_exog(exog, len(y))
        if x.shape[1] != len(model.exog_coeffs):
            raise PreconditionError(
                f"model expects {len(model.exog_coeffs)} exogenous columns, got {x.shape[1]}"
            )
    if len(y) <= model.warm_up:
        return np.empty(0)
    w, z, offset = _prepare(y, x, model.d)
    eps = _innovations(
        w, z,
        model.intercept,
        np.asarray(model.exog_coeffs),
        np.asarray(model.ar_coeffs),
        np.asarray(model.ma_coeffs),
    )
    return y[offset + model.p:] - eps
