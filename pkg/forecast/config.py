"""
Forecasting defaults.

Orders follow the ACF/PACF reading of the block attribute series; the
network size and regularization are the usual small-NARX settings.
"""

# =========================
# LINEAR MODELS
# =========================
DEFAULT_P = 2
DEFAULT_D = 0
DEFAULT_Q = 2

# Conditional sum of squares by Levenberg-Marquardt
CSS_FTOL = 1e-8
CSS_MAX_ITERATIONS = 500

# Long autoregression used to seed the moving-average coefficients
INIT_AR_ORDER = 20


# =========================
# NEURAL MODELS
# =========================
HIDDEN_UNITS = 10
WEIGHT_DECAY = 1e-3
TRAIN_MAX_ITERATIONS = 300
TRAIN_FTOL = 1e-10
NORMALIZED_RANGE = (-1.0, 1.0)

# Evidence-framework re-estimation passes when enabled
EVIDENCE_ROUNDS = 5


# =========================
# COMPARISONS
# =========================
MODEL_KINDS = ('ar', 'arima', 'arimax', 'nar', 'narx', 'mean')
EXOGENOUS_KINDS = ('arimax', 'narx')
TARGETS = ('size', 'tx_count', 'interblock', 'intensity', 'confirmation')
DEFAULT_EXOG = ('interblock', 'avg_fee')
MEMPOOL_EXOG = ('mempool_tx_count', 'mempool_bytes', 'mempool_fee')
DEFAULT_SLOT_MINUTES = 100
