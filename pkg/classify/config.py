"""
Classifier defaults.
"""

# =========================
# FEATURES
# =========================
# (avg_fee, size, tx_count, interblock) of every block but the first
FEATURES = ('avg_fee', 'size', 'tx_count', 'interblock')
MEMPOOL_FEATURES = ('mempool_tx_count', 'mempool_bytes', 'mempool_fee')

DEFAULT_TOP_K = 8
OTHER_LABEL = 'Other'


# =========================
# TREES
# =========================
DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_LEAF = 1

# Weak learners of the boosted ensembles
WEAK_MAX_DEPTH = 4
DEFAULT_ROUNDS = 50

# Split impurities are compared at this many decimals so equal splits tie exactly
IMPURITY_DECIMALS = 12
DISTRIBUTION_TOLERANCE = 1e-9

METHODS = ('cart', 'boosted', 'rusboost')
