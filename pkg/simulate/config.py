"""
Default scenario for the transaction workflow simulator.

Amounts follow the on-chain conventions used everywhere else: sizes in
bytes, fees in BTC, rates per second. The lognormal parameters are the
mean and standard deviation of the logarithm.
"""

# =========================
# CLOCK
# =========================
# Simulated time 0 maps to 2019-03-07T00:00:00Z
SIM_EPOCH = 1551916800

DEFAULT_HORIZON = 6 * 24 * 3600  # six days
BLOCK_INTERVAL_MEAN = 600.0


# =========================
# TRANSACTIONS
# =========================
TX_FEE_LOGNORMAL = (-9.9, 1.0)   # median ~0.00005 BTC
TX_SIZE_LOGNORMAL = (6.0, 0.6)   # median ~400 bytes

# Two-state modulated arrivals averaging 3.2 tx/s:
# high state a third of the time (mean sojourn 1 h), low state 2 h.
ARRIVAL_RATE_LOW = 2.4
ARRIVAL_RATE_HIGH = 4.8
SWITCH_LOW_TO_HIGH = 1 / 7200
SWITCH_HIGH_TO_LOW = 1 / 3600


# =========================
# MINING POOLS
# =========================
BLOCK_SIZE_CAP = 1_000_000

# (name, hash share); "?" stands for blocks no pool tag could be read from
DEFAULT_POOLS = (
    ('?', 0.30),
    ('F2Pool', 0.20),
    ('AntPool', 0.18),
    ('BTC.com', 0.17),
    ('Poolin', 0.15),
)

# Policy of the pool made distinguishable in the distinct-pool scenario
DISTINCT_POOL = 'F2Pool'
DISTINCT_SIZE_CAP = 400_000
DISTINCT_MIN_FEE_RATE = 2e-7  # BTC per byte (20 sat/B)

SHARE_TOLERANCE = 1e-9
