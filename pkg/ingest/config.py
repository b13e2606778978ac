"""
Dataset schema and node-collection constants.
"""

# =========================
# CSV SCHEMAS
# =========================
BLOCK_COLUMNS = (
    'height',
    'timestamp',
    'miner',
    'size_bytes',
    'tx_count',
    'avg_fee_btc',
    'mempool_tx_count',
    'mempool_bytes',
    'mempool_fee_btc',
)

TX_COLUMNS = (
    'id',
    'arrival_ts',
    'confirm_ts',
    'fee_btc',
    'size_bytes',
)

# Serializer error codes for cells that parse but hold an out-of-range value;
# such rows are rejected and counted instead of aborting the load
VALUE_RULE_CODES = ('min_value', 'max_value')


# =========================
# DATASET DIVISION
# =========================
# 70/15/15, inferred from 56286/12061/12061 of 80408 blocks
DEFAULT_SPLIT = (0.70, 0.15, 0.15)
SPLIT_TOLERANCE = 1e-9


# =========================
# MINING POOL COINBASE TAGS
# =========================
# Matched case-insensitively against the ASCII text of the coinbase script.
POOL_TAGS = (
    ('F2Pool', ('f2pool', '七彩神仙鱼')),
    ('AntPool', ('antpool',)),
    ('BTC.com', ('btc.com', 'btcom')),
    ('Poolin', ('poolin',)),
    ('SlushPool', ('slush',)),
    ('BTC.TOP', ('btc.top',)),
    ('ViaBTC', ('viabtc',)),
    ('Huobi', ('huobi',)),
    ('Binance Pool', ('binance',)),
    ('Foundry USA', ('foundry',)),
    ('OKExPool', ('okex',)),
    ('1THash', ('1thash',)),
)
