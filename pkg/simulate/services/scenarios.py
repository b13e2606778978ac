"""
Ready-made simulator configurations.
"""
from dataclasses import replace

from simulate import config as defaults
from simulate.models import ArrivalModel, MinerPolicy, Selection, SimConfig


def default_pools(size_cap=defaults.BLOCK_SIZE_CAP):
    return tuple(
        MinerPolicy(name=name, hash_share=share, size_cap=size_cap, selection=Selection.FEE_RATE_GREEDY)
        for name, share in defaults.DEFAULT_POOLS
    )


def default_config(seed, horizon=defaults.DEFAULT_HORIZON) -> SimConfig:
    """
    Five pools sharing one fee-rate-greedy policy, 1 MB blocks every ten
    minutes on average, modulated arrivals averaging 3.2 tx/s.
    """
    return SimConfig(
        seed=seed,
        horizon=horizon,
        block_interval_mean=defaults.BLOCK_INTERVAL_MEAN,
        tx_arrival=ArrivalModel.mmpp2(
            rate_low=defaults.ARRIVAL_RATE_LOW,
            rate_high=defaults.ARRIVAL_RATE_HIGH,
            switch_up=defaults.SWITCH_LOW_TO_HIGH,
            switch_down=defaults.SWITCH_HIGH_TO_LOW,
        ),
        fee_dist=defaults.TX_FEE_LOGNORMAL,
        tx_size_dist=defaults.TX_SIZE_LOGNORMAL,
        pools=default_pools(),
    )


def distinct_pool_config(seed, horizon=defaults.DEFAULT_HORIZON, distinct=defaults.DISTINCT_POOL) -> SimConfig:
    """
    The default scenario with one pool mining smaller blocks and refusing
    cheap transactions, so its blocks stand out.
    """
    pools = tuple(
        replace(pool, size_cap=defaults.DISTINCT_SIZE_CAP, min_fee_rate=defaults.DISTINCT_MIN_FEE_RATE)
        if pool.name == distinct else pool
        for pool in default_pools()
    )
    return replace(default_config(seed, horizon), pools=pools)


SCENARIOS = {
    'default': default_config,
    'distinct': distinct_pool_config,
}
