"""
Column tables for the exploratory results, shaped for CSV output and for
the plot kinds.
"""
import numpy as np
from scipy import stats

from explore.config import PLOT_BINS
from explore.services.distributions import histogram_density


def ecdf_table(result):
    return {'value': list(result.values), 'probability': list(result.probabilities)}


def exponential_fit_table(fit):
    return {
        'rate': [fit.rate],
        'mean': [fit.mean],
        'n': [fit.n],
        'ks_stat': [fit.ks_stat],
        'n_excluded': [fit.n_excluded],
    }


def exponential_histogram_table(samples, fit, bins=PLOT_BINS):
    samples = np.asarray(samples, dtype=float)
    lefts, rights, density = histogram_density(samples[samples > 0], bins)
    centres = (lefts + rights) / 2
    return {
        'bin_left': lefts.tolist(),
        'bin_right': rights.tolist(),
        'density': density.tolist(),
        'fit': stats.expon.pdf(centres, scale=fit.mean).tolist(),
    }


def acf_table(result):
    return {
        'lag': list(result.lags),
        'value': list(result.values),
        'band': [result.confidence_band] * len(result.values),
    }


def poisson_fit_table(fit):
    return {
        'slot_len': [fit.slot_len],
        'intensity': [fit.intensity],
        'n_slots': [fit.n_slots],
        'method': [fit.method],
        'dispersion_index': [fit.dispersion_index],
    }


def poisson_histogram_table(fit):
    """
    Slot-count histogram with unit-wide bins and the fitted Poisson pmf.
    """
    counts = np.asarray(fit.counts, dtype=np.int64)
    support = np.arange(counts.max() + 1)
    frequencies = np.bincount(counts, minlength=len(support)) / len(counts)
    return {
        'bin_left': (support - 0.5).tolist(),
        'bin_right': (support + 0.5).tolist(),
        'density': frequencies.tolist(),
        'fit': stats.poisson.pmf(support, fit.intensity).tolist(),
    }


def consistency_table(fit_a, fit_b, ratio, verdict, tolerance):
    return {
        'slot_len_a': [fit_a.slot_len],
        'intensity_a': [fit_a.intensity],
        'slot_len_b': [fit_b.slot_len],
        'intensity_b': [fit_b.intensity],
        'ratio': [ratio],
        'tolerance': [tolerance],
        'verdict': [verdict],
    }


MINER_SUMMARY_COLUMNS = (
    'miner', 'count',
    'size_mb_mean', 'size_mb_std', 'size_mb_min', 'size_mb_max',
    'tx_count_mean', 'tx_count_std', 'tx_count_min', 'tx_count_max',
    'avg_fee_btc_mean', 'avg_fee_btc_std', 'avg_fee_btc_min', 'avg_fee_btc_max',
)


def miner_summary_table(rows):
    table = {name: [] for name in MINER_SUMMARY_COLUMNS}
    for row in rows:
        table['miner'].append(row.miner)
        table['count'].append(row.count)
        for prefix, attribute in (('size_mb', row.size), ('tx_count', row.tx_count), ('avg_fee_btc', row.avg_fee)):
            table[f"{prefix}_mean"].append(attribute.mean)
            table[f"{prefix}_std"].append(attribute.std)
            table[f"{prefix}_min"].append(attribute.min)
            table[f"{prefix}_max"].append(attribute.max)
    return table


def miner_counts_table(counts, by_day_class=False):
    if not by_day_class:
        return {'miner': list(counts), 'blocks': list(counts.values())}
    table = {'day_class': [], 'miner': [], 'blocks': []}
    for day_class, per_miner in counts.items():
        for miner, count in per_miner.items():
            table['day_class'].append(day_class)
            table['miner'].append(miner)
            table['blocks'].append(count)
    return table


def interblock_by_miner_table(rows):
    columns = ('miner', 'count', 'mean', 'median', 'min', 'max', 'n_nonpositive')
    return {name: [getattr(row, name) for row in rows] for name in columns}


def relation_table(relation):
    return {'x': list(relation.x), 'y': list(relation.y), 'label': list(relation.miners)}


def relation_summary_table(relation):
    return {
        'x': [relation.x_name],
        'y': [relation.y_name],
        'n': [len(relation.x)],
        'pearson': [relation.pearson],
        'spearman': [relation.spearman],
    }


def quartile_table(report):
    return {
        'bucket': [b.label for b in report.buckets] + ['all'],
        'fee_lower_btc': [b.lower for b in report.buckets] + [None],
        'fee_upper_btc': [b.upper for b in report.buckets] + [None],
        'count': [b.count for b in report.buckets] + [report.total],
        'mean_confirmation_s': [b.mean for b in report.buckets] + [report.overall_mean],
        'median_confirmation_s': [b.median for b in report.buckets] + [None],
        'degenerate': [report.degenerate] * 5,
    }


def order_table(p, q, max_lag):
    return {'p': [p], 'q': [q], 'max_lag': [max_lag]}
