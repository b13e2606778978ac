import logging

import numpy as np

from cli.base import PipelineCommand
from cli.services.plots import render_plot
from cli.services.tables import render_table
from core.exceptions import PreconditionError
from core.models import DayClass
from core.services.series import ATTRIBUTES, attribute_column, tag_day_class
from core.units import BYTES_PER_MB
from explore import config
from explore.services import tables
from explore.services.correlation import acf, order_selection, pacf
from explore.services.distributions import ecdf, fit_exponential
from explore.services.intensity import fit_poisson_slots, poisson_consistency
from explore.services.miners import (
    attribute_relation,
    interblock_by_miner,
    miner_block_counts,
    summary_by_miner,
)
from explore.services.transactions import (
    confirmation_by_fee_quartile,
    tx_confirmation_times,
    tx_interarrival_times,
)
from ingest.services.csv_io import load_block_csv, load_tx_csv
from ingest.services.split import filter_day_class

logger = logging.getLogger(__name__)

STATS = (
    'ecdf', 'expfit', 'acf', 'pacf', 'order', 'poisson', 'consistency',
    'miners', 'counts', 'interblock-miners', 'relation', 'quartiles',
)
TX_SERIES = ('tx_interarrival', 'tx_confirmation')

# (divisor, unit) for axis labels; sizes are reported in MB
UNITS = {
    'size': (BYTES_PER_MB, 'MB'),
    'tx_count': (1, 'transactions'),
    'avg_fee': (1, 'BTC'),
    'interblock': (1, 's'),
    'mempool_tx_count': (1, 'transactions'),
    'mempool_bytes': (BYTES_PER_MB, 'MB'),
    'mempool_fee': (1, 'BTC'),
    'tx_interarrival': (1, 's'),
    'tx_confirmation': (1, 's'),
}


class Command(PipelineCommand):
    help = 'Exploratory statistics over a block (and transaction) dataset: CSV tables plus SVG plots.'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--in', dest='blocks_in', default=None, help='Block CSV file.')
        parser.add_argument('--tx-in', dest='txs_in', default=None, help='Transaction CSV file.')
        parser.add_argument('--stat', choices=STATS, required=True)
        parser.add_argument('--attr', choices=ATTRIBUTES + TX_SERIES, default='interblock')
        parser.add_argument('--against', choices=ATTRIBUTES, default='interblock',
                            help='x axis of --stat relation.')
        parser.add_argument('--day-class', type=DayClass.parse, default=None)
        parser.add_argument('--by-day-class', action='store_true')
        parser.add_argument('--max-lag', type=int, default=config.DEFAULT_MAX_LAG)
        parser.add_argument('--slot-minutes', type=float, default=config.DEFAULT_SLOT_MINUTES)
        parser.add_argument('--slot-minutes-b', type=float, default=config.DEFAULT_SLOT_MINUTES_B)
        parser.add_argument('--method', choices=config.SLOT_METHODS, default='mean')
        parser.add_argument('--tolerance', type=float, default=config.CONSISTENCY_TOLERANCE)

    def handle(self, *args, **options):
        self.options = options
        stat = options['stat']
        handler = getattr(self, f"stat_{stat.replace('-', '_')}")
        files = handler()
        self.publish(options['out'], files)

    # inputs

    def blocks(self):
        if not self.options['blocks_in']:
            raise PreconditionError(f"--stat {self.options['stat']} needs a block file (--in)")
        series = load_block_csv(self.options['blocks_in'])
        if self.options['day_class'] is not None:
            series = filter_day_class(series, self.options['day_class'])
        return series

    def txs(self):
        if not self.options['txs_in']:
            raise PreconditionError(f"--stat {self.options['stat']} needs a transaction file (--tx-in)")
        txs = load_tx_csv(self.options['txs_in'])
        day_class = self.options['day_class']
        if day_class is None:
            return list(txs)
        return [tx for tx in txs if tag_day_class(tx.arrival_ts) is day_class]

    def samples(self):
        attr = self.options['attr']
        if attr == 'tx_interarrival':
            return tx_interarrival_times(self.txs())
        if attr == 'tx_confirmation':
            return tx_confirmation_times(self.txs())
        return attribute_column(self.blocks(), attr)

    def label(self, attr=None):
        attr = attr or self.options['attr']
        unit = UNITS[attr][1]
        return f"{attr} ({unit})"

    def scaled(self, values, attr=None):
        divisor = UNITS[attr or self.options['attr']][0]
        return np.asarray(values, dtype=float) / divisor

    # statistics

    def stat_ecdf(self):
        result = ecdf(self.scaled(self.samples()))
        table = tables.ecdf_table(result)
        return {
            'ecdf.csv': render_table(table),
            'ecdf.svg': render_plot(table, 'ecdf', title=f"ECDF of {self.options['attr']}", x_label=self.label()),
        }

    def stat_expfit(self):
        samples = self.samples()
        fit = fit_exponential(samples, exclude_nonpositive=True)
        return {
            'expfit.csv': render_table(tables.exponential_fit_table(fit)),
            'expfit.svg': render_plot(
                tables.exponential_histogram_table(samples, fit),
                'histogram+fit',
                title=f"Exponential fit of {self.options['attr']}",
                x_label=self.label(),
            ),
        }

    def _correlogram(self, name, function):
        result = function(self.samples(), self.options['max_lag'])
        table = tables.acf_table(result)
        return {
            f"{name}.csv": render_table(table),
            f"{name}.svg": render_plot(table, 'acf', title=f"{name.upper()} of {self.options['attr']}"),
        }

    def stat_acf(self):
        return self._correlogram('acf', acf)

    def stat_pacf(self):
        return self._correlogram('pacf', pacf)

    def stat_order(self):
        p, q = order_selection(self.samples(), self.options['max_lag'])
        return {'order.csv': render_table(tables.order_table(p, q, self.options['max_lag']))}

    def _slot_fit(self, minutes, timestamps):
        return fit_poisson_slots(timestamps, minutes * 60, method=self.options['method'])

    def stat_poisson(self):
        timestamps = self.blocks().timestamps
        fit = self._slot_fit(self.options['slot_minutes'], timestamps)
        return {
            'poisson.csv': render_table(tables.poisson_fit_table(fit)),
            'poisson.svg': render_plot(
                tables.poisson_histogram_table(fit),
                'histogram+fit',
                title=f"Blocks per {self.options['slot_minutes']:g} min; intensity {fit.intensity:.5g}",
                x_label='blocks per slot',
                y_label='fraction of slots',
            ),
        }

    def stat_consistency(self):
        timestamps = self.blocks().timestamps
        fit_a = self._slot_fit(self.options['slot_minutes'], timestamps)
        fit_b = self._slot_fit(self.options['slot_minutes_b'], timestamps)
        ratio, verdict = poisson_consistency(fit_a, fit_b, self.options['tolerance'])
        files = {
            'consistency.csv': render_table(
                tables.consistency_table(fit_a, fit_b, ratio, verdict, self.options['tolerance'])
            ),
        }
        for suffix, fit, minutes in (('a', fit_a, self.options['slot_minutes']), ('b', fit_b, self.options['slot_minutes_b'])):
            files[f"poisson_{suffix}.svg"] = render_plot(
                tables.poisson_histogram_table(fit),
                'histogram+fit',
                title=f"Blocks per {minutes:g} min; intensity {fit.intensity:.5g}",
                x_label='blocks per slot',
                y_label='fraction of slots',
            )
        return files

    def stat_miners(self):
        return {'miners.csv': render_table(tables.miner_summary_table(summary_by_miner(self.blocks())))}

    def stat_counts(self):
        by_day_class = self.options['by_day_class']
        counts = miner_block_counts(self.blocks(), by_day_class=by_day_class)
        return {'counts.csv': render_table(tables.miner_counts_table(counts, by_day_class))}

    def stat_interblock_miners(self):
        rows = interblock_by_miner(self.blocks())
        return {'interblock_miners.csv': render_table(tables.interblock_by_miner_table(rows))}

    def stat_relation(self):
        attr, against = self.options['attr'], self.options['against']
        if attr in TX_SERIES:
            raise PreconditionError('--stat relation works on block attributes')
        relation = attribute_relation(self.blocks(), attr, against=against)
        pairs = tables.relation_table(relation)
        scatter = dict(pairs, x=self.scaled(pairs['x'], against).tolist(), y=self.scaled(pairs['y'], attr).tolist())
        return {
            'relation.csv': render_table(pairs),
            'relation_summary.csv': render_table(tables.relation_summary_table(relation)),
            'relation.svg': render_plot(
                scatter, 'scatter',
                title=f"{attr} against {against}",
                x_label=self.label(against),
                y_label=self.label(attr),
            ),
        }

    def stat_quartiles(self):
        report = confirmation_by_fee_quartile(self.txs())
        return {'quartiles.csv': render_table(tables.quartile_table(report))}
