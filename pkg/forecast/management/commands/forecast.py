import logging

from django.conf import settings

from cli.base import PipelineCommand, split_spec
from cli.services.plots import render_plot
from cli.services.tables import render_table, rows_to_table
from core.exceptions import PreconditionError
from core.models import DayClass
from forecast import config
from forecast.models import TrainConfig
from forecast.services.compare import compare_models, comparison_table
from forecast.services.datasets import block_dataset, confirmation_dataset, intensity_series
from forecast.services.persistence import model_json
from ingest.models import SplitSpec
from ingest.services.csv_io import load_block_csv, load_tx_csv
from ingest.services.split import filter_day_class

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ('model', 'day_class', 'target', 'mae', 'rmse', 'n', 'converged')


class Command(PipelineCommand):
    help = 'Fit forecasting models on a chronological split and report MAE/RMSE per model and day class.'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--in', dest='blocks_in', default=None, help='Block CSV file.')
        parser.add_argument('--tx-in', dest='txs_in', default=None,
                            help='Transaction CSV file (target confirmation).')
        parser.add_argument('--target', choices=config.TARGETS, default='size')
        parser.add_argument('--model', '--models', dest='models', choices=config.MODEL_KINDS + ('all',),
                            default='all')
        parser.add_argument('--p', type=int, default=config.DEFAULT_P)
        parser.add_argument('--d', type=int, default=config.DEFAULT_D)
        parser.add_argument('--q', type=int, default=config.DEFAULT_Q)
        parser.add_argument('--hidden', type=int, default=config.HIDDEN_UNITS)
        parser.add_argument('--weight-decay', type=float, default=config.WEIGHT_DECAY)
        parser.add_argument('--max-iter', type=int, default=config.TRAIN_MAX_ITERATIONS)
        parser.add_argument('--evidence', action='store_true',
                            help='Re-estimate the weight decay between training runs.')
        parser.add_argument('--exog', default=','.join(config.DEFAULT_EXOG),
                            help='Comma-separated exogenous block attributes.')
        parser.add_argument('--include-mempool', action='store_true')
        parser.add_argument('--day-class', type=DayClass.parse, default=None)
        parser.add_argument('--by-day-class', action='store_true',
                            help='Weekend, Working and All datasets side by side.')
        parser.add_argument('--slot-minutes', type=float, default=config.DEFAULT_SLOT_MINUTES)
        parser.add_argument('--split', type=split_spec, default=SplitSpec())
        parser.add_argument('--save-models', action='store_true')

    def handle(self, *args, **options):
        self.options = options
        datasets = self.datasets()
        kinds = self.kinds(datasets)
        train_cfg = TrainConfig(
            seed=options['seed'],
            max_iterations=options['max_iter'],
            weight_decay=options['weight_decay'],
            evidence=options['evidence'],
        )
        results = compare_models(
            datasets,
            kinds,
            spec=options['split'],
            order=(options['p'], options['d'], options['q']),
            hidden_units=options['hidden'],
            train_cfg=train_cfg,
            workers=settings.WORKERS if options['models'] == 'all' else 1,
        )
        self.publish(options['out'], self.render(results))

    def exog_columns(self):
        columns = tuple(name for name in self.options['exog'].split(',') if name)
        if self.options['include_mempool']:
            columns += tuple(name for name in config.MEMPOOL_EXOG if name not in columns)
        return columns

    def day_classes(self, series):
        if self.options['by_day_class']:
            return {
                DayClass.WEEKEND.value: filter_day_class(series, DayClass.WEEKEND),
                DayClass.WORKING.value: filter_day_class(series, DayClass.WORKING),
                'All': series,
            }
        if self.options['day_class'] is not None:
            day_class = self.options['day_class']
            return {day_class.value: filter_day_class(series, day_class)}
        return {'All': series}

    def datasets(self):
        target = self.options['target']
        if target == 'confirmation':
            if not self.options['txs_in']:
                raise PreconditionError('--target confirmation needs a transaction file (--tx-in)')
            return {('All', target): confirmation_dataset(load_tx_csv(self.options['txs_in']))}

        if not self.options['blocks_in']:
            raise PreconditionError(f"--target {target} needs a block file (--in)")
        series = load_block_csv(self.options['blocks_in'])
        datasets = {}
        for label, subset in self.day_classes(series).items():
            if target == 'intensity':
                y = intensity_series(subset.timestamps, self.options['slot_minutes'] * 60)
                datasets[(label, target)] = (y, None)
            else:
                datasets[(label, target)] = block_dataset(subset, target, self.exog_columns())
        return datasets

    def kinds(self, datasets):
        if self.options['models'] != 'all':
            return (self.options['models'],)
        has_exog = all(x is not None and x.shape[1] for _, x in datasets.values())
        return tuple(
            kind for kind in config.MODEL_KINDS
            if has_exog or kind not in config.EXOGENOUS_KINDS
        )

    def render(self, results):
        rows = [row for row, _, _ in results]
        files = {
            'comparison.csv': render_table(comparison_table(rows)),
            'results.csv': render_table(rows_to_table([vars(row) for row in rows], RESULT_COLUMNS)),
        }
        for row, model, evaluation in results:
            stem = f"{row.model}_{row.day_class.lower()}_{row.target}"
            overlay = {
                'index': list(range(evaluation.n)),
                'measured': list(evaluation.actuals),
                'predicted': list(evaluation.predictions),
            }
            files[f"predictions/{stem}.csv"] = render_table(overlay)
            files[f"predictions/{stem}.svg"] = render_plot(
                overlay,
                'series-overlay',
                title=f"{row.model.upper()} one-step forecast of {row.target} ({row.day_class})",
                x_label='test index',
                y_label=row.target,
            )
            if self.options['save_models']:
                files[f"models/{stem}.json"] = model_json(model)
        return files
