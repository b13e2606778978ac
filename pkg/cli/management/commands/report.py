import logging

from django.conf import settings
from django.utils.text import slugify

from classify import config as classify_config
from classify.services.boosting import fit_boosted, fit_rusboost
from classify.services.evaluation import evaluate_classifier
from classify.services.features import build_feature_matrix, restrict_classes
from classify.services.trees import fit_cart
from cli.base import PipelineCommand, split_spec
from cli.services.plots import render_plot
from cli.services.tables import render_table, rows_to_table
from core.exceptions import PreconditionError
from core.models import DayClass
from core.units import BYTES_PER_MB
from explore.services import tables
from explore.services.distributions import ecdf
from explore.services.miners import summary_by_miner
from forecast import config as forecast_config
from forecast.models import TrainConfig
from forecast.services.compare import compare_models, comparison_table
from forecast.services.datasets import block_dataset
from ingest.models import SplitSpec
from ingest.services.csv_io import load_block_csv
from ingest.services.split import filter_day_class, split_counts, stratified_split

logger = logging.getLogger(__name__)

SPLIT_COLUMNS = ('dataset', 'total', 'train', 'test', 'validation')
CLASSIFIER_COLUMNS = ('method', 'accuracy', 'sensitivity', 'miss_rate', 'macro_auc', 'n')
REPORT_TARGETS = ('size', 'tx_count', 'interblock')
REPORT_MODELS = ('arima', 'arimax', 'nar', 'narx')
REPORT_METHODS = ('boosted', 'rusboost')


def name_list(value):
    return tuple(part.strip() for part in value.split(',') if part.strip())


class Command(PipelineCommand):
    help = (
        'Rebuild the summary tables from one block file: per-pool attributes (I), '
        'dataset division (II), forecasting comparison (III) and classifier comparison (IV).'
    )

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--in', dest='blocks_in', required=True, help='Block CSV file.')
        parser.add_argument('--split', type=split_spec, default=SplitSpec())
        parser.add_argument('--targets', type=name_list, default=REPORT_TARGETS)
        parser.add_argument('--models', type=name_list, default=REPORT_MODELS)
        parser.add_argument('--p', type=int, default=forecast_config.DEFAULT_P)
        parser.add_argument('--d', type=int, default=forecast_config.DEFAULT_D)
        parser.add_argument('--q', type=int, default=forecast_config.DEFAULT_Q)
        parser.add_argument('--hidden', type=int, default=forecast_config.HIDDEN_UNITS)
        parser.add_argument('--max-iter', type=int, default=forecast_config.TRAIN_MAX_ITERATIONS)
        parser.add_argument('--methods', type=name_list, default=REPORT_METHODS)
        parser.add_argument('--top-k', type=int, default=classify_config.DEFAULT_TOP_K)
        parser.add_argument('--classes', type=name_list, default=(),
                            help='Restrict the classifier comparison to these labels.')
        parser.add_argument('--rounds', type=int, default=classify_config.DEFAULT_ROUNDS)
        parser.add_argument('--skip-forecast', action='store_true')
        parser.add_argument('--skip-classify', action='store_true')

    def handle(self, *args, **options):
        self.options = options
        for target in options['targets']:
            if target not in REPORT_TARGETS:
                raise PreconditionError(f"unknown target {target!r}; expected a subset of {', '.join(REPORT_TARGETS)}")
        for method in options['methods']:
            if method not in classify_config.METHODS:
                raise PreconditionError(
                    f"unknown method {method!r}; expected a subset of {', '.join(classify_config.METHODS)}"
                )

        series = load_block_csv(options['blocks_in'])
        self.by_day_class = {
            DayClass.WORKING.value: filter_day_class(series, DayClass.WORKING),
            DayClass.WEEKEND.value: filter_day_class(series, DayClass.WEEKEND),
            'All': series,
        }
        files = {}
        files.update(self.table_i(series))
        files.update(self.table_ii())
        if not options['skip_forecast']:
            files.update(self.table_iii())
        if not options['skip_classify']:
            files.update(self.table_iv(series))
        self.publish(options['out'], files)

    def table_i(self, series):
        sizes = [block.size / BYTES_PER_MB for block in series]
        distribution = tables.ecdf_table(ecdf(sizes))
        return {
            'table_i.csv': render_table(tables.miner_summary_table(summary_by_miner(series))),
            'figures/table_i_size_ecdf.svg': render_plot(
                distribution, 'ecdf', title='Block size', x_label='size (MB)',
            ),
        }

    def table_ii(self):
        rows = []
        for label, subset in self.by_day_class.items():
            train, test, validation = split_counts(len(subset), self.options['split'])
            rows.append({
                'dataset': f"{label}_db",
                'total': len(subset),
                'train': train,
                'test': test,
                'validation': validation,
            })
        return {'table_ii.csv': render_table(rows_to_table(rows, SPLIT_COLUMNS))}

    def table_iii(self):
        options = self.options
        datasets = {
            (label, target): block_dataset(subset, target)
            for label, subset in self.by_day_class.items()
            for target in options['targets']
        }
        results = compare_models(
            datasets,
            options['models'],
            spec=options['split'],
            order=(options['p'], options['d'], options['q']),
            hidden_units=options['hidden'],
            train_cfg=TrainConfig(seed=options['seed'], max_iterations=options['max_iter']),
            workers=settings.WORKERS,
        )
        files = {'table_iii.csv': render_table(comparison_table([row for row, _, _ in results]))}
        for row, _, evaluation in results:
            if row.day_class != 'All':
                continue
            overlay = {
                'index': list(range(evaluation.n)),
                'measured': list(evaluation.actuals),
                'predicted': list(evaluation.predictions),
            }
            files[f"figures/table_iii_{row.model}_{row.target}.svg"] = render_plot(
                overlay, 'series-overlay',
                title=f"{row.model.upper()} one-step forecast of {row.target}",
                x_label='test index', y_label=row.target,
            )
        return files

    def fit(self, method, train):
        options = self.options
        if method == 'cart':
            return fit_cart(train, fitted_on=options['blocks_in'])
        if method == 'boosted':
            return fit_boosted(train, rounds=options['rounds'], fitted_on=options['blocks_in'])
        return fit_rusboost(train, rounds=options['rounds'], seed=options['seed'], fitted_on=options['blocks_in'])

    def table_iv(self, series):
        matrix = build_feature_matrix(series, self.options['top_k'])
        if self.options['classes']:
            matrix = restrict_classes(matrix, self.options['classes'])
        train, test, _ = stratified_split(matrix.labels, self.options['split'])
        train, test = matrix.take(train), matrix.take(test)

        rows, files = [], {}
        for method in self.options['methods']:
            model = self.fit(method, train)
            evaluation = evaluate_classifier(model, test)
            rows.append({
                'method': model.kind.value,
                'accuracy': evaluation.accuracy,
                'sensitivity': evaluation.sensitivity,
                'miss_rate': evaluation.miss_rate,
                'macro_auc': evaluation.macro_auc,
                'n': len(test),
            })
            for curve in evaluation.roc:
                slug = slugify(curve.label) or f"class-{model.classes.index(curve.label)}"
                files[f"figures/table_iv_{method}_{slug}.svg"] = render_plot(
                    {'fpr': list(curve.fpr), 'tpr': list(curve.tpr)}, 'roc',
                    title=f"{model.kind.value} ROC of {curve.label}",
                )
        files['table_iv.csv'] = render_table(rows_to_table(rows, CLASSIFIER_COLUMNS))
        return files
