import logging
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings
from django.utils.text import slugify

from classify import config
from classify.services.boosting import fit_boosted, fit_rusboost
from classify.services.evaluation import evaluate_classifier, per_class_rates
from classify.services.features import build_feature_matrix, restrict_classes
from classify.services.persistence import classifier_json
from classify.services.trees import fit_cart
from cli.base import PipelineCommand, split_spec
from cli.services.plots import render_plot
from cli.services.tables import render_table, rows_to_table
from core.models import DayClass
from ingest.models import SplitSpec
from ingest.services.csv_io import load_block_csv
from ingest.services.split import filter_day_class, stratified_split

logger = logging.getLogger(__name__)

EVALUATION_COLUMNS = ('method', 'accuracy', 'sensitivity', 'miss_rate', 'macro_auc', 'n')
RATE_COLUMNS = ('label', 'support', 'tpr', 'fnr')


def class_slug(label, index):
    return slugify(label) or f"class-{index}"


class Command(PipelineCommand):
    help = 'Train CART, boosted and RUSBoost miner classifiers and report accuracy, sensitivity and miss rate.'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--in', dest='blocks_in', required=True, help='Block CSV file.')
        parser.add_argument('--method', choices=config.METHODS + ('all',), default='all')
        parser.add_argument('--top-k', type=int, default=config.DEFAULT_TOP_K,
                            help='Pools kept by block count; the rest are labelled Other.')
        parser.add_argument('--classes', default=None,
                            help='Comma-separated labels restricting the task, e.g. two distinct pools.')
        parser.add_argument('--include-mempool', action='store_true')
        parser.add_argument('--rounds', type=int, default=config.DEFAULT_ROUNDS)
        parser.add_argument('--max-depth', type=int, default=None,
                            help=f"Tree depth (default {config.DEFAULT_MAX_DEPTH} for CART, "
                                 f"{config.WEAK_MAX_DEPTH} for boosted learners).")
        parser.add_argument('--min-leaf', type=int, default=config.DEFAULT_MIN_LEAF)
        parser.add_argument('--day-class', type=DayClass.parse, default=None)
        parser.add_argument('--split', type=split_spec, default=SplitSpec())
        parser.add_argument('--save-models', action='store_true')

    def handle(self, *args, **options):
        self.options = options
        train, test = self.datasets()
        methods = config.METHODS if options['method'] == 'all' else (options['method'],)
        with ThreadPoolExecutor(max_workers=min(settings.WORKERS, len(methods))) as pool:
            models = list(pool.map(lambda method: self.fit(method, train), methods))
        evaluations = [evaluate_classifier(model, test) for model in models]
        self.publish(options['out'], self.render(methods, models, evaluations, len(test)))

    def datasets(self):
        series = load_block_csv(self.options['blocks_in'])
        if self.options['day_class'] is not None:
            series = filter_day_class(series, self.options['day_class'])
        matrix = build_feature_matrix(series, self.options['top_k'], self.options['include_mempool'])
        if self.options['classes']:
            matrix = restrict_classes(matrix, [label for label in self.options['classes'].split(',') if label])
        train, test, _ = stratified_split(matrix.labels, self.options['split'])
        logger.info(f"{len(matrix)} labelled blocks: {len(train)} to train, {len(test)} to test")
        return matrix.take(train), matrix.take(test)

    def fit(self, method, train):
        options = self.options
        if method == 'cart':
            return fit_cart(
                train,
                max_depth=options['max_depth'] or config.DEFAULT_MAX_DEPTH,
                min_leaf=options['min_leaf'],
                fitted_on=options['blocks_in'],
            )
        weak = dict(
            rounds=options['rounds'],
            max_depth=options['max_depth'] or config.WEAK_MAX_DEPTH,
            min_leaf=options['min_leaf'],
            fitted_on=options['blocks_in'],
        )
        if method == 'boosted':
            return fit_boosted(train, **weak)
        return fit_rusboost(train, seed=options['seed'], **weak)

    def render(self, methods, models, evaluations, n_test):
        summary = [
            {
                'method': model.kind.value,
                'accuracy': evaluation.accuracy,
                'sensitivity': evaluation.sensitivity,
                'miss_rate': evaluation.miss_rate,
                'macro_auc': evaluation.macro_auc,
                'n': n_test,
            }
            for model, evaluation in zip(models, evaluations)
        ]
        files = {'evaluation.csv': render_table(rows_to_table(summary, EVALUATION_COLUMNS))}
        for method, model, evaluation in zip(methods, models, evaluations):
            confusion = {'true': list(evaluation.classes)}
            for k, label in enumerate(evaluation.classes):
                confusion[label] = [row[k] for row in evaluation.confusion]
            files[f"{method}/confusion.csv"] = render_table(confusion)
            rates = [vars(rate) for rate in per_class_rates(evaluation)]
            files[f"{method}/rates.csv"] = render_table(rows_to_table(rates, RATE_COLUMNS))
            for curve in evaluation.roc:
                stem = f"{method}/roc/{class_slug(curve.label, model.classes.index(curve.label))}"
                table = {'fpr': list(curve.fpr), 'tpr': list(curve.tpr)}
                files[f"{stem}.csv"] = render_table(table)
                files[f"{stem}.svg"] = render_plot(
                    table, 'roc', title=f"{model.kind.value} ROC of {curve.label} against the rest",
                )
            if self.options['save_models']:
                files[f"{method}/model.json"] = classifier_json(model)
        return files
