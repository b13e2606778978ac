import json
import math
import tempfile
from dataclasses import replace
from decimal import Decimal
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from classify import config
from classify.models import ClassifierKind, ClassifierModel, FeatureMatrix, Hyperparameters, TreeNode
from classify.services.boosting import fit_boosted, fit_rusboost, undersample
from classify.services.evaluation import (
    confusion_metrics,
    evaluate_classifier,
    miss_rate,
    per_class_rates,
    predict,
    predict_labels,
    roc_auc,
)
from classify.services.features import build_feature_matrix, restrict_classes
from classify.services.persistence import load_classifier, save_classifier
from classify.services.trees import fit_cart, gini
from core.exceptions import (
    BoostingError,
    EmptySeriesError,
    PreconditionError,
    SchemaError,
    UnknownLabelError,
)
from core.models import BlockRecord, BlockSeries, MempoolSnapshot
from ingest.models import SplitSpec
from ingest.services.split import stratified_split
from simulate.models import ArrivalModel, Selection
from simulate.services.engine import run_simulation
from simulate.services.scenarios import distinct_pool_config


def matrix(rows, labels, names=('a', 'b')):
    return FeatureMatrix.from_arrays(np.asarray(rows, dtype=float), labels, names)


def accuracy(model, data):
    return float(np.mean(np.asarray(predict_labels(model, data.values)) == np.asarray(data.labels)))


def uniform_square(n, seed, rule):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, 2))
    return matrix(x, np.where(rule(x), 'pos', 'neg'))


def blobs(counts, centers, seed):
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for (label, count), center in zip(counts.items(), centers):
        rows.append(rng.normal(center, 1.0, size=(count, 2)))
        labels += [label] * count
    return matrix(np.vstack(rows), labels)


def block(height, miner, size=500_000, tx_count=1000, avg_fee='0.0001', gap=600):
    return BlockRecord(
        height=height,
        timestamp=1551916800 + gap * height,
        miner=miner,
        size=size,
        tx_count=tx_count,
        avg_fee=Decimal(avg_fee),
        mempool=MempoolSnapshot(tx_count=5 * height, total_bytes=1000 * height, total_fee=Decimal('0.01')),
    )


def scaled_down(config, factor=10):
    """The same workload with a tenth of the transactions and of the block space."""
    arrival = config.tx_arrival
    return replace(
        config,
        tx_arrival=ArrivalModel.mmpp2(
            rate_low=arrival.rate_low / factor,
            rate_high=arrival.rate_high / factor,
            switch_up=arrival.switch_up,
            switch_down=arrival.switch_down,
        ),
        pools=tuple(replace(pool, size_cap=pool.size_cap // factor) for pool in config.pools),
    )


class GiniTest(SimpleTestCase):
    """Test the impurity measure"""

    def test_pure_node(self):
        self.assertEqual(gini([5, 0, 0]), 0.0)

    def test_balanced_pair(self):
        self.assertAlmostEqual(gini([3, 3]), 0.5)

    def test_bounded_by_uniform(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            counts = rng.integers(0, 20, size=4)
            self.assertGreaterEqual(gini(counts), 0.0)
            self.assertLessEqual(gini(counts), 0.75 + 1e-12)
        self.assertAlmostEqual(gini([2, 2, 2, 2]), 0.75)

    def test_no_weight(self):
        self.assertEqual(gini([0, 0]), 0.0)


class FitCartTest(SimpleTestCase):
    """Test greedy tree growth"""

    def test_separable_on_one_feature(self):
        data = matrix([[1], [2], [3], [10], [11], [12]], 'AAABBB', names=('a',))
        model = fit_cart(data)
        root = model.trees[0]
        self.assertEqual(root.depth, 1)
        self.assertEqual((root.feature, root.threshold), (0, 6.5))
        self.assertEqual(root.left.distribution, (1.0, 0.0))
        self.assertEqual(root.right.distribution, (0.0, 1.0))
        self.assertEqual(accuracy(model, data), 1.0)

    def test_lowest_feature_wins_a_tie(self):
        rows = [[v, v] for v in (1, 2, 3, 10, 11, 12)]
        model = fit_cart(matrix(rows, 'AAABBB'))
        self.assertEqual(model.trees[0].feature, 0)

    def test_lowest_threshold_wins_a_tie(self):
        # cutting at 1.5 or 3.5 leaves the same impurity
        model = fit_cart(matrix([[1], [2], [3], [4]], 'ABBA', names=('a',)), max_depth=1)
        self.assertEqual(model.trees[0].threshold, 1.5)

    def test_depth_limit(self):
        rng = np.random.default_rng(1)
        data = matrix(rng.normal(size=(200, 2)), rng.choice(['A', 'B', 'C'], size=200))
        self.assertLessEqual(fit_cart(data, max_depth=3).trees[0].depth, 3)

    def test_min_leaf(self):
        data = matrix([[1], [2], [3], [4], [5], [6]], 'ABAABB', names=('a',))
        root = fit_cart(data, min_leaf=3).trees[0]
        self.assertEqual(root.threshold, 3.5)
        self.assertTrue(root.left.is_leaf and root.right.is_leaf)

    def test_single_class_is_one_leaf(self):
        data = matrix([[1, 2], [3, 4]], 'AA')
        with self.assertLogs('classify.services.trees', 'WARNING'):
            model = fit_cart(data)
        self.assertTrue(model.trees[0].is_leaf)
        self.assertEqual(predict(model, [9, 9])[0], 'A')

    def test_increasing_transform_keeps_training_predictions(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(150, 3))
        labels = rng.choice(['A', 'B', 'C'], size=150)
        warped = x.copy()
        warped[:, 1] = np.exp(3 * warped[:, 1])
        original = fit_cart(matrix(x, labels, names=('a', 'b', 'c')), max_depth=5)
        transformed = fit_cart(matrix(warped, labels, names=('a', 'b', 'c')), max_depth=5)
        self.assertEqual(predict_labels(original, x), predict_labels(transformed, warped))

    def test_leaf_distributions_sum_to_one(self):
        rng = np.random.default_rng(3)
        data = matrix(rng.normal(size=(100, 2)), rng.choice(['A', 'B', 'C'], size=100))
        for leaf in fit_cart(data, max_depth=4).trees[0].leaves():
            self.assertAlmostEqual(sum(leaf.distribution), 1.0)

    def test_invalid_parameters(self):
        data = matrix([[1, 2], [3, 4]], 'AB')
        with self.assertRaises(PreconditionError):
            fit_cart(data, min_leaf=0)
        with self.assertRaises(PreconditionError):
            fit_cart(data, max_depth=0)

    def test_empty_data(self):
        with self.assertRaises(EmptySeriesError):
            fit_cart(matrix(np.empty((0, 2)), []))

    def test_kind_names_match_method_names(self):
        data = matrix([[1, 0], [2, 0]], 'AB')
        self.assertEqual(fit_cart(data).kind.value, 'cart')
        self.assertEqual(tuple(kind.value for kind in ClassifierKind), config.METHODS)


class PredictTest(SimpleTestCase):
    """Test scoring and the tie rule"""

    def model(self, *distributions):
        return ClassifierModel(
            kind=ClassifierKind.BOOSTED,
            classes=('A', 'B'),
            feature_names=('a',),
            trees=tuple(TreeNode(distribution=d) for d in distributions),
            tree_weights=(1.0,) * len(distributions),
            hyperparameters=Hyperparameters(max_depth=1, min_leaf=1, rounds=len(distributions)),
        )

    def test_single_leaf(self):
        label, scores = predict(self.model((0.25, 0.75)), [123.0])
        self.assertEqual(label, 'B')
        self.assertEqual(scores, {'A': 0.25, 'B': 0.75})

    def test_tie_goes_to_first_class(self):
        label, scores = predict(self.model((1.0, 0.0), (0.0, 1.0)), [0.0])
        self.assertEqual(label, 'A')
        self.assertEqual(scores, {'A': 0.5, 'B': 0.5})

    def test_training_rows_get_their_leaf_label(self):
        rng = np.random.default_rng(4)
        data = matrix(rng.normal(size=(60, 2)), rng.choice(['A', 'B'], size=60))
        model = fit_cart(data, max_depth=30)
        for row, label in zip(data.rows, data.labels):
            self.assertEqual(predict(model, row)[0], label)

    def test_arity_mismatch(self):
        with self.assertRaises(PreconditionError):
            predict(self.model((1.0, 0.0)), [1.0, 2.0])

    def test_invalid_leaf_distribution(self):
        with self.assertRaises(PreconditionError):
            self.model((0.6, 0.6))


class BoostingTest(SimpleTestCase):
    """Test SAMME boosting"""

    def test_perfect_learner_stops_after_one_round(self):
        data = matrix([[1], [2], [3], [10], [11], [12]], 'AAABBB', names=('a',))
        model = fit_boosted(data, rounds=50, max_depth=1)
        self.assertEqual(len(model.trees), 1)
        self.assertEqual(model.tree_weights, (1.0,))
        self.assertEqual(model.trees[0], fit_cart(data, max_depth=1).trees[0])

    def test_zero_rounds(self):
        with self.assertRaises(PreconditionError):
            fit_boosted(matrix([[1, 2], [3, 4]], 'AB'), rounds=0)

    def test_stumps_build_a_diagonal_boundary(self):
        data = uniform_square(400, seed=5, rule=lambda x: x[:, 0] + x[:, 1] > 0)
        stump = fit_cart(data, max_depth=1)
        boosted = fit_boosted(data, rounds=50, max_depth=1)
        self.assertLess(accuracy(stump, data), 0.82)
        self.assertGreater(accuracy(boosted, data), 0.93)

    def test_xor(self):
        data = uniform_square(400, seed=6, rule=lambda x: (x[:, 0] > 0) == (x[:, 1] > 0))
        # a single stump sees no signal in either marginal
        self.assertLess(accuracy(fit_cart(data, max_depth=1), data), 0.65)
        self.assertGreater(accuracy(fit_boosted(data, rounds=50, max_depth=2), data), 0.9)

    def test_rounds_no_better_than_chance_are_discarded(self):
        data = matrix([[1, 1]] * 4, 'ABAB')
        with self.assertRaises(BoostingError):
            fit_boosted(data, rounds=5, max_depth=2)

    def test_weights_are_positive_and_finite(self):
        data = blobs({'A': 80, 'B': 80, 'C': 80}, [(0, 0), (1.5, 0), (0, 1.5)], seed=7)
        model = fit_boosted(data, rounds=20, max_depth=2)
        self.assertTrue(all(math.isfinite(w) and w > 0 for w in model.tree_weights))
        self.assertEqual(model.classes, ('A', 'B', 'C'))


class RusBoostTest(SimpleTestCase):
    """Test boosting on class-balanced random subsets"""

    def test_undersample_to_minority(self):
        y = np.r_[np.zeros(100, dtype=np.int64), np.ones(10, dtype=np.int64)]
        rows = undersample(y, np.random.default_rng(0))
        self.assertEqual(len(rows), 20)
        self.assertEqual(np.bincount(y[rows]).tolist(), [10, 10])
        self.assertEqual(len(set(rows.tolist())), 20)

    def test_same_seed_same_model(self):
        data = blobs({'A': 120, 'B': 30}, [(0, 0), (1.5, 1.5)], seed=8)
        first = fit_rusboost(data, rounds=15, max_depth=2, seed=11)
        second = fit_rusboost(data, rounds=15, max_depth=2, seed=11)
        self.assertEqual(first, second)
        self.assertEqual(first.hyperparameters.seed, 11)

    def test_balanced_data_matches_plain_boosting(self):
        train = blobs({'A': 150, 'B': 150}, [(0, 0), (1.5, 1.5)], seed=9)
        test = blobs({'A': 150, 'B': 150}, [(0, 0), (1.5, 1.5)], seed=10)
        boosted = fit_boosted(train, rounds=20, max_depth=2)
        rus = fit_rusboost(train, rounds=20, max_depth=2, seed=3)
        self.assertLessEqual(abs(accuracy(boosted, test) - accuracy(rus, test)), 0.05)

    def test_minority_recall_on_skewed_data(self):
        wins = 0
        for seed in range(10):
            train = blobs({'maj': 450, 'min': 50}, [(0, 0), (1.5, 1.5)], seed=100 + seed)
            test = blobs({'maj': 450, 'min': 50}, [(0, 0), (1.5, 1.5)], seed=200 + seed)
            rates = {}
            for name, model in (
                ('boosted', fit_boosted(train, rounds=20, max_depth=2)),
                ('rus', fit_rusboost(train, rounds=20, max_depth=2, seed=seed)),
            ):
                evaluation = evaluate_classifier(model, test)
                rates[name] = {rate.label: rate.tpr for rate in per_class_rates(evaluation)}['min']
            wins += rates['rus'] >= rates['boosted']
        self.assertGreaterEqual(wins, 6)


class RocAucTest(SimpleTestCase):
    """Test the one-vs-rest ROC sweep"""

    def test_perfect_scores(self):
        points, auc = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        self.assertEqual(auc, 1.0)
        self.assertEqual(points[0], (0.0, 0.0))
        self.assertEqual(points[-1], (1.0, 1.0))
        self.assertIn((0.0, 1.0), points)

    def test_inverted_scores(self):
        self.assertEqual(roc_auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0])[1], 0.0)

    def test_constant_scores(self):
        points, auc = roc_auc([0.5] * 6, [1, 0, 1, 0, 0, 1])
        self.assertEqual(points, ((0.0, 0.0), (1.0, 1.0)))
        self.assertEqual(auc, 0.5)

    def test_ties_enter_together(self):
        points, auc = roc_auc([0.9, 0.5, 0.5, 0.1], [1, 1, 0, 0])
        self.assertEqual(points, ((0.0, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.0)))
        self.assertAlmostEqual(auc, 0.875)

    def test_negated_scores_complement_the_area(self):
        rng = np.random.default_rng(12)
        scores = rng.normal(size=200)
        labels = rng.random(200) < 0.3
        self.assertAlmostEqual(roc_auc(-scores, labels)[1], 1.0 - roc_auc(scores, labels)[1])

    def test_single_class(self):
        with self.assertRaises(PreconditionError):
            roc_auc([0.1, 0.2], [1, 1])


class EvaluateClassifierTest(SimpleTestCase):
    """Test the confusion matrix and its summary rates"""

    def test_hand_confusion(self):
        for value, expected in zip(confusion_metrics([[70, 30], [20, 80]]), (0.75, 0.75, 0.25)):
            self.assertAlmostEqual(value, expected)

    def test_published_miss_rates(self):
        for sensitivity, expected in ((0.885, 0.115), (0.881, 0.119)):
            self.assertAlmostEqual(miss_rate(sensitivity), expected, places=12)
            self.assertEqual(round(miss_rate(sensitivity), 3), expected)
            self.assertEqual(sensitivity + miss_rate(sensitivity), 1.0)

    def test_perfect_predictions(self):
        data = matrix([[1, 0], [2, 0], [10, 0], [11, 0], [20, 0], [21, 0]], 'AABBCC')
        evaluation = evaluate_classifier(fit_cart(data), data)
        self.assertEqual(evaluation.confusion, ((2, 0, 0), (0, 2, 0), (0, 0, 2)))
        self.assertEqual((evaluation.accuracy, evaluation.sensitivity, evaluation.miss_rate), (1.0, 1.0, 0.0))
        self.assertEqual([curve.auc for curve in evaluation.roc], [1.0, 1.0, 1.0])
        self.assertEqual(evaluation.macro_auc, 1.0)

    def test_conservation(self):
        train = blobs({'A': 100, 'B': 60, 'C': 40}, [(0, 0), (1, 0), (0, 1)], seed=13)
        test = blobs({'A': 50, 'B': 30, 'C': 20}, [(0, 0), (1, 0), (0, 1)], seed=14)
        evaluation = evaluate_classifier(fit_boosted(train, rounds=10, max_depth=2), test)
        self.assertEqual(evaluation.total, 100)
        self.assertEqual(evaluation.support, (50, 30, 20))
        trace = sum(evaluation.confusion[k][k] for k in range(3))
        self.assertEqual(evaluation.accuracy, trace / 100)
        for rate in per_class_rates(evaluation):
            self.assertAlmostEqual(rate.tpr + rate.fnr, 1.0)
        self.assertAlmostEqual(evaluation.sensitivity + evaluation.miss_rate, 1.0)

    def test_unpredicted_class_keeps_its_column(self):
        model = ClassifierModel(
            kind=ClassifierKind.CART,
            classes=('A', 'B'),
            feature_names=('a', 'b'),
            trees=(TreeNode(distribution=(0.6, 0.4)),),
            tree_weights=(1.0,),
            hyperparameters=Hyperparameters(max_depth=1, min_leaf=1),
        )
        evaluation = evaluate_classifier(model, matrix([[0, 0], [1, 0], [2, 0]], 'BAB'))
        self.assertEqual(evaluation.confusion, ((1, 0), (2, 0)))
        self.assertEqual((evaluation.accuracy, evaluation.sensitivity), (1 / 3, 0.5))
        self.assertEqual([curve.auc for curve in evaluation.roc], [0.5, 0.5])

    def test_class_missing_from_test_set(self):
        train = matrix([[1, 0], [2, 0], [10, 0], [11, 0]], 'AABB')
        test = matrix([[1, 0], [2, 0]], 'AA')
        evaluation = evaluate_classifier(fit_cart(train), test)
        self.assertEqual(evaluation.sensitivity, 1.0)
        self.assertEqual(evaluation.roc, ())
        self.assertIsNone(evaluation.macro_auc)
        self.assertIsNone(per_class_rates(evaluation)[1].tpr)

    def test_unknown_label(self):
        train = matrix([[1, 0], [2, 0]], 'AB')
        with self.assertRaises(UnknownLabelError):
            evaluate_classifier(fit_cart(train), matrix([[1, 0]], 'C'))

    def test_empty_test_set(self):
        train = matrix([[1, 0], [2, 0]], 'AB')
        with self.assertRaises(EmptySeriesError):
            evaluate_classifier(fit_cart(train), matrix(np.empty((0, 2)), []))


class FeatureMatrixTest(SimpleTestCase):
    """Test block features and labels"""

    def test_first_block_dropped(self):
        series = BlockSeries.from_blocks([
            block(0, 'A'),
            block(1, 'B', size=400_000, tx_count=800, avg_fee='0.0002'),
            block(2, 'C', gap=600),
        ])
        data = build_feature_matrix(series)
        self.assertEqual(data.feature_names, ('avg_fee', 'size', 'tx_count', 'interblock'))
        self.assertEqual(data.rows, ((0.0002, 400_000.0, 800.0, 600.0), (0.0001, 500_000.0, 1000.0, 600.0)))
        self.assertEqual(data.labels, ('B', 'C'))

    def test_minor_pools_become_other(self):
        series = BlockSeries.from_blocks([block(h, miner) for h, miner in enumerate('AAAAAAB')])
        data = build_feature_matrix(series, top_k=1)
        self.assertEqual(set(data.labels), {'A', 'Other'})
        self.assertEqual(data.labels.count('A'), 5)

    def test_mempool_features(self):
        series = BlockSeries.from_blocks([block(h, 'A') for h in range(4)])
        data = build_feature_matrix(series, include_mempool=True)
        self.assertEqual(len(data.feature_names), 7)
        self.assertEqual(data.values[:, 4].tolist(), [5.0, 10.0, 15.0])

    def test_preconditions(self):
        series = BlockSeries.from_blocks([block(0, 'A')])
        with self.assertRaises(EmptySeriesError):
            build_feature_matrix(series)
        with self.assertRaises(PreconditionError):
            build_feature_matrix(BlockSeries.from_blocks([block(0, 'A'), block(1, 'B')]), top_k=0)

    def test_missing_cell(self):
        with self.assertRaises(PreconditionError):
            matrix([[1.0, float('nan')]], 'A')

    def test_restrict_classes(self):
        data = matrix([[1, 0], [2, 0], [3, 0], [4, 0]], 'ABCA')
        restricted = restrict_classes(data, ['A', 'C'])
        self.assertEqual(restricted.labels, ('A', 'C', 'A'))
        self.assertEqual(restricted.values[:, 0].tolist(), [1.0, 3.0, 4.0])
        with self.assertRaises(UnknownLabelError):
            restrict_classes(data, ['Z'])


class PersistenceTest(SimpleTestCase):
    """Test classifier files"""

    def test_saved_model_predicts_the_same(self):
        data = blobs({'A': 60, 'B': 40}, [(0, 0), (1.5, 1.5)], seed=15)
        model = fit_rusboost(data, rounds=10, max_depth=3, seed=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_classifier(model, Path(tmp) / 'model.json')
            loaded = load_classifier(path)
        self.assertEqual(loaded, model)
        self.assertEqual(predict_labels(loaded, data.values), predict_labels(model, data.values))

    def test_missing_file(self):
        with self.assertRaises(PreconditionError) as raised:
            load_classifier('/nonexistent/model.json')
        self.assertEqual(raised.exception.code, 'missing_file')

    def test_malformed_tree(self):
        data = matrix([[1, 0], [2, 0]], 'AB')
        with tempfile.TemporaryDirectory() as tmp:
            path = save_classifier(fit_cart(data), Path(tmp) / 'model.json')
            content = json.loads(path.read_text())
            content['trees'] = [{'feature': 0}]
            path.write_text(json.dumps(content))
            with self.assertRaises(SchemaError):
                load_classifier(path)

    def test_leaf_that_does_not_sum_to_one(self):
        data = matrix([[1, 0], [2, 0]], 'AB')
        with tempfile.TemporaryDirectory() as tmp:
            path = save_classifier(fit_cart(data), Path(tmp) / 'model.json')
            content = json.loads(path.read_text())
            content['trees'] = [{'distribution': [0.7, 0.7]}]
            path.write_text(json.dumps(content))
            with self.assertRaises(SchemaError):
                load_classifier(path)


class DistinctPoolTest(SimpleTestCase):
    """Test that only pools with their own policy can be told apart"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        base = distinct_pool_config(seed=21, horizon=30 * 24 * 3600)
        pools = tuple(replace(pool, hash_share=1 / len(base.pools)) for pool in base.pools)
        cls.data = build_feature_matrix(run_simulation(scaled_down(replace(base, pools=pools))).blocks)

    def split(self, data, spec=SplitSpec()):
        train, test, _ = stratified_split(data.labels, spec)
        return data.take(train), data.take(test)

    def test_only_the_distinct_pool_is_recognised(self):
        train, test = self.split(self.data, SplitSpec(train_frac=0.5, test_frac=0.5, val_frac=0.0))
        model = fit_rusboost(train, rounds=100, max_depth=8, min_leaf=5, seed=1)
        rates = {rate.label: rate.tpr for rate in per_class_rates(evaluate_classifier(model, test))}
        self.assertEqual(set(rates), {'?', 'AntPool', 'BTC.com', 'F2Pool', 'Poolin'})
        self.assertGreaterEqual(rates.pop('F2Pool'), 0.7)
        for label, tpr in rates.items():
            self.assertLessEqual(tpr, 0.35, label)

    def test_two_distinct_pools(self):
        base = distinct_pool_config(seed=22, horizon=20 * 24 * 3600)
        pools = tuple(
            replace(pool, size_cap=600_000, selection=Selection.FIFO) if pool.name == 'AntPool' else pool
            for pool in base.pools
        )
        series = run_simulation(scaled_down(replace(base, pools=pools))).blocks
        data = restrict_classes(build_feature_matrix(series), ['AntPool', 'F2Pool'])
        train, test = self.split(data)
        evaluation = evaluate_classifier(fit_rusboost(train, rounds=50, max_depth=4, seed=1), test)
        self.assertGreaterEqual(evaluation.accuracy, 0.85)
        self.assertAlmostEqual(evaluation.sensitivity + evaluation.miss_rate, 1.0)
