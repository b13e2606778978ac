import argparse
import csv
import io
import json
import tempfile
from decimal import Decimal
from pathlib import Path

from django.test import SimpleTestCase

from cli.base import split_spec
from cli.runner import config_arguments, error_line, run
from cli.services.plots import render_plot
from cli.services.tables import format_cell, render_table, rows_to_table
from core.exceptions import PlotColumnError, PreconditionError
from core.models import DayClass

QUIET_RUN = ['--arrival-rate', '0.001']


def tree_bytes(directory):
    directory = Path(directory)
    return {
        str(path.relative_to(directory)): path.read_bytes()
        for path in sorted(directory.rglob('*'))
        if path.is_file()
    }


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))


class RenderPlotTest(SimpleTestCase):
    """Test the SVG figures"""

    def test_single_point_ecdf_is_one_polyline(self):
        svg = render_plot({'value': [1.0], 'probability': [1.0]}, 'ecdf')
        self.assertTrue(svg.lstrip().startswith('<?xml') or '<svg' in svg)
        self.assertEqual(svg.count('<polyline'), 1)

    def test_overlay_draws_both_series_with_legend(self):
        table = {'index': [0, 1, 2], 'measured': [1.0, 2.0, 3.0], 'predicted': [1.1, 1.9, 3.2]}
        svg = render_plot(table, 'series-overlay', title='overlay')
        self.assertEqual(svg.count('<polyline'), 2)
        self.assertIn('measured', svg)
        self.assertIn('predicted', svg)

    def test_roc_annotates_area(self):
        svg = render_plot({'fpr': [0.0, 0.0, 1.0], 'tpr': [0.0, 1.0, 1.0]}, 'roc')
        self.assertIn('AUC = 1.000', svg)

    def test_missing_column(self):
        with self.assertRaises(PlotColumnError):
            render_plot({'value': [1.0]}, 'ecdf')

    def test_columns_of_different_length(self):
        with self.assertRaises(PlotColumnError):
            render_plot({'x': [1.0, 2.0], 'y': [1.0]}, 'scatter')

    def test_empty_table(self):
        with self.assertRaises(PlotColumnError):
            render_plot({'lag': [], 'value': [], 'band': []}, 'acf')

    def test_unknown_kind(self):
        with self.assertRaises(PreconditionError):
            render_plot({'x': [1.0], 'y': [1.0]}, 'pie')

    def test_same_input_same_bytes(self):
        table = {
            'bin_left': [0.0, 1.0, 2.0],
            'bin_right': [1.0, 2.0, 3.0],
            'density': [0.5, 0.3, 0.2],
            'fit': [0.45, 0.3, 0.25],
        }
        self.assertEqual(
            render_plot(table, 'histogram+fit', title='sizes'),
            render_plot(table, 'histogram+fit', title='sizes'),
        )


class RenderTableTest(SimpleTestCase):
    """Test the CSV tables"""

    def test_format_cell(self):
        self.assertEqual(format_cell(None), '')
        self.assertEqual(format_cell(True), 'true')
        self.assertEqual(format_cell(3), '3')
        self.assertEqual(format_cell(0.1), '0.1')
        self.assertEqual(format_cell(DayClass.WEEKEND), DayClass.WEEKEND.value)
        self.assertEqual(format_cell(Decimal('0.00001000')), '0.00001')

    def test_rows_in_column_order(self):
        rows = [{'b': 2, 'a': 1.5}, {'a': None, 'b': 4}]
        text = render_table(rows_to_table(rows, ('a', 'b')))
        self.assertEqual(text, 'a,b\n1.5,2\n,4\n')

    def test_columns_of_different_length(self):
        with self.assertRaises(PreconditionError):
            render_table({'a': [1, 2], 'b': [1]})


class SplitSpecArgumentTest(SimpleTestCase):
    """Test --split parsing"""

    def test_three_fractions(self):
        spec = split_spec('0.6,0.2,0.2')
        self.assertEqual((spec.train_frac, spec.test_frac, spec.val_frac), (0.6, 0.2, 0.2))

    def test_rejects_wrong_arity(self):
        with self.assertRaises(argparse.ArgumentTypeError):
            split_spec('0.5,0.5')

    def test_rejects_non_numbers(self):
        with self.assertRaises(argparse.ArgumentTypeError):
            split_spec('a,b,c')

    def test_rejects_fractions_not_summing_to_one(self):
        with self.assertRaises(argparse.ArgumentTypeError):
            split_spec('0.5,0.5,0.5')


class ConfigArgumentsTest(SimpleTestCase):
    """Test --config files"""

    def setUp(self):
        self.parser = argparse.ArgumentParser()
        self.parser.add_argument('--config')
        self.parser.add_argument('--seed', type=int)
        self.parser.add_argument('--top-k', type=int)
        self.parser.add_argument('--include-mempool', action='store_true')
        self.dir = tempfile.TemporaryDirectory()
        self.addCleanup(self.dir.cleanup)

    def write(self, text):
        path = Path(self.dir.name) / 'run.env'
        path.write_text(text, encoding='utf-8')
        return str(path)

    def test_file_values_fill_missing_flags(self):
        path = self.write('seed=7\ntop_k=3\ninclude_mempool=true\n')
        args = config_arguments(self.parser, ['--config', path])
        options = self.parser.parse_args(args)
        self.assertEqual(options.seed, 7)
        self.assertEqual(options.top_k, 3)
        self.assertTrue(options.include_mempool)

    def test_flags_win(self):
        path = self.write('seed=7\n')
        options = self.parser.parse_args(config_arguments(self.parser, ['--config', path, '--seed', '42']))
        self.assertEqual(options.seed, 42)

    def test_comments_and_sections_are_ignored(self):
        path = self.write('# run settings\n[classify]\nseed=9\n')
        options = self.parser.parse_args(config_arguments(self.parser, [f"--config={path}"]))
        self.assertEqual(options.seed, 9)

    def test_false_switch_is_left_off(self):
        path = self.write('include_mempool=false\n')
        options = self.parser.parse_args(config_arguments(self.parser, ['--config', path]))
        self.assertFalse(options.include_mempool)

    def test_no_config(self):
        self.assertEqual(config_arguments(self.parser, ['--seed', '1']), ['--seed', '1'])


class RunnerTest(SimpleTestCase):
    """Test exit statuses and error lines of the subcommand runner"""

    def setUp(self):
        self.dir = tempfile.TemporaryDirectory()
        self.addCleanup(self.dir.cleanup)
        self.root = Path(self.dir.name)

    def run_cli(self, *args):
        stderr = io.StringIO()
        status = run(list(args), stderr=stderr)
        return status, stderr.getvalue()

    def assertOneErrorLine(self, text, code):
        self.assertEqual(text.count('\n'), 1)
        self.assertTrue(text.startswith(f"error[{code}]: "), text)

    def test_error_line_is_one_line(self):
        self.assertEqual(error_line('parse', 'bad\nvalue  here'), 'error[parse]: bad value here')

    def test_unknown_subcommand(self):
        status, err = self.run_cli('mine', '--out', str(self.root))
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_no_subcommand(self):
        status, err = self.run_cli()
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_unknown_flag(self):
        status, err = self.run_cli('simulate', '--bogus', '--out', str(self.root))
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_missing_out(self):
        status, err = self.run_cli('explore', '--in', 'blocks.csv', '--stat', 'ecdf')
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_bad_split(self):
        status, err = self.run_cli('classify', '--in', 'blocks.csv', '--split', '0.5,0.5', '--out', str(self.root))
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_unknown_config_key(self):
        path = self.root / 'run.env'
        path.write_text('colour=blue\n', encoding='utf-8')
        status, err = self.run_cli('simulate', '--config', str(path), '--out', str(self.root / 'out'))
        self.assertEqual(status, 2)
        self.assertOneErrorLine(err, 'usage')

    def test_missing_input(self):
        """Test a missing input file fails before anything is written"""
        status, err = self.run_cli('classify', '--in', str(self.root / 'absent.csv'), '--out', str(self.root / 'out'))
        self.assertEqual(status, 1)
        self.assertOneErrorLine(err, 'missing_file')
        self.assertFalse((self.root / 'out').exists())

    def test_header_mismatch(self):
        path = self.root / 'blocks.csv'
        path.write_text('height,when\n1,2\n', encoding='utf-8')
        status, err = self.run_cli('classify', '--in', str(path), '--out', str(self.root / 'out'))
        self.assertEqual(status, 1)
        self.assertEqual(err.count('\n'), 1)
        self.assertTrue(err.startswith('error['))

    def test_same_seed_same_bytes(self):
        """Test two runs with one seed write identical files"""
        first, second = self.root / 'a', self.root / 'b'
        for out in (first, second):
            status, err = self.run_cli('simulate', '--seed', '42', '--horizon', '3600', '--out', str(out))
            self.assertEqual(status, 0, err)
        self.assertEqual(tree_bytes(first), tree_bytes(second))
        self.assertEqual(sorted(tree_bytes(first)), ['blocks.csv', 'truth.json', 'txs.csv'])

    def test_config_file_with_flag_override(self):
        """Test file values apply and a flag on the command line wins"""
        path = self.root / 'run.env'
        path.write_text('seed=7\nhorizon=1800\n', encoding='utf-8')
        out = self.root / 'out'
        status, err = self.run_cli('simulate', '--config', str(path), '--seed', '42', '--out', str(out))
        self.assertEqual(status, 0, err)
        truth = json.loads((out / 'truth.json').read_text(encoding='utf-8'))
        self.assertEqual(truth['seed'], 42)
        self.assertEqual(truth['horizon'], 1800)


class PipelineTest(SimpleTestCase):
    """Test simulate output feeding the classify and report subcommands"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dir = tempfile.TemporaryDirectory()
        cls.root = Path(cls.dir.name)
        # 2019-03-07 is a Thursday: three days give working days and a Saturday
        status = run(
            ['simulate', '--scenario', 'distinct', '--seed', '5', '--horizon', str(3 * 24 * 3600),
             *QUIET_RUN, '--out', str(cls.root / 'sim')],
            stderr=io.StringIO(),
        )
        assert status == 0
        cls.blocks = str(cls.root / 'sim' / 'blocks.csv')

    @classmethod
    def tearDownClass(cls):
        cls.dir.cleanup()
        super().tearDownClass()

    def test_classify_writes_evaluation(self):
        out = self.root / 'classify'
        err = io.StringIO()
        status = run(['classify', '--in', self.blocks, '--method', 'cart', '--top-k', '3',
                      '--save-models', '--out', str(out)], stderr=err)
        self.assertEqual(status, 0, err.getvalue())

        rows = read_csv(out / 'evaluation.csv')
        self.assertEqual([row['method'] for row in rows], ['cart'])
        accuracy, sensitivity, miss = (float(rows[0][key]) for key in ('accuracy', 'sensitivity', 'miss_rate'))
        self.assertGreaterEqual(accuracy, 0.0)
        self.assertLessEqual(accuracy, 1.0)
        self.assertAlmostEqual(sensitivity + miss, 1.0)
        self.assertTrue((out / 'cart' / 'confusion.csv').is_file())
        self.assertTrue((out / 'cart' / 'model.json').is_file())
        self.assertTrue(list((out / 'cart' / 'roc').glob('*.svg')))

    def test_report_tables(self):
        out = self.root / 'report'
        err = io.StringIO()
        status = run(['report', '--in', self.blocks, '--skip-forecast', '--skip-classify',
                      '--out', str(out)], stderr=err)
        self.assertEqual(status, 0, err.getvalue())

        division = {row['dataset']: row for row in read_csv(out / 'table_ii.csv')}
        self.assertEqual(sorted(division), ['All_db', 'Weekend_db', 'Working_db'])
        with open(self.blocks, encoding='utf-8') as handle:
            n_blocks = sum(1 for _ in handle) - 1
        self.assertEqual(int(division['All_db']['total']), n_blocks)
        self.assertEqual(
            int(division['Working_db']['total']) + int(division['Weekend_db']['total']), n_blocks,
        )
        for row in division.values():
            self.assertEqual(
                int(row['train']) + int(row['test']) + int(row['validation']), int(row['total']),
            )
        self.assertTrue(read_csv(out / 'table_i.csv'))
        self.assertTrue((out / 'figures' / 'table_i_size_ecdf.svg').is_file())
        self.assertFalse((out / 'table_iii.csv').exists())
