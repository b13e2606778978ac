import logging

from cli.base import PipelineCommand, split_spec
from core.exceptions import PreconditionError
from core.models import DayClass
from ingest.config import BLOCK_COLUMNS, TX_COLUMNS
from ingest.models import NodeEndpoint
from ingest.services.csv_io import (
    block_rows,
    load_block_csv,
    load_tx_csv,
    render_csv,
    tx_rows,
)
from ingest.services.node import collect_from_node
from ingest.services.split import filter_day_class, split_dataset

logger = logging.getLogger(__name__)


def report_files(prefix, report):
    header = 'n_records,n_negative_intervals,n_schema_errors\n'
    row = f"{report.n_records},{report.n_negative_intervals},{report.n_schema_errors}\n"
    messages = ''.join(f"{m}\n" for m in report.messages)
    return {f"{prefix}_report.csv": header + row, f"{prefix}_messages.txt": messages}


class Command(PipelineCommand):
    help = 'Load, validate, filter and split block/transaction datasets, or collect them from a node.'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--in', dest='blocks_in', default=None, help='Block CSV file.')
        parser.add_argument('--tx-in', dest='txs_in', default=None, help='Transaction CSV file.')
        parser.add_argument('--collect', action='store_true',
                            help='Collect blocks from the node configured by CHAINPULSE_RPC_*.')
        parser.add_argument('--from-height', type=int, default=None)
        parser.add_argument('--to-height', type=int, default=None)
        parser.add_argument('--day-class', type=DayClass.parse, default=None)
        parser.add_argument('--split', type=split_spec, default=None,
                            help='train,test,validation fractions, e.g. 0.7,0.15,0.15')

    def handle(self, *args, **options):
        files = {}

        if options['collect']:
            if options['from_height'] is None or options['to_height'] is None:
                raise PreconditionError('--collect needs --from-height and --to-height')
            series = collect_from_node(
                NodeEndpoint.from_settings(),
                (options['from_height'], options['to_height']),
            )
        elif options['blocks_in']:
            series = load_block_csv(options['blocks_in'])
        else:
            series = None

        if series is not None:
            files.update(report_files('blocks', series.report))
            if options['day_class'] is not None:
                series = filter_day_class(series, options['day_class'])
            files['blocks.csv'] = render_csv(BLOCK_COLUMNS, block_rows(series))
            if options['split'] is not None:
                spec = options['split']
                for name, part in zip(('train', 'test', 'validation'), split_dataset(series, spec)):
                    files[f"{name}.csv"] = render_csv(BLOCK_COLUMNS, block_rows(part))

        if options['txs_in']:
            txs = load_tx_csv(options['txs_in'])
            files.update(report_files('txs', txs.report))
            files['txs.csv'] = render_csv(TX_COLUMNS, tx_rows(txs))

        if not files:
            raise PreconditionError('nothing to ingest: give --in, --tx-in or --collect')

        self.publish(options['out'], files)
