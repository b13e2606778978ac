import logging
from dataclasses import replace

from cli.base import PipelineCommand
from simulate.config import DEFAULT_HORIZON
from simulate.models import ArrivalModel
from simulate.services.engine import run_simulation
from simulate.services.export import read_truth, render_simulation
from simulate.services.scenarios import SCENARIOS

logger = logging.getLogger(__name__)


def parse_mmpp(value):
    parts = [float(p) for p in value.split(',')]
    if len(parts) != 4:
        raise ValueError('expected rate_low,rate_high,switch_up,switch_down')
    return parts


class Command(PipelineCommand):
    help = 'Simulate the transaction workflow and write blocks.csv, txs.csv and truth.json.'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--scenario', choices=sorted(SCENARIOS), default='default')
        parser.add_argument('--truth', default=None,
                            help='Replay the configuration stored in a truth.json file.')
        parser.add_argument('--horizon', type=float, default=DEFAULT_HORIZON, help='Seconds.')
        parser.add_argument('--block-interval-mean', type=float, default=None, help='Seconds.')
        parser.add_argument('--arrival-rate', type=float, default=None,
                            help='Poisson arrivals at this rate (tx/s) instead of the scenario default.')
        parser.add_argument('--mmpp', type=parse_mmpp, default=None,
                            help='MMPP2 arrivals: rate_low,rate_high,switch_up,switch_down (per second).')
        parser.add_argument('--interval-modulation', type=float, default=None)

    def handle(self, *args, **options):
        if options['truth']:
            config = read_truth(options['truth'])
        else:
            config = SCENARIOS[options['scenario']](options['seed'], options['horizon'])
            overrides = {}
            if options['block_interval_mean'] is not None:
                overrides['block_interval_mean'] = options['block_interval_mean']
            if options['arrival_rate'] is not None:
                overrides['tx_arrival'] = ArrivalModel.poisson(options['arrival_rate'])
            if options['mmpp'] is not None:
                overrides['tx_arrival'] = ArrivalModel.mmpp2(*options['mmpp'])
            if options['interval_modulation'] is not None:
                overrides['interval_modulation'] = options['interval_modulation']
            if overrides:
                config = replace(config, **overrides)

        output = run_simulation(config)
        self.publish(options['out'], render_simulation(output))
