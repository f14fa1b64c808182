import logging
import os

from lkspaces.config import RunConfig
from lkspaces.exceptions import ConfigError, NormError
from lkspaces.management.commands import NormCommand, command_error, init_logging
from lkspaces.reports import SWEEP_COLUMNS, sweep_rows, write_csv
from lkspaces.verify import sweep

logger = logging.getLogger()


class Command(NormCommand):
    help = "Evaluate both sides of one inequality over a range of scales"

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='JSON or YAML file with a sweep section: pair, params, start, stop, per_decade',
        )
        parser.add_argument(
            '--out',
            help='Directory for sweep.csv',
        )
        parser.add_argument(
            '--rel-tol',
            type=float,
            dest='rel_tol',
            help='Relative tolerance of the quadrature',
        )

    def handle(self, **options):
        init_logging(logger, int(options['verbosity']))

        try:
            config = RunConfig.load(options['config'], out=options['out'], rel_tol=options['rel_tol'])
            section = config.section('sweep')
            if not isinstance(section, dict):
                raise ConfigError('expected a mapping', 'sweep')
            for name in ('pair', 'start', 'stop'):
                if name not in section:
                    raise ConfigError('required', 'sweep.' + name)

            try:
                start, stop = float(section['start']), float(section['stop'])
                per_decade = int(section.get('per_decade', 10))
            except (TypeError, ValueError):
                raise ConfigError('start and stop are decades, per_decade a count', 'sweep')

            params = section.get('params') or {}
            if not isinstance(params, dict):
                raise ConfigError('expected a mapping', 'sweep.params')
            rows = sweep(section['pair'], params, start, stop, per_decade, config.family, config.quad)
        except NormError as exc:
            raise command_error(exc)

        path = os.path.join(config.out, 'sweep.csv')
        write_csv(path, SWEEP_COLUMNS, sweep_rows(rows))
        self.stdout.write('{}: {} rows written to {}'.format(section['pair'], len(rows), path))
