import logging

from lkspaces.config import RunConfig, parse_function
from lkspaces.exceptions import ConfigError, NormError
from lkspaces.funcs import k_functional, k_functional_oracle, parse_couple
from lkspaces.management.commands import NormCommand, command_error, init_logging

logger = logging.getLogger()


def _points(value):
    values = value if isinstance(value, list) else [value]
    try:
        points = [float(point) for point in values]
    except (TypeError, ValueError):
        raise ConfigError('expected a number or a list of numbers', 't')
    if not points or any(not point > 0 for point in points):
        raise ConfigError('expected positive values', 't')
    return points


class Command(NormCommand):
    help = "Evaluate the K-functional of a couple for a step function"

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='JSON or YAML file with couple, function and t',
        )
        parser.add_argument(
            '--oracle',
            action='store_true',
            default=False,
            help='Also print the brute-force infimum over decompositions',
        )

    def handle(self, **options):
        init_logging(logger, int(options['verbosity']))

        try:
            config = RunConfig.load(options['config'])
            couple = parse_couple(config.section('couple'))
            function = parse_function(config.section('function'))
            points = _points(config.section('t'))

            lines = []
            for t in points:
                value = k_functional(couple, function, t)
                if options['oracle']:
                    oracle = k_functional_oracle(couple, function, t)
                    lines.append('{:.17g} {:.17g} {:.17g}'.format(t, value, oracle))
                else:
                    lines.append('{:.17g} {:.17g}'.format(t, value))
        except NormError as exc:
            raise command_error(exc)

        logger.info('K({}) at {} points'.format(couple, len(points)))
        self.stdout.write('\n'.join(lines))
