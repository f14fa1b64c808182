import logging

from lkspaces.config import RunConfig, parse_function
from lkspaces.exceptions import ConfigError, NormError
from lkspaces.management.commands import NormCommand, command_error, init_logging
from lkspaces.spaces import evaluate, parse_interp, parse_space, validate_spec

logger = logging.getLogger()


class Command(NormCommand):
    help = "Evaluate one space or interpolation norm of one test function"

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='JSON or YAML file with a space or interp section and a function',
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
            config = RunConfig.load(options['config'], rel_tol=options['rel_tol'])
            has_space = 'space' in config.document
            if has_space == ('interp' in config.document):
                raise ConfigError('give exactly one of space and interp', 'config')

            if has_space:
                spec = parse_space(config.section('space'))
            else:
                spec = parse_interp(config.section('interp'))
            function = parse_function(config.section('function'))

            report = validate_spec(spec, config.quad)
            logger.info('{}: {}'.format(spec, report.verdict.value))
            result = evaluate(spec, function, config.quad)
        except NormError as exc:
            raise command_error(exc)

        self.stdout.write('{}: {:.17g} (error {:.3g})'.format(spec, result.value, result.error))
