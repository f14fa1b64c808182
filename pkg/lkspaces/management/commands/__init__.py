import functools
import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from lkspaces.exceptions import ConfigError, Divergent, NormError, TrivialSpace

# Exit status of each failure the commands report
EXIT_CONFIG = 1
EXIT_DIVERGENT = 2
EXIT_TRIVIAL = 3
EXIT_SUITE_FAILED = 4


def init_logging(logger, verbosity):
    if verbosity > 0 and not any(getattr(handler, 'lkspaces', False) for handler in logger.handlers):
        console = logging.StreamHandler()
        console.lkspaces = True
        try:
            # noinspection PyUnresolvedReferences
            from colorlog import ColoredFormatter
            formatter = ColoredFormatter('{yellow}{asctime}{reset} '
                                         '[{log_color}{levelname}{reset}] '
                                         '{white}{message}{reset}',
                                         style='{')

        except ImportError:
            formatter = logging.Formatter('{asctime} [{levelname}] {message}',
                                          style='{')

        console.setFormatter(formatter)
        console.setLevel(logging.DEBUG)
        logger.addHandler(console)

        # Keep plotting and JIT libraries quiet if something imports them
        for name in ('matplotlib', 'numba'):
            logging.getLogger(name).setLevel(logging.INFO)

    logger.setLevel(logging.WARNING)

    if verbosity >= 2:
        logger.setLevel(logging.INFO)

    if verbosity >= 3:
        logger.setLevel(logging.DEBUG)


def command_error(exc: NormError) -> CommandError:
    """The CommandError, with its exit status, for a library error."""
    if isinstance(exc, ConfigError):
        return CommandError('Invalid configuration: {}'.format(exc), returncode=EXIT_CONFIG)
    if isinstance(exc, Divergent):
        side = ' ({})'.format(exc.side) if exc.side else ''
        return CommandError('Norm diverges{}: {}'.format(side, exc), returncode=EXIT_DIVERGENT)
    if isinstance(exc, TrivialSpace):
        return CommandError(str(exc), returncode=EXIT_TRIVIAL)
    return CommandError(str(exc), returncode=EXIT_CONFIG)


def _argument_error(parser, message):
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_CONFIG, '{}: error: {}\n'.format(parser.prog, message))
    raise CommandError('Error: {}'.format(message), returncode=EXIT_CONFIG)


class NormCommand(BaseCommand):
    """A command whose unparsable arguments exit with EXIT_CONFIG like any other bad configuration."""

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = functools.partial(_argument_error, parser)
        return parser
