import logging

from django.core.management.base import CommandError

from lkspaces.config import RunConfig
from lkspaces.exceptions import NormError
from lkspaces.management.commands import EXIT_SUITE_FAILED, NormCommand, command_error, init_logging
from lkspaces.reports import write_reports
from lkspaces.verify import run_suite

logger = logging.getLogger()


class Command(NormCommand):
    help = "Run verification suites and write JSON and CSV reports"

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            help='JSON or YAML run config',
        )
        parser.add_argument(
            '--suite',
            help='A, B, C, D, E or all',
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Seed of the test family',
        )
        parser.add_argument(
            '--out',
            help='Directory for the reports',
        )
        parser.add_argument(
            '--format',
            dest='formats',
            choices=['json', 'csv', 'both'],
            help='Report format',
        )
        parser.add_argument(
            '--jobs',
            type=int,
            help='Worker processes',
        )
        parser.add_argument(
            '--rel-tol',
            type=float,
            dest='rel_tol',
            help='Relative tolerance of the quadrature',
        )
        parser.add_argument(
            '--alpha',
            type=float,
            action='append',
            help='Replace the exponents of the Hardy suite (repeatable)',
        )

    def handle(self, **options):
        init_logging(logger, int(options['verbosity']))

        try:
            config = RunConfig.load(options['config'], seed=options['seed'], jobs=options['jobs'],
                                    out=options['out'], formats=options['formats'], suite=options['suite'],
                                    rel_tol=options['rel_tol'], alpha=options['alpha'])

            reports = []
            for suite in config.suites:
                reports.append(run_suite(suite, config.family, config.params, config.quad, config.policy,
                                         config.jobs))
        except NormError as exc:
            raise command_error(exc)

        write_reports(reports, config.to_dict(), config.out, config.formats)

        for report in reports:
            failed = sum(1 for result in report.results if not result.met)
            self.stdout.write('Suite {}: {} ({} cases, {} not as expected)'.format(
                report.suite, report.verdict, len(report.results), failed))

        if any(report.verdict != 'Pass' for report in reports):
            raise CommandError('Verification failed', returncode=EXIT_SUITE_FAILED)
