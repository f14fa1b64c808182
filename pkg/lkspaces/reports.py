"""
JSON and CSV output of verification reports and sweeps.

Floats are written with 17 significant digits and nothing in a report
depends on the clock, so a rerun with the same seed and config gives the
same bytes.
"""
import csv
import json
import logging
import math
import os
from typing import List, Sequence

from lkspaces.verify import EquivalenceReport, SweepRow

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ('suite', 'case_key', 'lhs', 'rhs', 'ratio', 'verdict', 'member', 'scale')
SWEEP_COLUMNS = ('scale', 'member', 'lhs', 'rhs', 'ratio')


def format_float(value) -> str:
    if value is None:
        return ''
    return '{:.17g}'.format(value)


def _plain(value):
    """Non-finite floats as strings, for strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def report_document(reports: Sequence[EquivalenceReport], config: dict) -> dict:
    return _plain({
        'config': config,
        'verdict': 'Pass' if all(report.verdict == 'Pass' for report in reports) else 'Fail',
        'note': 'c_max and slope_max are engineering thresholds, not constants from the proofs',
        'suites': [report.to_dict() for report in reports],
    })


def report_rows(reports: Sequence[EquivalenceReport]):
    for report in reports:
        for result in report.results:
            for point in result.points:
                ok = point.status == 'ok'
                yield {
                    'suite': report.suite,
                    'case_key': result.case.key,
                    'lhs': format_float(point.lhs),
                    'rhs': format_float(point.rhs),
                    'ratio': format_float(point.ratio) if ok else '',
                    'verdict': result.verdict if ok else point.status,
                    'member': '' if point.member is None else point.member,
                    'scale': format_float(point.scale),
                }


def _prepare(path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def write_json(path, document):
    _prepare(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as output:
        json.dump(document, output, indent=2, sort_keys=True, allow_nan=False)
        output.write('\n')
    logger.info('Wrote {}'.format(path))


def write_csv(path, columns, rows):
    _prepare(path)
    with open(path, 'w', encoding='utf-8', newline='') as output:
        writer = csv.DictWriter(output, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    logger.info('Wrote {}'.format(path))


def write_reports(reports: Sequence[EquivalenceReport], config: dict, out_dir, formats=('json', 'csv')) -> List[str]:
    paths = []
    if 'json' in formats:
        paths.append(os.path.join(out_dir, 'verify.json'))
        write_json(paths[-1], report_document(reports, config))
    if 'csv' in formats:
        paths.append(os.path.join(out_dir, 'verify.csv'))
        write_csv(paths[-1], REPORT_COLUMNS, report_rows(reports))
    return paths


def sweep_rows(rows: Sequence[SweepRow]):
    for row in rows:
        yield {
            'scale': format_float(row.scale),
            'member': '' if row.member is None else row.member,
            'lhs': format_float(row.lhs),
            'rhs': format_float(row.rhs),
            'ratio': format_float(row.ratio),
        }
