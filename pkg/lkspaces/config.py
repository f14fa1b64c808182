"""
Run configuration: command-line flags over a config file over settings.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import yaml

from lkspaces.exceptions import ConfigError
from lkspaces.funcs import MonotoneStep, SimpleFunction, rearrange
from lkspaces.quad import QuadConfig
from lkspaces.verify import SUITES, FamilyKind, PassPolicy, TestFamily

logger = logging.getLogger(__name__)

FORMATS = ('json', 'csv')

# Sections of the config file that only some commands read
_COMMAND_SECTIONS = ('space', 'interp', 'function', 't', 'couple', 'sweep')
_KNOWN = {'seed', 'jobs', 'out', 'format', 'suite', 'quad', 'policy', 'family', 'params'} | set(_COMMAND_SECTIONS)


def load_document(path) -> Dict:
    """A JSON or YAML run config as a mapping."""
    try:
        with open(path, encoding='utf-8') as stream:
            document = yaml.safe_load(stream)
    except OSError as exc:
        raise ConfigError('cannot read {}: {}'.format(path, exc.strerror), 'config')
    except yaml.YAMLError as exc:
        raise ConfigError('{} is not valid JSON or YAML: {}'.format(path, exc), 'config')

    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigError('expected a mapping at the top level', 'config')

    unknown = set(document) - _KNOWN
    if unknown:
        raise ConfigError('unknown sections {}'.format(', '.join(sorted(unknown))), 'config')
    return document


def _section(document, name) -> Dict:
    value = document.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError('expected a mapping', name)
    return dict(value)


def _integer(value, field_name, minimum):
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError('expected an integer, got {!r}'.format(value), field_name)
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise ConfigError('expected an integer, got {!r}'.format(value), field_name)
    if number < minimum:
        raise ConfigError('expected an integer of at least {}, got {!r}'.format(minimum, value), field_name)
    return number


def _formats(value) -> Tuple[str, ...]:
    if value in (None, 'both', 'all'):
        return FORMATS
    names = [value] if isinstance(value, str) else list(value)
    for name in names:
        if name not in FORMATS:
            raise ConfigError('expected json, csv or both, got {!r}'.format(name), 'format')
    return tuple(sorted(set(names), key=FORMATS.index))


def _suites(value) -> Tuple[str, ...]:
    if value in (None, 'all'):
        return SUITES
    names = [value] if isinstance(value, str) else list(value)
    for name in names:
        if name not in SUITES:
            raise ConfigError('expected one of {} or all, got {!r}'.format(', '.join(SUITES), name), 'suite')
    return tuple(sorted(set(names), key=SUITES.index))


@dataclass
class RunConfig:
    seed: int
    jobs: int
    out: str
    formats: Tuple[str, ...]
    suites: Tuple[str, ...]
    quad: QuadConfig
    policy: PassPolicy
    family: TestFamily
    params: Dict = field(default_factory=dict)
    document: Dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Optional[str] = None, seed=None, jobs=None, out=None, formats=None, suite=None,
             rel_tol=None, alpha: Optional[Sequence[float]] = None) -> 'RunConfig':
        from django.conf import settings

        document = load_document(path) if path else {}

        def pick(flag, name, default):
            if flag is not None:
                return flag
            return document.get(name, default)

        seed = _integer(pick(seed, 'seed', settings.LK_DEFAULT_SEED), 'seed', 0)
        jobs = _integer(pick(jobs, 'jobs', settings.LK_DEFAULT_JOBS), 'jobs', 1)
        out = str(pick(out, 'out', settings.LK_OUTPUT_DIR))

        quad = _section(document, 'quad')
        if rel_tol is not None:
            quad['rel_tol'] = rel_tol
        quad_config = QuadConfig.from_settings(**quad)

        family = _section(document, 'family')
        unknown = set(family) - {'kind', 'size', 'pieces'}
        if unknown:
            raise ConfigError('unknown fields {}'.format(', '.join(sorted(unknown))), 'family')
        test_family = TestFamily(
            seed=seed,
            kind=family.get('kind', FamilyKind.DYADIC_DECAY.value),
            size=_integer(family.get('size', 5), 'family.size', 1),
            pieces=_integer(family.get('pieces', 6), 'family.pieces', 1))

        params = _section(document, 'params')
        if alpha is not None:
            params['alpha'] = [float(value) for value in alpha]
        if 'alpha' in params:
            try:
                params['alpha'] = [float(value) for value in params['alpha']]
            except (TypeError, ValueError):
                raise ConfigError('expected a list of numbers', 'params.alpha')

        config = cls(
            seed=seed,
            jobs=jobs,
            out=out,
            formats=_formats(pick(formats, 'format', None)),
            suites=_suites(pick(suite, 'suite', None)),
            quad=quad_config,
            policy=PassPolicy.from_settings(**_section(document, 'policy')),
            family=test_family,
            params=params,
            document={name: document[name] for name in _COMMAND_SECTIONS if name in document},
        )
        logger.debug('Run config: {}'.format(config.to_dict()))
        return config

    def section(self, name, required=True):
        if name not in self.document:
            if required:
                raise ConfigError('missing from the config file', name)
            return None
        return self.document[name]

    def output_path(self, name):
        return os.path.join(self.out, name)

    def to_dict(self):
        # No ``out``: a report is byte-identical wherever it is written
        return {
            'seed': self.seed,
            'jobs': self.jobs,
            'formats': list(self.formats),
            'suites': list(self.suites),
            'quad': self.quad.to_dict(),
            'policy': self.policy.to_dict(),
            'family': self.family.to_dict(),
            'params': self.params,
        }


def parse_function(value, field_name='function') -> MonotoneStep:
    """
    A test function from a config section: a list of [breakpoint, value]
    pairs of a non-increasing step, or {'simple': [[value, mass], ...]} for
    a simple function that gets rearranged.
    """
    if isinstance(value, dict):
        if set(value) != {'simple'}:
            raise ConfigError('expected a list of [breakpoint, value] pairs or {simple: [...]}', field_name)
        try:
            return rearrange(SimpleFunction.from_pairs(value['simple']))
        except (TypeError, ValueError):
            raise ConfigError('expected [value, mass] pairs', field_name + '.simple')
    if not isinstance(value, list):
        raise ConfigError('expected a list of [breakpoint, value] pairs', field_name)
    try:
        return MonotoneStep.from_pairs(value)
    except (TypeError, ValueError):
        raise ConfigError('expected [breakpoint, value] pairs of numbers', field_name)
