"""
Numerical verification of norm equivalences, Hardy inequalities and embeddings.

A claim is a registered ``Pair`` with a left and a right side. A ``Case``
fixes the pair's parameters; the harness evaluates both sides for every
member of a test family over a sweep of scales, collects the ratios
lhs/rhs in ``RatioStats`` and judges them with a ``PassPolicy``.
"""
import enum
import functools
import itertools
import logging
import math
import multiprocessing
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from lkspaces.exceptions import ConfigError, Divergent, NormError
from lkspaces.funcs import Hunt, MonotoneStep, Peetre, couple_kinks, k_functional, maximal, parse_couple, \
    primitive
from lkspaces.quad import QuadConfig, weighted_qnorm, weighted_qnorm_result
from lkspaces.spaces import DoubleStar, Family, InterpSpec, Integrand, Method, SpaceSpec, Star, Verdict, \
    interp_norm, nested_norm, parse_exponent, parse_star_mode, space_norm, validate_spec
from lkspaces.sv import Finiteness, One, Product, Tabulated, Tail, dilate, equivalence_constant, parse_sv, sv_finiteness

logger = logging.getLogger(__name__)

SUITES = ('A', 'B', 'C', 'D', 'E')

TWO_SIDED = 'two_sided'
UPPER = 'upper'
LOWER = 'lower'
EXACT = 'exact'

# Sweep points, as powers of ten
_T_DECADES = np.arange(-15, 16, 3)
_DILATION_DECADES = np.arange(-9, 10, 3)
_WINDOW_DECADES = np.arange(0, 9)
# Scales at each end of a sweep that the drift is fitted on
_END_POINTS = 3

_SUITE_D_POINTS = 200


class FamilyKind(enum.Enum):
    RANDOM_STEPS = 'RandomSteps'
    DYADIC_DECAY = 'DyadicDecay'
    LOG_DECAY = 'LogDecay'
    SPIKES = 'Spikes'


_KIND_INDEX = {kind: index for index, kind in enumerate(FamilyKind)}


@dataclass(frozen=True)
class TestFamily:
    seed: int
    kind: FamilyKind = FamilyKind.DYADIC_DECAY
    size: int = 5
    pieces: int = 6

    def __post_init__(self):
        object.__setattr__(self, 'kind', _family_kind(self.kind))
        if int(self.size) < 1:
            raise ConfigError('must be positive', 'family.size')
        if int(self.pieces) < 1:
            raise ConfigError('must be positive', 'family.pieces')
        if int(self.seed) < 0:
            raise ConfigError('must be non-negative', 'family.seed')

    def to_dict(self):
        return {'seed': int(self.seed), 'kind': self.kind.value, 'size': int(self.size), 'pieces': int(self.pieces)}


def _family_kind(value):
    if isinstance(value, FamilyKind):
        return value
    try:
        return FamilyKind(value)
    except ValueError:
        raise ConfigError('expected one of {}, got {!r}'.format(
            ', '.join(kind.value for kind in FamilyKind), value), 'family.kind')


def _random_steps(rng, index, pieces):
    breakpoints = np.unique(10.0 ** rng.uniform(-4, 4, pieces))
    values = np.sort(10.0 ** rng.uniform(-3, 3, breakpoints.size))[::-1]
    return MonotoneStep(breakpoints, values)


def _dyadic_decay(rng, index, pieces):
    width = 1.0 if index == 0 else 10.0 ** rng.uniform(-3, 3)
    return MonotoneStep(width * np.arange(1, pieces + 1), 2.0 ** -np.arange(pieces))


def _log_decay(rng, index, pieces):
    start = rng.uniform(-3, 0)
    breakpoints = 10.0 ** np.linspace(start, start + 6, pieces)
    height = 10.0 ** rng.uniform(-1, 1)
    return MonotoneStep(breakpoints, height / (1.0 + np.log1p(breakpoints)))


def _spikes(rng, index, pieces):
    breakpoints = 10.0 ** np.linspace(-8, 0, pieces) * 10.0 ** rng.uniform(-1, 1)
    return MonotoneStep(breakpoints, breakpoints ** -rng.uniform(0.25, 0.75))


_MEMBERS = {
    FamilyKind.RANDOM_STEPS: _random_steps,
    FamilyKind.DYADIC_DECAY: _dyadic_decay,
    FamilyKind.LOG_DECAY: _log_decay,
    FamilyKind.SPIKES: _spikes,
}


def gen_family(family: TestFamily) -> List[MonotoneStep]:
    rng = np.random.default_rng([int(family.seed), _KIND_INDEX[family.kind]])
    make = _MEMBERS[family.kind]
    return [make(rng, index, int(family.pieces)) for index in range(int(family.size))]


@dataclass(frozen=True)
class PassPolicy:
    c_max: float = 1e3
    slope_max: float = 0.05
    exact_tol: float = 1e-8
    floor_tol: float = 1e-9

    def __post_init__(self):
        if not self.c_max > 1:
            raise ConfigError('must exceed 1', 'policy.c_max')
        for name in ('slope_max', 'exact_tol', 'floor_tol'):
            if not getattr(self, name) > 0:
                raise ConfigError('must be positive', 'policy.' + name)

    @classmethod
    def from_settings(cls, **overrides) -> 'PassPolicy':
        from django.conf import settings

        values = dict(getattr(settings, 'LK_PASS_POLICY', {}))
        values.update({key: value for key, value in overrides.items() if value is not None})
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError('unknown fields {}'.format(', '.join(sorted(unknown))), 'policy')
        try:
            return cls(**{key: float(value) for key, value in values.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), 'policy')

    def to_dict(self):
        return asdict(self)


@dataclass
class Point:
    """Both sides of a case at one family member and scale."""
    member: Optional[int]
    scale: float
    lhs: float = math.nan
    rhs: float = math.nan
    status: str = 'ok'
    detail: str = ''

    @property
    def ratio(self):
        if self.lhs == 0 and self.rhs == 0:
            return 1.0
        if self.rhs == 0:
            return math.inf
        return self.lhs / self.rhs

    def to_dict(self):
        return {'member': self.member, 'scale': self.scale, 'lhs': self.lhs, 'rhs': self.rhs,
                'ratio': self.ratio if self.status == 'ok' else None, 'status': self.status, 'detail': self.detail}


def _end_slopes(scales, ratios):
    """
    Slopes of log10 ratio against log10 scale fitted over the first and the
    last three scales of a sweep, where the ratio has settled.
    """
    keep = np.isfinite(ratios) & (ratios > 0)
    x, y = np.log10(scales[keep]), np.log10(ratios[keep])
    unique = np.unique(x)
    if unique.size < 3:
        return 0.0, 0.0

    slopes = []
    for ends in (unique[:_END_POINTS], unique[-_END_POINTS:]):
        chosen = np.isin(x, ends)
        slopes.append(float(np.polyfit(x[chosen], y[chosen], 1)[0]))
    return tuple(slopes)


@dataclass(frozen=True)
class RatioStats:
    """
    ``slope`` is the steepest end slope over all members, signed;
    ``growth`` how fast the ratio grows towards either end of the sweep.
    """
    min_ratio: float = 1.0
    max_ratio: float = 1.0
    geo_mean: float = 1.0
    slope: float = 0.0
    samples: int = 0
    growth: float = 0.0

    @classmethod
    def from_points(cls, points: Sequence[Point]) -> 'RatioStats':
        points = [point for point in points if point.status == 'ok']
        if not points:
            return cls()

        ratios = np.array([point.ratio for point in points])
        positive = ratios[np.isfinite(ratios) & (ratios > 0)]
        geo_mean = float(np.exp(np.mean(np.log(positive)))) if positive.size else float(ratios[0])

        slope = growth = 0.0
        for member in sorted({point.member for point in points}, key=lambda m: -1 if m is None else m):
            chosen = [point for point in points if point.member == member]
            left, right = _end_slopes(np.array([point.scale for point in chosen]),
                                      np.array([point.ratio for point in chosen]))
            for fitted in (left, right):
                if abs(fitted) > abs(slope):
                    slope = fitted
            growth = max(growth, right, -left)

        return cls(float(ratios.min()), float(ratios.max()), geo_mean, slope, len(points), growth)

    @property
    def bracket(self):
        if self.min_ratio == 0:
            return math.inf
        return self.max_ratio / self.min_ratio

    def to_dict(self):
        return asdict(self)


def _text(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf'
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


@dataclass(frozen=True)
class Case:
    suite: str
    pair: str
    params: Tuple[Tuple[str, object], ...]
    kind: str = TWO_SIDED
    floor: Optional[float] = None
    expect: str = 'pass'

    @property
    def key(self):
        return '{}[{}]'.format(self.pair, ','.join('{}={}'.format(name, _text(value)) for name, value in self.params))

    def to_dict(self):
        return {'suite': self.suite, 'pair': self.pair, 'key': self.key,
                'params': {name: _text(value) for name, value in self.params},
                'kind': self.kind, 'floor': self.floor, 'expect': self.expect}


def make_case(suite, pair, kind=TWO_SIDED, floor=None, expect='pass', **params) -> Case:
    values = tuple((name, float(value) if isinstance(value, (int, float)) else str(value))
                   for name, value in params.items())
    return Case(suite, pair, values, kind, floor, expect)


@dataclass
class CaseResult:
    case: Case
    points: List[Point]
    stats: RatioStats
    verdict: str
    diagnosis: str = ''

    @property
    def met(self):
        if self.case.expect == 'fail':
            return self.verdict == 'fail'
        return self.verdict != 'fail'

    def to_dict(self, with_points=False):
        result = {'case': self.case.to_dict(), 'stats': self.stats.to_dict(), 'verdict': self.verdict,
                  'met': self.met, 'diagnosis': self.diagnosis}
        if with_points:
            result['points'] = [point.to_dict() for point in self.points]
        return result


# Pairs

_EXPONENTS = {'q', 'r', 's'}
_WEIGHTS = {'a', 'b', 'c'}
_NUMBERS = {'alpha', 'lam', 'theta', 'kappa', 'eps', 'p', 'T', 'S'}


def _number_param(value, field_name):
    if isinstance(value, str) and value.strip().lower() in ('inf', 'infinity'):
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError('expected a number, got {!r}'.format(value), field_name)


class Pair:
    """
    Two sides of a claimed inequality or identity.

    ``scale`` names the sweep variable: 't' is a point or endpoint passed
    as is, 'dilation' dilates the test function by δ and stretches any
    window with it, 'window' is the right end S of a window (0, S).
    """
    params = ()
    uses_function = True
    scale = 'dilation'
    # Powers of ten to sweep; None takes the default range of the scale
    decades = None

    def __init__(self, name):
        self.name = name

    def prepare(self, raw: Dict, prefix='params.') -> Dict:
        missing = [name for name in self.params if name not in raw]
        if missing:
            raise ConfigError('{} needs {}'.format(self.name, ', '.join(missing)), prefix.rstrip('.'))

        prepared = {}
        for name, value in raw.items():
            field_name = prefix + name
            if name in _EXPONENTS:
                prepared[name] = parse_exponent(value, field_name)
            elif name in _WEIGHTS:
                prepared[name] = parse_sv(value, field_name)
            elif name == 'couple':
                prepared[name] = parse_couple(value, field_name)
            elif name == 'star_mode':
                prepared[name] = parse_star_mode(value, field_name)
            elif name in _NUMBERS:
                prepared[name] = _number_param(value, field_name)
            else:
                prepared[name] = str(value)
        self.check(prepared, prefix)
        return prepared

    def check(self, p, prefix):
        pass

    def lhs(self, p, g, scale, cfg) -> float:
        raise NotImplementedError

    def rhs(self, p, g, scale, cfg) -> float:
        raise NotImplementedError


PAIRS: Dict[str, Pair] = {}


def register(*names):
    def decorator(cls):
        for name in names:
            PAIRS[name] = cls(name)
        return cls
    return decorator


def get_pair(name, field_name='pair') -> Pair:
    try:
        return PAIRS[name]
    except KeyError:
        raise ConfigError('unknown pair {!r}, expected one of {}'.format(name, ', '.join(sorted(PAIRS))),
                          field_name)


def _qnorm(h, lam, q, b, interval, cfg, breakpoints=()):
    return weighted_qnorm_result(h, lam, q, b, interval, cfg, breakpoints).value


def _at(lam, b, t):
    """t^λ b(t), zero at t = 0."""
    if t == 0:
        return 0.0
    x = math.log(t)
    return math.exp(lam * x + float(b.log_eval(np.array(x))))


def _window(p, scale):
    return p['T'] * scale, p['S'] * scale


def _check_window(p, prefix):
    if not 0 <= p['T'] < p['S']:
        raise ConfigError('need 0 <= T < S, got ({}, {})'.format(_text(p['T']), _text(p['S'])), prefix + 'T')


def _check_choice(p, name, choices, prefix):
    if p[name] not in choices:
        raise ConfigError('expected one of {}, got {!r}'.format(', '.join(choices), p[name]), prefix + name)


@register('lemma2_iii')
class PowerNorm(Pair):
    """‖u^{α-1/q} b‖ on (0,t) for α > 0 or on (t,∞) for α < 0, against t^α b(t)."""
    params = ('alpha', 'q', 'b')
    uses_function = False
    scale = 't'

    def check(self, p, prefix):
        if p['alpha'] == 0:
            raise ConfigError('must be non-zero', prefix + 'alpha')

    def lhs(self, p, g, t, cfg):
        interval = (0.0, t) if p['alpha'] > 0 else (t, math.inf)
        return _qnorm(None, p['alpha'], p['q'], p['b'], interval, cfg)

    def rhs(self, p, g, t, cfg):
        return _at(p['alpha'], p['b'], t)


@register('lemma2_iv')
class WeightNorm(Pair):
    """‖u^{-1/q} b‖ on (0,t) or (t,∞), against b(t)."""
    params = ('q', 'b', 'side')
    uses_function = False
    scale = 't'

    def check(self, p, prefix):
        _check_choice(p, 'side', ('origin', 'infinity'), prefix)

    def lhs(self, p, g, t, cfg):
        interval = (0.0, t) if p['side'] == 'origin' else (t, math.inf)
        return _qnorm(None, 0.0, p['q'], p['b'], interval, cfg)

    def rhs(self, p, g, t, cfg):
        return _at(0.0, p['b'], t)


@register('lemma2_v')
class OctaveNorm(Pair):
    """‖u^{λ-1/q} b‖ on (t/2,t) or (t,2t), against t^λ b(t)."""
    params = ('lam', 'q', 'b', 'side')
    uses_function = False
    scale = 't'

    def check(self, p, prefix):
        _check_choice(p, 'side', ('left', 'right'), prefix)

    def lhs(self, p, g, t, cfg):
        interval = (t / 2, t) if p['side'] == 'left' else (t, 2 * t)
        return _qnorm(None, p['lam'], p['q'], p['b'], interval, cfg)

    def rhs(self, p, g, t, cfg):
        return _at(p['lam'], p['b'], t)


@register('sv_monotone')
class Monotonicity(Pair):
    """The constant that makes t^ε b(t) almost increasing and t^{-ε} b(t) almost decreasing."""
    params = ('b', 'eps')
    uses_function = False
    scale = 't'
    decades = (0,)

    def check(self, p, prefix):
        if not p['eps'] > 0:
            raise ConfigError('must be positive', prefix + 'eps')

    def lhs(self, p, g, t, cfg):
        x_min, x_max = cfg.log_domain_bounds
        return equivalence_constant(p['b'], p['eps'], np.linspace(x_min, x_max, 1601))

    def rhs(self, p, g, t, cfg):
        return 1.0


@register('lemma3')
class StepLowerBound(Pair):
    """Lower bounds of ‖u^{λ-1/q} b f*‖ over (0,t), (t/2,∞) or (t,2t) by a single value of f*."""
    params = ('lam', 'q', 'b', 'form')
    scale = 't'

    def check(self, p, prefix):
        _check_choice(p, 'form', ('head', 'tail', 'double'), prefix)

    def lhs(self, p, g, t, cfg):
        interval = {'head': (0.0, t), 'tail': (t / 2, math.inf), 'double': (t, 2 * t)}[p['form']]
        return _qnorm(g, p['lam'], p['q'], p['b'], interval, cfg)

    def rhs(self, p, g, t, cfg):
        point = 2 * t if p['form'] == 'double' else t
        return _at(p['lam'], p['b'], t) * float(g.star(point))


# Hardy inequalities

HARDY_VARIANTS = ('lemma4', 'lemma5', 'cor6', 'cor7')


def _hardy_lhs(variant, alpha, q, r, s, a, b, c, f: MonotoneStep, T, S, cfg):
    G = functools.partial(primitive, f)
    if variant in ('lemma4', 'lemma5'):
        return _qnorm(G, alpha, q, b, (T, S), cfg, breakpoints=f.breakpoints)
    inner = Integrand.smooth(G, alpha, q, a, f.kinks())
    return nested_norm(inner, 'R' if variant == 'cor6' else 'RR', r, s, b, c, cfg, label=variant + ' lhs').value


def _hardy_rhs(variant, alpha, q, r, s, a, b, c, f: MonotoneStep, T, S, cfg):
    if variant in ('lemma4', 'lemma5'):
        value = _qnorm(f, alpha + 1, q, b, (T, S), cfg)
        if variant == 'lemma5':
            value += _at(alpha, b, T) * float(primitive(f, T))
        return value
    inner = Integrand.star(f, alpha + 1, q, a)
    return nested_norm(inner, 'R' if variant == 'cor6' else 'RR', r, s, b, c, cfg, label=variant + ' rhs').value


def _sided(side, evaluate, *args):
    try:
        return evaluate(*args)
    except Divergent as exc:
        raise Divergent(str(exc), side, exc.label)


def check_hardy(variant, alpha, q, r=None, s=None, a=None, b=None, c=None, f: MonotoneStep = None,
                T=0.0, S=math.inf, cfg: Optional[QuadConfig] = None) -> Tuple[float, float]:
    """
    (LHS, RHS) of a Hardy-type inequality for f, with ∫₀^u f taken exactly.

    lemma4 and lemma5 use the window (T, S) and the weight b; lemma5 adds
    T^α b(T) ∫₀^T f to the right side. cor6 nests the Hardy term in an outer
    (t,∞) level with exponent r and weight b around an inner weight a; cor7
    adds a third level with s and c. A Divergent carries side 'lhs' or 'rhs'.
    """
    if variant not in HARDY_VARIANTS:
        raise ConfigError('expected one of {}, got {!r}'.format(', '.join(HARDY_VARIANTS), variant), 'variant')
    if f is None:
        raise ConfigError('a test function is required', 'function')
    T, S = float(T), float(S)
    if not 0 <= T < S:
        raise ConfigError('need 0 <= T < S, got ({}, {})'.format(T, S), 'interval')
    if variant in ('cor6', 'cor7') and r is None:
        raise ConfigError('required for {}'.format(variant), 'r')
    if variant == 'cor7' and s is None:
        raise ConfigError('required for cor7', 's')

    cfg = cfg or QuadConfig.from_settings()
    a, b, c = a or One(), b or One(), c or One()
    args = (variant, alpha, q, r, s, a, b, c, f, T, S, cfg)
    return _sided('lhs', _hardy_lhs, *args), _sided('rhs', _hardy_rhs, *args)


@register('lemma4')
class Hardy(Pair):
    """‖u^{α-1/q} b ∫₀^u f*‖ against ‖u^{α+1-1/q} b f*‖ on a window that moves with the dilation."""
    params = ('alpha', 'q', 'b')
    variant = 'lemma4'

    def check(self, p, prefix):
        p.setdefault('T', 0.0)
        p.setdefault('S', math.inf)
        _check_window(p, prefix)

    def window(self, p, scale):
        return _window(p, scale)

    def lhs(self, p, g, scale, cfg):
        T, S = self.window(p, scale)
        return _hardy_lhs(self.variant, p['alpha'], p['q'], None, None, None, p['b'], None, g, T, S, cfg)

    def rhs(self, p, g, scale, cfg):
        T, S = self.window(p, scale)
        return _hardy_rhs(self.variant, p['alpha'], p['q'], None, None, None, p['b'], None, g, T, S, cfg)


@register('lemma4_window')
class HardyGrowingWindow(Hardy):
    """The Hardy pair on (0, S) with S swept over decades and f fixed."""
    scale = 'window'

    def check(self, p, prefix):
        pass

    def window(self, p, scale):
        return 0.0, scale


@register('lemma5')
class HardyWindow(Hardy):
    params = ('alpha', 'q', 'b', 'T', 'S')
    variant = 'lemma5'

    def check(self, p, prefix):
        _check_window(p, prefix)


@register('cor6', 'cor7')
class NestedHardy(Pair):
    params = ('alpha', 'q', 'r', 'b')

    def check(self, p, prefix):
        if self.name == 'cor7' and 's' not in p:
            raise ConfigError('required for cor7', prefix + 's')

    def _args(self, p, g, cfg):
        return (self.name, p['alpha'], p['q'], p['r'], p.get('s'), p.get('a', One()), p['b'], p.get('c', One()),
                g, 0.0, math.inf, cfg)

    def lhs(self, p, g, scale, cfg):
        return _hardy_lhs(*self._args(p, g, cfg))

    def rhs(self, p, g, scale, cfg):
        return _hardy_rhs(*self._args(p, g, cfg))


# K-functionals

def _k_side(couple, theta, q, b, g, T, S, cfg):
    """‖u^{-θ-1/q} b K(u)‖_{q,(T,S)}."""
    return _qnorm(functools.partial(k_functional, couple, g), -theta, q, b, (T, S), cfg,
                  breakpoints=np.exp(couple_kinks(couple, g)))


def _maximal_side(theta, kappa, q, b, g, T, S, cfg):
    """‖u^{1-θ-1/q} b f**_(κ)‖_{q,(T,S)}."""
    return _qnorm(functools.partial(maximal, g, kappa), 1.0 - theta, q, b, (T, S), cfg,
                  breakpoints=np.exp(g.kinks(kappa)))


def _star_side(theta, kappa, q, b, g, T, S, cfg):
    """‖v^{(1-θ)/κ-1/q} b(v^{1/κ}) f*‖_{q,(T^κ,S^κ)}."""
    return _qnorm(g, (1.0 - theta) / kappa, q, dilate(b, kappa), (T ** kappa, S ** kappa), cfg)


class CouplePair(Pair):
    params = ('theta', 'q', 'b', 'couple')

    def check(self, p, prefix):
        if not 0 < p['theta'] < 1:
            raise ConfigError('must lie in (0, 1)', prefix + 'theta')
        p.setdefault('form', 'star')
        _check_choice(p, 'form', ('star', 'maximal'), prefix)
        if p['form'] == 'maximal' and isinstance(p['couple'], Hunt):
            raise ConfigError('the maximal form needs peetre or kree(κ)', prefix + 'form')

    def other(self, p, g, T, S, cfg):
        kappa = p['couple'].kappa
        if p['form'] == 'maximal':
            return _maximal_side(p['theta'], kappa, p['q'], p['b'], g, T, S, cfg)
        return _star_side(p['theta'], kappa, p['q'], p['b'], g, T, S, cfg)


@register('lemma15', 'cor34')
class TruncatedK(CouplePair):
    """‖u^{-θ-1/q} b K‖ on (0,t) against the f** or f* form of the same truncation."""
    scale = 't'

    def check(self, p, prefix):
        super().check(p, prefix)
        if self.name == 'cor34' and p['couple'].kappa != 1:
            raise ConfigError('cor34 is stated for κ = 1', prefix + 'couple')

    def lhs(self, p, g, t, cfg):
        return _k_side(p['couple'], p['theta'], p['q'], p['b'], g, 0.0, t, cfg)

    def rhs(self, p, g, t, cfg):
        return self.other(p, g, 0.0, t, cfg)


@register('lemma16')
class WindowK(CouplePair):
    """‖u^{-θ-1/q} b K‖ on (T,S) against the f* form on (T^κ,S^κ)."""
    params = ('theta', 'q', 'b', 'couple', 'T', 'S')

    def check(self, p, prefix):
        super().check(p, prefix)
        _check_window(p, prefix)

    def lhs(self, p, g, scale, cfg):
        T, S = _window(p, scale)
        return _k_side(p['couple'], p['theta'], p['q'], p['b'], g, T, S, cfg)

    def rhs(self, p, g, scale, cfg):
        T, S = _window(p, scale)
        return self.other(p, g, T, S, cfg)


@register('lemma17')
class WindowKUpper(WindowK):
    """As lemma16, with T^{1-θ} b(T) f**_(κ)(T) added to the right side."""

    def rhs(self, p, g, scale, cfg):
        T, S = _window(p, scale)
        value = self.other(p, g, T, S, cfg)
        if T > 0:
            value += _at(1.0 - p['theta'], p['b'], T) * maximal(g, p['couple'].kappa, T)
        return value


_FAMILY = {
    'single': Family.LK, 'L': Family.L_L, 'R': Family.L_R, 'small': Family.SMALL, 'grand': Family.GRAND,
    'LL': Family.LL, 'LR': Family.LR, 'RL': Family.RL, 'RR': Family.RR,
}
_METHOD = {
    'single': Method.THETA_Q, 'L': Method.L, 'R': Method.R, 'small': Method.L, 'grand': Method.R,
    'LL': Method.LL, 'LR': Method.LR, 'RL': Method.RL, 'RR': Method.RR,
}


def _levels_of(structure):
    return {'single': 1, 'L': 2, 'R': 2, 'small': 2, 'grand': 2}.get(structure, 3)


def _dilate(expr, kappa):
    return expr if isinstance(expr, One) else dilate(expr, kappa)


def _space(structure, p, q, r, s, a, b, c, star_mode) -> SpaceSpec:
    levels = _levels_of(structure)
    return SpaceSpec(_FAMILY[structure], p, q, r if levels >= 2 else None, s if levels >= 3 else None,
                     a, b, c, star_mode)


def _interp(structure, theta, q, r, s, a, b, c, couple) -> InterpSpec:
    levels = _levels_of(structure)
    return InterpSpec(_METHOD[structure], theta, q, r if levels >= 2 else None, s if levels >= 3 else None,
                      a, b, c, couple)


class StructurePair(Pair):
    params = ('structure', 'q')

    def check(self, p, prefix):
        _check_choice(p, 'structure', tuple(_FAMILY), prefix)
        levels = _levels_of(p['structure'])
        for name, needed in (('r', levels >= 2), ('s', levels >= 3)):
            if needed and name not in p:
                raise ConfigError('required for {}'.format(p['structure']), prefix + name)
        for name in ('a', 'b', 'c'):
            p.setdefault(name, One())
        if p['structure'] in ('small', 'grand') and not isinstance(p['a'], One):
            raise ConfigError('grand and small spaces have a = 1', prefix + 'a')


@register('lemma24', 'lemma25', 'lemma26')
class MaximalIdentity(StructurePair):
    """(L_1, L_∞) method norms against the same nest built on f**, with θ = 1 - 1/p."""
    params = ('structure', 'p', 'q')

    def check(self, p, prefix):
        super().check(p, prefix)
        if not p['p'] >= 1:
            raise ConfigError('must be at least 1', prefix + 'p')

    def specs(self, p):
        theta = 1.0 - 1.0 / p['p']
        args = (p['q'], p.get('r'), p.get('s'), p['a'], p['b'], p['c'])
        return (_interp(p['structure'], theta, *args, Peetre()),
                _space(p['structure'], p['p'], *args, DoubleStar(1.0)))

    def lhs(self, p, g, scale, cfg):
        return interp_norm(self.specs(p)[0], g, cfg)

    def rhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p)[1], g, cfg)


@register('theorem')
class InterpolationTheorem(StructurePair):
    """
    A method norm of (L_κ, L_∞) or (L_κ,∞, L_∞) against the matching space
    with p = κ/(1-θ) and every weight composed with t ↦ t^{1/κ}.
    """
    params = ('structure', 'theta', 'q', 'couple')

    def check(self, p, prefix):
        super().check(p, prefix)
        if not 0 < p['theta'] <= 1:
            raise ConfigError('must lie in (0, 1]', prefix + 'theta')

    def specs(self, p):
        kappa = p['couple'].kappa
        theta = p['theta']
        exponent = math.inf if theta == 1 else kappa / (1.0 - theta)
        shared = (p['q'], p.get('r'), p.get('s'))
        weights = [_dilate(p[name], kappa) for name in ('a', 'b', 'c')]
        return (_interp(p['structure'], theta, *shared, p['a'], p['b'], p['c'], p['couple']),
                _space(p['structure'], exponent, *shared, *weights, Star()))

    def lhs(self, p, g, scale, cfg):
        return interp_norm(self.specs(p)[0], g, cfg)

    def rhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p)[1], g, cfg)


@register('maximal_star')
class MaximalStar(StructurePair):
    """The same space with f** and with f* inside."""
    params = ('structure', 'p', 'q')

    def specs(self, p):
        return tuple(_space(p['structure'], p['p'], p['q'], p.get('r'), p.get('s'), p['a'], p['b'], p['c'], mode)
                     for mode in (DoubleStar(1.0), Star()))

    def lhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p)[0], g, cfg)

    def rhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p)[1], g, cfg)


# Embeddings

@functools.lru_cache(maxsize=64)
def _tabulated_norm(b, r, side, cfg: QuadConfig):
    """‖u^{-1/r} b‖_r over (t,∞) or (0,t) as a tabulated weight of t."""
    x_min, x_max = cfg.log_domain_bounds
    xs = np.arange(x_min, x_max + 0.25, 0.5)

    def log_norm(x):
        interval = (math.exp(x), math.inf) if side == 'tail' else (0.0, math.exp(x))
        return math.log(weighted_qnorm(None, 0.0, r, b, interval, cfg))
    return Tabulated.from_function('|u^(-1/{}) {}|_{}'.format(_text(float(r)), b, side), log_norm, xs)


@register('lemma23')
class Embedding(Pair):
    """‖f‖_Y against ‖f‖_X for one link X ⊂ Y of an embedding chain."""
    params = ('chain', 'p', 'q', 'r')

    _CHAINS = ('LL', 'RR', 'LR', 'RL', 'small', 'grand')

    def check(self, p, prefix):
        _check_choice(p, 'chain', self._CHAINS, prefix)
        p.setdefault('step', 'first')
        _check_choice(p, 'step', ('first', 'second'), prefix)
        p.setdefault('star_mode', Star())
        for name in ('a', 'b', 'c'):
            p.setdefault(name, One())
        if p['chain'] in ('LL', 'RR', 'LR', 'RL') and 's' not in p:
            raise ConfigError('required for {}'.format(p['chain']), prefix + 's')

    def specs(self, p, cfg):
        chain, mode = p['chain'], p['star_mode']
        a, b, c = p['a'], p['b'], p['c']
        if chain in ('small', 'grand'):
            small = _space(chain, p['p'], p['q'], p['r'], None, One(), b, One(), mode)
            return small, _space('single', p['p'], p['r'], None, None, b, One(), One(), mode)

        outer = _space(chain, p['p'], p['q'], p['r'], p['s'], a, b, c, mode)
        if chain in ('LL', 'RR'):
            middle = _space(chain[0], p['p'], p['r'], p['s'], None, Product(a, b), c, One(), mode)
            if p['step'] == 'first':
                return outer, middle
            return middle, _space('single', p['p'], p['s'], None, None, Product(Product(a, b), c), One(), One(),
                                  mode)

        weight = _tabulated_norm(b, p['r'], 'tail' if chain == 'LR' else 'head', cfg)
        return outer, _space('single', p['p'], p['s'], None, None, Product(Product(c, a), weight), One(), One(),
                             mode)

    def lhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p, cfg)[1], g, cfg)

    def rhs(self, p, g, scale, cfg):
        return space_norm(self.specs(p, cfg)[0], g, cfg)


# Evaluation

def _scales(pair: Pair):
    decades = pair.decades
    if decades is None:
        decades = {'t': _T_DECADES, 'dilation': _DILATION_DECADES, 'window': _WINDOW_DECADES}[pair.scale]
    return 10.0 ** np.asarray(decades, dtype=float)


def evaluate_point(pair: Pair, p: Dict, member: Optional[MonotoneStep], index: Optional[int], scale: float,
                   cfg: QuadConfig) -> Point:
    g = member
    if member is not None and pair.scale == 'dilation':
        g = member.dilated(scale)

    point = Point(index, float(scale))
    failures = {}
    for side in ('lhs', 'rhs'):
        try:
            setattr(point, side, float(getattr(pair, side)(p, g, scale, cfg)))
        except Divergent as exc:
            setattr(point, side, math.inf)
            failures[side] = exc
        except NormError as exc:
            point.status = 'error'
            point.detail = '{}: {}'.format(side, exc)
            return point

    if len(failures) == 2:
        point.status = 'skipped'
        point.detail = 'both sides diverge'
    elif failures:
        side, exc = failures.popitem()
        point.status = 'divergent'
        point.detail = '{} diverges: {}'.format(side, exc)
    return point


def _judge(case: Case, points: List[Point], stats: RatioStats, policy: PassPolicy):
    """(verdict, diagnosis) of one case."""
    for point in points:
        if point.status in ('divergent', 'error'):
            return 'fail', 'member {} at scale {:.3g}: {}'.format(point.member, point.scale, point.detail)
    if not stats.samples:
        return 'skip', 'no point with a finite side'

    if case.floor is not None:
        bound = case.floor * (1 - policy.floor_tol)
        if stats.min_ratio < bound:
            return 'fail', 'ratio {:.12g} below the floor {:.12g}'.format(stats.min_ratio, case.floor)

    if case.kind == EXACT:
        worst = max(abs(stats.min_ratio - 1), abs(stats.max_ratio - 1))
        if worst > policy.exact_tol:
            return 'fail', 'ratio off 1 by {:.3g}'.format(worst)
    elif case.kind == TWO_SIDED:
        if stats.bracket > policy.c_max:
            return 'fail', 'ratio bracket {:.3g} exceeds {:.3g}'.format(stats.bracket, policy.c_max)
        if abs(stats.slope) > policy.slope_max:
            return 'fail', 'ratio drifts by {:.3g} per decade'.format(stats.slope)
    elif case.kind == UPPER:
        if stats.max_ratio > policy.c_max:
            return 'fail', 'ratio {:.3g} exceeds {:.3g}'.format(stats.max_ratio, policy.c_max)
        if stats.growth > policy.slope_max:
            return 'fail', 'ratio grows by {:.3g} per decade'.format(stats.growth)
    elif case.kind == LOWER:
        if stats.min_ratio < 1 / policy.c_max:
            return 'fail', 'ratio {:.3g} below {:.3g}'.format(stats.min_ratio, 1 / policy.c_max)
    else:
        raise ConfigError('unknown case kind {!r}'.format(case.kind), 'kind')
    return 'pass', ''


def run_case(case: Case, members: Sequence[MonotoneStep], cfg: QuadConfig, policy: PassPolicy) -> CaseResult:
    pair = get_pair(case.pair)
    p = pair.prepare(dict(case.params))
    chosen = list(enumerate(members)) if pair.uses_function else [(None, None)]

    points = [evaluate_point(pair, p, member, index, scale, cfg)
              for index, member in chosen for scale in _scales(pair)]
    stats = RatioStats.from_points(points)
    verdict, diagnosis = _judge(case, points, stats, policy)

    logger.debug('{} {}: ratio in [{:.4g}, {:.4g}], slope {:.3g}, {}'.format(
        case.suite, case.key, stats.min_ratio, stats.max_ratio, stats.slope, verdict))
    return CaseResult(case, points, stats, verdict, diagnosis)


# Suites

def _catalog_texts():
    from django.conf import settings
    return list(settings.LK_SV_CATALOG)


def _finite(text, q, tail, lam=0.0):
    return sv_finiteness(parse_sv(text), lam, q, tail) is Finiteness.FINITE


_QS = (0.5, 1.0, 2.0, math.inf)


def _suite_a(params, family, cfg):
    catalog = _catalog_texts()
    cases = []
    for alpha, q, b in itertools.product((1.0, -1.0, 0.5, -0.5), _QS, catalog):
        cases.append(make_case('A', 'lemma2_iii', alpha=alpha, q=q, b=b))
    for lam, q, b, side in itertools.product((-1.0, 0.0, 1.0), _QS, catalog, ('left', 'right')):
        cases.append(make_case('A', 'lemma2_v', lam=lam, q=q, b=b, side=side))
    for q, b, side in itertools.product(_QS, catalog, ('origin', 'infinity')):
        if _finite(b, q, Tail.ORIGIN if side == 'origin' else Tail.INFINITY):
            cases.append(make_case('A', 'lemma2_iv', kind=LOWER, q=q, b=b, side=side))
    for b, eps in itertools.product(catalog, (0.25, 0.5)):
        cases.append(make_case('A', 'sv_monotone', kind=UPPER, b=b, eps=eps))
    for (lam, form), q, b in itertools.product(
            ((0.5, 'head'), (1.0, 'head'), (-0.5, 'tail'), (0.5, 'tail'), (-0.5, 'double'), (0.5, 'double')),
            (1.0, 2.0, math.inf), catalog[:3]):
        cases.append(make_case('A', 'lemma3', kind=LOWER, lam=lam, q=q, b=b, form=form))
    return cases


_DEFAULT_ALPHAS = (-0.25, -0.5, -1.0, -2.0)
_HARDY_WINDOWS = ((0.0, 1.0), (0.5, 8.0), (1.0, math.inf), (0.1, 10.0))


def _suite_b(params, family, cfg):
    alphas = tuple(params.get('alpha') or _DEFAULT_ALPHAS)
    cases = []
    for alpha, q, b in itertools.product(alphas, (1.0, 2.0, math.inf), ('1', 'lpow(1)', 'lpow(-1)')):
        if alpha > -1:
            cases.append(make_case('B', 'lemma4', kind=UPPER, alpha=alpha, q=q, b=b))
    cases.append(make_case('B', 'lemma4_window', kind=UPPER, expect='fail', alpha=0.5, q=1.0, b='1'))

    for alpha, q, (T, S), b in itertools.product(alphas, _QS, _HARDY_WINDOWS, ('1', 'lpow(1)')):
        if T == 0 and alpha <= -1:
            continue
        cases.append(make_case('B', 'lemma5', kind=UPPER, alpha=alpha, q=q, b=b, T=T, S=S))

    for alpha in (alpha for alpha in alphas if -1 < alpha < 0):
        for q, r, b in itertools.product((1.0, 2.0), (1.0, 2.0), ('lpow(-1)', 'lpow(-2)')):
            if _finite(b, r, Tail.ORIGIN):
                cases.append(make_case('B', 'cor6', floor=1.0, alpha=alpha, q=q, r=r, b=b))
        for q, s in itertools.product((1.0, 2.0), (1.0, 2.0)):
            cases.append(make_case('B', 'cor7', floor=1.0, alpha=alpha, q=q, r=2.0, s=s, b='lpow(-1)',
                                   c='lpow(-2)'))
    return cases


_THETAS = (0.25, 0.5, 0.75)
_KAPPAS = (0.5, 1.0, 2.0)
_K_WINDOWS = ((0.0, 1.0), (0.5, 2.0), (0.1, 10.0), (1.0, math.inf))


def _couple_text(name, kappa):
    return 'peetre' if name == 'peetre' else '{}({})'.format(name, _text(float(kappa)))


def _valid(*specs, cfg):
    return all(validate_spec(spec, cfg).verdict is not Verdict.TRIVIAL for spec in specs)


def _suite_c(params, family, cfg):
    cases = []
    for theta, kappa, q, b in itertools.product(_THETAS, _KAPPAS, (1.0, 2.0, math.inf), ('1', 'lpow(1)')):
        cases.append(make_case('C', 'lemma15', kind=EXACT, theta=theta, q=q, b=b,
                               couple=_couple_text('kree', kappa), form='maximal'))
        for name in ('kree', 'hunt'):
            cases.append(make_case('C', 'lemma15', theta=theta, q=q, b=b, couple=_couple_text(name, kappa),
                                   form='star'))

    for theta, kappa, q, name, (T, S) in itertools.product(_THETAS, _KAPPAS, (1.0, 2.0, math.inf),
                                                           ('kree', 'hunt'), _K_WINDOWS):
        couple = _couple_text(name, kappa)
        floor = 1.0 if math.isinf(q) else kappa ** (-1.0 / q)
        cases.append(make_case('C', 'lemma16', kind=LOWER, floor=floor, theta=theta, q=q, b='1', couple=couple,
                               T=T, S=S))
        cases.append(make_case('C', 'lemma17', kind=UPPER, theta=theta, q=q, b='1', couple=couple, T=T, S=S))

    for theta, q, b in itertools.product(_THETAS, (1.0, 2.0, math.inf), _catalog_texts()[:3]):
        cases.append(make_case('C', 'cor34', kind=EXACT, theta=theta, q=q, b=b, couple='peetre', form='maximal'))
        cases.append(make_case('C', 'cor34', floor=1.0, theta=theta, q=q, b=b, couple='peetre', form='star'))
        cases.append(make_case('C', 'cor34', floor=1.0, theta=theta, q=q, b=b, couple='hunt(1)', form='star'))

    identities = [('lemma24', 'single', p, q, None, None, a, '1', '1')
                  for p, q, a in itertools.product((2.0, 4.0), (1.0, 2.0, math.inf), ('1', 'lpow(1)'))]
    identities += [('lemma25', structure, 2.0, q, r, None, '1', b, '1')
                   for structure, q, r, b in itertools.product(('L', 'R'), (1.0, 2.0), (1.0, 2.0),
                                                                ('lpow(-1)', 'lpow(-2)'))]
    identities += [('lemma26', structure, 2.0, 2.0, 2.0, s, '1', 'lpow(-1)', 'lpow(-1)')
                   for structure, s in itertools.product(('LL', 'LR', 'RL', 'RR'), (1.0, 2.0))]
    for name, structure, p, q, r, s, a, b, c in identities:
        values = {'structure': structure, 'p': p, 'q': q, 'a': a, 'b': b, 'c': c}
        values.update({key: value for key, value in (('r', r), ('s', s)) if value is not None})
        pair = PAIRS[name]
        if _valid(*pair.specs(pair.prepare(dict(values))), cfg=cfg):
            cases.append(make_case('C', name, kind=EXACT, **values))
    return cases


_D_STRUCTURES = ('single', 'L', 'R', 'small', 'grand', 'LL', 'LR', 'RL', 'RR')


def _theorem_candidates():
    for structure in _D_STRUCTURES:
        levels = _levels_of(structure)
        weights_a = ('1',) if structure in ('small', 'grand') else ('1', 'lpow(1)')
        for kappa, theta, q in itertools.product(_KAPPAS, _THETAS + (1.0,), _QS):
            names = ('kree', 'hunt', 'peetre') if kappa == 1 else ('kree', 'hunt')
            for r, s, name, a, b, c in itertools.product(
                    _QS if levels >= 2 else (None,), _QS if levels >= 3 else (None,), names, weights_a,
                    ('lpow(-1)', 'lpow(-2)') if levels >= 2 else ('1',),
                    ('lpow(-1)', 'lpow(-2)') if levels >= 3 else ('1',)):
                values = {'structure': structure, 'theta': theta, 'q': q, 'couple': _couple_text(name, kappa),
                          'a': a, 'b': b, 'c': c}
                values.update({key: value for key, value in (('r', r), ('s', s)) if value is not None})
                yield values


def _sample(candidates, count, rng, pair, cfg):
    """Up to ``count`` candidates in random order whose specs are not trivial."""
    chosen = []
    for index in rng.permutation(len(candidates)):
        values = candidates[index]
        if _valid(*pair.specs(pair.prepare(dict(values))), cfg=cfg):
            chosen.append(values)
            if len(chosen) >= count:
                break
    return chosen


def _suite_d(params, family, cfg):
    rng = np.random.default_rng([int(family.seed), len(SUITES)])
    count = int(params.get('points') or _SUITE_D_POINTS)
    theorem = PAIRS['theorem']
    cases = [make_case('D', 'theorem', **values)
             for values in _sample(list(_theorem_candidates()), count, rng, theorem, cfg)]

    maximal_star = PAIRS['maximal_star']
    candidates = []
    for structure in ('single', 'L', 'R', 'LL', 'RR'):
        levels = _levels_of(structure)
        for p, q, r, s in itertools.product((2.0, 4.0), (1.0, 2.0), (1.0, 2.0) if levels >= 2 else (None,),
                                            (1.0, 2.0) if levels >= 3 else (None,)):
            values = {'structure': structure, 'p': p, 'q': q, 'b': 'lpow(-1)', 'c': 'lpow(-1)'}
            values.update({key: value for key, value in (('r', r), ('s', s)) if value is not None})
            candidates.append(values)
    for values in _sample(candidates, max(count // 10, 1), rng, maximal_star, cfg):
        cases.append(make_case('D', 'maximal_star', floor=1.0, **values))
    return cases


def _suite_e(params, family, cfg):
    embedding = PAIRS['lemma23']
    cases = []
    rows = []
    for chain, mode, q, r, s in itertools.product(('LL', 'RR', 'LR', 'RL'), ('star', 'double_star(1)'),
                                                  (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)):
        steps = ('first', 'second') if chain in ('LL', 'RR') else ('first',)
        for step in steps:
            rows.append({'chain': chain, 'step': step, 'p': 2.0, 'q': q, 'r': r, 's': s, 'a': '1',
                         'b': 'lpow(-1)', 'c': 'lpow(-1)', 'star_mode': mode})
    for chain, mode, q, r in itertools.product(('small', 'grand'), ('star', 'double_star(1)'), (1.0, 2.0),
                                               (1.0, 2.0)):
        rows.append({'chain': chain, 'p': 2.0, 'q': q, 'r': r, 'b': 'lpow(-1)', 'star_mode': mode})

    for values in rows:
        try:
            specs = embedding.specs(embedding.prepare(dict(values)), cfg)
        except Divergent:
            # the tabulated weight is infinite, so the outer space is trivial
            continue
        if _valid(*specs, cfg=cfg):
            cases.append(make_case('E', 'lemma23', kind=UPPER, **values))
    return cases


_BUILDERS = {'A': _suite_a, 'B': _suite_b, 'C': _suite_c, 'D': _suite_d, 'E': _suite_e}


def build_cases(suite_id, family: TestFamily, params=None, cfg: Optional[QuadConfig] = None) -> List[Case]:
    if suite_id not in _BUILDERS:
        raise ConfigError('expected one of {}, got {!r}'.format(', '.join(SUITES), suite_id), 'suite')
    cases = _BUILDERS[suite_id](params or {}, family, cfg or QuadConfig.from_settings())
    return sorted(cases, key=lambda case: case.key)


@dataclass
class EquivalenceReport:
    suite: str
    family: TestFamily
    results: List[CaseResult]
    policy: PassPolicy = field(default_factory=PassPolicy)
    quad: Optional[QuadConfig] = None

    @property
    def verdict(self):
        return 'Pass' if all(result.met for result in self.results) else 'Fail'

    @property
    def counterexamples(self):
        members = None
        found = []
        for result in self.results:
            if result.met:
                continue
            members = members if members is not None else gen_family(self.family)
            point = _worst(result)
            found.append({
                'case': result.case.key,
                'diagnosis': result.diagnosis or 'expected {} but the case {}'.format(
                    result.case.expect, 'passed' if result.verdict == 'pass' else 'was skipped'),
                'family': self.family.to_dict(),
                'member': point.member if point else None,
                'scale': point.scale if point else None,
                'function': members[point.member].to_pairs() if point and point.member is not None else None,
                'params': result.case.to_dict()['params'],
            })
        return found

    def to_dict(self):
        return {
            'suite': self.suite,
            'verdict': self.verdict,
            'family': self.family.to_dict(),
            'policy': self.policy.to_dict(),
            'quad': self.quad.to_dict() if self.quad else None,
            'cases': [result.to_dict() for result in self.results],
            'counterexamples': self.counterexamples,
        }


def _worst(result: CaseResult) -> Optional[Point]:
    for point in result.points:
        if point.status in ('divergent', 'error'):
            return point
    points = [point for point in result.points if point.status == 'ok']
    if not points:
        return None
    if result.case.kind == LOWER:
        return min(points, key=lambda point: point.ratio)
    if result.case.kind == EXACT:
        return max(points, key=lambda point: abs(point.ratio - 1))
    return max(points, key=lambda point: point.ratio)


def create_callback(results: List[CaseResult]):
    def callback(result: CaseResult):
        results.append(result)
        if not result.met:
            logger.warning('{}: {}'.format(result.case.key, result.diagnosis or 'expectation not met'))
    return callback


def run_suite(suite_id, family: TestFamily, params=None, cfg: Optional[QuadConfig] = None,
              policy: Optional[PassPolicy] = None, jobs: int = 1) -> EquivalenceReport:
    cfg = cfg or QuadConfig.from_settings()
    policy = policy or PassPolicy.from_settings()
    cases = build_cases(suite_id, family, params, cfg)
    members = gen_family(family)
    logger.info('Suite {}: {} cases on {} {} functions'.format(suite_id, len(cases), family.size,
                                                               family.kind.value))

    results = []
    callback = create_callback(results)
    if jobs > 1:
        errors = []
        with multiprocessing.Pool(processes=jobs) as pool:
            for case in cases:
                pool.apply_async(run_case, args=(case, members, cfg, policy), callback=callback,
                                 error_callback=errors.append)
            pool.close()
            pool.join()
        if errors:
            raise errors[0]
    else:
        for case in cases:
            callback(run_case(case, members, cfg, policy))

    results.sort(key=lambda result: result.case.key)
    report = EquivalenceReport(suite_id, family, results, policy, cfg)
    logger.info('Suite {}: {}'.format(suite_id, report.verdict))
    return report


@dataclass
class SweepRow:
    scale: float
    member: Optional[int]
    lhs: float
    rhs: float
    ratio: float


def sweep(pair_name, raw_params: Dict, start: float, stop: float, per_decade: int,
          family: Optional[TestFamily] = None, cfg: Optional[QuadConfig] = None) -> List[SweepRow]:
    """Both sides of a registered pair on a log-uniform range of scales, stop excluded."""
    pair = get_pair(pair_name, 'sweep.pair')
    p = pair.prepare(dict(raw_params), 'sweep.params.')
    if int(per_decade) < 1:
        raise ConfigError('must be positive', 'sweep.per_decade')
    count = int(round((float(stop) - float(start)) * int(per_decade)))
    if count < 1:
        raise ConfigError('empty range from {} to {}'.format(start, stop), 'sweep.range')

    cfg = cfg or QuadConfig.from_settings()
    family = family or TestFamily(seed=1, kind=FamilyKind.DYADIC_DECAY, size=1, pieces=4)
    chosen = list(enumerate(gen_family(family))) if pair.uses_function else [(None, None)]
    scales = 10.0 ** (float(start) + np.arange(count) / int(per_decade))

    rows = []
    for index, member in chosen:
        for scale in scales:
            point = evaluate_point(pair, p, member, index, scale, cfg)
            if point.status == 'error':
                raise ConfigError(point.detail, 'sweep.params')
            if point.status == 'skipped':
                logger.warning('{}: both sides diverge at scale {:.6g}, row left out'.format(pair_name, scale))
                continue
            rows.append(SweepRow(float(scale), index, point.lhs, point.rhs, point.ratio))
    return rows
