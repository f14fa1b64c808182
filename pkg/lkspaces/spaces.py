"""
The catalog of rearrangement quasi-norms and interpolation-method norms.

Every norm is a nest of at most three weighted L_q levels over moving
intervals. The inner level integrates u^{λ-1/q} a(u) h(u) where h is f*,
f**_(κ) or a K-functional; the outer levels integrate earlier levels
against t^{-1/r} b(t) and t^{-1/s} c(t). All levels share one NodeGrid.
"""
import enum
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Union

import numpy as np

from lkspaces.exceptions import ConfigError, Divergent, TrivialSpace
from lkspaces.funcs import Hunt, Kree, MonotoneStep, Peetre, couple_kinks, k_functional, maximal, parse_couple
from lkspaces.quad import NodeGrid, NormResult, QuadConfig, weighted_qnorm_result
from lkspaces.sv import Finiteness, One, Product, SvExpr, Tail, norm_profile, parse_sv, sv_finiteness

logger = logging.getLogger(__name__)

# Rows of the pairwise level evaluated at once
_BLOCK = 256


class Family(enum.Enum):
    LK = 'LK'
    LK_MAXFN = 'LK_MaxFn'
    L_L = 'L_L'
    L_R = 'L_R'
    GRAND = 'Grand'
    SMALL = 'Small'
    LL = 'LL'
    LR = 'LR'
    RL = 'RL'
    RR = 'RR'


class Method(enum.Enum):
    THETA_Q = 'ThetaQ'
    L = 'L'
    R = 'R'
    LL = 'LL'
    LR = 'LR'
    RL = 'RL'
    RR = 'RR'


class Verdict(enum.Enum):
    NON_TRIVIAL = 'NonTrivial'
    TRIVIAL = 'Trivial'
    UNKNOWN = 'Unknown'


# How the levels nest: 'single', or the intervals of the levels below the outer one
_STRUCTURE = {
    Family.LK: 'single',
    Family.LK_MAXFN: 'single',
    Family.L_L: 'L',
    Family.SMALL: 'L',
    Family.L_R: 'R',
    Family.GRAND: 'R',
    Family.LL: 'LL',
    Family.LR: 'LR',
    Family.RL: 'RL',
    Family.RR: 'RR',
    Method.THETA_Q: 'single',
    Method.L: 'L',
    Method.R: 'R',
    Method.LL: 'LL',
    Method.LR: 'LR',
    Method.RL: 'RL',
    Method.RR: 'RR',
}


@dataclass(frozen=True)
class Star:
    """f* inside the norm."""
    kappa = None

    def __str__(self):
        return 'star'


@dataclass(frozen=True)
class DoubleStar:
    """f**_(κ) inside the norm."""
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError('κ must be positive, got {}'.format(self.kappa), 'star_mode')

    def __str__(self):
        return 'double_star({})'.format(_number(self.kappa))


StarMode = Union[Star, DoubleStar]


def _number(value) -> str:
    if value is None:
        return '-'
    if math.isinf(value):
        return 'inf'
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def parse_exponent(value, field_name) -> float:
    """An exponent in (0, ∞]; accepts numbers and 'inf'."""
    if isinstance(value, str) and value.strip().lower() in ('inf', 'infinity', '∞'):
        return math.inf
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError('expected a number or inf, got {!r}'.format(value), field_name)
    if not value > 0 or math.isnan(value):
        raise ConfigError('must be in (0, inf], got {}'.format(value), field_name)
    return value


def _levels(structure):
    return {'single': 1, 'L': 2, 'R': 2}.get(structure, 3)


@dataclass(frozen=True)
class SpaceSpec:
    family: Family
    p: float
    q: float
    r: Optional[float] = None
    s: Optional[float] = None
    a: SvExpr = field(default_factory=One)
    b: SvExpr = field(default_factory=One)
    c: SvExpr = field(default_factory=One)
    star_mode: StarMode = field(default_factory=Star)

    def __post_init__(self):
        levels = _levels(self.structure)
        for name in ('p', 'q'):
            object.__setattr__(self, name, parse_exponent(getattr(self, name), 'space.' + name))
        for name, needed in (('r', levels >= 2), ('s', levels >= 3)):
            value = getattr(self, name)
            if needed and value is None:
                raise ConfigError('required for {}'.format(self.family.value), 'space.' + name)
            if value is not None:
                object.__setattr__(self, name, parse_exponent(value, 'space.' + name))

        if self.family in (Family.GRAND, Family.SMALL) and not isinstance(self.a, One):
            raise ConfigError('grand and small spaces have a = 1', 'space.a')
        if self.family is Family.LK_MAXFN and isinstance(self.star_mode, Star):
            object.__setattr__(self, 'star_mode', DoubleStar(1.0))

    @property
    def structure(self):
        return _STRUCTURE[self.family]

    def __str__(self):
        parts = ['p={}'.format(_number(self.p)), 'q={}'.format(_number(self.q))]
        levels = _levels(self.structure)
        if levels >= 2:
            parts.append('r={}'.format(_number(self.r)))
        if levels >= 3:
            parts.append('s={}'.format(_number(self.s)))
        parts.append('a={}'.format(self.a))
        if levels >= 2:
            parts.append('b={}'.format(self.b))
        if levels >= 3:
            parts.append('c={}'.format(self.c))
        parts.append(str(self.star_mode))
        return '{}({})'.format(self.family.value, ', '.join(parts))

    def to_dict(self):
        return {
            'family': self.family.value,
            'p': _number(self.p), 'q': _number(self.q), 'r': _number(self.r), 's': _number(self.s),
            'a': str(self.a), 'b': str(self.b), 'c': str(self.c),
            'star_mode': str(self.star_mode),
        }


@dataclass(frozen=True)
class InterpSpec:
    method: Method
    theta: float
    q: float
    r: Optional[float] = None
    s: Optional[float] = None
    a: SvExpr = field(default_factory=One)
    b: SvExpr = field(default_factory=One)
    c: SvExpr = field(default_factory=One)
    couple: Union[Peetre, Kree, Hunt] = field(default_factory=Peetre)

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ConfigError('must lie in [0, 1], got {}'.format(self.theta), 'interp.theta')
        object.__setattr__(self, 'theta', float(self.theta))
        object.__setattr__(self, 'q', parse_exponent(self.q, 'interp.q'))

        levels = _levels(self.structure)
        for name, needed in (('r', levels >= 2), ('s', levels >= 3)):
            value = getattr(self, name)
            if needed and value is None:
                raise ConfigError('required for {}'.format(self.method.value), 'interp.' + name)
            if value is not None:
                object.__setattr__(self, name, parse_exponent(value, 'interp.' + name))

    @property
    def structure(self):
        return _STRUCTURE[self.method]

    def __str__(self):
        parts = ['theta={}'.format(_number(self.theta)), 'q={}'.format(_number(self.q))]
        levels = _levels(self.structure)
        if levels >= 2:
            parts.append('r={}'.format(_number(self.r)))
        if levels >= 3:
            parts.append('s={}'.format(_number(self.s)))
        parts.append('a={}'.format(self.a))
        if levels >= 2:
            parts.append('b={}'.format(self.b))
        if levels >= 3:
            parts.append('c={}'.format(self.c))
        parts.append(str(self.couple))
        return '{}({})'.format(self.method.value, ', '.join(parts))

    def to_dict(self):
        return {
            'method': self.method.value,
            'theta': self.theta, 'q': _number(self.q), 'r': _number(self.r), 's': _number(self.s),
            'a': str(self.a), 'b': str(self.b), 'c': str(self.c),
            'couple': str(self.couple),
        }


_STAR_MODE = re.compile(r'^\s*(star|double_star)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$')


def parse_star_mode(text, field_name='star_mode') -> StarMode:
    if isinstance(text, (Star, DoubleStar)):
        return text
    match = _STAR_MODE.match(str(text))
    if not match:
        raise ConfigError('expected star or double_star(κ), got {!r}'.format(text), field_name)
    name, kappa = match.groups()
    if name == 'star':
        if kappa is not None:
            raise ConfigError('star takes no parameter', field_name)
        return Star()
    return DoubleStar(float(kappa) if kappa is not None else 1.0)


def _enum(kind, value, field_name):
    try:
        return value if isinstance(value, kind) else kind(value)
    except ValueError:
        raise ConfigError('expected one of {}, got {!r}'.format(
            ', '.join(member.value for member in kind), value), field_name)


def _optional(mapping, name, prefix):
    value = mapping.get(name)
    return None if value is None else parse_exponent(value, prefix + name)


def _weights(mapping, prefix):
    return {name: parse_sv(mapping.get(name, '1'), prefix + name) for name in ('a', 'b', 'c')}


def parse_space(mapping: Dict, prefix='space.') -> SpaceSpec:
    if not isinstance(mapping, dict):
        raise ConfigError('expected a mapping', prefix.rstrip('.'))
    if 'family' not in mapping or 'p' not in mapping or 'q' not in mapping:
        raise ConfigError('needs family, p and q', prefix.rstrip('.'))
    return SpaceSpec(
        family=_enum(Family, mapping['family'], prefix + 'family'),
        p=parse_exponent(mapping['p'], prefix + 'p'),
        q=parse_exponent(mapping['q'], prefix + 'q'),
        r=_optional(mapping, 'r', prefix),
        s=_optional(mapping, 's', prefix),
        star_mode=parse_star_mode(mapping.get('star_mode', 'star'), prefix + 'star_mode'),
        **_weights(mapping, prefix))


def parse_interp(mapping: Dict, prefix='interp.') -> InterpSpec:
    if not isinstance(mapping, dict):
        raise ConfigError('expected a mapping', prefix.rstrip('.'))
    if 'method' not in mapping or 'theta' not in mapping or 'q' not in mapping:
        raise ConfigError('needs method, theta and q', prefix.rstrip('.'))
    try:
        theta = float(mapping['theta'])
    except (TypeError, ValueError):
        raise ConfigError('expected a number, got {!r}'.format(mapping['theta']), prefix + 'theta')
    return InterpSpec(
        method=_enum(Method, mapping['method'], prefix + 'method'),
        theta=theta,
        q=parse_exponent(mapping['q'], prefix + 'q'),
        r=_optional(mapping, 'r', prefix),
        s=_optional(mapping, 's', prefix),
        couple=parse_couple(mapping.get('couple', 'peetre'), prefix + 'couple'),
        **_weights(mapping, prefix))


@dataclass(frozen=True)
class ValidationReport:
    verdict: Verdict
    condition: str = ''
    detail: str = ''
    measured: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return {'verdict': self.verdict.value, 'condition': self.condition, 'detail': self.detail,
                'measured': dict(self.measured)}


class _Checks:
    """Finiteness conditions of one spec, symbolic first and numeric where that fails."""

    _SIDE = {Tail.ORIGIN: '(0,1)', Tail.INFINITY: '(1,inf)'}

    def __init__(self, cfg: Optional[QuadConfig]):
        self.cfg = cfg
        self.measured = {}
        self.unknown = []

    def weight(self, expr: SvExpr, q: float, tail: Tail, lam: float = 0.0) -> Finiteness:
        """‖u^{λ-1/q} expr(u)‖_q on (0,1) or (1,∞)."""
        verdict = sv_finiteness(expr, lam, q, tail)
        if verdict is not Finiteness.UNKNOWN:
            return verdict

        key = '|t^(-1/{}) {}| on {}'.format(_number(q), expr, self._SIDE[tail])
        interval = (0.0, 1.0) if tail is Tail.ORIGIN else (1.0, math.inf)
        try:
            self.measured[key] = weighted_qnorm_result(None, lam, q, expr, interval, self.cfg, label=key).value
        except Divergent:
            self.measured[key] = math.inf
            return Finiteness.INFINITE
        except Exception as exc:
            logger.debug('{}: numeric check failed: {}'.format(key, exc))
            return Finiteness.UNKNOWN
        return Finiteness.FINITE

    def nested(self, outer: SvExpr, r: float, inner: SvExpr, q: float, kind: str, tail: Tail) -> Finiteness:
        """‖t^{-1/r} outer(t) ‖u^{-1/q} inner(u)‖_q‖_r where the inner interval grows ('growth') or shrinks ('tail')."""
        if kind == 'tail' and self.weight(inner, q, tail) is Finiteness.INFINITE:
            return Finiteness.INFINITE
        profile = norm_profile(inner, q, kind)
        if profile is None:
            return Finiteness.UNKNOWN
        return self.weight(Product(outer, profile), r, tail)


def _report(conditions, checks: _Checks, unknown_when_clean=False) -> ValidationReport:
    """First failing condition wins; Unknown when none fails but one is undecided."""
    undecided = None
    for name, verdict, detail in conditions:
        if verdict is Finiteness.INFINITE:
            return ValidationReport(Verdict.TRIVIAL, name, detail, checks.measured)
        if verdict is Finiteness.UNKNOWN and undecided is None:
            undecided = (name, detail)
    if undecided:
        return ValidationReport(Verdict.UNKNOWN, undecided[0], 'undecided: ' + undecided[1], checks.measured)
    if unknown_when_clean:
        return ValidationReport(Verdict.UNKNOWN, '', 'no non-triviality criterion is known', checks.measured)
    return ValidationReport(Verdict.NON_TRIVIAL, measured=checks.measured)


def _norm_text(expr, q, side):
    return '|t^(-1/{}) {}|_{} on {}'.format(_number(q), expr, _number(q), side)


def _l_method(theta, q, r, a, b, checks: _Checks):
    """Conditions of the ℒ method; an empty list means none is needed."""
    at_infinity = ('b_at_infinity', checks.weight(b, r, Tail.INFINITY), _norm_text(b, r, '(1,inf)') + ' < inf')
    if 0 < theta < 1:
        return [at_infinity]
    if theta == 0:
        return [('nested_at_infinity', checks.nested(b, r, a, q, 'growth', Tail.INFINITY),
                 'outer norm of {} against |u^(-1/{}) {}| on (1,t) is finite'.format(b, _number(q), a))]
    if theta == 1:
        return [at_infinity,
                ('nested_at_origin', checks.nested(b, r, a, q, 'tail', Tail.ORIGIN),
                 'outer norm of {} against |u^(-1/{}) {}| on (0,t) is finite'.format(b, _number(q), a))]
    return [('theta', Finiteness.INFINITE, 'θ = {} outside [0, 1]'.format(theta))]


def _r_method(theta, q, r, a, b, checks: _Checks):
    at_origin = ('b_at_origin', checks.weight(b, r, Tail.ORIGIN), _norm_text(b, r, '(0,1)') + ' < inf')
    if 0 < theta < 1:
        return [at_origin]
    if theta == 0:
        return [at_origin,
                ('nested_at_infinity', checks.nested(b, r, a, q, 'tail', Tail.INFINITY),
                 'outer norm of {} against |u^(-1/{}) {}| on (t,inf) is finite'.format(b, _number(q), a))]
    if theta == 1:
        return [('nested_at_origin', checks.nested(b, r, a, q, 'growth', Tail.ORIGIN),
                 'outer norm of {} against |u^(-1/{}) {}| on (t,1) is finite'.format(b, _number(q), a))]
    return [('theta', Finiteness.INFINITE, 'θ = {} outside [0, 1]'.format(theta))]


def _extremal(structure, r, s, b, c, checks: _Checks):
    """Outer weight conditions forced by the monotone limits of the middle level."""
    c_origin = ('c_at_origin', checks.weight(c, s, Tail.ORIGIN), _norm_text(c, s, '(0,1)') + ' < inf')
    c_infinity = ('c_at_infinity', checks.weight(c, s, Tail.INFINITY), _norm_text(c, s, '(1,inf)') + ' < inf')
    b_origin = ('b_at_origin', checks.weight(b, r, Tail.ORIGIN), _norm_text(b, r, '(0,1)') + ' < inf')
    b_infinity = ('b_at_infinity', checks.weight(b, r, Tail.INFINITY), _norm_text(b, r, '(1,inf)') + ' < inf')
    return {
        'LL': [c_infinity],
        'RR': [c_origin],
        'LR': [b_infinity, c_origin],
        'RL': [b_origin, c_infinity],
    }[structure]


def _theta_of(spec: SpaceSpec) -> float:
    """The interpolation parameter that matches a space built on f**_(κ)."""
    return 1.0 - 1.0 / spec.p


def validate_spec(spec, cfg: Optional[QuadConfig] = None) -> ValidationReport:
    checks = _Checks(cfg)
    structure = spec.structure

    if isinstance(spec, InterpSpec):
        theta, q = spec.theta, spec.q
        if structure == 'single':
            if 0 < theta < 1:
                return ValidationReport(Verdict.NON_TRIVIAL)
            tail = Tail.INFINITY if theta == 0 else Tail.ORIGIN
            side = '(1,inf)' if theta == 0 else '(0,1)'
            return _report([('theta_q', checks.weight(spec.a, q, tail), _norm_text(spec.a, q, side) + ' < inf')],
                           checks)
        if structure == 'L':
            return _report(_l_method(theta, q, spec.r, spec.a, spec.b, checks), checks)
        if structure == 'R':
            return _report(_r_method(theta, q, spec.r, spec.a, spec.b, checks), checks)
        return _report(_extremal(structure, spec.r, spec.s, spec.b, spec.c, checks), checks,
                       unknown_when_clean=True)

    conditions = []
    double = isinstance(spec.star_mode, DoubleStar)
    if double and spec.p < 1:
        conditions.append(('double_star_p', Finiteness.INFINITE,
                           'f**_(κ) decays like 1/t, so p = {} < 1 leaves only 0'.format(_number(spec.p))))
        return _report(conditions, checks)

    if math.isinf(spec.p):
        conditions.append(('a_at_origin', checks.weight(spec.a, spec.q, Tail.ORIGIN),
                           _norm_text(spec.a, spec.q, '(0,1)') + ' < inf'))

    if structure == 'single':
        if double and spec.p == 1:
            conditions.append(('a_at_infinity', checks.weight(spec.a, spec.q, Tail.INFINITY),
                               _norm_text(spec.a, spec.q, '(1,inf)') + ' < inf'))
        return _report(conditions, checks)

    if structure in ('L', 'R'):
        if double:
            method = _l_method if structure == 'L' else _r_method
            conditions.extend(method(_theta_of(spec), spec.q, spec.r, spec.a, spec.b, checks))
        elif structure == 'L':
            conditions.append(('b_at_infinity', checks.weight(spec.b, spec.r, Tail.INFINITY),
                               _norm_text(spec.b, spec.r, '(1,inf)') + ' < inf'))
        else:
            conditions.append(('b_at_origin', checks.weight(spec.b, spec.r, Tail.ORIGIN),
                               _norm_text(spec.b, spec.r, '(0,1)') + ' < inf'))
        return _report(conditions, checks)

    conditions.extend(_extremal(structure, spec.r, spec.s, spec.b, spec.c, checks))
    return _report(conditions, checks, unknown_when_clean=True)


@dataclass
class Integrand:
    """
    The innermost integrand u^λ a(u) h(u) in the log domain. ``h`` is None
    when h is a step function that is constant between consecutive kinks.
    """
    lam: float
    q: float
    weight: SvExpr
    log_h: Callable
    kinks: np.ndarray
    h: Optional[Callable] = None

    def log_psi(self, x, at=None):
        """``at`` moves the evaluation of h, leaving the power and the weight at x."""
        x = np.asarray(x, dtype=float)
        return self.lam * x + self.weight.log_eval(x) + self.log_h(x if at is None else at)

    @classmethod
    def smooth(cls, h, lam, q, weight, kinks) -> 'Integrand':
        """h continuous, with kinks (in log u) where it changes formula."""
        return cls(lam, q, weight, lambda x: _log(h(np.exp(x))), np.asarray(kinks, dtype=float), h)

    @classmethod
    def star(cls, g: MonotoneStep, lam, q, weight) -> 'Integrand':
        """h = f*."""
        kinks = g.kinks()
        padded = np.concatenate((g.values, [0.0]))

        def log_star(x):
            return _log(padded[np.searchsorted(kinks, x, side='right')])
        return cls(lam, q, weight, log_star, kinks)


def _log(values):
    with np.errstate(divide='ignore'):
        return np.log(values)


def _inner(spec, g: MonotoneStep) -> Integrand:
    if isinstance(spec, InterpSpec):
        couple = spec.couple
        return Integrand.smooth(lambda u: k_functional(couple, g, u), -spec.theta, spec.q, spec.a,
                                couple_kinks(couple, g))

    lam = 0.0 if math.isinf(spec.p) else 1.0 / spec.p
    if isinstance(spec.star_mode, DoubleStar):
        kappa = spec.star_mode.kappa
        return Integrand.smooth(lambda u: maximal(g, kappa, u), lam, spec.q, spec.a, g.kinks(kappa))
    return Integrand.star(g, lam, spec.q, spec.a)


def _root(values, power):
    return np.maximum(values, 0.0) ** (1.0 / power)


def _share(error, total, power) -> float:
    """Relative error of the power-th root of ``total`` when ``total`` is off by ``error``."""
    error, total = float(np.sum(error)), float(np.sum(total))
    if math.isinf(power) or not total > 0:
        return 0.0
    return error / (power * total)


class _Levels:
    """
    Inner norms of one evaluation on a shared NodeGrid: through a
    PrefixTable, or by summing the quadrature weights of every range
    afresh when ``direct`` is set. ``error`` is the relative error of the
    inner norm over the whole line.
    """

    def __init__(self, grid: NodeGrid, log_psi, q, label, head, rest, direct):
        self.grid = grid
        self.q = q
        self.label = label
        self.direct = direct
        self.size = len(grid)
        self.index = np.arange(self.size)

        sup = math.isinf(q)
        log_values = log_psi if sup else q * log_psi
        with np.errstate(under='ignore'):
            self.values = np.exp(log_values)
        ends = [grid.tail(log_values, direction, sup=sup, label=label + ' inner') if wanted else None
                for direction, wanted in ((-1, head), (1, rest))]
        self.head, self.rest = (math.nan if end is None else end.value for end in ends)

        self.error = 0.0
        if not sup:
            found = [end for end in ends if end is not None]
            total = grid.total(self.values) + sum(end.value for end in found)
            self.error = _share(sum(end.error for end in found) + grid.quadrature_error(self.values), total, q)

        self.table = None if direct else grid.prefix(self.values, q, self.head, self.rest)
        self._left = None

    @property
    def sup(self):
        return math.isinf(self.q)

    def left_matrix(self):
        if self._left is None:
            self._left = self.grid.left_weights(self.index)
        return self._left

    def from_origin(self):
        if not self.direct:
            return self.table.from_origin(self.index)
        if self.sup:
            return np.maximum(self.head, np.array([self.values[:j + 1].max() for j in self.index]))
        return _root(self.head + self.left_matrix() @ self.values, self.q)

    def to_infinity(self):
        if not self.direct:
            return self.table.to_infinity(self.index)
        if self.sup:
            last = self.size - 1
            ranges = np.array([self.values[i:].max() if i < last else 0.0 for i in self.index])
            return np.maximum(self.rest, ranges)
        return _root(self.grid.right_weights(self.index) @ self.values + self.rest, self.q)

    def between(self, rows, reverse=False):
        """
        Inner norms for each row i and every sample k: over (x_i, x_k), or
        over (x_k, x_i) when ``reverse`` is set. Empty ranges give 0.
        """
        if not self.direct:
            if reverse:
                return self.table.between(self.index[None, :], rows[:, None])
            return self.table.between(rows[:, None], self.index[None, :])

        result = np.empty((rows.size, self.size))
        for position, i in enumerate(rows):
            if self.sup:
                if reverse:
                    inside = (self.index[None, :] >= self.index[:, None]) & (self.index[None, :] <= i)
                    valid = self.index < i
                else:
                    inside = (self.index[None, :] >= i) & (self.index[None, :] <= self.index[:, None])
                    valid = self.index > i
                ranges = np.where(inside, self.values[None, :], 0.0).max(axis=1)
                result[position] = np.where(valid, ranges, 0.0)
                continue

            matrix = self.left_matrix()
            weights = matrix[i][None, :] - matrix if reverse else matrix - matrix[i][None, :]
            result[position] = _root(weights @ self.values, self.q)
        return result


def _level_left(levels: _Levels, log_values, power, label):
    """
    ‖·‖_power over (0, x_i) of a sampled middle-level integrand, for every
    i, with the relative error of the rows taken together.
    """
    grid = levels.grid
    if math.isinf(power):
        values = np.exp(log_values)
        head = grid.tail(log_values, -1, sup=True, label=label).value
        if levels.direct:
            return np.maximum(head, np.array([values[:j + 1].max() for j in levels.index])), 0.0
        return np.maximum(head, np.maximum.accumulate(values)), 0.0

    with np.errstate(under='ignore'):
        values = np.exp(power * log_values)
    head = grid.tail(power * log_values, -1, label=label)
    running = levels.left_matrix() @ values if levels.direct else grid.running(values)
    rows = head.value + running
    error = levels.size * (head.error + grid.quadrature_error(values))
    return _root(rows, power), _share(error, rows, power)


def _level_right(levels: _Levels, log_values, power, label):
    """
    ‖·‖_power over (x_i, ∞) of a sampled middle-level integrand, for every
    i, with the relative error of the rows taken together.
    """
    grid = levels.grid
    if math.isinf(power):
        values = np.exp(log_values)
        rest = grid.tail(log_values, 1, sup=True, label=label).value
        if levels.direct:
            return np.maximum(rest, np.array([values[i:].max() for i in levels.index])), 0.0
        return np.maximum(rest, np.maximum.accumulate(values[::-1])[::-1]), 0.0

    with np.errstate(under='ignore'):
        values = np.exp(power * log_values)
    rest = grid.tail(power * log_values, 1, label=label)
    if levels.direct:
        running = grid.right_weights(levels.index) @ values
    else:
        running = grid.running_right(values)
    rows = running + rest.value
    error = levels.size * (rest.error + grid.quadrature_error(values))
    return _root(rows, power), _share(error, rows, power)


def _level_pairs(levels: _Levels, log_b, power, reverse, label):
    """
    Middle level of the LR (``reverse`` unset) and RL structures: for every
    t = x_i the norm of b(u)·N(t,u) over u in (t,∞), or of b(u)·N(u,t)
    over u in (0,t). Returns the norms and the relative error the tail of
    b adds to them.
    """
    grid = levels.grid
    direction = -1 if reverse else 1
    anchored = levels.from_origin() if reverse else levels.to_infinity()
    result = np.empty(levels.size)

    if math.isinf(power):
        b = np.exp(log_b)
        beyond = grid.tail(log_b, direction, sup=True, label=label).value
        for start in range(0, levels.size, _BLOCK):
            rows = levels.index[start:start + _BLOCK]
            inner = levels.between(rows, reverse)
            result[rows] = np.maximum((b[None, :] * inner).max(axis=1), beyond * anchored[rows])
        return result, 0.0

    with np.errstate(under='ignore'):
        b_power = np.exp(power * log_b)
    beyond = grid.tail(power * log_b, direction, label=label)
    totals = np.empty(levels.size)
    for start in range(0, levels.size, _BLOCK):
        rows = levels.index[start:start + _BLOCK]
        inner = levels.between(rows, reverse)
        weights = grid.left_weights(rows) if reverse else grid.right_weights(rows)
        totals[rows] = (weights * b_power[None, :] * inner ** power).sum(axis=1) + anchored[rows] ** power * beyond.value
        result[rows] = _root(totals[rows], power)
    return result, _share(anchored ** power * beyond.error, totals, power)


def _outer(grid: NodeGrid, log_values, power, label):
    """‖·‖_power over (0, ∞) of a sampled outer integrand, with its relative error."""
    if math.isinf(power):
        values = np.exp(log_values)
        ends = [grid.tail(log_values, direction, sup=True, label=label).value for direction in (-1, 1)]
        return float(max([values.max()] + ends)), 0.0

    with np.errstate(under='ignore'):
        values = np.exp(power * log_values)
    ends = [grid.tail(power * log_values, direction, label=label) for direction in (-1, 1)]
    total = grid.total(values) + sum(end.value for end in ends)
    if not math.isfinite(total):
        raise Divergent('{}: outer integral is infinite'.format(label or 'norm'), label=label)
    error = sum(end.error for end in ends) + grid.quadrature_error(values)
    return float(total ** (1.0 / power)), _share(error, total, power)


def _result(value, shares) -> NormResult:
    return NormResult(value, value * sum(shares))


def nested_norm(inner: Integrand, structure: str, r: Optional[float] = None, s: Optional[float] = None,
                b: Optional[SvExpr] = None, c: Optional[SvExpr] = None, cfg: Optional[QuadConfig] = None,
                direct: bool = False, label: str = '') -> NormResult:
    """
    Nested norm of ``inner`` on one NodeGrid. ``structure`` is one of
    'single', 'L', 'R', 'LL', 'LR', 'RL', 'RR'; 'L' and 'R' take the middle
    exponent ``r`` with weight ``b``, the three-level ones also ``s`` and ``c``.

    The error adds the relative errors of every level: grid refinement,
    Legendre truncation of each sampled integral and the tail fits.
    """
    cfg = cfg or QuadConfig.from_settings()
    b = b or One()
    c = c or One()
    q = inner.q

    grid = NodeGrid.build(inner.kinks, cfg, lambda x: (1.0 if math.isinf(q) else q) * inner.log_psi(x))
    # Step functions are constant on each cell, so cell edges take the value inside
    middles = ((grid.lo + grid.hi) / 2)[grid.cell]
    log_psi = inner.log_psi(grid.xs, at=middles if inner.h is None else None)
    logger.debug('{}: {} samples in {} cells'.format(label, len(grid), grid.lo.size))

    if structure == 'single':
        value, share = _outer(grid, log_psi, q, label)
        return _result(value, [grid.error, share])

    head = structure in ('L', 'LL', 'RL')
    rest = structure in ('R', 'RR', 'LR')
    levels = _Levels(grid, log_psi, q, label, head, rest, direct)
    log_b = b.log_eval(grid.xs)

    if structure in ('L', 'R'):
        anchored = levels.from_origin() if structure == 'L' else levels.to_infinity()
        value, share = _outer(grid, log_b + _log(anchored), r, label)
        return _result(value, [grid.error, levels.error, share])

    if structure == 'LL':
        middle, middle_share = _level_left(levels, log_b + _log(levels.from_origin()), r, label + ' middle')
    elif structure == 'RR':
        middle, middle_share = _level_right(levels, log_b + _log(levels.to_infinity()), r, label + ' middle')
    elif structure in ('LR', 'RL'):
        middle, middle_share = _level_pairs(levels, log_b, r, structure == 'RL', label + ' middle')
    else:
        raise ConfigError('unknown structure {!r}'.format(structure), 'structure')

    value, share = _outer(grid, c.log_eval(grid.xs) + _log(middle), s, label)
    logger.debug('{}: relative errors {:.3g} inner, {:.3g} middle, {:.3g} outer'.format(
        label, levels.error, middle_share, share))
    return _result(value, [grid.error, levels.error, middle_share, share])


def _nested(spec, g: MonotoneStep, cfg: QuadConfig, direct: bool) -> NormResult:
    return nested_norm(_inner(spec, g), spec.structure, spec.r, spec.s, spec.b, spec.c, cfg, direct, str(spec))


def evaluate(spec, g: MonotoneStep, cfg: Optional[QuadConfig] = None) -> NormResult:
    """The quasi-norm of g with its error estimate. Raises TrivialSpace or Divergent."""
    cfg = cfg or QuadConfig.from_settings()
    report = validate_spec(spec, cfg)
    if report.verdict is Verdict.TRIVIAL:
        raise TrivialSpace(report)
    if not len(g):
        return NormResult(0.0)

    if spec.structure == 'single':
        inner = _inner(spec, g)
        if inner.h is None:
            return weighted_qnorm_result(g, inner.lam, spec.q, spec.a, (0.0, math.inf), cfg, label=str(spec))
        return weighted_qnorm_result(inner.h, inner.lam, spec.q, spec.a, (0.0, math.inf), cfg,
                                     breakpoints=np.exp(inner.kinks), label=str(spec))
    return _nested(spec, g, cfg, direct=False)


def space_norm(spec: SpaceSpec, g: MonotoneStep, cfg: Optional[QuadConfig] = None) -> float:
    return evaluate(spec, g, cfg).value


def interp_norm(spec: InterpSpec, g: MonotoneStep, cfg: Optional[QuadConfig] = None) -> float:
    return evaluate(spec, g, cfg).value


def nested_norm_direct(spec, g: MonotoneStep, cfg: Optional[QuadConfig] = None) -> NormResult:
    """
    The grid evaluation with every inner range summed from scratch instead of
    read from a PrefixTable: O(n²) work for two levels and O(n³) for three.
    Meant for coarse grids.
    """
    cfg = cfg or QuadConfig.from_settings()
    report = validate_spec(spec, cfg)
    if report.verdict is Verdict.TRIVIAL:
        raise TrivialSpace(report)
    if not len(g):
        return NormResult(0.0)
    return _nested(spec, g, cfg, direct=True)
