"""
Slowly varying functions as immutable expression trees.

Every node evaluates in the log domain: ``log_eval(x)`` returns
``log b(e^x)`` for a numpy array ``x``. The basic leaf is
ℓ(t) = 1 + |log t|, so an expression only ever sees |x| and the
reciprocal b(1/t) is obtained by negating ``x``.
"""
import enum
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from lkspaces.exceptions import ConfigError, EvaluationRangeError

logger = logging.getLogger(__name__)


class Finiteness(enum.Enum):
    FINITE = 'finite'
    INFINITE = 'infinite'
    UNKNOWN = 'unknown'


class Tail(enum.Enum):
    ORIGIN = 'origin'
    INFINITY = 'infinity'


def _num(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


class SvExpr:
    def log_eval(self, x):
        raise NotImplementedError

    def __call__(self, t):
        return sv_eval(self, t)

    def __mul__(self, other):
        return Product(self, other)

    def __pow__(self, lam):
        return Power(self, lam)


@dataclass(frozen=True)
class One(SvExpr):
    def log_eval(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def __str__(self):
        return '1'


@dataclass(frozen=True)
class LogPow(SvExpr):
    alpha: float

    def log_eval(self, x):
        return self.alpha * np.log1p(np.abs(x))

    def __str__(self):
        return 'lpow({})'.format(_num(self.alpha))


@dataclass(frozen=True)
class IterLogPow(SvExpr):
    depth: int
    alpha: float

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 1:
            raise ConfigError('depth must be a positive integer, got {}'.format(self.depth), 'iterlog')

    def log_eval(self, x):
        # ℓ ≥ 1, so every further composition is 1 + log of the previous value
        y = np.abs(np.asarray(x, dtype=float))
        for _ in range(int(self.depth)):
            y = np.log1p(y)
        return self.alpha * y

    def __str__(self):
        return 'iterlog({},{})'.format(int(self.depth), _num(self.alpha))


@dataclass(frozen=True)
class ExpLogPow(SvExpr):
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError('exponent must lie in (0, 1), got {}'.format(self.alpha), 'explog')

    def log_eval(self, x):
        return np.abs(np.asarray(x, dtype=float)) ** self.alpha

    def __str__(self):
        return 'explog({})'.format(_num(self.alpha))


@dataclass(frozen=True)
class Product(SvExpr):
    left: SvExpr
    right: SvExpr

    def log_eval(self, x):
        return self.left.log_eval(x) + self.right.log_eval(x)

    def __str__(self):
        return 'mul({},{})'.format(self.left, self.right)


@dataclass(frozen=True)
class Power(SvExpr):
    inner: SvExpr
    lam: float

    def log_eval(self, x):
        return self.lam * self.inner.log_eval(x)

    def __str__(self):
        return 'pow({},{})'.format(self.inner, _num(self.lam))


@dataclass(frozen=True)
class Reciprocal(SvExpr):
    inner: SvExpr

    def log_eval(self, x):
        return self.inner.log_eval(-np.asarray(x, dtype=float))

    def __str__(self):
        return 'recip({})'.format(self.inner)


@dataclass(frozen=True)
class ComposeScaled(SvExpr):
    """b(t^α b₁(t)); α > 0 keeps the argument equivalent to an increasing function."""
    inner: SvExpr
    alpha: float
    factor: SvExpr

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError('scaling exponent must be positive, got {}'.format(self.alpha), 'compose')

    def log_eval(self, x):
        x = np.asarray(x, dtype=float)
        return self.inner.log_eval(self.alpha * x + self.factor.log_eval(x))

    def __str__(self):
        return 'compose({},{},{})'.format(self.inner, _num(self.alpha), self.factor)


@dataclass(frozen=True)
class Tabulated(SvExpr):
    """
    A weight known only at sample points, interpolated linearly in the log
    domain and held constant beyond the first and last sample.
    """
    name: str
    xs: Tuple[float, ...]
    log_values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) < 2 or len(self.xs) != len(self.log_values):
            raise ConfigError('need at least two samples and one value per sample', 'tabulated')
        if np.any(np.diff(self.xs) <= 0):
            raise ConfigError('sample points must increase', 'tabulated')

    @classmethod
    def from_function(cls, name, log_function, xs) -> 'Tabulated':
        xs = np.asarray(xs, dtype=float)
        return cls(name, tuple(float(x) for x in xs), tuple(float(log_function(x)) for x in xs))

    def log_eval(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.log_values)

    def __str__(self):
        return self.name


def sv_eval_log(expr: SvExpr, x):
    values = expr.log_eval(x)
    if not np.all(np.isfinite(values)):
        raise EvaluationRangeError('{} is not finite for log t in [{}, {}]'.format(
            expr, np.min(x), np.max(x)))
    return values


def sv_eval(expr: SvExpr, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise EvaluationRangeError('{} evaluated at non-positive t'.format(expr))

    with np.errstate(over='ignore'):
        values = np.exp(sv_eval_log(expr, np.log(t)))

    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise EvaluationRangeError('{} overflows for t in [{}, {}]'.format(expr, t.min(), t.max()))

    if values.ndim == 0:
        return float(values)
    return values


def dilate(expr: SvExpr, kappa: float) -> SvExpr:
    """The transformed weight t ↦ b(t^{1/κ})."""
    if kappa == 1:
        return expr
    return ComposeScaled(expr, 1.0 / kappa, One())


def equivalence_constant(expr: SvExpr, eps: float, x) -> float:
    """
    Smallest C for which t^ε b(t) is within a factor C of a non-decreasing
    function and t^{-ε} b(t) within C of a non-increasing one on the grid.
    """
    x = np.sort(np.asarray(x, dtype=float))
    log_b = sv_eval_log(expr, x)

    rising = eps * x + log_b
    falling = -eps * x + log_b

    # Running maximum is the least non-decreasing majorant of the samples
    rise_c = np.max(np.maximum.accumulate(rising) - rising)
    fall_c = np.max(falling - np.minimum.accumulate(falling))
    return float(np.exp(max(rise_c, fall_c)))


# Growth orders: ('exp', α) for exp(|x|^α), ('log', k) for the k-fold ℓ
Profile = Dict[Tuple[str, float], float]


def log_profile(expr: SvExpr) -> Optional[Profile]:
    if isinstance(expr, One):
        return {}
    if isinstance(expr, LogPow):
        return {('log', 1): expr.alpha}
    if isinstance(expr, IterLogPow):
        return {('log', int(expr.depth)): expr.alpha}
    if isinstance(expr, ExpLogPow):
        return {('exp', expr.alpha): 1.0}
    if isinstance(expr, Product):
        left, right = log_profile(expr.left), log_profile(expr.right)
        if left is None or right is None:
            return None
        merged = dict(left)
        for key, exponent in right.items():
            merged[key] = merged.get(key, 0.0) + exponent
        return merged
    if isinstance(expr, Power):
        inner = log_profile(expr.inner)
        if inner is None:
            return None
        return {key: expr.lam * exponent for key, exponent in inner.items()}
    if isinstance(expr, Reciprocal):
        # Every profiled leaf is even in log t
        return log_profile(expr.inner)
    if isinstance(expr, ComposeScaled):
        inner = log_profile(expr.inner)
        if inner is None:
            return None
        if all(kind == 'log' for kind, _ in inner):
            return inner
        if not isinstance(expr.factor, One):
            return None
        return {(kind, order): exponent * (expr.alpha ** order if kind == 'exp' else 1.0)
                for (kind, order), exponent in inner.items()}
    return None


def _ordered(profile: Profile):
    exps = sorted(((k, e) for k, e in profile.items() if k[0] == 'exp'), key=lambda item: -item[0][1])
    logs = sorted(((k, e) for k, e in profile.items() if k[0] == 'log'), key=lambda item: item[0][1])
    return [(k, e) for k, e in exps + logs if abs(e) > 1e-12]


def _decide(profile: Profile, q: float) -> Finiteness:
    items = _ordered(profile)

    if math.isinf(q):
        if not items or items[0][1] < 0:
            return Finiteness.FINITE
        return Finiteness.INFINITE

    expected_depth = 1
    for (kind, order), exponent in items:
        if kind == 'exp':
            return Finiteness.FINITE if exponent < 0 else Finiteness.INFINITE

        if order > expected_depth:
            # A missing depth has exponent 0, which is above the critical -1
            return Finiteness.INFINITE

        c = q * exponent
        if math.isclose(c, -1.0, abs_tol=1e-12):
            expected_depth = order + 1
            continue
        return Finiteness.FINITE if c < -1 else Finiteness.INFINITE

    return Finiteness.INFINITE


def sv_finiteness(expr: SvExpr, lam: float, q: float, tail: Tail) -> Finiteness:
    """
    Is ‖u^{λ-1/q} b(u)‖_q finite on (1,∞) (tail INFINITY) or on (0,1) (tail ORIGIN)?
    """
    if lam != 0:
        # Any power beats a slowly varying factor
        if tail is Tail.INFINITY:
            return Finiteness.FINITE if lam < 0 else Finiteness.INFINITE
        return Finiteness.FINITE if lam > 0 else Finiteness.INFINITE

    profile = log_profile(expr)
    if profile is None:
        return Finiteness.UNKNOWN
    return _decide(profile, q)


def _from_exponents(exponents: Dict[int, float]) -> SvExpr:
    result = None
    for depth in sorted(exponents):
        exponent = exponents[depth]
        if abs(exponent) < 1e-12:
            continue
        leaf = LogPow(exponent) if depth == 1 else IterLogPow(depth, exponent)
        result = leaf if result is None else Product(result, leaf)
    return result if result is not None else One()


def norm_profile(expr: SvExpr, q: float, kind: str) -> Optional[SvExpr]:
    """
    An SV expression equivalent, for large t, to ‖u^{-1/q} b(u)‖_{q,(1,t)}
    (kind 'growth') or ‖u^{-1/q} b(u)‖_{q,(t,∞)} (kind 'tail'). The same
    expression describes the mirrored norms towards the origin.

    Returns None when b is outside the iterated-logarithm family or when the
    tail norm is infinite.
    """
    profile = log_profile(expr)
    if profile is None or any(k[0] == 'exp' for k, e in profile.items() if abs(e) > 1e-12):
        return None

    finite = _decide(profile, q) is Finiteness.FINITE
    exponents = {depth: e for (_, depth), e in profile.items()}

    if math.isinf(q):
        items = _ordered(profile)
        leading = items[0][1] if items else 0.0
        if kind == 'tail':
            return _from_exponents(exponents) if finite else None
        return _from_exponents(exponents) if leading > 0 else One()

    if kind == 'growth' and finite:
        return One()
    if kind == 'tail' and not finite:
        return None

    # The first depth whose power is not critical carries the primitive
    scaled = {depth: q * e for depth, e in exponents.items()}
    depth = 1
    while math.isclose(scaled.get(depth, 0.0), -1.0, abs_tol=1e-12):
        depth += 1

    primitive = {k: c for k, c in scaled.items() if k > depth}
    primitive[depth] = scaled.get(depth, 0.0) + 1.0
    return _from_exponents({k: c / q for k, c in primitive.items()})


_TOKEN = re.compile(r'\s*(?:(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[a-z]+)|(?P<punct>[(),]))')


class _Parser:
    def __init__(self, text, field):
        self.text = text
        self.field = field
        self.pos = 0

    def fail(self, message):
        raise ConfigError('{} at offset {} in {!r}'.format(message, self.pos, self.text), self.field)

    def peek(self):
        match = _TOKEN.match(self.text, self.pos)
        if not match or match.end() == self.pos:
            return None, None, self.pos
        kind = match.lastgroup
        return kind, match.group(kind), match.end()

    def take(self, kind, value=None):
        token_kind, token, end = self.peek()
        if token_kind != kind or (value is not None and token != value):
            self.fail('expected {!r}'.format(value or kind))
        self.pos = end
        return token

    def number(self):
        return float(self.take('number'))

    def expr(self) -> SvExpr:
        kind, token, end = self.peek()
        if kind == 'number':
            if float(token) != 1:
                self.fail('only the constant 1 is a valid leaf')
            self.pos = end
            return One()
        if kind != 'name':
            self.fail('expected an expression')
        self.pos = end

        self.take('punct', '(')
        if token == 'lpow':
            node = LogPow(self.number())
        elif token == 'iterlog':
            depth = self.number()
            self.take('punct', ',')
            node = IterLogPow(int(depth) if depth.is_integer() else depth, self.number())
        elif token == 'explog':
            node = ExpLogPow(self.number())
        elif token == 'mul':
            left = self.expr()
            self.take('punct', ',')
            node = Product(left, self.expr())
        elif token == 'pow':
            inner = self.expr()
            self.take('punct', ',')
            node = Power(inner, self.number())
        elif token == 'recip':
            node = Reciprocal(self.expr())
        elif token == 'compose':
            inner = self.expr()
            self.take('punct', ',')
            alpha = self.number()
            self.take('punct', ',')
            node = ComposeScaled(inner, alpha, self.expr())
        else:
            self.fail('unknown function {!r}'.format(token))
        self.take('punct', ')')
        return node


def parse_sv(text, field='sv') -> SvExpr:
    if isinstance(text, SvExpr):
        return text
    if isinstance(text, (int, float)) and text == 1:
        return One()
    if not isinstance(text, str):
        raise ConfigError('expected an SV expression string, got {!r}'.format(text), field)

    parser = _Parser(text, field)
    expr = parser.expr()
    if text[parser.pos:].strip():
        parser.fail('trailing input')
    return expr


def catalog():
    from django.conf import settings
    return [parse_sv(text, 'LK_SV_CATALOG') for text in settings.LK_SV_CATALOG]
