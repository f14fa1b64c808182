"""
Weighted L_q quasi-norms on (0, ∞).

All integrals are taken in the log domain x = log u, where
‖u^{λ-1/q} b(u) g(u)‖_q^q = ∫ exp(q(λx + log b(e^x) + log g(e^x))) dx.
Finite pieces are integrated with adaptive Gauss-Kronrod panels, the parts
beyond the configured log-domain bounds with a fitted tail model.
"""
import functools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import quad as scipy_quad
from scipy.optimize import minimize_scalar
from scipy.special import roots_legendre

from lkspaces.exceptions import ConfigError, Divergent, DivergentCombination, NotOnGrid, ToleranceNotMet
from lkspaces.funcs import MonotoneStep
from lkspaces.sv import One, SvExpr, Tail

logger = logging.getLogger(__name__)

# Kronrod 15-point nodes on [-1, 1] with the embedded 7-point Gauss rule
_KRONROD_NODES = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_KRONROD_WEIGHTS = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_GAUSS_WEIGHTS = np.array([
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.129484966168869693270611432679082,
    0.0,
])

# Widest initial panel, in units of log u
_PANEL_WIDTH = 1.0

# Change of the local power exponent ρ(s)(1+s) across a tail fit above
# which the tail is treated as exponential
_EXPONENTIAL_SPREAD = 0.5
_SLOPE_STEP = 0.25

# Sampling step of the sup search, in units of log u
_SUP_STEP = 0.05

_REFINE_PASSES = 60

# exp() of anything below this underflows to zero
_LOG_ZERO = -750.0


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-9
    max_panels: int = 4000
    log_domain_bounds: Tuple[float, float] = (-40.0, 40.0)
    sup_refine_iters: int = 60
    cell_width: float = 0.5
    gauss_order: int = 10

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-3:
            raise ConfigError('must lie in (0, 1e-3], got {}'.format(self.rel_tol), 'quad.rel_tol')
        if int(self.max_panels) < 1:
            raise ConfigError('must be positive', 'quad.max_panels')
        if int(self.sup_refine_iters) < 1:
            raise ConfigError('must be positive', 'quad.sup_refine_iters')
        if not self.cell_width > 0:
            raise ConfigError('must be positive', 'quad.cell_width')
        if int(self.gauss_order) < 2:
            raise ConfigError('need at least two nodes per cell', 'quad.gauss_order')

        x_min, x_max = self.log_domain_bounds
        if not x_min < x_max:
            raise ConfigError('x_min must be smaller than x_max', 'quad.log_domain_bounds')
        if x_min > -1 or x_max < 1:
            raise ConfigError('bounds must enclose [-1, 1]', 'quad.log_domain_bounds')
        object.__setattr__(self, 'log_domain_bounds', (float(x_min), float(x_max)))

    @classmethod
    def from_settings(cls, **overrides) -> 'QuadConfig':
        from django.conf import settings

        values = dict(getattr(settings, 'LK_QUAD', {}))
        values.update({key: value for key, value in overrides.items() if value is not None})

        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError('unknown fields {}'.format(', '.join(sorted(unknown))), 'quad')
        # YAML 1.1 reads 1e-9 as a string
        try:
            for name in ('rel_tol', 'cell_width'):
                if name in values:
                    values[name] = float(values[name])
            for name in ('max_panels', 'sup_refine_iters', 'gauss_order'):
                if name in values:
                    values[name] = int(values[name])
            if 'log_domain_bounds' in values:
                values['log_domain_bounds'] = tuple(float(bound) for bound in values['log_domain_bounds'])
        except (TypeError, ValueError):
            raise ConfigError('expected numbers', 'quad')
        if len(values.get('log_domain_bounds', (0, 0))) != 2:
            raise ConfigError('expected [x_min, x_max]', 'quad.log_domain_bounds')
        return cls(**values)

    def to_dict(self):
        values = asdict(self)
        values['log_domain_bounds'] = list(self.log_domain_bounds)
        return values


@dataclass(frozen=True)
class NormResult:
    """A norm value with an absolute error estimate."""
    value: float
    error: float = 0.0


def exact_power_qnorm(lam: float, q: float, T: float, S: float) -> float:
    """Closed form of ‖u^{λ-1/q}‖_{q,(T,S)}."""
    if not 0 <= T < S:
        raise ConfigError('need 0 <= T < S, got ({}, {})'.format(T, S), 'interval')

    exponent = lam * q
    if exponent == 0:
        raise DivergentCombination('λq = 0 never has a finite norm on ({}, {})'.format(T, S))
    if T == 0 and exponent < 0:
        raise DivergentCombination('λq = {} diverges at the origin'.format(exponent))
    if math.isinf(S) and exponent > 0:
        raise DivergentCombination('λq = {} diverges at infinity'.format(exponent))

    upper = 0.0 if math.isinf(S) else S ** exponent
    lower = 0.0 if T == 0 else T ** exponent
    return ((upper - lower) / exponent) ** (1.0 / q)


def _gauss_kronrod(log_phi, a, b, shift):
    """Kronrod estimates and |Kronrod - Gauss| of ∫ exp(log_phi - shift) on each panel."""
    half = (b - a) / 2
    x = ((a + b) / 2)[:, None] + half[:, None] * _KRONROD_NODES[None, :]
    with np.errstate(under='ignore', over='ignore'):
        values = np.exp(log_phi(x) - shift)
    kronrod = half * (values @ _KRONROD_WEIGHTS)
    gauss = half * (values @ _GAUSS_WEIGHTS)
    return kronrod, np.abs(kronrod - gauss)


def _shift(log_phi, a, b):
    x = ((a + b) / 2)[:, None] + ((b - a) / 2)[:, None] * _KRONROD_NODES[None, :]
    peak = np.max(log_phi(x))
    return float(peak) if np.isfinite(peak) else None


def _adaptive(log_phi, edges, cfg: QuadConfig) -> NormResult:
    """∫ exp(log_phi) dx over [edges[0], edges[-1]] with adaptive bisection."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if not a.size:
        return NormResult(0.0)

    shift = _shift(log_phi, a, b)
    if shift is None:
        return NormResult(0.0)

    span = edges[-1] - edges[0]
    frozen_value = frozen_error = 0.0
    frozen = 0
    while True:
        kronrod, error = _gauss_kronrod(log_phi, a, b, shift)
        total = frozen_value + kronrod.sum()
        total_error = frozen_error + error.sum()
        if total_error <= cfg.rel_tol * abs(total):
            scale = math.exp(shift)
            return NormResult(total * scale, total_error * scale)

        settled = error <= cfg.rel_tol * abs(total) * (b - a) / span
        frozen_value += kronrod[settled].sum()
        frozen_error += error[settled].sum()
        frozen += int(settled.sum())

        a, b = a[~settled], b[~settled]
        middle = (a + b) / 2
        a, b = np.concatenate((a, middle)), np.concatenate((middle, b))
        if frozen + a.size > cfg.max_panels:
            raise ToleranceNotMet('panel budget of {} exhausted with relative error {:.3g}'.format(
                cfg.max_panels, total_error / abs(total) if total else math.inf),
                achieved=total_error * math.exp(shift))


def _model_integral(beta, gamma, X):
    """∫_X^∞ exp(β(s-X)) ((1+s)/(1+X))^γ ds for β < 0."""
    if abs(gamma) < 1e-9:
        return 1.0 / -beta
    value, _ = scipy_quad(lambda s: math.exp(beta * (s - X) + gamma * (math.log1p(s) - math.log1p(X))),
                          X, math.inf, epsrel=1e-11, limit=200)
    return value


def _power_integral(gamma, delta, X):
    """∫_X^∞ ((1+s)/(1+X))^γ exp(δ(1/(1+s) - 1/(1+X))) ds for γ < -1."""
    epsilon = delta / (1 + X)
    # v = (1+X)/(1+s) maps the tail onto (0, 1]
    value, _ = scipy_quad(lambda v: math.exp(epsilon * (v - 1)), 0.0, 1.0, weight='alg', wvar=(-gamma - 2, 0.0),
                          epsabs=0.0, epsrel=1e-11, limit=200)
    return (1 + X) * value


def _slab(f, lo, hi):
    nodes, weights = _legendre(8)
    s = (hi + lo) / 2 + (hi - lo) / 2 * nodes
    with np.errstate(under='ignore'):
        return (hi - lo) / 2 * float(np.sum(weights * np.exp([f(value) for value in s])))


def _local_slope(f, s):
    """Slope of f at s - h/2 from two central differences, Richardson extrapolated."""
    middle = s - _SLOPE_STEP / 2

    def central(h):
        return (f(middle + h / 2) - f(middle - h / 2)) / h
    return middle, (4 * central(_SLOPE_STEP / 2) - central(_SLOPE_STEP)) / 3


def _tail_model(f, X, inner):
    """
    Outward profile fitted from the slopes at X and at ``inner``.

    Local power exponents k(s) = ρ(s)(1+s) that move by more than
    _EXPONENTIAL_SPREAD between the two points give ('exp', β, γ) for
    log φ ≈ βs + γ log(1+s); otherwise ('power', γ, δ) for
    log φ ≈ γ log(1+s) + δ/(1+s).
    """
    a, rho_a = _local_slope(f, X)
    b, rho_b = _local_slope(f, inner)
    u_a, u_b = 1 / (1 + a), 1 / (1 + b)
    k_a, k_b = rho_a / u_a, rho_b / u_b
    if abs(k_a - k_b) > _EXPONENTIAL_SPREAD:
        gamma = (rho_a - rho_b) / (u_a - u_b)
        return 'exp', rho_a - gamma * u_a, gamma
    delta = (k_a - k_b) / (u_b - u_a)
    return 'power', k_a + delta * u_a, delta


def _model_tail(model, X):
    """Integral of a fitted profile beyond X relative to its value at X; inf when it does not decay."""
    kind, first, second = model
    if kind == 'exp':
        return _model_integral(first, second, X) if first < 0 else math.inf
    return _power_integral(first, second, X) if first < -1 else math.inf


def _model_peak(model, X):
    """Log of the sup beyond X of a fitted profile that rises at X, relative to its value at X."""
    kind, first, second = model
    if kind == 'exp' and first < 0:
        peak = max(-second / first - 1, X)
        return first * (peak - X) + second * (math.log1p(peak) - math.log1p(X))
    if kind == 'power' and first < 0 and second < 0:
        peak = max(second / first - 1, X)
        return first * (math.log1p(peak) - math.log1p(X)) + second * (1 / (1 + peak) - 1 / (1 + X))
    return math.inf


def tail_result(log_phi: Callable, x_boundary: float, direction: int, sup: bool = False,
                label: str = '') -> NormResult:
    """
    Contribution of exp(log_phi) beyond ``x_boundary`` in ``direction``
    (+1 towards infinity, -1 towards the origin): the integral, or the sup
    when ``sup`` is set, with an error estimate.

    The outward profile is fitted from the slopes at the boundary and at half
    of it (see _tail_model); refitting with three quarters of it instead
    gives the error. Anything that does not decay is reported as Divergent.
    """
    side = Tail.INFINITY if direction > 0 else Tail.ORIGIN
    X = direction * x_boundary
    message = '{}: integrand does not decay towards {}'.format(label or 'norm', side.value)

    def f(s):
        return max(float(log_phi(direction * s)), _LOG_ZERO)

    edge = float(log_phi(x_boundary))
    if math.isnan(edge) or edge == math.inf:
        raise Divergent(message, side, label)
    if edge <= _LOG_ZERO or math.exp(edge) == 0.0:
        return NormResult(0.0)
    phi = math.exp(edge)

    if sup:
        # A profile already falling at the boundary peaks there
        if _local_slope(f, X)[1] <= 0:
            return NormResult(phi)
        rise = _model_peak(_tail_model(f, X, X / 2), X)
        if math.isinf(rise):
            raise Divergent(message, side, label)
        return NormResult(math.exp(edge + rise))

    model = _tail_model(f, X, X / 2)
    logger.debug('{}: {} tail fit at {} {:.4g} {:.4g}'.format(label, model[0], side.value, model[1], model[2]))
    value = _model_tail(model, X)
    if math.isinf(value):
        raise Divergent(message, side, label)
    if model[0] == 'power':
        slabs = [_slab(f, X - (k + 1) * math.log(2), X - k * math.log(2)) for k in range(3)]
        if slabs[0] >= slabs[1] >= slabs[2] > 0:
            raise Divergent(message + ' (octave contributions do not shrink)', side, label)

    check = _model_tail(_tail_model(f, X, 0.75 * X), X)
    error = abs(check - value) if math.isfinite(check) else value
    return NormResult(phi * value, phi * error)


def tail_estimate(log_phi: Callable, x_boundary: float, direction: int, sup: bool = False, label: str = '') -> float:
    """The value of tail_result."""
    return tail_result(log_phi, x_boundary, direction, sup, label).value


def _log_g(g):
    """log g as a function of x = log u, for None (g ≡ 1) or a vectorized callable."""
    if g is None:
        return lambda x: np.zeros_like(x)

    def log_g(x):
        with np.errstate(divide='ignore'):
            return np.log(g(np.exp(x)))
    return log_g


def _pieces(g, T, S, breakpoints):
    """(lo, hi, log g) triples in u covering the support of g inside (T, S)."""
    if isinstance(g, MonotoneStep):
        pieces = []
        for start, end, value in zip(g.starts, g.breakpoints, g.values):
            lo, hi = max(start, T), min(end, S)
            if hi > lo and value > 0:
                log_value = math.log(value)
                pieces.append((lo, hi, lambda x, c=log_value: np.full_like(x, c)))
        return pieces

    log_g = _log_g(g)
    cuts = sorted({T, S} | {float(point) for point in breakpoints if T < point < S})
    return [(lo, hi, log_g) for lo, hi in zip(cuts[:-1], cuts[1:])]


def _panel_edges(start, end, kinks=()):
    cuts = sorted({start, end} | {k for k in kinks if start < k < end})
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        count = max(1, int(math.ceil((hi - lo) / _PANEL_WIDTH)))
        edges.extend(np.linspace(lo, hi, count + 1)[:-1])
    edges.append(cuts[-1])
    return np.array(edges)


def _log_sup(f, a, b, cfg: QuadConfig) -> float:
    count = max(3, int(math.ceil((b - a) / _SUP_STEP)) + 1)
    x = np.linspace(a, b, count)
    if a < 0 < b:
        x = np.sort(np.append(x, 0.0))
    values = f(x)
    k = int(np.argmax(values))
    best = float(values[k])
    if not np.isfinite(best):
        return best

    lo, hi = x[max(k - 1, 0)], x[min(k + 1, x.size - 1)]
    if hi > lo:
        found = minimize_scalar(lambda point: -float(f(np.array(point))), bounds=(lo, hi), method='bounded',
                                options={'maxiter': int(cfg.sup_refine_iters), 'xatol': 1e-12})
        best = max(best, -float(found.fun))
    return best


def _check_interval(interval):
    T, S = interval
    T, S = float(T), float(S)
    if not 0 <= T < S:
        raise ConfigError('need 0 <= T < S, got ({}, {})'.format(T, S), 'interval')
    return T, S


def weighted_qnorm_result(g, lam: float, q: float, b: Optional[SvExpr] = None, interval=(0.0, math.inf),
                          cfg: Optional[QuadConfig] = None, breakpoints: Sequence[float] = (),
                          label: str = '') -> NormResult:
    """
    ‖u^{λ-1/q} b(u) g(u)‖_{q,(T,S)} with its error estimate.

    ``g`` is a MonotoneStep (its f* is used), a vectorized callable of u, or
    None for g ≡ 1. ``breakpoints`` are the points in u where a callable g
    is not smooth.
    """
    cfg = cfg or QuadConfig.from_settings()
    b = b or One()
    T, S = _check_interval(interval)
    if not q > 0:
        raise ConfigError('must be positive, got {}'.format(q), 'q')
    x_min, x_max = cfg.log_domain_bounds

    pieces = _pieces(g, T, S, breakpoints)
    if not pieces:
        return NormResult(0.0)

    total = error = 0.0
    tails = []
    for lo, hi, log_g in pieces:
        def log_psi(x, log_g=log_g):
            x = np.asarray(x, dtype=float)
            return lam * x + b.log_eval(x) + log_g(x)

        upper = None if math.isinf(hi) else math.log(hi)
        lower = None if lo == 0 else math.log(lo)
        start = lower if lower is not None else min(x_min, (upper if upper is not None else x_max) - 1.0)
        end = upper if upper is not None else max(x_max, (lower if lower is not None else x_min) + 1.0)

        if math.isinf(q):
            total = max(total, math.exp(_log_sup(log_psi, start, end, cfg)))
            if lower is None:
                tails.append(tail_result(log_psi, start, -1, sup=True, label=label))
            if upper is None:
                tails.append(tail_result(log_psi, end, 1, sup=True, label=label))
            continue

        def log_phi(x, log_psi=log_psi):
            return q * log_psi(x)

        result = _adaptive(log_phi, _panel_edges(start, end, (0.0,)), cfg)
        total += result.value
        error += result.error
        if lower is None:
            tails.append(tail_result(log_phi, start, -1, label=label))
        if upper is None:
            tails.append(tail_result(log_phi, end, 1, label=label))

    if math.isinf(q):
        return NormResult(max([total] + [tail.value for tail in tails]), 0.0)

    tail = sum(item.value for item in tails)
    if tail > 1e-12 * (total + tail):
        logger.info('{}: truncation tail {:.3g} added to a total of {:.3g}'.format(label or 'norm', tail, total))
    total += tail
    error += sum(item.error for item in tails)

    value = total ** (1.0 / q)
    return NormResult(value, value * error / (q * total) if total else 0.0)


def weighted_qnorm(g, lam: float, q: float, b: Optional[SvExpr] = None, interval=(0.0, math.inf),
                   cfg: Optional[QuadConfig] = None, breakpoints: Sequence[float] = ()) -> float:
    return weighted_qnorm_result(g, lam, q, b, interval, cfg, breakpoints).value


@functools.lru_cache(maxsize=None)
def _legendre(order):
    return roots_legendre(order)


@functools.lru_cache(maxsize=None)
def _legendre_inverse(order):
    """Maps values at the Gauss-Legendre nodes to Legendre coefficients."""
    nodes, _ = _legendre(order)
    inverse = np.linalg.inv(legendre.legvander(nodes, order - 1))
    inverse.setflags(write=False)
    return inverse


@functools.lru_cache(maxsize=None)
def legendre_cell(order: int):
    """
    Sample positions, weights and running-integral matrix of one cell [-1, 1].

    The positions are the cell's left edge, the ``order`` Gauss-Legendre
    nodes and the right edge. ``running[i] @ values`` is the integral from -1
    to position i of the polynomial interpolating ``values`` at the nodes;
    edge samples carry zero weight.
    """
    nodes, weights = _legendre(order)
    antiderivative = legendre.legint(_legendre_inverse(order), lbnd=-1, axis=0)
    inner = legendre.legval(nodes, antiderivative).T

    size = order + 2
    running = np.zeros((size, size))
    running[1:-1, 1:-1] = inner
    running[-1, 1:-1] = weights

    positions = np.concatenate(([-1.0], nodes, [1.0]))
    padded = np.concatenate(([0.0], weights, [0.0]))
    for array in (positions, padded, running):
        array.setflags(write=False)
    return positions, padded, running


class NodeGrid:
    """
    Log-domain cells, each sampled at its edges and Gauss-Legendre nodes.

    Every nesting level of a norm evaluates on the same samples, so running
    integrals, range integrals and sups are array operations on one grid.
    """

    def __init__(self, edges, cfg: QuadConfig):
        edges = np.unique(np.asarray(edges, dtype=float))
        positions, weights, running = legendre_cell(int(cfg.gauss_order))

        self.cfg = cfg
        self.lo, self.hi = edges[:-1], edges[1:]
        half = (self.hi - self.lo) / 2
        self.x = ((self.hi + self.lo) / 2)[:, None] + half[:, None] * positions[None, :]
        self.w = half[:, None] * weights[None, :]
        self.R = half[:, None, None] * running[None, :, :]

        cells, size = self.x.shape
        self.cell = np.repeat(np.arange(cells), size)
        self.local = np.tile(np.arange(size), cells)
        self.xs = self.x.reshape(-1)
        self.ws = self.w.reshape(-1)
        self.error = 0.0

    def __len__(self):
        return self.xs.size

    @property
    def bounds(self):
        return float(self.lo[0]), float(self.hi[-1])

    @classmethod
    def build(cls, kinks, cfg: QuadConfig, log_phi: Optional[Callable] = None) -> 'NodeGrid':
        """
        Grid over the configured bounds, widened to contain every kink, with
        cuts at the kinks and at x = 0. ``log_phi`` drives adaptive refinement.
        """
        kinks = np.asarray([k for k in kinks if np.isfinite(k)], dtype=float)
        x_min, x_max = cfg.log_domain_bounds
        if kinks.size:
            x_min = min(x_min, float(kinks.min()) - 1.0)
            x_max = max(x_max, float(kinks.max()) + 1.0)

        cuts = np.unique(np.concatenate(([x_min, 0.0, x_max], kinks)))
        edges = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            count = max(1, int(math.ceil((hi - lo) / cfg.cell_width)))
            edges.extend(np.linspace(lo, hi, count + 1)[:-1])
        edges.append(cuts[-1])

        grid = cls(edges, cfg)
        if log_phi is not None:
            grid = grid.refined(log_phi)
        return grid

    def refined(self, log_phi: Callable) -> 'NodeGrid':
        """Bisect cells until the Gauss-Kronrod estimate of ∫ exp(log_phi) meets rel_tol."""
        cfg = self.cfg
        edges = np.concatenate((self.lo, self.hi[-1:]))
        span = edges[-1] - edges[0]
        relative = 0.0

        for _ in range(_REFINE_PASSES):
            a, b = edges[:-1], edges[1:]
            shift = _shift(log_phi, a, b)
            if shift is None:
                break
            kronrod, error = _gauss_kronrod(log_phi, a, b, shift)
            total = kronrod.sum()
            relative = error.sum() / total if total > 0 else 0.0
            if relative <= cfg.rel_tol:
                break

            split = error > cfg.rel_tol * total * (b - a) / span
            if a.size + int(split.sum()) > cfg.max_panels:
                logger.warning('Cell budget of {} reached at relative error {:.3g}'.format(cfg.max_panels, relative))
                break
            edges = np.sort(np.concatenate((edges, ((a + b) / 2)[split])))

        grid = NodeGrid(edges, cfg)
        grid.error = relative
        return grid

    def running(self, values) -> np.ndarray:
        """∫ from the left end of the grid to every sample."""
        values = np.asarray(values, dtype=float).reshape(self.x.shape)
        totals = (self.w * values).sum(axis=1)
        before = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
        local = np.einsum('cij,cj->ci', self.R, values)
        return (before[:, None] + local).reshape(-1)

    def running_right(self, values) -> np.ndarray:
        """∫ from every sample to the right end of the grid, summed from the right."""
        values = np.asarray(values, dtype=float).reshape(self.x.shape)
        totals = (self.w * values).sum(axis=1)
        after = np.concatenate((np.cumsum(totals[::-1])[::-1][1:], [0.0]))
        local = np.einsum('cij,cj->ci', self.w[:, None, :] - self.R, values)
        return (after[:, None] + local).reshape(-1)

    def total(self, values) -> float:
        return float(np.dot(self.ws, np.asarray(values, dtype=float).reshape(-1)))

    def coefficients(self, values) -> np.ndarray:
        """Per cell, the Legendre coefficients of the polynomial through the node samples."""
        inverse = _legendre_inverse(int(self.cfg.gauss_order))
        return np.asarray(values, dtype=float).reshape(self.x.shape)[:, 1:-1] @ inverse.T

    def quadrature_error(self, values) -> float:
        """The top two Legendre coefficients of every cell, integrated: an error estimate for total()."""
        top = np.abs(self.coefficients(values)[:, -2:]).sum(axis=1)
        return float(np.dot(self.hi - self.lo, top))

    def interpolant(self, log_values) -> Callable:
        """Cellwise polynomial interpolation of sampled log values, for tail fits."""
        coefficients = self.coefficients(np.maximum(log_values, _LOG_ZERO))
        degree = coefficients.shape[1] - 1

        def evaluate(x):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1)
            cell = np.clip(np.searchsorted(self.hi, flat), 0, self.lo.size - 1)
            z = (2 * flat - self.lo[cell] - self.hi[cell]) / (self.hi[cell] - self.lo[cell])
            values = np.einsum('kj,kj->k', legendre.legvander(z, degree), coefficients[cell])
            return np.maximum(values, _LOG_ZERO).reshape(x.shape)
        return evaluate

    def tail(self, log_values, direction: int, sup: bool = False, label: str = '') -> NormResult:
        """Contribution beyond one end of the grid of a sampled log integrand."""
        x_min, x_max = self.bounds
        return tail_result(self.interpolant(log_values), x_min if direction < 0 else x_max, direction,
                           sup=sup, label=label)

    def left_weights(self, index) -> np.ndarray:
        """Row k holds the weights of ∫ from the left end of the grid to sample index[k]."""
        index = np.atleast_1d(index)
        cells, local = self.cell[index], self.local[index]
        earlier = self.cell[None, :] < cells[:, None]
        same = self.cell[None, :] == cells[:, None]
        partial = self.R[cells[:, None], local[:, None], self.local[None, :]]
        return np.where(earlier, self.ws[None, :], 0.0) + np.where(same, partial, 0.0)

    def right_weights(self, index) -> np.ndarray:
        """Row k holds the weights of ∫ from sample index[k] to the right end of the grid."""
        index = np.atleast_1d(index)
        cells, local = self.cell[index], self.local[index]
        later = self.cell[None, :] > cells[:, None]
        same = self.cell[None, :] == cells[:, None]
        partial = self.R[cells[:, None], local[:, None], self.local[None, :]]
        return np.where(later, self.ws[None, :], 0.0) + np.where(same, self.ws[None, :] - partial, 0.0)

    def prefix(self, values, q: float, head: float = 0.0, rest: float = 0.0) -> 'PrefixTable':
        """
        PrefixTable on the samples. ``values`` are the q-th powers of the
        integrand, or the integrand itself when q = ∞.
        """
        values = np.asarray(values, dtype=float)
        nodes = np.exp(self.xs)
        if math.isinf(q):
            segments = np.maximum(values[:-1], values[1:])
            return PrefixTable(nodes, np.maximum.accumulate(values), q, _sparse_table(segments), head, rest)
        return PrefixTable(nodes, self.running(values), q, None, head, rest, self.running_right(values))


def _sparse_table(values):
    """Range-maximum levels: level k holds maxima over windows of 2^k entries."""
    levels = [np.asarray(values, dtype=float)]
    width = 1
    while 2 * width <= levels[0].size:
        previous = levels[-1]
        current = np.zeros_like(previous)
        current[:previous.size - width] = np.maximum(previous[:-width], previous[width:])
        levels.append(current)
        width *= 2
    return np.vstack(levels) if levels[0].size else np.zeros((1, 0))


@dataclass(frozen=True, eq=False)
class PrefixTable:
    """
    Cumulative q-th powers (q < ∞) or running maxima (q = ∞) on sorted nodes.

    ``head`` is the contribution of (0, nodes[0]) and ``rest`` that of
    (nodes[-1], ∞). For q = ∞ ``sparse`` answers range maxima over the
    segments between consecutive nodes. ``remaining`` holds the q-th powers
    from each node to the last one, summed from the right, so that ranges
    near either end are differences of small numbers.
    """
    nodes: np.ndarray
    cumulative: np.ndarray
    q: float
    sparse: Optional[np.ndarray] = None
    head: float = 0.0
    rest: float = 0.0
    remaining: Optional[np.ndarray] = None

    def _power(self, values):
        return np.maximum(values, 0.0) ** (1.0 / self.q)

    def _remaining(self):
        if self.remaining is None:
            return self.cumulative[-1] - self.cumulative
        return self.remaining

    def segment_max(self, i, j):
        """Max over the segments i..j-1, vectorized; 0 for empty ranges."""
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        count = j - i
        size = self.sparse.shape[1]
        if not size:
            return np.zeros(count.shape)

        level = np.floor(np.log2(np.maximum(count, 1))).astype(int)
        first = np.clip(i, 0, size - 1)
        last = np.clip(j - 2 ** level, 0, size - 1)
        values = np.maximum(self.sparse[level, first], self.sparse[level, last])
        return np.where(count > 0, values, 0.0)

    def between(self, i, j):
        """Norms over (nodes[i], nodes[j]) for index arrays."""
        if math.isinf(self.q):
            return self.segment_max(i, j)
        remaining = self._remaining()
        from_left = self.cumulative[j] - self.cumulative[i]
        from_right = remaining[i] - remaining[j]
        return self._power(np.where(self.cumulative[j] <= remaining[i], from_left, from_right))

    def from_origin(self, j):
        """Norms over (0, nodes[j])."""
        if math.isinf(self.q):
            return np.maximum(self.head, self.cumulative[j])
        return self._power(self.head + self.cumulative[j])

    def to_infinity(self, i):
        """Norms over (nodes[i], ∞)."""
        last = self.nodes.size - 1
        if math.isinf(self.q):
            return np.maximum(self.rest, self.segment_max(i, np.full_like(np.asarray(i), last)))
        return self._power(self._remaining()[i] + self.rest)

    def index(self, point, last=False) -> int:
        side = 'right' if last else 'left'
        position = int(np.searchsorted(self.nodes, point, side=side)) - (1 if last else 0)
        if not 0 <= position < self.nodes.size or not math.isclose(self.nodes[position], point, rel_tol=1e-12):
            raise NotOnGrid('{} is not a node of the table'.format(point))
        return position


def _contains(grid, point):
    position = int(np.searchsorted(grid, point))
    return any(math.isclose(grid[k], point, rel_tol=1e-12) for k in (position - 1, position) if 0 <= k < grid.size)


def build_prefix(g, lam: float, q: float, b: Optional[SvExpr], grid: Sequence[float],
                 cfg: Optional[QuadConfig] = None, breakpoints: Sequence[float] = ()) -> PrefixTable:
    """
    Prefix table of ‖u^{λ-1/q} b(u) g(u)‖_q over the segments of ``grid``,
    each segment integrated with the same adaptive rule as weighted_qnorm.
    """
    cfg = cfg or QuadConfig.from_settings()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError('grid must be sorted, strictly increasing and positive', 'grid')

    kinks = list(g.breakpoints) if isinstance(g, MonotoneStep) else list(breakpoints)
    for point in kinks:
        if grid[0] < point < grid[-1] and not _contains(grid, point):
            raise ConfigError('grid must contain every breakpoint, {} is missing'.format(point), 'grid')

    segments = np.array([
        weighted_qnorm_result(g, lam, q, b, (lo, hi), cfg, breakpoints).value
        for lo, hi in zip(grid[:-1], grid[1:])
    ])

    if math.isinf(q):
        running = np.concatenate(([0.0], np.maximum.accumulate(segments))) if segments.size else np.zeros(1)
        return PrefixTable(grid, running, q, _sparse_table(segments))

    powers = segments ** q
    cumulative = np.concatenate(([0.0], np.cumsum(powers)))
    remaining = np.concatenate((np.cumsum(powers[::-1])[::-1], [0.0]))
    return PrefixTable(grid, cumulative, q, remaining=remaining)


def qnorm_from_prefix(table: PrefixTable, T: float, S: float) -> float:
    """Norm over (T, S) for grid nodes T < S; T = 0 and S = ∞ use the table's end contributions."""
    if not T < S:
        raise ConfigError('need T < S, got ({}, {})'.format(T, S), 'interval')

    if T == 0 and math.isinf(S):
        if math.isinf(table.q):
            return float(max(table.head, table.cumulative[-1], table.rest))
        return float((table.head + table.cumulative[-1] + table.rest) ** (1.0 / table.q))
    if T == 0:
        return float(table.from_origin(table.index(S, last=True)))
    if math.isinf(S):
        return float(table.to_infinity(table.index(T)))
    return float(table.between(table.index(T), table.index(S, last=True)))
