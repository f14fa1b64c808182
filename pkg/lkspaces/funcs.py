"""
Test functions and their rearrangements.

Everything here is exact: f*, f**_(κ) and the K-functionals of the couples
(L_1,L_∞), (L_κ,L_∞) and (L_κ,∞,L_∞) are piecewise closed forms built from
prefix sums over the pieces of a non-increasing step function.
"""
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from lkspaces.exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimpleFunction:
    """Non-negative simple function given as (value, mass) pairs on disjoint sets."""
    pairs: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        for value, mass in self.pairs:
            if not mass > 0:
                raise ConfigError('masses must be positive, got {}'.format(mass), 'function')
            if not value >= 0:
                raise ConfigError('values must be non-negative, got {}'.format(value), 'function')

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> 'SimpleFunction':
        return cls(tuple((float(value), float(mass)) for value, mass in pairs))


class MonotoneStep:
    """
    Non-increasing right-continuous step function: ``values[i]`` on
    ``[breakpoints[i-1], breakpoints[i])`` with an implicit first breakpoint 0,
    and 0 from the last breakpoint on.
    """

    def __init__(self, breakpoints, values):
        breakpoints = np.array(breakpoints, dtype=float).reshape(-1)
        values = np.array(values, dtype=float).reshape(-1)

        if breakpoints.shape != values.shape:
            raise ConfigError('need one value per breakpoint', 'function')
        if breakpoints.size:
            if breakpoints[0] <= 0 or np.any(np.diff(breakpoints) <= 0):
                raise ConfigError('breakpoints must be positive and strictly increasing', 'function')
            if np.any(values < 0) or np.any(np.diff(values) > 0):
                raise ConfigError('values must be non-negative and non-increasing', 'function')
            if not np.all(np.isfinite(breakpoints)) or not np.all(np.isfinite(values)):
                raise ConfigError('breakpoints and values must be finite', 'function')

        breakpoints.setflags(write=False)
        values.setflags(write=False)
        self.breakpoints = breakpoints
        self.values = values

    @classmethod
    def from_pairs(cls, pairs) -> 'MonotoneStep':
        pairs = list(pairs)
        if any(len(pair) != 2 for pair in pairs):
            raise ConfigError('expected [breakpoint, value] pairs', 'function')
        return cls([pair[0] for pair in pairs], [pair[1] for pair in pairs])

    @classmethod
    def indicator(cls, length=1.0, height=1.0) -> 'MonotoneStep':
        return cls([length], [height])

    def to_pairs(self) -> List[List[float]]:
        return [[float(t), float(v)] for t, v in zip(self.breakpoints, self.values)]

    def __len__(self):
        return self.breakpoints.size

    def __eq__(self, other):
        return (isinstance(other, MonotoneStep)
                and np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return 'MonotoneStep({})'.format(self.to_pairs())

    @property
    def starts(self):
        return np.concatenate(([0.0], self.breakpoints[:-1]))

    @property
    def masses(self):
        return np.diff(np.concatenate(([0.0], self.breakpoints)))

    def star(self, t):
        """f*(t), vectorized."""
        t = np.asarray(t, dtype=float)
        if not len(self):
            return np.zeros_like(t)
        index = np.searchsorted(self.breakpoints, t, side='right')
        padded = np.concatenate((self.values, [0.0]))
        return padded[index]

    def power_integral(self, s, kappa=1.0):
        """∫₀^s f*(τ)^κ dτ, exact."""
        s = np.asarray(s, dtype=float)
        if not len(self):
            return np.zeros_like(s)

        powered = self.values ** kappa
        cumulative = np.concatenate(([0.0], np.cumsum(powered * self.masses)))
        index = np.searchsorted(self.breakpoints, s, side='right')

        inside = index < len(self)
        safe = np.minimum(index, len(self) - 1)
        partial = np.where(inside, (s - self.starts[safe]) * powered[safe], 0.0)
        return cumulative[index] + partial

    def norm(self, kappa=1.0) -> float:
        """‖f‖_κ."""
        return float(self.power_integral(np.inf if not len(self) else self.breakpoints[-1], kappa)) ** (1.0 / kappa)

    def scaled(self, factor) -> 'MonotoneStep':
        if factor < 0:
            raise ConfigError('scaling factor must be non-negative', 'function')
        return MonotoneStep(self.breakpoints, self.values * factor)

    def dilated(self, delta) -> 'MonotoneStep':
        """t ↦ f*(t/δ)."""
        return MonotoneStep(self.breakpoints * delta, self.values)

    def kinks(self, kappa=1.0) -> np.ndarray:
        """Points log t where f**_(κ) or the Krée K-functional changes formula."""
        return np.log(self.breakpoints) / kappa


def rearrange(f: SimpleFunction) -> MonotoneStep:
    levels = {}
    for value, mass in f.pairs:
        if value > 0:
            levels[value] = levels.get(value, 0.0) + mass

    values = sorted(levels, reverse=True)
    breakpoints = np.cumsum([levels[value] for value in values])
    return MonotoneStep(breakpoints, values)


def add_on_partition(f: SimpleFunction, g: SimpleFunction) -> SimpleFunction:
    """Value-wise sum of two simple functions defined on the same partition."""
    if len(f.pairs) != len(g.pairs):
        raise ConfigError('functions are not defined on the same partition', 'function')
    pairs = []
    for (f_value, f_mass), (g_value, g_mass) in zip(f.pairs, g.pairs):
        if not math.isclose(f_mass, g_mass, rel_tol=1e-12):
            raise ConfigError('functions are not defined on the same partition', 'function')
        pairs.append((f_value + g_value, f_mass))
    return SimpleFunction(tuple(pairs))


def primitive(g: MonotoneStep, u):
    """∫₀^u f*, which equals u·f**(u)."""
    return g.power_integral(u, 1.0)


def maximal(g: MonotoneStep, kappa: float, t):
    """f**_(κ)(t) = (1/t)(∫₀^{t^κ} (f*)^κ)^{1/κ}; κ = 1 gives f**."""
    t = np.asarray(t, dtype=float)
    inner = g.power_integral(t ** kappa, kappa)
    result = inner ** (1.0 / kappa) / t
    if result.ndim == 0:
        return float(result)
    return result


@dataclass(frozen=True)
class Peetre:
    """The couple (L_1, L_∞)."""
    kappa = 1.0

    def __str__(self):
        return 'peetre'


@dataclass(frozen=True)
class Kree:
    """The couple (L_κ, L_∞)."""
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError('κ must be positive, got {}'.format(self.kappa), 'couple')

    def __str__(self):
        return 'kree({!r})'.format(float(self.kappa))


@dataclass(frozen=True)
class Hunt:
    """The couple (L_κ,∞, L_∞)."""
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError('κ must be positive, got {}'.format(self.kappa), 'couple')

    def __str__(self):
        return 'hunt({!r})'.format(float(self.kappa))


_COUPLE = re.compile(r'^\s*(peetre|kree|hunt)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$')


def parse_couple(text, field='couple'):
    if isinstance(text, (Peetre, Kree, Hunt)):
        return text
    match = _COUPLE.match(str(text))
    if not match:
        raise ConfigError('expected peetre, kree(κ) or hunt(κ), got {!r}'.format(text), field)

    name, kappa = match.groups()
    if name == 'peetre':
        if kappa is not None:
            raise ConfigError('peetre takes no parameter', field)
        return Peetre()
    if kappa is None:
        raise ConfigError('{} needs κ'.format(name), field)
    return (Kree if name == 'kree' else Hunt)(float(kappa))


def _hunt(g: MonotoneStep, kappa: float, t):
    # sup of τ^{1/κ} v_i over a piece is reached at its right end
    s = np.asarray(t, dtype=float).reshape(-1) ** kappa
    ends = np.minimum(s[:, None], g.breakpoints[None, :])
    candidates = np.where(g.starts[None, :] < s[:, None], ends ** (1.0 / kappa) * g.values[None, :], 0.0)
    return candidates.max(axis=1).reshape(np.shape(t))


def k_functional(couple, g: MonotoneStep, t):
    t = np.asarray(t, dtype=float)
    if not len(g):
        result = np.zeros_like(t)
    elif isinstance(couple, Peetre):
        result = g.power_integral(t, 1.0)
    elif isinstance(couple, Kree):
        result = g.power_integral(t ** couple.kappa, couple.kappa) ** (1.0 / couple.kappa)
    elif isinstance(couple, Hunt):
        result = _hunt(g, couple.kappa, t)
    else:
        raise ConfigError('unknown couple {!r}'.format(couple), 'couple')

    if result.ndim == 0:
        return float(result)
    return result


def couple_kinks(couple, g: MonotoneStep) -> np.ndarray:
    """Points log t where t ↦ K(t, g) changes formula."""
    if not len(g):
        return np.array([])
    kinks = g.kinks(couple.kappa)
    if not isinstance(couple, Hunt):
        return kinks

    kappa = couple.kappa
    plateaus = g.breakpoints ** (1.0 / kappa) * g.values
    extra = []
    best = 0.0
    for i in range(len(g)):
        # The linear growth t·v_i overtakes the best plateau of earlier pieces
        if i and g.values[i] > 0:
            switch = best / g.values[i]
            if g.starts[i] < switch ** kappa < g.breakpoints[i]:
                extra.append(math.log(switch))
        best = max(best, plateaus[i])
    return np.sort(np.concatenate((kinks, extra)))


def _decomposition_cost(couple, g: MonotoneStep, t: float, levels):
    """‖(f*-c)₊‖_{A_0} + t·c for every cut level c."""
    excess = np.maximum(g.values[None, :] - levels[:, None], 0.0)
    if isinstance(couple, Peetre):
        head = (excess * g.masses).sum(axis=1)
    elif isinstance(couple, Kree):
        head = ((excess ** couple.kappa) * g.masses).sum(axis=1) ** (1.0 / couple.kappa)
    else:
        head = (excess * g.breakpoints ** (1.0 / couple.kappa)).max(axis=1)
    return head + t * levels


def k_functional_oracle(couple, g: MonotoneStep, t: float, thresholds: int = 8) -> float:
    """
    Brute-force infimum over the decompositions f = (f*-c)₊ + min(f*, c).

    For (L_1, L_∞) the cost is piecewise linear in c with corners at the values
    of f*, so the candidate set alone is exact. The other couples get a
    refinement grid of ``thresholds`` points per bracket and a bounded scalar
    search around the best candidate.
    """
    if thresholds < 2:
        raise ConfigError('need at least two thresholds per bracket', 'thresholds')
    if not len(g):
        return 0.0

    corners = np.unique(np.concatenate(([0.0], g.values)))
    fractions = np.linspace(0.0, 1.0, thresholds + 2)[1:-1]
    fill = (corners[:-1, None] + np.diff(corners)[:, None] * fractions[None, :]).reshape(-1)
    levels = np.sort(np.concatenate((corners, fill)))

    costs = _decomposition_cost(couple, g, t, levels)
    best = int(np.argmin(costs))
    value = float(costs[best])

    if not isinstance(couple, Peetre):
        low = levels[max(best - 1, 0)]
        high = levels[min(best + 1, len(levels) - 1)]
        if high > low:
            found = minimize_scalar(
                lambda c: float(_decomposition_cost(couple, g, t, np.array([c]))[0]),
                bounds=(low, high), method='bounded', options={'xatol': 1e-12 * max(high, 1.0)})
            value = min(value, float(found.fun))

    return value
