import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import exp1

from lkspaces.exceptions import ConfigError, TrivialSpace
from lkspaces.funcs import Hunt, Kree, MonotoneStep, Peetre, SimpleFunction, add_on_partition, rearrange
from lkspaces.quad import QuadConfig
from lkspaces.spaces import (DoubleStar, Family, InterpSpec, Integrand, Method, SpaceSpec, Star, Verdict, evaluate,
                             interp_norm, nested_norm, nested_norm_direct, parse_interp, parse_space, parse_star_mode,
                             space_norm, validate_spec)
from lkspaces.sv import LogPow, One, Tabulated

cfg = QuadConfig()
indicator = MonotoneStep.indicator()

# Up to four (value, mass) pairs of a simple function
pairs = st.lists(st.tuples(st.floats(min_value=0.1, max_value=10), st.floats(min_value=0.1, max_value=10)),
                 min_size=1, max_size=4)


def _integrate(function, cuts=()):
    """∫ over the real line with scipy quad, split at ``cuts``."""
    edges = [-math.inf] + sorted(set(cuts)) + [math.inf]
    return sum(quad(function, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
               for lo, hi in zip(edges[:-1], edges[1:]))


def _ell(x):
    return 1 + abs(x)


def _rr_oracle(d, double_star):
    """RR(2,2,2,2) with b = c = ℓ^{-1} on χ(0,d), the two outer levels swapped into one integral."""
    log_d = math.log(d)

    def inner(x):
        # ‖u^{1/2} h(u)‖² over (e^x, ∞) with h = f* or f**
        if x < log_d:
            return (2 * d if double_star else d) - math.exp(x)
        return d * d * math.exp(-x) if double_star else 0.0

    def below(y):
        # ∫ from -∞ to y of ℓ^{-2}
        return 1 / (1 - y) if y < 0 else 2 - 1 / (1 + y)
    return math.sqrt(_integrate(lambda y: inner(y) * below(y) / _ell(y) ** 2, (0.0, log_d)))


def _ll_oracle(d):
    """LL(2,2,2,2) with b = ℓ^{-1} and c = ℓ^{-2} on χ(0,d)."""
    log_d = math.log(d)

    def above(y):
        # ∫ from y to ∞ of ℓ^{-4}
        return (2 - _ell(y) ** -3) / 3 if y < 0 else _ell(y) ** -3 / 3
    return math.sqrt(_integrate(lambda y: math.exp(min(y, log_d)) * above(y) / _ell(y) ** 2, (0.0, log_d)))


class ParseTestCase(SimpleTestCase):
    def test_space(self):
        spec = parse_space({'family': 'L_L', 'p': 2, 'q': 'inf', 'r': 1, 'b': 'lpow(-2)'})
        self.assertEqual(spec, SpaceSpec(Family.L_L, 2.0, math.inf, 1.0, b=LogPow(-2.0)))
        self.assertEqual(str(spec), 'L_L(p=2, q=inf, r=1, a=1, b=lpow(-2), star)')

    def test_interp(self):
        spec = parse_interp({'method': 'ThetaQ', 'theta': 0.5, 'q': 2, 'couple': 'kree(2)'})
        self.assertEqual(spec, InterpSpec(Method.THETA_Q, 0.5, 2.0, couple=Kree(2.0)))

    def test_star_mode(self):
        self.assertEqual(parse_star_mode('star'), Star())
        self.assertEqual(parse_star_mode('double_star'), DoubleStar(1.0))
        self.assertEqual(parse_star_mode('double_star(0.5)'), DoubleStar(0.5))
        with self.assertRaises(ConfigError):
            parse_star_mode('star(2)')

    def test_unknown_family(self):
        with self.assertRaisesRegex(ConfigError, 'space.family'):
            parse_space({'family': 'Orlicz', 'p': 2, 'q': 2})

    def test_missing_middle_exponent(self):
        with self.assertRaisesRegex(ConfigError, 'space.r'):
            parse_space({'family': 'L_R', 'p': 2, 'q': 2})

    def test_missing_outer_exponent(self):
        with self.assertRaisesRegex(ConfigError, 'interp.s'):
            parse_interp({'method': 'LR', 'theta': 0.5, 'q': 2, 'r': 2})

    def test_bad_exponent(self):
        with self.assertRaisesRegex(ConfigError, 'space.q'):
            parse_space({'family': 'LK', 'p': 2, 'q': -1})

    def test_theta_range(self):
        with self.assertRaisesRegex(ConfigError, 'interp.theta'):
            parse_interp({'method': 'ThetaQ', 'theta': 1.5, 'q': 2})

    def test_grand_has_no_inner_weight(self):
        with self.assertRaisesRegex(ConfigError, 'space.a'):
            parse_space({'family': 'Grand', 'p': 2, 'q': 2, 'r': 2, 'a': 'lpow(1)'})

    def test_maximal_family_uses_double_star(self):
        spec = parse_space({'family': 'LK_MaxFn', 'p': 2, 'q': 2})
        self.assertEqual(spec.star_mode, DoubleStar(1.0))


class ValidateTestCase(SimpleTestCase):
    def test_l_space_with_growing_weight(self):
        report = validate_spec(SpaceSpec(Family.L_L, 2, 2, 2, b=LogPow(1)), cfg)
        self.assertIs(report.verdict, Verdict.TRIVIAL)
        self.assertEqual(report.condition, 'b_at_infinity')

    def test_interior_theta(self):
        self.assertIs(validate_spec(InterpSpec(Method.THETA_Q, 0.5, 1, a=LogPow(7)), cfg).verdict,
                      Verdict.NON_TRIVIAL)

    def test_theta_zero(self):
        self.assertIs(validate_spec(InterpSpec(Method.THETA_Q, 0, 1), cfg).verdict, Verdict.TRIVIAL)
        self.assertIs(validate_spec(InterpSpec(Method.THETA_Q, 0, math.inf), cfg).verdict, Verdict.NON_TRIVIAL)

    def test_double_star_below_one(self):
        report = validate_spec(SpaceSpec(Family.LK, 0.5, 1, star_mode=DoubleStar(1)), cfg)
        self.assertEqual(report.condition, 'double_star_p')

    def test_extremal_without_criterion(self):
        report = validate_spec(SpaceSpec(Family.LL, 2, 2, 2, 2, c=LogPow(-1)), cfg)
        self.assertIs(report.verdict, Verdict.UNKNOWN)

    def test_extremal_outer_weight(self):
        self.assertIs(validate_spec(SpaceSpec(Family.LL, 2, 2, 2, 2), cfg).verdict, Verdict.TRIVIAL)

    def test_numeric_fallback(self):
        weight = Tabulated.from_function('tab', lambda x: -2 * math.log1p(abs(x)), np.linspace(-60, 60, 241))
        report = validate_spec(SpaceSpec(Family.L_L, 2, 2, 2, b=weight), cfg)
        self.assertIs(report.verdict, Verdict.NON_TRIVIAL)
        self.assertEqual(list(report.measured), ['|t^(-1/2) tab| on (1,inf)'])

    def test_report_dict(self):
        report = validate_spec(InterpSpec(Method.THETA_Q, 0, 1), cfg).to_dict()
        self.assertEqual(report['verdict'], 'Trivial')
        self.assertEqual(report['condition'], 'theta_q')


class EvaluateTestCase(SimpleTestCase):
    def test_lorentz_karamata(self):
        self.assertAlmostEqual(space_norm(SpaceSpec(Family.LK, 2, 2), indicator, cfg), 1.0, places=8)

    def test_maximal_function(self):
        value = space_norm(SpaceSpec(Family.LK, 2, 2, star_mode=DoubleStar(1)), indicator, cfg)
        self.assertAlmostEqual(value, math.sqrt(2), places=8)

    def test_theta_q(self):
        self.assertAlmostEqual(interp_norm(InterpSpec(Method.THETA_Q, 0.5, 2), indicator, cfg), math.sqrt(2),
                               places=8)

    def test_theta_q_endpoints(self):
        self.assertAlmostEqual(interp_norm(InterpSpec(Method.THETA_Q, 1, math.inf), indicator, cfg), 1.0, places=8)
        self.assertAlmostEqual(interp_norm(InterpSpec(Method.THETA_Q, 0, math.inf), indicator, cfg), 1.0, places=8)

    def test_l_space(self):
        # ∫₀^∞ u^{-1} ℓ(u)^{-2} min(u, 1) du
        spec = SpaceSpec(Family.L_L, 1, 1, 1, b=LogPow(-2))
        self.assertAlmostEqual(space_norm(spec, indicator, cfg), 2 - math.e * exp1(1.0), places=5)

    def test_trivial_space(self):
        with self.assertRaises(TrivialSpace):
            evaluate(InterpSpec(Method.THETA_Q, 0, 1), indicator, cfg)

    def test_zero_function(self):
        self.assertEqual(space_norm(SpaceSpec(Family.LK, 2, 2), MonotoneStep([], []), cfg), 0.0)

    def test_error_estimate(self):
        result = evaluate(SpaceSpec(Family.GRAND, 2, 2, 2, b=LogPow(-2)), indicator, cfg)
        self.assertTrue(math.isfinite(result.value))
        self.assertLess(result.error, 1e-4 * result.value)

    def test_direct_matches_prefix(self):
        spec = SpaceSpec(Family.GRAND, 2, 2, 2, b=LogPow(-2))
        value = space_norm(spec, indicator, cfg)
        self.assertAlmostEqual(nested_norm_direct(spec, indicator, cfg).value, value, delta=1e-6 * value)

    def test_direct_matches_prefix_three_levels(self):
        coarse = QuadConfig(rel_tol=1e-5, log_domain_bounds=(-12.0, 12.0), cell_width=1.0, gauss_order=4)
        g = MonotoneStep([1, 2], [1, 0.5])
        for structure in (Method.LR, Method.RL, Method.RR):
            spec = InterpSpec(structure, 0.5, 2, 2, 2, b=LogPow(-1), c=LogPow(-1))
            value = evaluate(spec, g, coarse).value
            self.assertAlmostEqual(nested_norm_direct(spec, g, coarse).value, value, delta=1e-7 * value)

    def test_sup_levels(self):
        spec = SpaceSpec(Family.L_R, 2, math.inf, math.inf, b=LogPow(-1))
        # sup over t of ℓ(t)^{-1} sup over u > t of u^{1/2} f*(u)
        self.assertAlmostEqual(space_norm(spec, indicator, cfg), 1.0, places=6)

    @settings(max_examples=10, deadline=None)
    @given(height=st.floats(min_value=0.1, max_value=10), couple=st.sampled_from([Peetre(), Kree(2.0), Hunt(0.5)]))
    def test_homogeneous(self, height, couple):
        spec = InterpSpec(Method.L, 0.5, 2, 1, b=LogPow(-2), couple=couple)
        base = interp_norm(spec, indicator, cfg)
        self.assertAlmostEqual(interp_norm(spec, indicator.scaled(height), cfg), height * base,
                               delta=1e-7 * height * base)

    def test_interpolation_matches_space(self):
        # f**-based spaces and the θ,q method on (L_1, L_∞) are the same norm
        space = SpaceSpec(Family.LK, 4, 2, a=LogPow(1), star_mode=DoubleStar(1))
        interp = InterpSpec(Method.THETA_Q, 0.75, 2, a=LogPow(1))
        g = MonotoneStep([0.5, 3, 10], [4, 1, 0.25])
        value = space_norm(space, g, cfg)
        self.assertAlmostEqual(interp_norm(interp, g, cfg), value, delta=1e-7 * value)

    def test_weights_default_to_one(self):
        self.assertEqual(SpaceSpec(Family.LK, 2, 2).a, One())


class NestedOracleTestCase(SimpleTestCase):
    def rr(self, mode):
        return SpaceSpec(Family.RR, 2, 2, 2, 2, b=LogPow(-1), c=LogPow(-1), star_mode=mode)

    def test_rr_double_star(self):
        # value² = 1 + 2 I₂ - 2 I₃ with I_n = ∫₀^∞ e^{-s} (1+s)^{-n} ds
        value = space_norm(self.rr(DoubleStar(1)), indicator, cfg)
        self.assertAlmostEqual(value, math.sqrt(1.2109579131), delta=1e-7)
        self.assertAlmostEqual(value, _rr_oracle(1.0, True), delta=1e-7 * value)

    def test_rr_star(self):
        # value² = 1/2 - I₃
        value = space_norm(self.rr(Star()), indicator, cfg)
        self.assertAlmostEqual(value, math.sqrt(0.20182631885), delta=1e-7)
        self.assertAlmostEqual(value, _rr_oracle(1.0, False), delta=1e-7 * value)

    def test_ll(self):
        spec = SpaceSpec(Family.LL, 2, 2, 2, 2, b=LogPow(-1), c=LogPow(-2))
        value = space_norm(spec, indicator, cfg)
        self.assertAlmostEqual(value, 0.5372121871, delta=1e-8)
        self.assertAlmostEqual(value, _ll_oracle(1.0), delta=1e-7 * value)

    def test_dilated_supports(self):
        ll = SpaceSpec(Family.LL, 2, 2, 2, 2, b=LogPow(-1), c=LogPow(-2))
        for d in (1e-3, 1e3):
            g = MonotoneStep.indicator(d)
            with self.subTest(d=d):
                for mode, double_star in ((DoubleStar(1), True), (Star(), False)):
                    expected = _rr_oracle(d, double_star)
                    self.assertAlmostEqual(space_norm(self.rr(mode), g, cfg), expected, delta=1e-6 * expected)
                expected = _ll_oracle(d)
                self.assertAlmostEqual(space_norm(ll, g, cfg), expected, delta=1e-6 * expected)

    def test_error_covers_hardy_nest(self):
        # ‖t^{-1} ℓ(t)^{-2} ‖u^{-1} min(u, d)‖_{2,(t,∞)}‖_1 for d = 1e-3
        d = 1e-3
        inner = Integrand.smooth(lambda u: np.minimum(u, d), -0.5, 2, One(), [math.log(d)])
        result = nested_norm(inner, 'R', 1, b=LogPow(-2), cfg=cfg)
        self.assertAlmostEqual(result.value, 0.008665375726, delta=1e-6 * 0.008665375726)
        self.assertGreater(result.error, 0.0)
        self.assertLess(result.error, 1e-5 * result.value)


class NormPropertiesTestCase(SimpleTestCase):
    spaces = [
        SpaceSpec(Family.LK, 2, 2),
        SpaceSpec(Family.L_L, 2, 2, 2, b=LogPow(-2)),
        SpaceSpec(Family.SMALL, 2, 2, 2, b=LogPow(-2)),
    ]

    @settings(max_examples=10, deadline=None)
    @given(first=pairs, second=pairs, data=st.data())
    def test_quasi_triangle(self, first, second, data):
        # (f+g)* ≤ f*(t/2) + g*(t/2) bounds the constant by 2^{1/p}
        spec = data.draw(st.sampled_from(self.spaces))
        size = min(len(first), len(second))
        f = SimpleFunction.from_pairs(first[:size])
        g = SimpleFunction.from_pairs((value, mass) for (value, _), (_, mass) in zip(second, first[:size]))
        total = space_norm(spec, rearrange(add_on_partition(f, g)), cfg)
        parts = space_norm(spec, rearrange(f), cfg) + space_norm(spec, rearrange(g), cfg)
        self.assertLessEqual(total, 2 ** (1 / spec.p) * parts * (1 + 1e-7))

    @settings(max_examples=10, deadline=None)
    @given(first=pairs, data=st.data())
    def test_double_star_dominates_star(self, first, data):
        spec = data.draw(st.sampled_from(self.spaces + [SpaceSpec(Family.GRAND, 2, 2, 2, b=LogPow(-2))]))
        g = rearrange(SimpleFunction.from_pairs(first))
        star = space_norm(spec, g, cfg)
        double_star = space_norm(replace(spec, star_mode=DoubleStar(1)), g, cfg)
        self.assertGreaterEqual(double_star, star * (1 - 1e-7))
