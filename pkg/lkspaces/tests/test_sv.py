import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from lkspaces.exceptions import ConfigError, EvaluationRangeError
from lkspaces.sv import (ComposeScaled, ExpLogPow, Finiteness, IterLogPow, LogPow, One, Product, Reciprocal, Tabulated,
                         Tail, catalog, dilate, equivalence_constant, norm_profile, parse_sv, sv_eval, sv_finiteness)

positive_t = st.floats(min_value=1e-12, max_value=1e12)


class EvaluateTestCase(SimpleTestCase):
    def test_log_power_at_one(self):
        self.assertEqual(sv_eval(LogPow(2), 1.0), 1.0)

    def test_log_power_at_e(self):
        self.assertAlmostEqual(sv_eval(LogPow(1), math.e), 2.0, places=12)

    def test_reciprocal(self):
        self.assertAlmostEqual(sv_eval(Reciprocal(LogPow(1)), math.e), 2.0, places=12)

    def test_exp_log_power(self):
        self.assertAlmostEqual(sv_eval(ExpLogPow(0.5), math.exp(4)), math.exp(2), places=10)

    def test_iterated_log(self):
        # 1 + log(1 + |log t|) at t = e
        self.assertAlmostEqual(sv_eval(IterLogPow(2, 1), math.e), 1 + math.log(2), places=12)

    def test_vectorized(self):
        values = sv_eval(LogPow(1), np.array([1.0, math.e, 1 / math.e]))
        np.testing.assert_allclose(values, [1.0, 2.0, 2.0])

    def test_non_positive_argument(self):
        with self.assertRaises(EvaluationRangeError):
            sv_eval(LogPow(1), 0.0)

    def test_overflow_is_reported(self):
        with self.assertRaises(EvaluationRangeError):
            sv_eval(parse_sv('pow(lpow(1),1000000)'), math.e)

    @settings(max_examples=50, deadline=None)
    @given(t=positive_t)
    def test_catalog_is_positive(self, t):
        for expr in catalog():
            self.assertGreater(sv_eval(expr, t), 0)

    @settings(max_examples=50, deadline=None)
    @given(t=positive_t, a=st.floats(min_value=-3, max_value=3), b=st.floats(min_value=-3, max_value=3))
    def test_product_adds_exponents(self, t, a, b):
        product = sv_eval(Product(LogPow(a), LogPow(b)), t)
        self.assertAlmostEqual(math.log(product), math.log(sv_eval(LogPow(a + b), t)), places=9)

    def test_dilate(self):
        expr = LogPow(1)
        self.assertIs(dilate(expr, 1), expr)
        # b(t^{1/2}) at t = e^4 is 1 + 2
        self.assertAlmostEqual(sv_eval(dilate(LogPow(1), 2), math.exp(4)), 3.0, places=10)

    @settings(max_examples=50, deadline=None)
    @given(t=positive_t)
    def test_reciprocal_reflects_argument(self, t):
        for expr in catalog():
            self.assertAlmostEqual(sv_eval(Reciprocal(expr), t) / sv_eval(expr, 1 / t), 1.0, places=12)

    @settings(max_examples=50, deadline=None)
    @given(t=st.floats(min_value=1e-6, max_value=1e6))
    def test_doubled_argument_stays_equivalent(self, t):
        # b(t) and b(2t) are within a factor 4 of each other
        for expr in catalog():
            ratio = sv_eval(expr, t) / sv_eval(expr, 2 * t)
            self.assertLessEqual(ratio, 4.0, str(expr))
            self.assertLessEqual(1 / ratio, 4.0, str(expr))


class TabulatedTestCase(SimpleTestCase):
    def test_interpolates_in_log_domain(self):
        weight = Tabulated('w', (0.0, 1.0), (0.0, 2.0))
        self.assertAlmostEqual(float(weight.log_eval(0.5)), 1.0)

    def test_constant_beyond_samples(self):
        weight = Tabulated('w', (0.0, 1.0), (0.0, 2.0))
        self.assertEqual(float(weight.log_eval(5.0)), 2.0)
        self.assertEqual(float(weight.log_eval(-5.0)), 0.0)

    def test_from_function(self):
        weight = Tabulated.from_function('ell', lambda x: math.log1p(abs(x)), np.linspace(-5, 5, 11))
        self.assertAlmostEqual(float(weight.log_eval(2.0)), math.log(3.0))
        self.assertEqual(str(weight), 'ell')

    def test_needs_two_samples(self):
        with self.assertRaises(ConfigError):
            Tabulated('w', (0.0,), (1.0,))

    def test_samples_must_increase(self):
        with self.assertRaises(ConfigError):
            Tabulated('w', (1.0, 0.0), (0.0, 0.0))


class ParseTestCase(SimpleTestCase):
    def test_leaves(self):
        self.assertEqual(parse_sv('1'), One())
        self.assertEqual(parse_sv('lpow(-1)'), LogPow(-1.0))
        self.assertEqual(parse_sv('iterlog(2, -1)'), IterLogPow(2, -1.0))
        self.assertEqual(parse_sv('explog(0.5)'), ExpLogPow(0.5))

    def test_number_one(self):
        self.assertEqual(parse_sv(1), One())

    def test_nested(self):
        expr = parse_sv('compose(mul(lpow(1),recip(iterlog(2,-1))),2,lpow(-1))')
        self.assertIsInstance(expr, ComposeScaled)
        self.assertEqual(str(expr), 'compose(mul(lpow(1),recip(iterlog(2,-1))),2,lpow(-1))')

    def test_text_survives_printing(self):
        for text in ('1', 'lpow(-2)', 'iterlog(3,0.5)', 'pow(explog(0.5),-1)', 'mul(lpow(1),lpow(-1))'):
            self.assertEqual(str(parse_sv(text)), text)

    def test_unterminated(self):
        with self.assertRaises(ConfigError):
            parse_sv('lpow(')

    def test_unknown_function(self):
        with self.assertRaisesRegex(ConfigError, 'unknown function'):
            parse_sv('sin(1)')

    def test_trailing_input(self):
        with self.assertRaisesRegex(ConfigError, 'trailing input'):
            parse_sv('lpow(1) lpow(2)')

    def test_constant_other_than_one(self):
        with self.assertRaises(ConfigError):
            parse_sv('2')

    def test_exp_log_exponent_range(self):
        with self.assertRaises(ConfigError):
            parse_sv('explog(1.5)')

    def test_iterated_depth(self):
        with self.assertRaises(ConfigError):
            parse_sv('iterlog(0,1)')

    def test_field_in_message(self):
        with self.assertRaisesRegex(ConfigError, '^space.b: '):
            parse_sv('lpow(', 'space.b')


class FinitenessTestCase(SimpleTestCase):
    def test_examples(self):
        self.assertIs(sv_finiteness(LogPow(-2), 0, 1, Tail.INFINITY), Finiteness.FINITE)
        self.assertIs(sv_finiteness(One(), 0, 2, Tail.INFINITY), Finiteness.INFINITE)
        self.assertIs(sv_finiteness(LogPow(-1), 0, math.inf, Tail.INFINITY), Finiteness.FINITE)
        self.assertIs(sv_finiteness(LogPow(3), -0.5, 2, Tail.INFINITY), Finiteness.FINITE)

    def test_power_decides(self):
        self.assertIs(sv_finiteness(LogPow(-5), 0.5, 1, Tail.INFINITY), Finiteness.INFINITE)
        self.assertIs(sv_finiteness(LogPow(5), 0.5, 1, Tail.ORIGIN), Finiteness.FINITE)
        self.assertIs(sv_finiteness(LogPow(-5), -0.5, 1, Tail.ORIGIN), Finiteness.INFINITE)

    def test_critical_exponent(self):
        self.assertIs(sv_finiteness(LogPow(-1), 0, 1, Tail.INFINITY), Finiteness.INFINITE)
        self.assertIs(sv_finiteness(LogPow(-0.5), 0, 2, Tail.ORIGIN), Finiteness.INFINITE)

    def test_critical_then_next_depth(self):
        self.assertIs(sv_finiteness(parse_sv('mul(lpow(-1),iterlog(2,-2))'), 0, 1, Tail.INFINITY),
                      Finiteness.FINITE)
        self.assertIs(sv_finiteness(parse_sv('mul(lpow(-1),iterlog(2,-1))'), 0, 1, Tail.INFINITY),
                      Finiteness.INFINITE)

    def test_missing_depth(self):
        self.assertIs(sv_finiteness(IterLogPow(2, -5), 0, 1, Tail.INFINITY), Finiteness.INFINITE)

    def test_exponential_leaf_wins(self):
        self.assertIs(sv_finiteness(parse_sv('mul(explog(0.5),lpow(-5))'), 0, 1, Tail.INFINITY),
                      Finiteness.INFINITE)
        self.assertIs(sv_finiteness(parse_sv('mul(pow(explog(0.5),-1),lpow(5))'), 0, 1, Tail.INFINITY),
                      Finiteness.FINITE)

    def test_sup_norm(self):
        self.assertIs(sv_finiteness(One(), 0, math.inf, Tail.INFINITY), Finiteness.FINITE)
        self.assertIs(sv_finiteness(LogPow(1), 0, math.inf, Tail.ORIGIN), Finiteness.INFINITE)

    def test_unknown(self):
        expr = parse_sv('compose(explog(0.5),1,lpow(1))')
        self.assertIs(sv_finiteness(expr, 0, 1, Tail.INFINITY), Finiteness.UNKNOWN)


class NormProfileTestCase(SimpleTestCase):
    def test_growth_of_critical_weight(self):
        # ∫₁^t du/(u ℓ(u)) grows like log ℓ(t)
        self.assertEqual(norm_profile(LogPow(-1), 1, 'growth'), IterLogPow(2, 1.0))

    def test_growth_of_increasing_weight(self):
        self.assertEqual(norm_profile(LogPow(1), 1, 'growth'), LogPow(2.0))

    def test_growth_of_integrable_weight(self):
        self.assertEqual(norm_profile(LogPow(-2), 1, 'growth'), One())

    def test_tail(self):
        self.assertEqual(norm_profile(LogPow(-2), 1, 'tail'), LogPow(-1.0))
        self.assertEqual(norm_profile(LogPow(-4), 2, 'tail'), LogPow(-3.5))

    def test_infinite_tail(self):
        self.assertIsNone(norm_profile(LogPow(-1), 1, 'tail'))

    def test_sup_norm(self):
        self.assertEqual(norm_profile(LogPow(-1), math.inf, 'tail'), LogPow(-1.0))
        self.assertEqual(norm_profile(LogPow(-1), math.inf, 'growth'), One())

    def test_outside_iterated_logs(self):
        self.assertIsNone(norm_profile(ExpLogPow(0.5), 1, 'growth'))


class EquivalenceConstantTestCase(SimpleTestCase):
    def test_constant_weight(self):
        self.assertEqual(equivalence_constant(One(), 0.25, np.linspace(-10, 10, 101)), 1.0)

    @settings(max_examples=20, deadline=None)
    @given(eps=st.floats(min_value=0.05, max_value=1.0))
    def test_catalog_constant_is_finite(self, eps):
        for expr in catalog():
            constant = equivalence_constant(expr, eps, np.linspace(-40, 40, 801))
            self.assertGreaterEqual(constant, 1.0)
            self.assertTrue(math.isfinite(constant))
