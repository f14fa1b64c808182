import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from lkspaces.exceptions import ConfigError
from lkspaces.funcs import (Hunt, Kree, MonotoneStep, Peetre, SimpleFunction, add_on_partition, couple_kinks,
                            k_functional, k_functional_oracle, maximal, parse_couple, primitive, rearrange)


@st.composite
def steps(draw, max_pieces=6):
    """Non-increasing steps with positive values."""
    widths = draw(st.lists(st.floats(min_value=0.01, max_value=100), min_size=1, max_size=max_pieces))
    values = draw(st.lists(st.floats(min_value=0.01, max_value=100), min_size=len(widths), max_size=len(widths)))
    return MonotoneStep(np.cumsum(widths), sorted(values, reverse=True))


class RearrangeTestCase(SimpleTestCase):
    def test_sorted(self):
        g = rearrange(SimpleFunction.from_pairs([(3, 1), (1, 1)]))
        self.assertEqual(g.to_pairs(), [[1.0, 3.0], [2.0, 1.0]])

    def test_empty(self):
        g = rearrange(SimpleFunction.from_pairs([]))
        self.assertEqual(len(g), 0)
        self.assertEqual(g.norm(), 0.0)

    def test_equal_values_merge(self):
        g = rearrange(SimpleFunction.from_pairs([(2, 0.5), (5, 0.25), (2, 0.25)]))
        self.assertEqual(g.to_pairs(), [[0.25, 5.0], [1.0, 2.0]])

    def test_zero_values_drop(self):
        g = rearrange(SimpleFunction.from_pairs([(0, 3), (1, 1)]))
        self.assertEqual(g.to_pairs(), [[1.0, 1.0]])

    def test_negative_mass(self):
        with self.assertRaises(ConfigError):
            SimpleFunction.from_pairs([(1, -1)])

    @settings(max_examples=50, deadline=None)
    @given(pairs=st.lists(st.tuples(st.floats(min_value=0, max_value=10), st.floats(min_value=0.01, max_value=10)),
                          max_size=8))
    def test_preserves_integral(self, pairs):
        g = rearrange(SimpleFunction.from_pairs(pairs))
        expected = sum(value * mass for value, mass in pairs)
        self.assertAlmostEqual(g.norm(), expected, delta=1e-9 * max(expected, 1.0))

    def test_add_on_partition(self):
        f = SimpleFunction.from_pairs([(1, 1), (2, 3)])
        g = SimpleFunction.from_pairs([(2, 1), (0, 3)])
        self.assertEqual(add_on_partition(f, g).pairs, ((3.0, 1.0), (2.0, 3.0)))

    def test_add_on_different_partitions(self):
        with self.assertRaises(ConfigError):
            add_on_partition(SimpleFunction.from_pairs([(1, 1)]), SimpleFunction.from_pairs([(1, 2)]))


class MonotoneStepTestCase(SimpleTestCase):
    def test_increasing_values(self):
        with self.assertRaises(ConfigError):
            MonotoneStep([1, 2], [1, 2])

    def test_unsorted_breakpoints(self):
        with self.assertRaises(ConfigError):
            MonotoneStep([2, 1], [2, 1])

    def test_star_is_right_continuous(self):
        g = MonotoneStep.indicator()
        np.testing.assert_array_equal(g.star([0.0, 0.5, 1.0, 2.0]), [1.0, 1.0, 0.0, 0.0])

    def test_power_integral(self):
        g = MonotoneStep([1, 3], [2, 1])
        self.assertEqual(float(g.power_integral(2.0)), 3.0)
        self.assertEqual(float(g.power_integral(10.0)), 4.0)
        self.assertEqual(float(g.power_integral(10.0, 2.0)), 6.0)
        self.assertEqual(g.norm(), 4.0)
        self.assertAlmostEqual(g.norm(2.0), math.sqrt(6.0))

    def test_dilated(self):
        g = MonotoneStep([1, 3], [2, 1]).dilated(2)
        self.assertEqual(g.to_pairs(), [[2.0, 2.0], [6.0, 1.0]])

    def test_scaled(self):
        self.assertEqual(MonotoneStep.indicator().scaled(3), MonotoneStep([1], [3]))

    def test_kinks(self):
        np.testing.assert_allclose(MonotoneStep([1, math.e ** 2], [2, 1]).kinks(2.0), [0.0, 1.0])


class MaximalTestCase(SimpleTestCase):
    def test_examples(self):
        g = MonotoneStep.indicator()
        self.assertEqual(maximal(g, 1, 0.5), 1.0)
        self.assertEqual(maximal(g, 1, 2.0), 0.5)
        self.assertEqual(maximal(g, 2, 2.0), 0.5)

    @settings(max_examples=50, deadline=None)
    @given(g=steps(), t=st.floats(min_value=1e-3, max_value=1e3))
    def test_dominates_rearrangement(self, g, t):
        self.assertGreaterEqual(maximal(g, 1, t) * (1 + 1e-12), float(g.star(t)))

    @settings(max_examples=50, deadline=None)
    @given(g=steps(), t=st.floats(min_value=1e-3, max_value=1e3))
    def test_primitive(self, g, t):
        self.assertAlmostEqual(float(primitive(g, t)), t * maximal(g, 1, t), delta=1e-9 * float(primitive(g, t)))


class CoupleTestCase(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(parse_couple('peetre'), Peetre())
        self.assertEqual(parse_couple('kree(2)'), Kree(2.0))
        self.assertEqual(parse_couple(' hunt( 0.5 ) '), Hunt(0.5))

    def test_parse_errors(self):
        for text in ('peetre(1)', 'kree', 'hunt(-1)', 'lorentz(2)'):
            with self.assertRaises(ConfigError):
                parse_couple(text)

    def test_text_survives_printing(self):
        for couple in (Peetre(), Kree(2.0), Hunt(0.5)):
            self.assertEqual(parse_couple(str(couple)), couple)


class KFunctionalTestCase(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(k_functional(Peetre(), MonotoneStep.indicator(), 2.0), 1.0)
        self.assertEqual(k_functional(Kree(2), MonotoneStep.indicator(), 0.5), 0.5)
        self.assertEqual(k_functional(Hunt(2), MonotoneStep([1, 4], [2, 1]), 1.0), 2.0)

    def test_zero_function(self):
        self.assertEqual(k_functional(Hunt(1), MonotoneStep([], []), 3.0), 0.0)

    def test_vectorized(self):
        values = k_functional(Peetre(), MonotoneStep.indicator(), np.array([0.5, 2.0]))
        np.testing.assert_array_equal(values, [0.5, 1.0])

    def test_oracle_examples(self):
        g = MonotoneStep.indicator()
        self.assertEqual(k_functional_oracle(Peetre(), g, 2.0), 1.0)
        self.assertEqual(k_functional_oracle(Peetre(), g, 0.5), 0.5)
        oracle = k_functional_oracle(Kree(2), g, 1.0)
        self.assertTrue(0.5 <= oracle <= 2.0)

    def test_oracle_needs_thresholds(self):
        with self.assertRaises(ConfigError):
            k_functional_oracle(Peetre(), MonotoneStep.indicator(), 1.0, thresholds=1)

    @settings(max_examples=100, deadline=None)
    @given(g=steps(), t=st.floats(min_value=1e-3, max_value=1e3))
    def test_peetre_matches_oracle(self, g, t):
        value = k_functional(Peetre(), g, t)
        self.assertAlmostEqual(k_functional_oracle(Peetre(), g, t), value, delta=1e-12 * value)

    @settings(max_examples=30, deadline=None)
    @given(g=steps(), t=st.floats(min_value=1e-2, max_value=1e2), kappa=st.sampled_from([0.5, 1.0, 2.0]))
    def test_closed_forms_are_equivalent_to_oracle(self, g, t, kappa):
        for couple in (Kree(kappa), Hunt(kappa)):
            ratio = k_functional_oracle(couple, g, t) / k_functional(couple, g, t)
            self.assertTrue(0.1 < ratio < 10, '{} ratio {}'.format(couple, ratio))

    @settings(max_examples=30, deadline=None)
    @given(g=steps(), kappa=st.sampled_from([0.5, 1.0, 2.0]))
    def test_hunt_is_smooth_between_kinks(self, g, kappa):
        couple = Hunt(kappa)
        kinks = couple_kinks(couple, g)
        edges = np.concatenate(([kinks[0] - 2], kinks, [kinks[-1] + 2]))
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo < 1e-6:
                continue
            x = np.linspace(lo, hi, 7)[1:-1]
            log_k = np.log(k_functional(couple, g, np.exp(x)))
            # t^{1/κ}-type and constant pieces are linear in log t
            second = np.diff(log_k, 2)
            np.testing.assert_allclose(second, 0.0, atol=1e-9)
