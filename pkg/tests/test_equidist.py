"""
Tests de equidistribución: estados truncados, elementos de matriz,
oráculo de cuadratura y experimento de decaimiento
"""

import unittest
import os
import sys

import numpy as np

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import SingularInputError
from src.equidist import (DECAY_COLUMNS, FullState, Observable, calibrated_envelope_check, decay_experiment,
                          loglog_fit, matrix_element, matrix_element_full, norm_lower_bound_experiment,
                          observable_expectation, quadrature_matrix_element, truncated_state, truncation_gap)
from src.greens import TorusGeometry
from src.lattice import sieve_norms
from src.sieve import FilterParams

D = (1.0, 0.0)
D_MIXED = (np.sqrt(0.5), 1j * np.sqrt(0.5))


class TestTruncatedState(unittest.TestCase):
    """Tests de G_{λ,L} y sus elementos de matriz"""

    def setUp(self):
        self.geom = TorusGeometry()
        self.params = FilterParams()
        self.state = truncated_state(10.5, D_MIXED, self.geom, self.params, L=1.5)

    def test_window_size(self):
        """λ = 10.5, L = 1.5, d = (1, 0): 12 puntos"""
        state = truncated_state(10.5, D, self.geom, self.params, L=1.5)
        self.assertEqual(len(state), 12)
        self.assertFalse(state.empty)

    def test_zero_frequency_is_one(self):
        element = matrix_element(self.state, (0, 0))
        self.assertEqual(element.value, 1.0)
        self.assertEqual(element.n_terms, 12)

    def test_zero_frequency_unnormalized(self):
        """Sin normalizar, ζ = 0 devuelve norm_sq_trunc real y exacto"""
        element = matrix_element(self.state, (0, 0), normalized=False)
        self.assertEqual(element.value, complex(self.state.norm_sq_trunc))
        self.assertEqual(element.value.imag, 0.0)

    def test_hermitian_symmetry(self):
        for zeta in [(1, 0), (1, 1), (2, -1), (0, 3)]:
            forward = matrix_element(self.state, zeta).value
            backward = matrix_element(self.state, (-zeta[0], -zeta[1])).value
            self.assertAlmostEqual(forward, np.conj(backward), places=14)

    def test_structural_zero(self):
        element = matrix_element(self.state, (50, 0))
        self.assertTrue(element.structural_zero)
        self.assertEqual(element.value, 0j)

    def test_empty_window(self):
        state = truncated_state(3.5, D, self.geom, self.params, L=0.1)
        self.assertTrue(state.empty)
        self.assertEqual(matrix_element(state, (1, 0)).value, 0j)
        self.assertEqual(observable_expectation(3.5, D, Observable.gaussian_bump(), 'truncated',
                                                self.geom, self.params, state=state), 0j)

    def test_singular_lambda(self):
        with self.assertRaises(SingularInputError):
            truncated_state(10.0, D, self.geom, self.params, L=1.5)

    def test_requires_unit_vector(self):
        with self.assertRaises(ValueError):
            truncated_state(10.5, (1.0, 1.0), self.geom, self.params, L=1.5)

    def test_quadrature_oracle(self):
        """La cuadratura N×N reproduce los elementos por Parseval"""
        for zeta in [(0, 0), (1, 0), (1, 1), (2, 1)]:
            expected = matrix_element(self.state, zeta).value
            self.assertLess(abs(quadrature_matrix_element(self.state, zeta, N=64) - expected), 1e-8)

    def test_quadrature_rectangular(self):
        """En índices enteros la cuadratura vale también para a² = 2"""
        geom = TorusGeometry('2')
        state = truncated_state(10.25, D_MIXED, geom, self.params, L=1.5)
        self.assertFalse(state.empty)
        for zeta in [(1, 0), (0, 1), (1, 2)]:
            expected = matrix_element(state, zeta).value
            self.assertLess(abs(quadrature_matrix_element(state, zeta, N=64) - expected), 1e-8)

    def test_quadrature_resolution(self):
        with self.assertRaises(ValueError):
            quadrature_matrix_element(self.state, (1, 0), N=8)


class TestFullState(unittest.TestCase):
    """Tests de los elementos de matriz sin truncar"""

    @classmethod
    def setUpClass(cls):
        cls.geom = TorusGeometry()
        cls.state = FullState(10.5, D_MIXED, cls.geom, 10.5 + 1e5)

    def test_zero_frequency(self):
        self.assertEqual(self.state.element((0, 0)).value, 1.0)

    def test_hermitian_symmetry(self):
        for zeta in [(1, 0), (2, 3)]:
            forward = self.state.element(zeta).value
            backward = self.state.element((-zeta[0], -zeta[1])).value
            self.assertAlmostEqual(forward, np.conj(backward), places=12)

    def test_bounded_by_one(self):
        element = self.state.element((1, 2))
        self.assertLessEqual(abs(element.value), 1.0 + 1e-12)
        self.assertGreater(element.tail_bound, 0.0)

    def test_short_cutoff(self):
        with self.assertRaises(ValueError):
            matrix_element_full(10.5, D, (1, 0), self.geom, R=1000.0)


class TestObservables(unittest.TestCase):
    """Tests de observables de soporte de Fourier finito"""

    def test_gaussian_bump(self):
        bump = Observable.gaussian_bump(cutoff=3)
        self.assertTrue(bump.hermitian)
        self.assertEqual(bump.mean, 1.0)
        self.assertAlmostEqual(bump.coefficients[(1, 1)].real, np.exp(-2.0))

    def test_restricted_keeps_mean(self):
        bump = Observable.gaussian_bump(cutoff=3)
        restricted = bump.restricted([(1, 0)])
        self.assertEqual(set(restricted.coefficients), {(0, 0), (1, 0)})

    def test_non_hermitian(self):
        self.assertFalse(Observable({(0, 0): 1.0, (1, 0): 1j}).hermitian)

    def test_constant_expectation(self):
        geom, params = TorusGeometry(), FilterParams()
        value = observable_expectation(10.5, D, Observable.constant(2.0), 'truncated', geom, params)
        self.assertEqual(value, 2.0)
        with self.assertRaises(ValueError):
            observable_expectation(10.5, D, Observable.constant(), 'otro', geom, params)


class TestTruncationGap(unittest.TestCase):
    """Tests de ‖g_λ − g_{λ,L}‖²"""

    def test_range(self):
        gap = truncation_gap(1000.5, D, TorusGeometry(), FilterParams(), R=1000.5 + 1e4)
        self.assertGreaterEqual(gap.value, 0.0)
        self.assertLessEqual(gap.value, 2.0)
        self.assertFalse(gap.empty)

    def test_wider_window_is_closer(self):
        geom, params = TorusGeometry(), FilterParams()
        narrow = truncation_gap(500.5, D, geom, params, R=2e4, L=2.0).value
        wide = truncation_gap(500.5, D, geom, params, R=2e4, L=20.0).value
        self.assertLess(wide, narrow)

    def test_empty_window(self):
        gap = truncation_gap(3.5, D, TorusGeometry(), FilterParams(), R=2e4, L=0.1)
        self.assertTrue(gap.empty)
        self.assertEqual(gap.value, 1.0)


class TestDecayAnalysis(unittest.TestCase):
    """Tests del ajuste, el envolvente calibrado y el experimento de decaimiento"""

    def test_loglog_fit(self):
        lams = [10.0, 100.0, 1000.0]
        fit = loglog_fit(lams, [lam ** -0.5 for lam in lams])
        self.assertAlmostEqual(fit['exponent'], -0.5)
        self.assertIsNone(loglog_fit([10.0, 100.0], [1.0, 0.0]))

    def test_envelope(self):
        lams = [2e3, 5e3, 2e4, 5e4]
        self.assertTrue(calibrated_envelope_check(lams, [1.0, 0.8, 0.5, 0.6], (1e3, 1e4), (1e4, 1e5), 0.025)['passed'])
        self.assertFalse(calibrated_envelope_check(lams, [1.0, 0.8, 3.0, 0.6], (1e3, 1e4), (1e4, 1e5), 0.025)['passed'])
        self.assertFalse(calibrated_envelope_check([2e3], [1.0], (1e3, 1e4), (1e4, 1e5), 0.025)['passed'])

    def test_norm_lower_bound_experiment(self):
        result = norm_lower_bound_experiment([20.5, 100.5, 300.5], D, TorusGeometry(), FilterParams(), R=2e4)
        self.assertGreater(result['c'], 0.0)
        self.assertEqual(result['samples'], 3)

    def test_decay_experiment(self):
        geom, params = TorusGeometry(), FilterParams()
        table = sieve_norms(3000)
        lams = [1000.5, 1500.5, 2000.5]
        result = decay_experiment(lams, Observable.gaussian_bump(cutoff=2), geom, table, params)
        self.assertEqual(len(result.frame), 3)
        self.assertTrue(set(DECAY_COLUMNS).issubset(result.frame.columns))
        self.assertTrue((result.frame['dev_full'] >= 0).all())
        for _, row in result.frame[result.frame['in_linf']].iterrows():
            self.assertTrue(row['structural_zero'])
            self.assertEqual(row['dev_trunc'], 0.0)


if __name__ == '__main__':
    unittest.main()
