"""
Tests de la criba diofántica: tipo diofántico, filtros Λ1/Λ2/Λ′/Λ_ζ/Λ∞ y
disjunción de ventanas
"""

import unittest
import os
import sys
import math

import numpy as np
import pandas as pd

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import PreconditionError
from src.greens import TorusGeometry
from src.lattice import annulus_points, norm_of, sieve_norms
from src.sieve import (DENSITY_COLUMNS, FilterParams, classify, density_report, density_trend,
                       dyadic_blocks, estimate_type, filter_lambda1, filter_lambda2, find_overlap_counterexample,
                       gap_midpoints, in_lambda_zeta, in_S_zeta, window_disjointness, window_overlaps,
                       zeta_ball, zeta_range)


class TestFilterParams(unittest.TestCase):
    """Tests de las constantes de los filtros"""

    def test_default_delta(self):
        params = FilterParams()
        self.assertAlmostEqual(params.delta, 0.2)
        self.assertAlmostEqual(params.window(32.0), 2.0)

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            FilterParams(epsilon=0.1)
        with self.assertRaises(ValueError):
            FilterParams(delta=0.25)
        with self.assertRaises(ValueError):
            FilterParams(zeta_radius_mode='otro')


class TestDiophantineType(unittest.TestCase):
    """Tests de estimate_type"""

    def test_rational_pair(self):
        report = estimate_type((0.5, 0.25), Q=1000)
        self.assertTrue(report.rational_flag)
        self.assertEqual(report.rational_q, 4)
        self.assertIsNone(report.kappa_hat)

    def test_algebraic_pair(self):
        report = estimate_type((math.sqrt(2) - 1, math.sqrt(3) - 1), Q=20000)
        self.assertFalse(report.rational_flag)
        self.assertGreaterEqual(report.kappa_hat, 1.5)
        self.assertLess(report.kappa_hat, 2.5)
        minima = [m for _, m in report.records]
        self.assertTrue(all(b < a for a, b in zip(minima, minima[1:])))

    def test_small_search_bound(self):
        with self.assertRaises(ValueError):
            estimate_type((0.1, 0.2), Q=10)


class TestFilters(unittest.TestCase):
    """Tests de Λ1, Λ2 y S_ζ"""

    def setUp(self):
        self.geom = TorusGeometry()
        self.table = sieve_norms(2000)
        self.params = FilterParams()

    def test_lambda1(self):
        self.assertTrue(filter_lambda1(10.5, self.table, self.params))
        self.assertFalse(filter_lambda1(3.9, self.table, self.params))
        with self.assertRaises(ValueError):
            filter_lambda1(1.0, self.table, self.params)

    def test_lambda2_rational_scatterer_fails(self):
        """Con x0 = (π, 0) los senos de la primera coordenada se anulan"""
        geom = TorusGeometry(1, (0.0, 0.0), (math.pi, 0.0))
        self.assertFalse(filter_lambda2(1.5, geom, self.table, self.params))

    def test_lambda2_generic_shell(self):
        self.assertTrue(filter_lambda2(2.5, self.geom, self.table, self.params))

    def test_s_zeta(self):
        self.assertTrue(in_S_zeta((3, 0), (0, 1), 0.2))
        self.assertFalse(in_S_zeta((10, 0), (1, 0), 0.2))
        with self.assertRaises(ValueError):
            in_S_zeta((1, 1), (0, 0), 0.2)

    def test_zeta_ball(self):
        self.assertEqual(len(zeta_ball(1.0)), 4)
        self.assertEqual(len(zeta_ball(1.5)), 8)
        self.assertNotIn((0, 0), zeta_ball(3.0))

    def test_zeta_range_modes(self):
        wide = zeta_range(1e5, self.params)
        narrow = zeta_range(1e5, FilterParams(zeta_radius_mode='lambda_eps_and_delta'))
        self.assertLessEqual(len(narrow), len(wide))
        self.assertEqual(len(wide), 8)

    def test_classify_nested(self):
        for lam in gap_midpoints(self.table, 1500):
            membership = classify(float(lam), self.geom, self.table, self.params)
            self.assertEqual(membership.lprime, membership.l1 and membership.l2)
            if membership.linf:
                self.assertTrue(membership.lprime)


class TestWindowDisjointness(unittest.TestCase):
    """Tests de la disjunción de la ventana y su traslación"""

    def setUp(self):
        self.params = FilterParams()
        self.table = sieve_norms(3000)

    def test_overlaps_inside_window(self):
        for xi, moved in window_overlaps(10.5, (1, 0), 1.5):
            self.assertLessEqual(abs(float(norm_of(*xi)) - 10.5), 1.5)
            self.assertLessEqual(abs(float(norm_of(*moved)) - 10.5), 1.5)
            self.assertEqual((moved[0] - xi[0], moved[1] - xi[1]), (1, 0))

    def test_disjoint_when_window_avoids_s_zeta(self):
        geom = TorusGeometry()
        checked = 0
        for lam in gap_midpoints(self.table, 2500):
            if lam < 1000:
                continue
            for zeta in [(1, 0), (0, 1), (1, 1)]:
                if in_lambda_zeta(float(lam), zeta, geom, self.table, self.params, skip_prime_gate=True):
                    self.assertTrue(window_disjointness(float(lam), zeta, self.params))
                    checked += 1
        self.assertGreater(checked, 0)

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            window_disjointness(1000.5, (0, 0), self.params)
        with self.assertRaises(PreconditionError):
            window_disjointness(1000.5, (10, 0), self.params)

    def test_counterexample_outside_lambda_zeta(self):
        witness = find_overlap_counterexample([10.5], (1, 0), self.params)
        self.assertIsNotNone(witness)
        self.assertEqual(witness['lambda'], 10.5)
        L = self.params.window(10.5)
        for point in (witness['xi'], witness['xi_plus_zeta']):
            self.assertLessEqual(abs(float(norm_of(*point)) - 10.5), L)


class TestDensityReport(unittest.TestCase):
    """Tests de los conteos por bloque diádico"""

    def setUp(self):
        self.geom = TorusGeometry()
        self.table = sieve_norms(400)
        self.params = FilterParams()

    def test_dyadic_blocks(self):
        self.assertEqual(dyadic_blocks(5), [(0.0, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 8.0)])

    def test_counts_are_nested(self):
        frame = density_report('gap-midpoints', 300, self.geom, self.table, self.params)
        self.assertEqual(list(frame.columns), DENSITY_COLUMNS)
        self.assertEqual(int(frame['count_base'].sum()), len(gap_midpoints(self.table, 300)))
        self.assertTrue((frame['count_linf'] <= frame['count_lprime']).all())
        self.assertTrue((frame['count_lprime'] <= frame['count_l1']).all())
        self.assertTrue((frame['count_lprime'] <= frame['count_l2']).all())

    def test_threads_do_not_change_counts(self):
        serial = density_report('gap-midpoints', 200, self.geom, self.table, self.params)
        threaded = density_report('gap-midpoints', 200, self.geom, self.table, self.params, threads=4)
        pd.testing.assert_frame_equal(serial, threaded)

    def test_explicit_base_must_interlace(self):
        with self.assertRaises(PreconditionError):
            density_report([0.2, 0.4, 0.6, 0.8], 10, self.geom, self.table, self.params)
        frame = density_report([0.5, 1.5, 3.0], 10, self.geom, self.table, self.params)
        self.assertEqual(int(frame['count_base'].sum()), 3)

    def test_unknown_generator(self):
        with self.assertRaises(ValueError):
            density_report('aleatorio', 10, self.geom, self.table, self.params)

    def test_density_trend(self):
        frame = pd.DataFrame({
            'block_lo': [1024.0, 2048.0, 4096.0], 'block_hi': [2048.0, 4096.0, 8192.0],
            'count_base': [10, 20, 40], 'count_l1': [10, 20, 40], 'count_l2': [10, 20, 40],
            'count_lprime': [8, 18, 38], 'count_linf': [5, 12, 30],
        })
        trend = density_trend(frame, lo=1e3, hi=1e4)
        self.assertEqual(trend['densities'], [0.5, 0.6, 0.75])
        self.assertTrue(trend['non_decreasing'])
        self.assertEqual(trend['final_density'], 0.75)


if __name__ == '__main__':
    unittest.main()
