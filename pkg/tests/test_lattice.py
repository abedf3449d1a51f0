"""
Tests de la red dual: criba de normas, puntos de capa y ventanas espectrales
"""

import unittest
import os
import sys
from fractions import Fraction

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.lattice import (annulus_points, as_aspect, circle_points, landau_ratio, n_lambda,
                         points_of_norm, sieve_norms)


class TestSieveNorms(unittest.TestCase):
    """Tests de la tabla de normas del toro cuadrado y rectangular"""

    def test_small_square_table(self):
        """Normas ≤ 10 con r₂(n)"""
        table = sieve_norms(10)
        self.assertEqual([n for n, _ in table.entries()], [0, 1, 2, 4, 5, 8, 9, 10])
        self.assertEqual(table.multiplicities.tolist(), [1, 4, 4, 4, 8, 4, 4, 8])
        self.assertEqual(table.point_count(), 37)

    def test_multiplicity_of(self):
        table = sieve_norms(100)
        self.assertEqual(table.multiplicity_of(25), 12)
        self.assertEqual(table.multiplicity_of(3), 0)
        self.assertEqual(table.multiplicity_of(65), 16)

    def test_deterministic(self):
        """Dos cribas iguales dan tablas idénticas"""
        first, second = sieve_norms(500), sieve_norms(500)
        self.assertEqual(first.keys.tolist(), second.keys.tolist())
        self.assertEqual(first.multiplicities.tolist(), second.multiplicities.tolist())

    def test_rectangular_exact_norms(self):
        """a² = 2: normas 2m² + k²/2 exactas"""
        table = sieve_norms(2, '2')
        self.assertEqual([table.exact_norm(i) for i in range(len(table))],
                         [Fraction(0), Fraction(1, 2), Fraction(2)])
        self.assertEqual(table.multiplicities.tolist(), [1, 2, 4])

    def test_invalid_inputs(self):
        with self.assertRaises(ValueError):
            sieve_norms(-1)
        with self.assertRaises(ValueError):
            as_aspect(0)
        with self.assertRaises(ValueError):
            landau_ratio(sieve_norms(2))


class TestLatticePoints(unittest.TestCase):
    """Tests de puntos de red por capa"""

    def test_circle_points(self):
        self.assertEqual(len(circle_points(25)), 12)
        self.assertEqual(circle_points(3), [])
        self.assertEqual(circle_points(0), [(0, 0)])
        self.assertEqual(circle_points(1), [(-1, 0), (0, -1), (0, 1), (1, 0)])

    def test_points_match_norm(self):
        for point in points_of_norm(0.5, '2'):
            self.assertAlmostEqual(2 * point.xi1 ** 2 + point.xi2 ** 2 / 2, 0.5)
        self.assertEqual(len(points_of_norm(0.5, '2')), 2)

    def test_negative_norm(self):
        with self.assertRaises(ValueError):
            circle_points(-4)


class TestWindows(unittest.TestCase):
    """Tests de ventanas espectrales y n_λ"""

    def test_annulus_example(self):
        """λ = 10.5, L = 1.5: capas 9 y 10, 12 puntos"""
        window = annulus_points(10.5, 1.5)
        self.assertEqual(len(window), 12)
        self.assertEqual(sorted(set(window.norms.tolist())), [9.0, 10.0])

    def test_annulus_order(self):
        window = annulus_points(50.0, 3.0)
        self.assertTrue((window.norms[1:] >= window.norms[:-1]).all())
        for _, norm in window:
            self.assertLessEqual(abs(norm - 50.0), 3.0)

    def test_annulus_invalid_width(self):
        with self.assertRaises(ValueError):
            annulus_points(10.0, 0.0)

    def test_n_lambda_strict(self):
        table = sieve_norms(20)
        self.assertEqual(n_lambda(10.5, table), 10.0)
        self.assertEqual(n_lambda(5, table), 4.0)
        with self.assertRaises(ValueError):
            n_lambda(50, table)


if __name__ == '__main__':
    unittest.main()
