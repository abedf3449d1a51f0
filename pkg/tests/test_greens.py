"""
Tests de las funciones de Green: diferencias de resolventes, constantes de
deficiencia y matriz de mezcla
"""

import unittest
import os
import sys
import math

import numpy as np

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import DegenerateGramError, SingularInputError
from src.greens import (FOUR_PI_SQ, IDENTITY_TOLERANCE, SUMS_CACHE_SIZE, DeficiencyConstants, TorusGeometry,
                        deficiency_constants, lattice_sums, mixing_matrix, norm_sq, norm_sq_outside,
                        resolvent_diff)
from src import greens

CUTOFF = 1e5


class TestTorusGeometry(unittest.TestCase):
    """Tests de la geometría del toro"""

    def test_default_displacement(self):
        geom = TorusGeometry()
        self.assertAlmostEqual(geom.x0[0], math.pi * (math.sqrt(2) - 1))
        self.assertAlmostEqual(geom.x0[1], math.pi * (math.sqrt(3) - 1))
        pair = geom.diophantine_pair()
        self.assertAlmostEqual(pair[0], math.sqrt(2) - 1)
        self.assertAlmostEqual(pair[1], math.sqrt(3) - 1)

    def test_coincident_scatterers_rejected(self):
        with self.assertRaises(ValueError):
            TorusGeometry(x1=(0.0, 0.0), x2=(2 * math.pi, 0.0))

    def test_reduce_into_fundamental_domain(self):
        geom = TorusGeometry()
        u, v = geom.reduce((-1.0, 7.0))
        self.assertAlmostEqual(u, 2 * math.pi - 1.0)
        self.assertAlmostEqual(v, 7.0 - 2 * math.pi)

    def test_rectangular_periods(self):
        geom = TorusGeometry(aspect_sq='2')
        p1, p2 = geom.periods
        self.assertAlmostEqual(p1 * p2, 4 * math.pi ** 2)
        self.assertFalse(geom.is_square)


class TestResolventDifference(unittest.TestCase):
    """Tests de (G_μ − G_λ) truncada"""

    def setUp(self):
        self.geom = TorusGeometry()
        self.sums = lattice_sums(self.geom, CUTOFF)

    def test_equal_parameters_vanish(self):
        self.assertEqual(self.sums.resolvent(3.5, 3.5).value, 0j)

    def test_conjugate_symmetry(self):
        """Para λ real, el valor en −i es el conjugado del valor en i"""
        for kind in ('diag', 'cross'):
            plus = self.sums.resolvent(7.5, 1j, kind).value
            minus = self.sums.resolvent(7.5, -1j, kind).value
            self.assertAlmostEqual(plus.conjugate(), minus, places=12)

    def test_antisymmetry(self):
        forward = self.sums.resolvent(7.5, 1j, 'cross').value
        backward = self.sums.resolvent(1j, 7.5, 'cross').value
        self.assertAlmostEqual(forward, -backward, places=14)

    def test_singular_input(self):
        with self.assertRaises(SingularInputError):
            self.sums.resolvent(5.0, 1j)

    def test_cutoff_too_small(self):
        with self.assertRaises(ValueError):
            resolvent_diff(5.5, 1j, (0.0, 0.0), R=10.0)

    def test_resolvent_diff_matches_evaluator(self):
        direct = resolvent_diff(2.5, 1j, (0.0, 0.0), R=CUTOFF).value
        self.assertAlmostEqual(direct, self.sums.resolvent(2.5, 1j, 'diag').value, places=12)

    def test_sums_shared_and_bounded(self):
        """El evaluador se comparte y la caché no crece con cada desplazamiento"""
        self.assertIs(lattice_sums(TorusGeometry(), 2000.0), lattice_sums(TorusGeometry(), 2000.0))
        for k in range(SUMS_CACHE_SIZE + 4):
            resolvent_diff(2.5, 1j, (0.1 * (k + 1), 0.3), R=2000.0)
        info = greens._cached_sums.cache_info()
        self.assertEqual(info.maxsize, SUMS_CACHE_SIZE)
        self.assertLessEqual(info.currsize, SUMS_CACHE_SIZE)

    def test_difference_matrix_structure(self):
        D = self.sums.difference_matrix(12.5)
        self.assertEqual(D[0, 0], D[1, 1])
        self.assertEqual(D[0, 1], D[1, 0])


class TestDeficiencyConstants(unittest.TestCase):
    """Tests de c1, c2 y la matriz T"""

    @classmethod
    def setUpClass(cls):
        cls.geom = TorusGeometry()
        cls.constants = deficiency_constants(cls.geom, R=CUTOFF)

    def test_gram_positive(self):
        c = self.constants
        self.assertGreater(c.c1, abs(c.c2))
        self.assertGreater(np.linalg.eigvalsh(c.gram).min(), 0.0)

    def test_imaginary_part_identities(self):
        sums = lattice_sums(self.geom, CUTOFF)
        im_diag = sums.resolvent(-0.5, 1j, 'diag').value.imag
        im_cross = sums.resolvent(-0.5, 1j, 'cross').value.imag
        scale = FOUR_PI_SQ * self.constants.c1
        self.assertLess(abs(im_diag + FOUR_PI_SQ * self.constants.c1) / scale, 1e-6)
        self.assertLess(abs(im_cross + FOUR_PI_SQ * self.constants.c2) / scale, 1e-6)

    def test_identity_defect_recorded(self):
        """El defecto medido de las identidades queda en las constantes"""
        self.assertGreaterEqual(self.constants.identity_defect, 0.0)
        self.assertLess(self.constants.identity_defect, IDENTITY_TOLERANCE)
        self.assertTrue(self.constants.identities_hold)
        relaxed = deficiency_constants(self.geom, R=CUTOFF, strict=False)
        self.assertEqual(relaxed.identity_defect, self.constants.identity_defect)

    def test_identity_defect_above_tolerance(self):
        broken = DeficiencyConstants(c1=1.0, c2=0.5, cutoff_used=CUTOFF, tail_bound=0.0,
                                     identity_defect=10 * IDENTITY_TOLERANCE)
        self.assertFalse(broken.identities_hold)

    def test_whitening(self):
        T = mixing_matrix(self.constants)
        self.assertLess(T.whitening_error(self.constants.c1, self.constants.c2), 1e-10)
        self.assertGreater(T.determinant, 0.0)

    def test_mixing_from_pair(self):
        T = mixing_matrix((2.0, 1.0))
        expected = np.array([[1 / math.sqrt(2), 0.0], [-1 / math.sqrt(6), math.sqrt(2 / 3)]])
        np.testing.assert_allclose(T.matrix, expected, atol=1e-14)

    def test_degenerate_gram(self):
        with self.assertRaises(DegenerateGramError):
            mixing_matrix((1.0, 1.0))

    def test_cutoff_floor(self):
        with self.assertRaises(ValueError):
            deficiency_constants(self.geom, R=100.0)


class TestNormSquared(unittest.TestCase):
    """Tests de ‖d1 G(·,x1) + d2 G(·,x2)‖²"""

    def test_outside_part_is_smaller(self):
        geom = TorusGeometry()
        d = (1.0, 0.0)
        total = norm_sq(10.5, d, geom, R=2e4).value
        outside = norm_sq_outside(10.5, d, geom, 1.5, R=2e4).value
        self.assertGreater(total, outside)
        self.assertGreater(outside, 0.0)

    def test_requires_unit_vector(self):
        with self.assertRaises(ValueError):
            norm_sq(10.5, (1.0, 1.0), TorusGeometry(), R=2e4)

    def test_short_cutoff_rejected(self):
        with self.assertRaises(ValueError):
            norm_sq(10.5, (1.0, 0.0), TorusGeometry(), R=1000.0)


if __name__ == '__main__':
    unittest.main()
