"""
Tests de la configuración de ejecución y la caché de artefactos
"""

import unittest
import os
import sys
import json
import shutil
import tempfile
from unittest.mock import patch

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.cache import (ArtifactCache, parse_norm_table, read_with_checksum, serialize_norm_table,
                       write_with_checksum)
from src.config import RunConfig, parse_flat_text, parse_overrides
from src.errors import CacheChecksumError, ConfigError
from src.lattice import sieve_norms


class TestRunConfig(unittest.TestCase):
    """Tests de carga, validación y hash de la configuración"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_defaults_are_valid(self):
        config = RunConfig.load(None, use_env=False)
        self.assertEqual(config['extension.preset'], 'rank2-sample')
        self.assertEqual(config['solver.spectral_floor'], -1e4)

    def test_flat_text(self):
        values = parse_flat_text("solver.tol = 1e-9  # más estricto\n\nrun.threads=4\n")
        self.assertEqual(values, {'solver.tol': 1e-9, 'run.threads': 4})
        with self.assertRaises(ConfigError):
            parse_flat_text("línea sin asignación")

    def test_file_then_overrides(self):
        """defaults → archivo → overrides"""
        path = os.path.join(self.temp_dir, 'lab.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump({'solver': {'tol': 1e-9, 'lambda_max': 50.0}}, f)
        config = RunConfig.load(path, {'solver.lambda_max': 80.0}, use_env=False)
        self.assertEqual(config['solver.tol'], 1e-9)
        self.assertEqual(config['solver.lambda_max'], 80.0)

    def test_text_file(self):
        path = os.path.join(self.temp_dir, 'lab.cfg')
        with open(path, 'w', encoding='utf-8') as f:
            f.write("extension.preset = minus-identity\nsieve.base = [0.5, 1.5]\n")
        config = RunConfig.load(path, use_env=False)
        self.assertEqual(config['extension.preset'], 'minus-identity')
        self.assertEqual(config['sieve.base'], [0.5, 1.5])

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            RunConfig.load(os.path.join(self.temp_dir, 'no.json'), use_env=False)

    def test_environment_overrides(self):
        with patch.dict(os.environ, {'LAB_THREADS': '3'}):
            config = RunConfig.load(None)
        self.assertEqual(config['run.threads'], 3)

    def test_all_problems_reported(self):
        with self.assertRaises(ConfigError) as ctx:
            RunConfig.load(None, {'solver.tol': 5.0, 'sieve.epsilon': 0.5, 'run.log_level': 'RUIDO'},
                           use_env=False)
        self.assertEqual(len(ctx.exception.problems), 3)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            RunConfig.load(None, {'solver.velocidad': 1}, use_env=False)

    def test_custom_extension_needs_angles(self):
        with self.assertRaises(ConfigError):
            RunConfig.load(None, {'extension.preset': None, 'extension.phase': 0.3}, use_env=False)
        config = RunConfig.load(None, {'extension.preset': None, 'extension.phase': 0.3,
                                       'extension.su2': [0.1, 0.2, 0.3]}, use_env=False)
        self.assertIsNone(config['extension.preset'])

    def test_hash_ignores_run_section(self):
        base = RunConfig.load(None, use_env=False)
        threads = RunConfig.load(None, {'run.threads': 8, 'run.output_dir': 'otro'}, use_env=False)
        tol = RunConfig.load(None, {'solver.tol': 1e-9}, use_env=False)
        self.assertEqual(base.config_hash(), threads.config_hash())
        self.assertNotEqual(base.config_hash(), tol.config_hash())
        self.assertEqual(len(base.config_hash()), 64)

    def test_sections(self):
        config = RunConfig.load(None, use_env=False)
        self.assertEqual(config.section('rectangular'), {'enabled': True, 'aspect_sq': '2'})
        self.assertEqual(config.to_dict()['norms'], {'x_max': 1e4})

    def test_parse_overrides(self):
        self.assertEqual(parse_overrides(['solver.tol=1e-9', 'extension.preset=identity']),
                         {'solver.tol': 1e-9, 'extension.preset': 'identity'})
        with self.assertRaises(ConfigError):
            parse_overrides(['solver.tol'])


class TestArtifactCache(unittest.TestCase):
    """Tests de escritura con checksum y recálculo tras corrupción"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.cache = ArtifactCache(os.path.join(self.temp_dir, 'cache'))

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_checksum_roundtrip_and_tamper(self):
        path = os.path.join(self.temp_dir, 'datos.bin')
        write_with_checksum(path, b'abc', {'k': 1})
        data, meta = read_with_checksum(path)
        self.assertEqual((data, meta), (b'abc', {'k': 1}))
        with open(path, 'wb') as f:
            f.write(b'abd')
        with self.assertRaises(CacheChecksumError):
            read_with_checksum(path)
        os.remove(path + '.sha256')
        with self.assertRaises(CacheChecksumError):
            read_with_checksum(path)

    def test_exact_rectangular_norms(self):
        """a² = 3/2: la norma de (0, 1) es 2/3 y se escribe exacta"""
        table = sieve_norms(1, '3/2')
        text = serialize_norm_table(table).decode('utf-8')
        self.assertTrue(text.startswith("norm,multiplicity\n0,1\n"))
        self.assertIn("2/3,2", text)
        parsed = parse_norm_table(text.encode('utf-8'), '3/2', 1)
        self.assertEqual(parsed.keys.tolist(), table.keys.tolist())

    def test_bad_header(self):
        with self.assertRaises(CacheChecksumError):
            parse_norm_table(b"n,m\n0,1\n", 1, 1)

    def test_norms_cached_and_recomputed(self):
        first = self.cache.norms(200)
        path = self.cache.norm_path(200)
        self.assertTrue(os.path.exists(path))
        self.assertEqual(self.cache.load_norms(200).multiplicities.tolist(), first.multiplicities.tolist())

        with open(path, 'a', encoding='utf-8') as f:
            f.write("999,1\n")
        with self.assertLogs('src.cache', level='WARNING'):
            again = self.cache.norms(200)
        self.assertEqual(again.keys.tolist(), first.keys.tolist())
        read_with_checksum(path)

    def test_spectrum_records(self):
        records = [{'lambda': 0.1 + 0.2, 'kind': 'new', 'multiplicity': 1, 'd': [1.0, 0.0, 0.0, 0.0],
                    'residual': 1e-12}]
        self.cache.save_spectrum('abc', records)
        self.assertEqual(self.cache.load_spectrum('abc'), records)
        with open(self.cache.spectrum_path('abc'), 'a', encoding='utf-8') as f:
            f.write("{}\n")
        self.assertIsNone(self.cache.load_spectrum('abc'))
        self.assertIsNone(self.cache.load_spectrum('otro'))


if __name__ == '__main__':
    unittest.main()
