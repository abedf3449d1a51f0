"""
Tests del punto de entrada, el orquestador y el generador de reportes
"""

import unittest
import os
import sys
import json
import shutil
import tempfile
from contextlib import redirect_stdout
from io import StringIO
from unittest.mock import patch

# Añadir la raíz del repositorio al path para las pruebas
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import main as cli
from src.config import RunConfig
from src.lab_runner import RunResult, SpectralLab
from src.report_generator import ReportGenerator
from src.verify import CheckResult


class CliTestCase(unittest.TestCase):
    """Directorios temporales de salida y caché"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.out = os.path.join(self.temp_dir, 'out')
        self.cache = os.path.join(self.temp_dir, 'cache')

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def run_cli(self, *args) -> int:
        with redirect_stdout(StringIO()):
            return cli.main(list(args) + ['--out', self.out, '--cache', self.cache])


class TestMain(CliTestCase):
    """Tests de los códigos de salida"""

    def test_norms_ok(self):
        self.assertEqual(self.run_cli('norms', '--set', 'norms.x_max=100'), cli.EXIT_OK)
        files = os.listdir(self.cache)
        self.assertTrue(any(name.endswith('.csv') for name in files))
        self.assertTrue(any(name.endswith('.sha256') for name in files))

    def test_invalid_value_exit_code(self):
        self.assertEqual(self.run_cli('norms', '--set', 'solver.tol=5'), cli.EXIT_CONFIG)

    def test_unknown_key_exit_code(self):
        self.assertEqual(self.run_cli('norms', '--set', 'solver.rapido=1'), cli.EXIT_CONFIG)

    def test_malformed_set(self):
        self.assertEqual(self.run_cli('norms', '--set', 'solver.tol'), cli.EXIT_CONFIG)

    def test_failed_check_exit_code(self):
        failing = RunResult('verify', checks=[CheckResult('whitening', False, {'max_error': 1.0})])
        with patch.object(SpectralLab, 'run', return_value=failing):
            self.assertEqual(self.run_cli('verify'), cli.EXIT_ASSERTION)

    def test_unknown_subcommand(self):
        with self.assertRaises(SystemExit):
            with redirect_stdout(StringIO()):
                cli.main(['nada'])

    def test_spectrum_minus_identity(self):
        """U = −I no tiene autovalores nuevos"""
        code = self.run_cli('spectrum', '--preset', 'minus-identity', '--lambda-max', '10',
                            '--set', 'solver.cutoff=200000')
        self.assertEqual(code, cli.EXIT_OK)
        with open(os.path.join(self.out, 'spectrum.jsonl'), encoding='utf-8') as f:
            records = [json.loads(line) for line in f if line.strip()]
        self.assertTrue(records)
        self.assertFalse([r for r in records if r['kind'] == 'new'])
        self.assertEqual(records[0], {'lambda': 0.0, 'kind': 'old', 'multiplicity': 1, 'd': None, 'residual': 0.0})


class TestSpectralLab(CliTestCase):
    """Tests del orquestador"""

    def config(self, **values):
        values.update({'run.output_dir': self.out, 'run.cache_dir': self.cache})
        return RunConfig.load(None, values, use_env=False)

    def test_rectangular_geometry_keeps_pair(self):
        lab = SpectralLab(self.config())
        square = lab.geometry().diophantine_pair()
        rect = lab.geometry('2').diophantine_pair()
        self.assertAlmostEqual(square[0], rect[0])
        self.assertAlmostEqual(square[1], rect[1])

    def test_assertions_disabled_moves_checks(self):
        lab = SpectralLab(self.config(**{'assertions.enabled': False, 'norms.x_max': 50.0}))
        with redirect_stdout(StringIO()):
            result = lab.run('norms')
        self.assertEqual(result.checks, [])
        self.assertTrue(result.passed)
        self.assertEqual(result.summary['distinct_norms'], 25)

    def test_unknown_subcommand(self):
        with self.assertRaises(ValueError):
            SpectralLab(self.config()).run('todo')


class TestReportGenerator(CliTestCase):
    """Tests del digest y el resumen"""

    def test_digest_is_deterministic(self):
        config = RunConfig.load(None, use_env=False)
        results = {'verify': RunResult('verify', checks=[CheckResult('whitening', True, {'max_error': 1e-15})],
                                       advisory=[CheckResult('density_trend', False, {'advisory': True})])}
        generator = ReportGenerator(self.out)
        first = generator.build_digest(results, config)
        self.assertEqual(first, generator.build_digest(results, config))
        self.assertTrue(first['passed'])
        self.assertEqual(first['checks'][0]['subcommand'], 'verify')

        summary = generator.render_summary(first)
        self.assertIn('[OK ] verify/whitening', summary)
        self.assertIn('[-- ] verify/density_trend', summary)

    def test_generate_report_files(self):
        config = RunConfig.load(None, use_env=False)
        results = {'norms': RunResult('norms', summary={'x_max': 10.0}),
                   'verify': RunResult('verify', checks=[CheckResult('whitening', False, {'max_error': 0.5})])}
        with redirect_stdout(StringIO()):
            paths = ReportGenerator(self.out).generate_report(results, config)
        for key in ('digest', 'summary', 'pdf'):
            self.assertTrue(os.path.exists(paths[key]), key)
        with open(paths['digest'], encoding='utf-8') as f:
            self.assertFalse(json.load(f)['passed'])


if __name__ == '__main__':
    unittest.main()
