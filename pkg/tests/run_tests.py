"""
Ejecuta todas las pruebas del laboratorio con un resumen final
"""

import unittest
import os
import sys

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(TESTS_DIR, '..'))


def run_tests():
    """Ejecuta todas las pruebas"""
    print("🧪 Ejecutando pruebas del Laboratorio Espectral...")
    print("=" * 60)

    loader = unittest.TestLoader()
    suite = loader.discover(TESTS_DIR, pattern='test_*.py', top_level_dir=TESTS_DIR)

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    print("\n" + "=" * 60)
    print("📊 RESUMEN DE PRUEBAS")
    print("=" * 60)
    print(f"Tests ejecutados: {result.testsRun}")
    print(f"Fallidas: {len(result.failures)}")
    print(f"Errores: {len(result.errors)}")

    if result.failures:
        print("\n❌ FALLOS:")
        for test, traceback in result.failures:
            last_line = traceback.strip().splitlines()[-1]
            print(f"  - {test}: {last_line}")

    if result.errors:
        print("\n⚠️  ERRORES:")
        for test, _ in result.errors:
            print(f"  - {test}: Error de ejecución")

    if result.testsRun:
        success_rate = ((result.testsRun - len(result.failures) - len(result.errors)) / result.testsRun) * 100
        print(f"\n🎯 Tasa de éxito: {success_rate:.1f}%")
        if success_rate == 100:
            print("🏆 ¡Todas las pruebas pasaron exitosamente!")
        else:
            print("⚠️  Revisa los errores antes de lanzar los experimentos completos")

    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_tests()
    sys.exit(0 if success else 1)
