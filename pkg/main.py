#!/usr/bin/env python3
"""
Laboratorio Espectral - Script Principal
Punto de entrada para los experimentos del toro plano con dos dispersores
"""

import sys
import os
import argparse
from typing import Dict, List, Optional

# Añadir src al path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.config import DEFAULT_CONFIG_PATH, PRESET_NAMES, RunConfig, parse_overrides
from src.errors import AssertionFailure, ConfigError, LabError
from src.lab_runner import SUBCOMMANDS, RunResult, SpectralLab
from src.utils import setup_logging

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    """Parser de la línea de comandos"""
    parser = argparse.ArgumentParser(
        description='Espectro, criba diofántica y equidistribución en el toro con dos dispersores',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:
  python main.py norms
  python main.py spectrum --preset minus-identity --lambda-max 200
  python main.py sieve --threads 8
  python main.py equidist --set equidist.samples=50
  python main.py verify --config config/lab_config.json
  python main.py report --out resultados/
        """
    )

    parser.add_argument(
        'subcommand',
        choices=SUBCOMMANDS,
        help='Experimento a ejecutar'
    )

    parser.add_argument(
        '--config',
        type=str,
        default=None,
        help=f'Archivo de configuración (.json o texto seccion.clave = valor); por defecto {DEFAULT_CONFIG_PATH} si existe'
    )

    parser.add_argument(
        '--out',
        type=str,
        help='Directorio de artefactos (run.output_dir)'
    )

    parser.add_argument(
        '--cache',
        type=str,
        help='Directorio de caché (run.cache_dir)'
    )

    parser.add_argument(
        '--lambda-max',
        type=float,
        help='Cota superior del barrido espectral (solver.lambda_max)'
    )

    parser.add_argument(
        '--preset',
        type=str,
        help=f'Extensión con nombre: {", ".join(PRESET_NAMES)}'
    )

    parser.add_argument(
        '--threads',
        type=int,
        help='Número de hilos (run.threads)'
    )

    parser.add_argument(
        '--set',
        action='append',
        default=[],
        metavar='SECCION.CLAVE=VALOR',
        help='Sobreescribe cualquier clave de la configuración (repetible)'
    )

    parser.add_argument(
        '--log-level',
        type=str,
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Nivel de logging'
    )

    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Mostrar información detallada'
    )

    return parser


def collect_overrides(args: argparse.Namespace) -> Dict:
    """Sobreescrituras de la línea de comandos en claves con puntos"""
    overrides = parse_overrides(args.set)
    flags = {
        'run.output_dir': args.out,
        'run.cache_dir': args.cache,
        'solver.lambda_max': args.lambda_max,
        'extension.preset': args.preset,
        'run.threads': args.threads,
        'run.log_level': args.log_level,
    }
    overrides.update({key: value for key, value in flags.items() if value is not None})
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.threads is not None and args.threads < 1:
        parser.error('--threads debe ser al menos 1')

    config_path = args.config
    if config_path is None and os.path.exists(DEFAULT_CONFIG_PATH):
        config_path = DEFAULT_CONFIG_PATH

    try:
        config = RunConfig.load(config_path, collect_overrides(args))
    except ConfigError as e:
        print("❌ Configuración inválida:")
        for problem in e.problems:
            print(f"  - {problem}")
        return EXIT_CONFIG

    setup_logging(config['run.log_level'])
    if args.verbose:
        print(f"📊 Configuración: {config_path or 'valores por defecto'}")
        print(f"🔑 Hash: {config.config_hash()}")

    try:
        lab = SpectralLab(config)
        result = lab.run(args.subcommand)
        print_results(result, args.verbose)
        if not result.passed:
            failure = result.failures()[0]
            raise AssertionFailure(f"Comprobación fallida: {failure.name}", failure.witness)
        return EXIT_OK

    except AssertionFailure as e:
        print(f"\n❌ {e}")
        print(f"📋 Testigo: {e.witness}")
        return EXIT_ASSERTION
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\n⏹️  Ejecución cancelada por el usuario")
        return EXIT_ASSERTION
    except LabError as e:
        print(f"\n❌ Error del laboratorio: {str(e)}")
        print(f"📝 Tipo de error: {type(e).__name__}")
        return EXIT_ASSERTION
    except Exception as e:
        import traceback
        print(f"\n❌ Error inesperado: {str(e)}")
        traceback.print_exc()
        return EXIT_ASSERTION


def print_results(result: RunResult, verbose: bool = False):
    """Imprime el resultado de un subcomando"""
    print("\n" + "=" * 60)
    print(f"📊 RESULTADOS: {result.subcommand}")
    print("=" * 60)
    print(f"⏱️  Tiempo: {result.elapsed:.2f}s")

    if result.checks:
        print("\n📋 COMPROBACIONES:")
        for check in result.checks:
            print(f"  {'✅' if check.passed else '❌'} {check.name}")
    if result.advisory:
        print("\n🔍 EXPECTATIVAS CALIBRADAS (informativas):")
        for check in result.advisory:
            print(f"  {'✅' if check.passed else '⚠️ '} {check.name}")

    if result.artifacts:
        print("\n📁 ARCHIVOS GENERADOS:")
        for name, path in sorted(result.artifacts.items()):
            print(f"  📄 {name}: {path}")

    if verbose and result.summary:
        print("\n🔍 RESUMEN:")
        for key, value in result.summary.items():
            print(f"  {key}: {value}")


if __name__ == "__main__":
    sys.exit(main())
