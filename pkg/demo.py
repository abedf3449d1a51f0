#!/usr/bin/env python3
"""
Demo del Laboratorio Espectral
Ejemplos rápidos con parámetros pequeños
"""

import os
import sys

# Añadir src al path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

DEMO_OUTPUT = "output/demo"
DEMO_CACHE = "cache/demo"


def _demo_config(**overrides):
    from src.config import RunConfig

    values = {
        'run.output_dir': DEMO_OUTPUT,
        'run.cache_dir': DEMO_CACHE,
        'norms.x_max': 2000.0,
        'solver.lambda_max': 60.0,
        'solver.cutoff': 2e4,
    }
    values.update(overrides)
    return RunConfig.load(None, values, use_env=False)


def demo_norms():
    """Demo de la tabla de normas y el contador N(λ)"""
    print("🔢 Demo: Tabla de normas del toro cuadrado")
    print("-" * 40)

    try:
        from src.lattice import landau_ratio, n_lambda, sieve_norms

        table = sieve_norms(2000)
        print(f"✅ Normas distintas ≤ 2000: {len(table)}")
        print(f"📊 Puntos de red: {table.point_count()}")
        for norm, mult in list(table.entries())[:6]:
            print(f"  n = {norm:g}  →  r₂(n) = {mult}")
        print(f"📈 N(1000) = {n_lambda(1000, table):g}")
        print(f"📐 Razón de Landau: {landau_ratio(table):.4f}")
        return True

    except Exception as e:
        print(f"❌ Error en tabla de normas: {str(e)}")
        return False


def demo_deficiency_constants():
    """Demo de las constantes de deficiencia y la matriz de mezcla"""
    print("🧮 Demo: Constantes de deficiencia")
    print("-" * 40)

    try:
        from src.greens import TorusGeometry, deficiency_constants, mixing_matrix

        geom = TorusGeometry()
        constants = deficiency_constants(geom, R=1e5)
        mixing = mixing_matrix(constants)
        print(f"✅ c1 = {constants.c1:.6e}")
        print(f"✅ c2 = {constants.c2:.6e}")
        print(f"📏 Error de blanqueo: {mixing.whitening_error(constants.c1, constants.c2):.2e}")
        return True

    except Exception as e:
        print(f"❌ Error calculando constantes: {str(e)}")
        return False


def demo_spectrum():
    """Demo del barrido espectral con la extensión rank1-sample"""
    print("🎼 Demo: Espectro con λ ≤ 60")
    print("-" * 40)

    try:
        from src.lab_runner import SpectralLab

        lab = SpectralLab(_demo_config(**{'extension.preset': 'rank1-sample'}))
        result = lab.run('spectrum')
        for check in result.checks:
            print(f"  {'✅' if check.passed else '❌'} {check.name}")
        print(f"📄 Espectro: {result.artifacts.get('spectrum')}")
        return result.passed

    except Exception as e:
        print(f"❌ Error en el barrido espectral: {str(e)}")
        return False


def demo_truncated_state():
    """Demo de un estado truncado y sus elementos de matriz"""
    print("🎯 Demo: Estado truncado en λ = 10.5")
    print("-" * 40)

    try:
        from src.equidist import matrix_element, truncated_state
        from src.greens import TorusGeometry
        from src.sieve import FilterParams

        state = truncated_state(10.5, (1, 0), TorusGeometry(), FilterParams(), L=1.5)
        print(f"✅ Puntos en la ventana: {len(state)}")
        for zeta in [(0, 0), (1, 0), (1, 1), (50, 0)]:
            element = matrix_element(state, zeta)
            print(f"  ζ = {zeta}: {element.value:.6f} ({element.n_terms} términos)")
        return True

    except Exception as e:
        print(f"❌ Error en el estado truncado: {str(e)}")
        return False


def main():
    """Función principal de demo"""
    print("🎬 LABORATORIO ESPECTRAL - DEMOSTRACIÓN")
    print("=" * 60)
    print("Esta demo muestra las capacidades de la herramienta")
    print("Nota: Se usan cotas pequeñas; los experimentos completos tardan más\n")

    demos = [
        ("Tabla de Normas", demo_norms),
        ("Constantes de Deficiencia", demo_deficiency_constants),
        ("Estado Truncado", demo_truncated_state),
        ("Barrido Espectral", demo_spectrum),
    ]

    results = []

    for demo_name, demo_func in demos:
        print(f"\n{'=' * 20}")
        print(f"🎯 {demo_name}")
        print('=' * 20)

        try:
            success = demo_func()
            results.append((demo_name, success))

            if success:
                print(f"✅ {demo_name} completada")
            else:
                print(f"⚠️  {demo_name} con advertencias")

        except KeyboardInterrupt:
            print("\n⏹️  Demo cancelada por el usuario")
            break

    print(f"\n{'=' * 60}")
    print("📊 RESUMEN DE LA DEMOSTRACIÓN")
    print('=' * 60)

    for demo_name, success in results:
        status = "✅" if success else "❌"
        print(f"{status} {demo_name}")

    successful = sum(1 for _, success in results if success)
    print(f"\n🎯 Demos exitosas: {successful}/{len(results)}")

    print("\n💡 Para usar la herramienta completa:")
    print("   1. Ejecuta: python setup.py")
    print("   2. Ajusta config/lab_config.json o .env")
    print("   3. Ejecuta: python main.py report")


if __name__ == "__main__":
    main()
