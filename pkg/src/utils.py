"""
Utilidades comunes
Logging, mapeo paralelo determinista y muestreo de baja discrepancia
"""

import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

T = TypeVar('T')
R = TypeVar('R')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Conjugado de la razón áurea: la sucesión de Weyl más uniforme en [0, 1)
GOLDEN_FRACTION = (np.sqrt(5.0) - 1.0) / 2.0


def setup_logging(level: Optional[str] = None) -> None:
    """
    Configura el logging raíz

    Args:
        level: Nivel de log; si es None se usa LAB_LOG_LEVEL o INFO
    """
    level_name = (level or os.getenv('LAB_LOG_LEVEL') or 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Aplica func a cada elemento preservando el orden de entrada

    Args:
        func: Función pura
        items: Elementos a procesar
        threads: Número de hilos (1 = secuencial)

    Returns:
        Lista de resultados en el mismo orden que items
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def seed_fraction(config_hash: str) -> float:
    """Convierte un hash hexadecimal en una fracción de [0, 1)"""
    return int(config_hash[:12], 16) / float(16 ** 12)


def weyl_fractions(count: int, seed: float = 0.0) -> np.ndarray:
    """
    Sucesión de Weyl {seed + k·φ⁻¹} para k = 1..count

    Args:
        count: Número de puntos
        seed: Desplazamiento inicial en [0, 1)

    Returns:
        Array de fracciones en [0, 1)
    """
    k = np.arange(1, count + 1, dtype=float)
    return np.mod(seed + k * GOLDEN_FRACTION, 1.0)


def log_uniform_samples(population: np.ndarray, count: int, lo: float, hi: float,
                        seed: float = 0.0) -> np.ndarray:
    """
    Elige hasta count elementos de population, uniformes en log λ

    Cada fracción de Weyl se lleva a un valor objetivo en escala logarítmica y
    se toma el miembro más cercano aún no elegido.

    Args:
        population: Valores ordenados candidatos
        count: Número de muestras deseadas
        lo, hi: Intervalo de muestreo
        seed: Desplazamiento de la sucesión

    Returns:
        Muestras ordenadas (sin repetidos)
    """
    pool = np.asarray(population, dtype=float)
    pool = pool[(pool >= lo) & (pool <= hi)]
    if pool.size <= count:
        return pool
    targets = np.exp(np.log(lo) + weyl_fractions(count, seed) * (np.log(hi) - np.log(lo)))
    chosen = set()
    for target in targets:
        idx = int(np.searchsorted(pool, target))
        candidates = [i for i in (idx - 1, idx) if 0 <= i < pool.size]
        best = min(candidates, key=lambda i: abs(pool[i] - target))
        # Si ya se eligió, avanzar al vecino libre más próximo
        offset = 0
        while best in chosen:
            offset += 1
            for i in (best - offset, best + offset):
                if 0 <= i < pool.size and i not in chosen:
                    best = i
                    break
        chosen.add(best)
    return pool[sorted(chosen)]
