"""
Espectro del Laplaciano en el toro plano
Normas de la red dual (sumas de dos cuadrados o a²m² + k²/a²) con sus
multiplicidades y los puntos de red que las representan
"""

import math
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

AspectLike = Union[int, str, Fraction, float]

# Filas de ξ1 acumuladas antes de volcar en el histograma
_ROW_CHUNK = 256


class LatticePoint(NamedTuple):
    """Punto ξ = (ξ1, ξ2) de la red dual en coordenadas enteras"""
    xi1: int
    xi2: int


def as_aspect(aspect_sq: AspectLike = 1) -> Fraction:
    """
    Normaliza a² a un racional positivo exacto

    Args:
        aspect_sq: a² como entero, cadena ("2", "3/2"), Fraction o float

    Returns:
        Fraction positiva
    """
    if isinstance(aspect_sq, float):
        value = Fraction(repr(aspect_sq))
    else:
        value = Fraction(aspect_sq)
    if value <= 0:
        raise ValueError(f"a² debe ser positivo, recibido: {aspect_sq}")
    return value


def aspect_scale(aspect_sq: AspectLike = 1) -> Tuple[int, int]:
    """Devuelve (p, q) con a² = p/q; la norma es (p²ξ1² + q²ξ2²)/(pq)"""
    value = as_aspect(aspect_sq)
    return value.numerator, value.denominator


def norm_of(xi1, xi2, aspect_sq: AspectLike = 1):
    """Norma física a²ξ1² + ξ2²/a² (acepta escalares o arrays)"""
    p, q = aspect_scale(aspect_sq)
    xi1 = np.asarray(xi1, dtype=np.int64)
    xi2 = np.asarray(xi2, dtype=np.int64)
    return (p * p * xi1 * xi1 + q * q * xi2 * xi2) / float(p * q)


@dataclass(frozen=True, eq=False)
class NormTable:
    """
    Tabla ordenada de normas distintas ≤ cutoff con multiplicidades exactas

    Las normas se guardan como claves enteras k = p²ξ1² + q²ξ2² sobre la
    escala común p·q, de modo que la deduplicación es exacta.
    """
    aspect_sq: Fraction
    keys: np.ndarray
    multiplicities: np.ndarray
    cutoff: float
    norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p, q = self.aspect_sq.numerator, self.aspect_sq.denominator
        object.__setattr__(self, 'norms', self.keys / float(p * q))

    @property
    def scale(self) -> int:
        return self.aspect_sq.numerator * self.aspect_sq.denominator

    @property
    def is_square(self) -> bool:
        return self.aspect_sq == 1

    def __len__(self) -> int:
        return int(self.keys.size)

    def exact_norm(self, index: int) -> Fraction:
        """Norma exacta de la entrada index"""
        return Fraction(int(self.keys[index]), self.scale)

    def entries(self) -> Iterator[Tuple[float, int]]:
        for norm, mult in zip(self.norms, self.multiplicities):
            yield float(norm), int(mult)

    def point_count(self) -> int:
        """Total de puntos de red con norma ≤ cutoff"""
        return int(self.multiplicities.sum())

    def multiplicity_of(self, norm: float) -> int:
        """Multiplicidad de una norma tabulada (0 si no está)"""
        idx = int(np.searchsorted(self.norms, norm))
        if idx < self.norms.size and abs(self.norms[idx] - norm) <= 1e-12 * max(1.0, abs(norm)):
            return int(self.multiplicities[idx])
        return 0

    def below(self, limit: float) -> np.ndarray:
        """Normas estrictamente menores que limit"""
        return self.norms[:int(np.searchsorted(self.norms, limit, side='left'))]

    def covers(self, lam: float) -> bool:
        return self.cutoff >= lam


def _quadrant_rows(max_key: int, p: int, q: int, chunk: int = _ROW_CHUNK):
    """
    Recorre el cuadrante ξ1, ξ2 ≥ 0 con p²ξ1² + q²ξ2² ≤ max_key

    Produce bloques (xi1, xi2, keys) de arrays int64; los signos se
    reconstruyen con los factores de simetría de cada llamador.
    """
    if max_key < 0:
        return
    xi1_max = math.isqrt(max_key // (p * p))
    for start in range(0, xi1_max + 1, chunk):
        rows_1, rows_2 = [], []
        for xi1 in range(start, min(start + chunk, xi1_max + 1)):
            remaining = max_key - p * p * xi1 * xi1
            xi2_max = math.isqrt(remaining // (q * q))
            xi2 = np.arange(xi2_max + 1, dtype=np.int64)
            rows_1.append(np.full(xi2.size, xi1, dtype=np.int64))
            rows_2.append(xi2)
        xi1_arr = np.concatenate(rows_1)
        xi2_arr = np.concatenate(rows_2)
        yield xi1_arr, xi2_arr, p * p * xi1_arr * xi1_arr + q * q * xi2_arr * xi2_arr


def _max_key(cutoff: float, aspect: Fraction) -> int:
    if cutoff < 0:
        return -1
    return math.floor(Fraction(cutoff) * aspect.numerator * aspect.denominator)


def accumulate_shells(cutoff: float, aspect_sq: AspectLike = 1,
                      phases: Optional[Tuple[float, float]] = None):
    """
    Histograma por capas de la red: multiplicidades y, opcionalmente,
    Σ_capa cos(ξ1·u + ξ2·v) para fases físicas (u, v) por unidad de ξ

    La suma sobre los cuatro signos factoriza: (2cos(ξ1u) ó 1)·(2cos(ξ2v) ó 1).

    Returns:
        (keys, multiplicities, cos_sums o None)
    """
    aspect = as_aspect(aspect_sq)
    p, q = aspect.numerator, aspect.denominator
    max_key = _max_key(cutoff, aspect)
    if max_key < 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, (np.zeros(0) if phases is not None else None)

    counts = np.zeros(max_key + 1, dtype=np.int32)
    cos_sums = np.zeros(max_key + 1, dtype=float) if phases is not None else None
    for xi1, xi2, keys in _quadrant_rows(max_key, p, q):
        sym = np.where(xi1 > 0, 2, 1) * np.where(xi2 > 0, 2, 1)
        np.add.at(counts, keys, sym.astype(np.int32))
        if phases is not None:
            u, v = phases
            f1 = np.where(xi1 > 0, 2.0 * np.cos(xi1 * u), 1.0)
            f2 = np.where(xi2 > 0, 2.0 * np.cos(xi2 * v), 1.0)
            np.add.at(cos_sums, keys, f1 * f2)

    nonzero = np.flatnonzero(counts)
    mults = counts[nonzero].astype(np.int64)
    return nonzero.astype(np.int64), mults, (cos_sums[nonzero] if phases is not None else None)


def sieve_norms(X: float, aspect_sq: AspectLike = 1) -> NormTable:
    """
    Tabla de todas las normas distintas ≤ X con multiplicidades exactas

    Args:
        X: Cota superior (≥ 0)
        aspect_sq: a² racional positivo (1 = toro cuadrado)

    Returns:
        NormTable ordenada de forma determinista
    """
    aspect = as_aspect(aspect_sq)
    if X < 0:
        raise ValueError(f"La cota X debe ser ≥ 0, recibido: {X}")
    keys, mults, _ = accumulate_shells(X, aspect)
    logger.debug(f"🔍 Criba hasta X={X}: {keys.size} normas distintas")
    return NormTable(aspect_sq=aspect, keys=keys, multiplicities=mults, cutoff=float(X))


def shell_points(key: int, aspect_sq: AspectLike = 1) -> List[LatticePoint]:
    """Puntos con p²ξ1² + q²ξ2² = key, en orden lexicográfico"""
    p, q = aspect_scale(aspect_sq)
    if key < 0:
        return []
    points = []
    xi1_max = math.isqrt(key // (p * p))
    for xi1 in range(-xi1_max, xi1_max + 1):
        rest = key - p * p * xi1 * xi1
        if rest % (q * q):
            continue
        sq = rest // (q * q)
        root = math.isqrt(sq)
        if root * root != sq:
            continue
        if root == 0:
            points.append(LatticePoint(xi1, 0))
        else:
            points.append(LatticePoint(xi1, -root))
            points.append(LatticePoint(xi1, root))
    return points


def circle_points(n: int) -> List[LatticePoint]:
    """
    Todos los ξ con ξ1² + ξ2² = n (toro cuadrado), en orden lexicográfico

    Args:
        n: Entero ≥ 0

    Returns:
        Lista de longitud r₂(n); vacía si n no es suma de dos cuadrados
    """
    if n < 0:
        raise ValueError(f"n debe ser ≥ 0, recibido: {n}")
    return shell_points(int(n), 1)


def points_of_norm(norm: float, aspect_sq: AspectLike = 1) -> List[LatticePoint]:
    """Puntos de una norma dada como real (se redondea a la clave entera)"""
    p, q = aspect_scale(aspect_sq)
    key = int(round(norm * p * q))
    return shell_points(key, aspect_sq)


@dataclass(frozen=True, eq=False)
class LatticeWindow:
    """Puntos de red en una ventana espectral, con sus normas"""
    points: np.ndarray
    norms: np.ndarray

    def __len__(self) -> int:
        return int(self.norms.size)

    def __iter__(self) -> Iterator[Tuple[LatticePoint, float]]:
        for (xi1, xi2), norm in zip(self.points, self.norms):
            yield LatticePoint(int(xi1), int(xi2)), float(norm)


def annulus_points(lam: float, L: float, aspect_sq: AspectLike = 1) -> LatticeWindow:
    """
    Puntos con |norma(ξ) − λ| ≤ L

    Args:
        lam: Centro de la ventana
        L: Semiancho (> 0)
        aspect_sq: a²

    Returns:
        LatticeWindow ordenada por (norma, ξ1, ξ2)
    """
    if L <= 0:
        raise ValueError(f"L debe ser positivo, recibido: {L}")
    aspect = as_aspect(aspect_sq)
    p, q = aspect.numerator, aspect.denominator
    a2 = float(aspect)
    hi_norm = lam + L
    if hi_norm < 0:
        return LatticeWindow(np.zeros((0, 2), dtype=np.int64), np.zeros(0))

    xi1_max = int(math.floor(math.sqrt(hi_norm / a2))) + 1
    xi1 = np.arange(-xi1_max, xi1_max + 1, dtype=np.int64)
    base = a2 * xi1.astype(float) ** 2
    # Banda de |ξ2| compatible con la ventana, con holgura de uno por redondeo
    r_lo = np.clip((lam - L - base) * a2, 0.0, None)
    r_hi = (hi_norm - base) * a2
    valid = r_hi >= 0
    xi1, r_lo, r_hi = xi1[valid], r_lo[valid], r_hi[valid]
    lo_abs = np.maximum(np.floor(np.sqrt(r_lo)).astype(np.int64) - 1, 0)
    hi_abs = np.floor(np.sqrt(r_hi)).astype(np.int64) + 1
    counts = hi_abs - lo_abs + 1
    total = int(counts.sum())
    if total == 0:
        return LatticeWindow(np.zeros((0, 2), dtype=np.int64), np.zeros(0))

    rows = np.repeat(xi1, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = np.repeat(lo_abs, counts) + offsets
    # Reflejar ξ2 > 0 para obtener los negativos
    positive = cols > 0
    rows = np.concatenate([rows, rows[positive]])
    cols = np.concatenate([cols, -cols[positive]])

    keys = p * p * rows * rows + q * q * cols * cols
    norms = keys / float(p * q)
    inside = np.abs(norms - lam) <= L
    rows, cols, norms = rows[inside], cols[inside], norms[inside]
    order = np.lexsort((cols, rows, norms))
    points = np.stack([rows[order], cols[order]], axis=1)
    return LatticeWindow(points, norms[order])


def n_lambda(lam: float, table: NormTable) -> float:
    """
    Mayor norma tabulada estrictamente menor que λ

    Args:
        lam: λ > 0
        table: Tabla que cubre [0, λ]

    Returns:
        n_λ
    """
    if lam <= 0:
        raise ValueError(f"λ debe ser positivo, recibido: {lam}")
    if not table.covers(lam):
        raise ValueError(f"La tabla (cutoff={table.cutoff}) no cubre λ={lam}")
    idx = int(np.searchsorted(table.norms, lam, side='left')) - 1
    if idx < 0:
        raise ValueError(f"No hay normas por debajo de λ={lam}")
    return float(table.norms[idx])


def consecutive_gaps(table: NormTable) -> np.ndarray:
    """Huecos n_{k+1} − n_k entre normas consecutivas"""
    return np.diff(table.norms)


def landau_ratio(table: NormTable) -> float:
    """Número de normas distintas ≤ X dividido por X/√log X"""
    X = table.cutoff
    if X <= math.e:
        raise ValueError("landau_ratio requiere X > e")
    return len(table) / (X / math.sqrt(math.log(X)))
