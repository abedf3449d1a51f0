"""
Funciones de Green del toro
Sumas de red regularizadas: diferencias de resolventes, constantes de
deficiencia c1/c2, matriz de mezcla T y normas L² de superposiciones

Convención: G_λ(x, y) = −(1/4π²) Σ_ξ e^{i⟨ξ,x−y⟩}/(|ξ|² − λ), con la integral
sin normalizar sobre el toro (volumen 4π²).
"""

import math
import logging
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateGramError, IdentityCheckError, SingularInputError
from .lattice import AspectLike, accumulate_shells, as_aspect

logger = logging.getLogger(__name__)

FOUR_PI_SQ = 4.0 * math.pi ** 2
SIXTEEN_PI_4 = 16.0 * math.pi ** 4

# Distancia mínima admitida entre un parámetro espectral real y una norma
SINGULAR_DISTANCE = 1e-9
IDENTITY_TOLERANCE = 1e-6
# R − λ mínimo para norm_sq (10⁴ con holgura de 0.1 %)
NORM_MIN_SPAN = 0.999e4
# λ de referencia (no es norma) para comprobar Im G_i
_REFERENCE_LAMBDA = -0.5
# Términos del desarrollo de campo lejano: (1/4)^30 < 1e-18
_FAR_TERMS = 30

Spectral = Union[float, complex]


@dataclass(frozen=True)
class TorusGeometry:
    """
    Toro R²/2πL₀ con L₀ = Z(1/a, 0) ⊕ Z(0, a) y dos dispersores x1, x2

    Args:
        aspect_sq: a² racional (1 = toro cuadrado)
        x1, x2: Posiciones de los dispersores
        allow_coincident: Desactiva la guarda x1 ≠ x2 (solo para pruebas)
    """
    aspect_sq: Fraction = Fraction(1)
    x1: Tuple[float, float] = (0.0, 0.0)
    x2: Tuple[float, float] = (math.pi * (math.sqrt(2) - 1), math.pi * (math.sqrt(3) - 1))
    allow_coincident: bool = False
    x0: Tuple[float, float] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'aspect_sq', as_aspect(self.aspect_sq))
        object.__setattr__(self, 'x1', (float(self.x1[0]), float(self.x1[1])))
        object.__setattr__(self, 'x2', (float(self.x2[0]), float(self.x2[1])))
        object.__setattr__(self, 'x0', self.reduce((self.x2[0] - self.x1[0], self.x2[1] - self.x1[1])))
        if not self.allow_coincident and self.is_coincident():
            raise ValueError(f"Los dispersores coinciden en el toro: x1={self.x1}, x2={self.x2}")

    @property
    def a(self) -> float:
        return math.sqrt(float(self.aspect_sq))

    @property
    def periods(self) -> Tuple[float, float]:
        return (2 * math.pi / self.a, 2 * math.pi * self.a)

    @property
    def is_square(self) -> bool:
        return self.aspect_sq == 1

    def reduce(self, w: Sequence[float]) -> Tuple[float, float]:
        """Reduce un desplazamiento al dominio fundamental"""
        p1, p2 = self.periods
        return (math.fmod(math.fmod(w[0], p1) + p1, p1), math.fmod(math.fmod(w[1], p2) + p2, p2))

    def is_coincident(self, tol: float = 1e-12) -> bool:
        p1, p2 = self.periods
        a1, a2 = self.x0
        return min(a1, p1 - a1) < tol and min(a2, p2 - a2) < tol

    def phase_rates(self, w: Sequence[float]) -> Tuple[float, float]:
        """(u, v) con ⟨ξ, w⟩ = ξ1·u + ξ2·v"""
        return (self.a * w[0], w[1] / self.a)

    def phase(self, points: np.ndarray, w: Sequence[float]) -> np.ndarray:
        """⟨ξ, w⟩ para un array de puntos (N, 2)"""
        u, v = self.phase_rates(w)
        points = np.asarray(points)
        return points[..., 0] * u + points[..., 1] * v

    def diophantine_pair(self) -> Tuple[float, float]:
        """Entrada diofántica (α1·a/π, α2/(π·a)); en el toro cuadrado x0/π"""
        u, v = self.phase_rates(self.x0)
        return (u / math.pi, v / math.pi)

    def swapped(self) -> 'TorusGeometry':
        """Misma geometría con x1 y x2 intercambiados"""
        return TorusGeometry(self.aspect_sq, self.x2, self.x1, self.allow_coincident)


@dataclass(frozen=True)
class GreensValue:
    """Valor de una suma de red y cota de la cola truncada"""
    value: complex
    tail_bound: float


@dataclass(frozen=True)
class DeficiencyConstants:
    """c1 = ‖G_{±i}(·, x_j)‖² y c2 = ⟨G_i(·, x1), G_i(·, x2)⟩ (escala 1/16π⁴)"""
    c1: float
    c2: float
    cutoff_used: float
    tail_bound: float
    identity_defect: float = 0.0

    @property
    def identities_hold(self) -> bool:
        return self.identity_defect <= IDENTITY_TOLERANCE

    @property
    def gram(self) -> np.ndarray:
        return np.array([[self.c1, self.c2], [self.c2, self.c1]])


@dataclass(frozen=True)
class MixingMatrix:
    """Matriz T triangular inferior que ortonormaliza la base de deficiencia"""
    matrix: np.ndarray
    constants: Optional[DeficiencyConstants] = None

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def whitening_error(self, c1: float, c2: float) -> float:
        gram = np.array([[c1, c2], [c2, c1]])
        return float(np.max(np.abs(self.matrix @ gram @ self.matrix.T - np.eye(2))))


@lru_cache(maxsize=16)
def shell_phase_sums(cutoff: float, aspect_sq: Fraction, w: Tuple[float, float]):
    """
    Por capa de norma ≤ cutoff: multiplicidad y Σ_capa e^{i⟨ξ,w⟩}

    La suma es real por la simetría ξ → −ξ de la red.

    Returns:
        (norms, multiplicities como float, phase_sums)
    """
    aspect = as_aspect(aspect_sq)
    a = math.sqrt(float(aspect))
    keys, mults, sums = accumulate_shells(cutoff, aspect, phases=(a * w[0], w[1] / a))
    norms = keys / float(aspect.numerator * aspect.denominator)
    weights = mults.astype(float)
    for arr in (norms, weights, sums):
        arr.flags.writeable = False
    return norms, weights, sums


def _is_real(z: Spectral) -> bool:
    return complex(z).imag == 0.0


def _direct_sum(norms: np.ndarray, weights: np.ndarray, lam: Spectral, mu: Spectral) -> complex:
    """Σ w(n)·(μ−λ)/((n−μ)(n−λ)); la forma producto evita cancelaciones"""
    terms = weights * ((mu - lam) / ((norms - mu) * (norms - lam)))
    return complex(np.sum(terms))


class _FarField:
    """Desarrollo en momentos de la parte n > N_s para μ = ±i y λ real"""

    def __init__(self, norms: np.ndarray, weights: np.ndarray, split: float):
        far = norms > split
        self.split = split
        self.near_count = int(np.count_nonzero(~far))
        n_far, w_far = norms[far], weights[far]
        self.constant_i = complex(np.sum(w_far * (1.0 / (n_far - 1j) - 1.0 / n_far)))
        self.moments = np.array([np.sum(w_far / n_far ** (k + 1)) for k in range(1, _FAR_TERMS + 1)])

    def value(self, lam: float, mu: complex) -> complex:
        constant = self.constant_i if mu.imag > 0 else self.constant_i.conjugate()
        series = 0.0
        for moment in self.moments[::-1]:
            series = lam * (moment + series)
        return constant - series


class LatticeSums:
    """
    Evaluador de sumas por capas para una geometría y un corte R

    Mantiene pesos diagonales (w = 0) y cruzados (w = x0) y evalúa
    (G_μ − G_λ) en ambos desplazamientos.
    """

    def __init__(self, geometry: TorusGeometry, cutoff: float):
        self.geometry = geometry
        self.cutoff = float(cutoff)
        norms, mults, cross = shell_phase_sums(self.cutoff, geometry.aspect_sq, geometry.x0)
        self.norms = norms
        self.weights: Dict[str, np.ndarray] = {'diag': mults, 'cross': cross}
        self._far: Dict[str, _FarField] = {}

    def enable_far_field(self, lam_abs_max: float) -> bool:
        """
        Activa el desarrollo de campo lejano para |λ| ≤ lam_abs_max

        Returns:
            True si el corte es lo bastante grande para que compense
        """
        split = max(4.0 * lam_abs_max, 1000.0)
        if split >= 0.5 * self.cutoff:
            return False
        for kind, weights in self.weights.items():
            self._far[kind] = _FarField(self.norms, weights, split)
        logger.debug(f"Campo lejano activo: N_s={split}, R={self.cutoff}")
        return True

    def check_regular(self, z: Spectral) -> None:
        """Rechaza parámetros reales a menos de 1e-9 de una norma"""
        if not _is_real(z):
            return
        x = complex(z).real
        idx = int(np.searchsorted(self.norms, x))
        for j in (idx - 1, idx):
            if 0 <= j < self.norms.size and abs(self.norms[j] - x) < SINGULAR_DISTANCE:
                raise SingularInputError(f"Parámetro espectral {x} sobre la norma {self.norms[j]}")

    def tail_bound(self, lam: Spectral, mu: Spectral) -> float:
        top = max(abs(lam), abs(mu))
        return abs(lam - mu) / FOUR_PI_SQ * math.pi / (self.cutoff - top)

    def resolvent(self, lam: Spectral, mu: Spectral, kind: str = 'diag') -> GreensValue:
        """
        (G_μ − G_λ) en el desplazamiento 0 (kind='diag') o x0 (kind='cross')

        Solo la suma diagonal recibe la corrección analítica de cola.
        """
        if lam == mu:
            return GreensValue(0j, 0.0)
        if not _is_real(lam) and _is_real(mu):
            swapped = self.resolvent(mu, lam, kind)
            return GreensValue(-swapped.value, swapped.tail_bound)
        if self.cutoff <= 4.0 * max(abs(lam), abs(mu), 1.0):
            raise ValueError(f"El corte R={self.cutoff} debe superar 4·max(|λ|,|μ|,1)")
        self.check_regular(lam)
        self.check_regular(mu)

        weights = self.weights[kind]
        far = self._far.get(kind)
        mu_c = complex(mu)
        if far is not None and _is_real(lam) and mu_c in (1j, -1j) and abs(lam) <= far.split / 4.0:
            n = far.near_count
            total = _direct_sum(self.norms[:n], weights[:n], lam, mu)
            total += far.value(float(complex(lam).real), mu_c)
        else:
            total = _direct_sum(self.norms, weights, lam, mu)

        value = -total / FOUR_PI_SQ
        if kind == 'diag':
            R = self.cutoff
            value += -(math.pi / FOUR_PI_SQ) * complex(np.log((R - complex(lam)) / (R - mu_c)))
        return GreensValue(value, self.tail_bound(lam, mu))

    def difference_matrix(self, lam: float, mu: complex = 1j) -> np.ndarray:
        """Matriz D[k][j] = (G_μ − G_λ)(x_j − x_k) = [[a, b], [b, a]]"""
        a = self.resolvent(lam, mu, 'diag').value
        b = self.resolvent(lam, mu, 'cross').value
        return np.array([[a, b], [b, a]], dtype=complex)

    def shell_terms(self, lam: float, d: Sequence[complex]) -> np.ndarray:
        """Σ_capa |d1 e^{i⟨ξ,x1⟩} + d2 e^{i⟨ξ,x2⟩}|² / (n − λ)² por capa"""
        cross = 2.0 * (complex(d[0]) * complex(d[1]).conjugate()).real
        return (self.weights['diag'] + cross * self.weights['cross']) / (self.norms - lam) ** 2


_SUMS_LOCK = threading.Lock()
SUMS_CACHE_SIZE = 8


@lru_cache(maxsize=SUMS_CACHE_SIZE)
def _cached_sums(geometry: TorusGeometry, cutoff: float) -> LatticeSums:
    return LatticeSums(geometry, cutoff)


def lattice_sums(geometry: TorusGeometry, cutoff: float) -> LatticeSums:
    """Evaluador compartido por (geometría, corte), con los SUMS_CACHE_SIZE más recientes"""
    # El candado evita construir dos veces el mismo evaluador desde varios hilos
    with _SUMS_LOCK:
        return _cached_sums(geometry, float(cutoff))


def secular_cutoff(lam_max: float) -> float:
    """Corte por defecto para el trabajo secular"""
    return max(1e7, 1e4 * abs(lam_max))


def norm_cutoff(lam: float) -> float:
    """Corte por defecto para norm_sq"""
    return lam + 1e5


def resolvent_diff(lam: Spectral, mu: Spectral, w: Sequence[float], R: float,
                   aspect_sq: AspectLike = 1) -> GreensValue:
    """
    (G_μ − G_λ)(w) = −(1/4π²) Σ_ξ e^{i⟨ξ,w⟩}(μ−λ)/((n−μ)(n−λ))

    Args:
        lam, mu: Parámetros espectrales (reales o ±i)
        w: Desplazamiento
        R: Corte en norma
        aspect_sq: a²

    Returns:
        GreensValue con el valor y la cota de cola
    """
    geometry = TorusGeometry(as_aspect(aspect_sq), (0.0, 0.0), (float(w[0]), float(w[1])),
                             allow_coincident=True)
    sums = lattice_sums(geometry, R)
    return sums.resolvent(lam, mu, 'diag' if geometry.is_coincident() else 'cross')


def deficiency_constants(geom: TorusGeometry, R: float = 1e6, min_cutoff: float = 1e4,
                         sums: Optional[LatticeSums] = None, strict: bool = True) -> DeficiencyConstants:
    """
    c1 = (1/16π⁴) Σ 1/(n²+1) y c2 = (1/16π⁴) Σ cos⟨ξ,x0⟩/(n²+1)

    Verifica además Im G_i(0) = −4π²c1 e Im G_i(x0) = −4π²c2.

    Args:
        geom: Geometría del toro
        R: Corte en norma (≥ min_cutoff)
        min_cutoff: Cota inferior admitida para R
        sums: Evaluador ya construido (opcional)
        strict: Si es False no lanza IdentityCheckError y deja el defecto en
            identity_defect para que lo juzgue quien llama

    Returns:
        DeficiencyConstants
    """
    if R < min_cutoff:
        raise ValueError(f"El corte R={R} debe ser ≥ {min_cutoff}")
    if geom.is_coincident() and not geom.allow_coincident:
        raise ValueError("Dispersores coincidentes")
    sums = sums or lattice_sums(geom, R)
    denom = sums.norms ** 2 + 1.0
    tail_c1 = math.pi * math.atan(1.0 / sums.cutoff)
    c1 = (float(np.sum(sums.weights['diag'] / denom)) + tail_c1) / SIXTEEN_PI_4
    c2 = float(np.sum(sums.weights['cross'] / denom)) / SIXTEEN_PI_4
    tail_bound = math.pi / sums.cutoff / SIXTEEN_PI_4

    if not geom.allow_coincident and not c1 > abs(c2):
        raise DegenerateGramError(f"c1={c1} no supera |c2|={abs(c2)}")

    im_diag = sums.resolvent(_REFERENCE_LAMBDA, 1j, 'diag').value.imag
    im_cross = sums.resolvent(_REFERENCE_LAMBDA, 1j, 'cross').value.imag
    scale = FOUR_PI_SQ * c1
    defect = max(abs(im_diag + FOUR_PI_SQ * c1), abs(im_cross + FOUR_PI_SQ * c2)) / scale
    if strict and defect > IDENTITY_TOLERANCE:
        raise IdentityCheckError(f"Identidades Im G_i violadas: defecto relativo {defect:.3e}")
    logger.debug(f"c1={c1:.12e}, c2={c2:.12e}, defecto de identidades {defect:.2e}")
    return DeficiencyConstants(c1=c1, c2=c2, cutoff_used=sums.cutoff, tail_bound=tail_bound,
                               identity_defect=defect)


def mixing_matrix(c: Union[DeficiencyConstants, Tuple[float, float]]) -> MixingMatrix:
    """
    T con filas (1/√c1, 0) y (−c2/√(c1(c1²−c2²)), √(c1/(c1²−c2²)))

    Args:
        c: DeficiencyConstants o par (c1, c2)

    Returns:
        MixingMatrix con T·Gram·Tᵀ = I
    """
    constants = c if isinstance(c, DeficiencyConstants) else None
    c1, c2 = (c.c1, c.c2) if constants else (float(c[0]), float(c[1]))
    if not c1 > abs(c2):
        raise DegenerateGramError(f"Gram degenerada: c1={c1}, c2={c2}")
    disc = c1 * c1 - c2 * c2
    matrix = np.array([
        [1.0 / math.sqrt(c1), 0.0],
        [-c2 / math.sqrt(c1 * disc), math.sqrt(c1 / disc)],
    ])
    return MixingMatrix(matrix=matrix, constants=constants)


def _check_unit(d: Sequence[complex]) -> Tuple[complex, complex]:
    d1, d2 = complex(d[0]), complex(d[1])
    if abs(abs(d1) ** 2 + abs(d2) ** 2 - 1.0) > 1e-8:
        raise ValueError(f"d debe estar normalizado: |d|² = {abs(d1) ** 2 + abs(d2) ** 2}")
    return d1, d2


def norm_sq(lam: float, d: Sequence[complex], geom: TorusGeometry, R: Optional[float] = None,
            sums: Optional[LatticeSums] = None) -> GreensValue:
    """
    ‖d1 G_λ(·,x1) + d2 G_λ(·,x2)‖² en la escala (1/16π⁴) Σ |c(ξ)|²/(n−λ)²

    Args:
        lam: λ fuera del espectro
        d: Coeficientes normalizados
        geom: Geometría
        R: Corte (≥ λ + 10⁴); por defecto λ + 10⁵
        sums: Evaluador ya construido (opcional)

    Returns:
        GreensValue con valor real y cota de cola
    """
    d = _check_unit(d)
    R = float(R if R is not None else norm_cutoff(lam))
    if R - lam < NORM_MIN_SPAN:
        raise ValueError(f"El corte R={R} debe ser ≥ λ + 10⁴")
    sums = sums or lattice_sums(geom, R)
    sums.check_regular(lam)
    total = float(np.sum(sums.shell_terms(lam, d))) + math.pi / (sums.cutoff - lam)
    bound = 2.0 * math.pi / (sums.cutoff - lam) / SIXTEEN_PI_4
    return GreensValue(total / SIXTEEN_PI_4, bound)


def norm_sq_outside(lam: float, d: Sequence[complex], geom: TorusGeometry, L: float,
                    R: Optional[float] = None, sums: Optional[LatticeSums] = None) -> GreensValue:
    """Parte de norm_sq aportada por las capas con |n − λ| > L"""
    d = _check_unit(d)
    R = float(R if R is not None else norm_cutoff(lam))
    sums = sums or lattice_sums(geom, R)
    sums.check_regular(lam)
    terms = sums.shell_terms(lam, d)
    outside = np.abs(sums.norms - lam) > L
    total = float(np.sum(terms[outside])) + math.pi / (sums.cutoff - lam)
    bound = 2.0 * math.pi / (sums.cutoff - lam) / SIXTEEN_PI_4
    return GreensValue(total / SIXTEEN_PI_4, bound)
