"""
Verificadores estructurales
Entrelazado débil, rangos de matrices de evaluación por capa, multiplicidades
de autovalores viejos, no degeneración de Im G_i, oráculo de medio periodo y
comprobación cruzada del espectro
"""

import math
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionError
from .greens import FOUR_PI_SQ, MixingMatrix, TorusGeometry, deficiency_constants, lattice_sums, mixing_matrix
from .lattice import NormTable, points_of_norm, sieve_norms
from .scattering import (DEFAULT_FLOOR, ExtensionU, SpectrumReport, spectrum_scan,
                         swap_symmetric_unitary)
from .utils import parallel_map

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-8
CONDITION_WARNING = 1e6
ORACLE_TOLERANCE = 1e-6
HALF_PERIOD = (math.pi, math.pi)


@dataclass
class CheckResult:
    """Entrada del resumen de verificación"""
    name: str
    passed: bool
    witness: Dict = field(default_factory=dict)

    def record(self) -> Dict:
        return asdict(self)


@dataclass
class InterlaceReport:
    """Resultado del barrido conjunto de dos sucesiones ordenadas"""
    disjoint: bool
    max_run_A_between_B: int
    max_run_B_between_A: int
    witness: Dict[str, Optional[Tuple[float, float]]] = field(default_factory=dict)
    C: int = 0

    @property
    def ok(self) -> bool:
        return self.disjoint and self.max_run_A_between_B <= self.C and self.max_run_B_between_A <= self.C


def _require_sorted(values: Sequence[float], label: str) -> None:
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError(f"La sucesión {label} no está ordenada")


def weak_interlacing(A: Sequence[float], B: Sequence[float], C: int) -> InterlaceReport:
    """
    A y B se entrelazan débilmente con constante C si son disjuntos y entre
    dos elementos consecutivos de uno hay a lo sumo C del otro

    Las rachas anteriores al primer elemento o posteriores al último del otro
    conjunto no cuentan: no están entre dos de sus elementos.
    """
    A, B = [float(x) for x in A], [float(x) for x in B]
    _require_sorted(A, 'A')
    _require_sorted(B, 'B')
    merged = sorted([(x, 'A') for x in A] + [(x, 'B') for x in B])

    values = [x for x, _ in merged]
    disjoint = not set(A) & set(B)
    runs = {'A': 0, 'B': 0}
    witness: Dict[str, Optional[Tuple[float, float]]] = {'A': None, 'B': None}
    # Racha actual: etiqueta, longitud, índice de inicio
    label, length, start = None, 0, 0
    for i, (_, tag) in enumerate(merged + [(math.inf, None)]):
        if tag == label:
            length += 1
            continue
        if label is not None and start > 0 and tag is not None and length > runs[label]:
            runs[label] = length
            witness[label] = (values[start - 1], values[i])
        label, length, start = tag, 1, i
    return InterlaceReport(disjoint, runs['A'], runs['B'], witness, C)


@dataclass
class ShellRank:
    """Rango numérico de la matriz de evaluación 2×d de una capa"""
    norm: float
    d: int
    rank: int
    condition: float
    swapped_axes: bool = False

    @property
    def vanishing_dim(self) -> int:
        return self.d - self.rank


def _looks_rational(x: float, max_denominator: int = 1000, tol: float = 1e-12) -> bool:
    return abs(float(Fraction(x).limit_denominator(max_denominator)) - x) < tol


def _evaluation_matrix(points: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    return np.stack([np.exp(1j * geom.phase(points, geom.x1)), np.exp(1j * geom.phase(points, geom.x2))])


def shell_evaluation_rank(n: float, geom: TorusGeometry) -> ShellRank:
    """
    Rango de la matriz con filas (e^{i⟨ξ,x1⟩})_ξ y (e^{i⟨ξ,x2⟩})_ξ sobre la capa n

    En el toro cuadrado, si solo α2/π es irracional se intercambian las
    coordenadas y se deja constancia; el rango no cambia.
    """
    points = np.array(points_of_norm(n, geom.aspect_sq), dtype=float).reshape(-1, 2)
    d = len(points)
    if d == 0:
        raise ValueError(f"La capa n={n} está vacía")
    swapped = False
    alpha1, alpha2 = geom.diophantine_pair()
    if geom.is_square and _looks_rational(alpha1) and not _looks_rational(alpha2):
        geom = TorusGeometry(1, geom.x1[::-1], geom.x2[::-1], geom.allow_coincident)
        points = points[:, ::-1]
        swapped = True
    singular = np.linalg.svd(_evaluation_matrix(points, geom), compute_uv=False)
    rank = int(np.sum(singular > RANK_TOLERANCE * singular[0]))
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else math.inf
    if rank == 2 and condition > CONDITION_WARNING:
        logger.warning(f"⚠️ Capa n={n} mal condicionada: κ={condition:.3e}")
    return ShellRank(float(n), d, rank, condition, swapped)


def _constants_of(geom: TorusGeometry, mixing: Optional[MixingMatrix]) -> Tuple[MixingMatrix, np.ndarray]:
    if mixing is None or mixing.constants is None:
        mixing = mixing_matrix(deficiency_constants(geom))
    return mixing, mixing.constants.gram


def old_multiplicity(n: float, geom: TorusGeometry, U: ExtensionU, mixing: Optional[MixingMatrix] = None) -> int:
    """
    Multiplicidad del autovalor viejo n en −Δ_U

    rank(I+U) = 0 da d; rank 2 da d − rango de la matriz de evaluación; rank 1
    da (d+1) − rango de la matriz aumentada con la columna h(x_j), donde
    h = ⟨Tᵀv0, Im G_i⟩ vale −4π²·Gram·Tᵀv0 en (x1, x2).
    """
    if n < 1:
        raise ValueError(f"n debe ser ≥ 1, recibido: {n}")
    points = np.array(points_of_norm(n, geom.aspect_sq), dtype=float).reshape(-1, 2)
    d = len(points)
    if U.rank_defect == 0:
        return d
    evaluation = _evaluation_matrix(points, geom)
    if U.rank_defect == 2:
        return d - shell_evaluation_rank(n, geom).rank
    mixing, gram = _constants_of(geom, mixing)
    h = -FOUR_PI_SQ * gram @ (mixing.matrix.T @ U.v0)
    augmented = np.column_stack([evaluation, h])
    singular = np.linalg.svd(augmented, compute_uv=False)
    rank = int(np.sum(singular > RANK_TOLERANCE * singular[0]))
    return d + 1 - rank


def im_gi_nondegeneracy(v0: Sequence[complex], geom: TorusGeometry, table: NormTable,
                        mixing: Optional[MixingMatrix] = None, n_max: float = 50.0) -> bool:
    """
    Testigo de dos capas: los pesos v1·e^{−i⟨ξ,x1⟩} + v2·e^{−i⟨ξ,x2⟩} no se
    anulan en al menos dos capas distintas con n ≤ n_max

    Con mixing los pesos se toman sobre Tᵀv0; sin él sobre v0 directamente.
    """
    v = np.asarray(v0, dtype=complex)
    if mixing is not None:
        v = mixing.matrix.T @ v
    supporting, vanishing_points = [], 0
    for norm, _ in table.entries():
        if norm > n_max:
            break
        points = np.array(points_of_norm(norm, geom.aspect_sq), dtype=float).reshape(-1, 2)
        weights = v[0] * np.exp(-1j * geom.phase(points, geom.x1)) + v[1] * np.exp(-1j * geom.phase(points, geom.x2))
        zero = np.abs(weights) < 1e-12
        vanishing_points += int(zero.sum())
        if not zero.all():
            supporting.append(norm)
    if vanishing_points:
        logger.info(f"🔍 Patrón degenerado: {vanishing_points} puntos con peso nulo hasta n={n_max}")
    return len(supporting) >= 2


def appendix_sweep(n_max: float, geom: TorusGeometry, threads: int = 1) -> CheckResult:
    """Rangos de evaluación para todas las normas 1 ≤ n ≤ n_max"""
    table = sieve_norms(n_max, geom.aspect_sq)
    norms = [norm for norm in table.norms if norm >= 1]
    ranks = parallel_map(lambda n: shell_evaluation_rank(n, geom), norms, threads)
    failures = [asdict(r) for r in ranks if r.rank != 2]
    ill = [r.norm for r in ranks if r.condition > CONDITION_WARNING]
    witness = {'shells': len(ranks), 'failures': failures[:20], 'ill_conditioned': ill[:20],
               'swapped_axes': any(r.swapped_axes for r in ranks),
               'max_condition': max((r.condition for r in ranks), default=0.0)}
    return CheckResult('shell_evaluation_rank', not failures, witness)


def _sector_function(norms: np.ndarray, weights: np.ndarray, cutoff: float, beta: float):
    """
    f(λ) = cos(β/2)·Re z(λ) + sin(β/2)·Im z(λ) para z = (G_i − G_λ) del sector
    """
    scale = 1.0 / FOUR_PI_SQ
    mu = 1j

    def f(lam: float) -> float:
        total = np.sum(weights * (mu - lam) / ((norms - mu) * (norms - lam)))
        z = -scale * total - scale * math.pi * complex(np.log((cutoff - lam) / (cutoff - mu)))
        return math.cos(beta / 2) * z.real + math.sin(beta / 2) * z.imag

    return f


def _sector_roots(f, poles: np.ndarray, floor: float, lam_max: float) -> List[float]:
    roots = []
    edges = [floor] + [float(p) for p in poles]
    for lo, hi in zip(edges, edges[1:]):
        if lo > lam_max:
            break
        delta = 1e-9 * (hi - lo)
        a, b = lo + delta, hi - delta
        fa, fb = f(a), f(b)
        if fa * fb < 0:
            roots.append(brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))
    return [r for r in roots if r <= lam_max]


def half_period_oracle(lam_max: float, phase: float, theta: float, R: float = 1e6,
                       floor: float = DEFAULT_FLOOR, threads: int = 1) -> CheckResult:
    """
    Compara el resolvedor matricial con las ecuaciones escalares por paridad

    Con x0 = (π, π) en el toro cuadrado, cos⟨ξ,x0⟩ = (−1)^n, y un U que conmuta
    con el intercambio se descompone en sectores con autovalores
    u± = e^{i(φ±θ)}. El sector + tiene polos en las normas pares y el − en
    las impares; cada sector se resuelve con brentq entre polos consecutivos.
    """
    geom = TorusGeometry(1, (0.0, 0.0), HALF_PERIOD)
    sums = lattice_sums(geom, R)
    mixing = mixing_matrix(deficiency_constants(geom, R, sums=sums))
    U = swap_symmetric_unitary(phase, theta, mixing)

    norms = sums.norms
    mults = sums.weights['diag']
    even = np.mod(np.rint(norms).astype(np.int64), 2) == 0
    expected: List[float] = []
    for sign, parity in ((+1, even), (-1, ~even)):
        weights = np.where(parity, 2.0 * mults, 0.0)
        f = _sector_function(norms, weights, sums.cutoff, phase + sign * theta)
        expected.extend(_sector_roots(f, norms[parity], floor, lam_max))
    expected.sort()

    report = spectrum_scan(lam_max, geom, U, R=R, floor=floor, threads=threads, mixing=mixing)
    found = sorted(report.new_eigenvalues().tolist())
    witness = {'expected': len(expected), 'found': len(found), 'max_difference': None}
    if len(expected) != len(found):
        logger.error(f"❌ Oráculo de medio periodo: {len(expected)} raíces esperadas, {len(found)} halladas")
        witness['expected_roots'] = expected[:20]
        witness['found_roots'] = found[:20]
        return CheckResult('half_period_oracle', False, witness)
    differences = np.abs(np.array(expected) - np.array(found)) if found else np.zeros(0)
    worst = float(differences.max()) if differences.size else 0.0
    witness['max_difference'] = worst
    passed = worst <= ORACLE_TOLERANCE
    if not passed:
        k = int(np.argmax(differences))
        witness['worst'] = {'expected': expected[k], 'found': found[k]}
    return CheckResult('half_period_oracle', passed, witness)


def spectrum_cross_check(report: SpectrumReport, table: NormTable, C: int = 2) -> CheckResult:
    """
    Entrelazado débil (C = 2) de los autovalores nuevos con los de Laplace
    sin el 0, y déficit de conteo acotado por rank(I+U)
    """
    laplace = table.norms[(table.norms > 0)]
    top = report.lam_max
    above = laplace[laplace > top]
    laplace = np.concatenate([laplace[laplace <= top], above[:1]])
    interlace = weak_interlacing(sorted(report.new_eigenvalues().tolist()), laplace.tolist(), C)
    deficit_ok = report.deficit_abs_max <= report.rank_defect
    witness = {'disjoint': interlace.disjoint, 'max_run_new': interlace.max_run_A_between_B,
               'max_run_laplace': interlace.max_run_B_between_A,
               'deficit': [report.deficit_min, report.deficit_max], 'rank': report.rank_defect,
               'run_witness': interlace.witness}
    return CheckResult('spectrum_cross_check', interlace.ok and deficit_ok, witness)


def multiplicity_checks(geom: TorusGeometry, extensions: Dict[int, ExtensionU],
                        shells: Sequence[int] = (1, 2, 5), mixing: Optional[MixingMatrix] = None) -> CheckResult:
    """old_multiplicity = d − rank(I+U) en las capas dadas"""
    mismatches = []
    for rank, U in sorted(extensions.items()):
        if U.rank_defect != rank:
            raise PreconditionError(f"La extensión con clave {rank} tiene rank(I+U)={U.rank_defect}")
        for n in shells:
            d = len(points_of_norm(n, geom.aspect_sq))
            got = old_multiplicity(n, geom, U, mixing)
            if got != d - rank:
                mismatches.append({'n': n, 'rank': rank, 'd': d, 'multiplicity': got})
    return CheckResult('old_multiplicity', not mismatches, {'mismatches': mismatches, 'shells': list(shells)})
