"""
Extensiones autoadjuntas y ecuación secular
Parametriza U ∈ U(2), ensambla la matriz secular A_λ, localiza los
autovalores nuevos en cada hueco del Laplaciano y extrae los coeficientes
d = (d1, d2) de las autofunciones

Convención en C²: ⟨u, w⟩ = Σ u_k conj(w_k). Las condiciones ⟨v, A_λ(x_j)⟩ = 0
se escriben M v = 0 con M[j][k] = conj(A_λ(x_j)_k), y d = T†(I + U†) v.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import AssertionFailure, LabError, NearSingularityError, UnresolvedRootError
from .greens import (LatticeSums, MixingMatrix, TorusGeometry, deficiency_constants,
                     lattice_sums, mixing_matrix, secular_cutoff)
from .lattice import NormTable, sieve_norms
from .utils import parallel_map

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-8
UNITARITY_TOLERANCE = 1e-12
MONITOR_TOLERANCE = 1e-6
DEFAULT_FLOOR = -1e4
# σ_rel por debajo de este valor tras pulir se considera raíz casi doble
SUSPECT_LEVEL = 1e-5
MAX_REFINEMENTS = 3
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class ExtensionU:
    """Matriz unitaria 2×2 que fija la extensión autoadjunta −Δ_U"""
    matrix: np.ndarray
    rank_defect: int = field(init=False)
    v0: Optional[np.ndarray] = field(init=False)

    def __post_init__(self):
        U = np.asarray(self.matrix, dtype=complex)
        if U.shape != (2, 2):
            raise ValueError(f"U debe ser 2×2, recibido {U.shape}")
        defect = np.max(np.abs(U @ U.conj().T - np.eye(2)))
        if defect > UNITARITY_TOLERANCE:
            raise ValueError(f"U no es unitaria: ‖UU† − I‖ = {defect:.2e}")
        object.__setattr__(self, 'matrix', U)
        singular = np.linalg.svd(np.eye(2) + U, compute_uv=False)
        rank = int(np.sum(singular > RANK_TOLERANCE))
        object.__setattr__(self, 'rank_defect', rank)
        v0 = None
        if rank == 1:
            _, _, vh = np.linalg.svd(np.eye(2) + U.conj().T)
            v0 = vh[-1].conj()
            pivot = v0[np.argmax(np.abs(v0))]
            v0 = v0 * (abs(pivot) / pivot)
        object.__setattr__(self, 'v0', v0)

    @property
    def adjoint(self) -> np.ndarray:
        return self.matrix.conj().T


ExtensionLike = Union[ExtensionU, Callable[[float], ExtensionU]]


def make_unitary(phase: float, su2: Sequence[float]) -> ExtensionU:
    """
    U = e^{iφ}·[[cosθ e^{iψ}, −sinθ e^{−iχ}], [sinθ e^{iχ}, cosθ e^{−iψ}]]

    Args:
        phase: φ
        su2: (θ, ψ, χ)

    Returns:
        ExtensionU
    """
    theta, psi, chi = (float(x) for x in su2)
    a = math.cos(theta) * np.exp(1j * psi)
    b = math.sin(theta) * np.exp(1j * chi)
    matrix = np.exp(1j * phase) * np.array([[a, -np.conj(b)], [b, np.conj(a)]])
    return ExtensionU(matrix)


PRESETS: Dict[str, Tuple[float, Tuple[float, float, float]]] = {
    'minus-identity': (math.pi, (0.0, 0.0, 0.0)),
    'identity': (0.0, (0.0, 0.0, 0.0)),
    'rank1-sample': (3 * math.pi / 4, (0.0, math.pi / 4, 0.0)),
    'rank2-sample': (math.pi / 2, (math.pi / 6, 0.0, math.pi / 2)),
}


class StrongCoupling:
    """
    Extensión dependiente de λ: U(λ) = e^{iφ(λ)}·I con tan(φ/2) = −C·log λ

    Por debajo de λ = 2 se congela el logaritmo en log 2.
    """

    def __init__(self, strength: float = 1.0):
        if strength <= 0:
            raise ValueError(f"La constante de acoplamiento debe ser positiva: {strength}")
        self.strength = float(strength)

    def phase(self, lam: float) -> float:
        return 2.0 * math.atan(-self.strength * math.log(max(lam, 2.0)))

    def __call__(self, lam: float) -> ExtensionU:
        return ExtensionU(np.exp(1j * self.phase(lam)) * np.eye(2))

    def __repr__(self) -> str:
        return f"StrongCoupling(C={self.strength})"


def preset_extension(name: str) -> ExtensionLike:
    """Extensión con nombre ('minus-identity', 'rank1-sample', ...)"""
    if name == 'strong-coupling':
        return StrongCoupling()
    if name not in PRESETS:
        raise ValueError(f"Preset desconocido: {name}. Disponibles: {sorted(PRESETS) + ['strong-coupling']}")
    phase, su2 = PRESETS[name]
    return make_unitary(phase, su2)


def swap_operator(mixing: MixingMatrix) -> np.ndarray:
    """Intercambio x1 ↔ x2 expresado en la base de deficiencia: T·S·T⁻¹"""
    T = mixing.matrix
    return T @ SWAP @ np.linalg.inv(T)


def swap_symmetric_unitary(phase: float, theta: float, mixing: MixingMatrix) -> ExtensionU:
    """
    U = e^{iφ}(cosθ·I + i·sinθ·R) con R = T·S·T⁻¹; conmuta con el intercambio

    Los autovalores son e^{i(φ±θ)} sobre los sectores simétrico (+) y
    antisimétrico (−).
    """
    R = swap_operator(mixing)
    R = 0.5 * (R + R.T)
    matrix = np.exp(1j * phase) * (math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * R)
    return ExtensionU(matrix)


@dataclass(frozen=True, eq=False)
class SecularMatrix:
    """M(λ) con M[j][k] = conj(A_λ(x_j)_k) y sus valores singulares"""
    lam: float
    M: np.ndarray
    sigma_min: float
    sigma_max: float

    @property
    def relative(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0


@dataclass(frozen=True, eq=False)
class NewEigenpair:
    """Autovalor nuevo con vector núcleo v, coeficientes d y residuo relativo"""
    lam: float
    v: np.ndarray
    d: np.ndarray
    residual: float

    def record(self) -> Dict:
        d = self.d
        return {
            'lambda': float(self.lam),
            'kind': 'new',
            'multiplicity': 1,
            'd': [float(d[0].real), float(d[0].imag), float(d[1].real), float(d[1].imag)],
            'residual': float(self.residual),
        }


def singular_values_2x2(M: np.ndarray) -> Tuple[float, float, complex]:
    """(σ_min, σ_max, det) con σ_min = |det|/σ_max para evitar cancelación"""
    det = complex(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    frob = float(np.sum(np.abs(M) ** 2))
    disc = math.sqrt(max(frob * frob - 4.0 * abs(det) ** 2, 0.0))
    sigma_max = math.sqrt(0.5 * (frob + disc))
    sigma_min = abs(det) / sigma_max if sigma_max > 0 else 0.0
    return sigma_min, sigma_max, det


class SecularSolver:
    """
    Resolvedor de la ecuación secular det(A_λ(x1), A_λ(x2)) = 0

    Estrategia: barrido de σ_min sobre una malla por hueco (uniforme más
    geométrica hacia los extremos), sección áurea sobre los mínimos, pulido
    de Newton sobre det y aceptación por tolerancia. Con phase_tracking
    añade los cruces por −1 de las autofases de K(λ) = U†·W·conj(W)⁻¹.
    """

    def __init__(self, geometry: TorusGeometry, extension: ExtensionLike, cutoff: float,
                 mixing: Optional[MixingMatrix] = None, tol: float = 1e-8, margin: float = 1e-6,
                 grid_points: int = 64, phase_tracking: bool = True,
                 lam_abs_max: Optional[float] = None, sums: Optional[LatticeSums] = None):
        self.geometry = geometry
        self.extension = extension
        self.sums = sums or lattice_sums(geometry, cutoff)
        if mixing is None:
            mixing = mixing_matrix(deficiency_constants(geometry, self.sums.cutoff, sums=self.sums))
        self.mixing = mixing
        self.T = mixing.matrix
        self.tol = tol
        self.margin = margin
        self.grid_points = grid_points
        self.phase_tracking = phase_tracking
        if lam_abs_max is not None:
            self.sums.enable_far_field(lam_abs_max)

    def extension_at(self, lam: float) -> ExtensionU:
        if isinstance(self.extension, ExtensionU):
            return self.extension
        return self.extension(lam)

    def enclosing_gap(self, lam: float) -> Tuple[float, float]:
        norms = self.sums.norms
        idx = int(np.searchsorted(norms, lam))
        lo = float(norms[idx - 1]) if idx > 0 else -math.inf
        hi = float(norms[idx]) if idx < norms.size else math.inf
        return lo, hi

    def _check_margin(self, lam: float, gap: Tuple[float, float]) -> None:
        lo, hi = gap
        width = hi - lo if math.isfinite(hi - lo) else 1.0
        distance = min(lam - lo, hi - lam)
        if distance < self.margin * width * (1 - 1e-9):
            raise NearSingularityError(
                f"λ={lam} a {distance:.3e} de un extremo del hueco ({lo}, {hi}); refinar adaptativamente")

    def _blocks(self, lam: float) -> np.ndarray:
        """W = T·(G_i − G_λ); el bloque de −i es su conjugado para λ real"""
        return self.T @ self.sums.difference_matrix(lam, 1j)

    def _b_matrix(self, lam: float, W: Optional[np.ndarray] = None) -> np.ndarray:
        W = self._blocks(lam) if W is None else W
        U = self.extension_at(lam).matrix
        return W + U @ W.conj()

    def matrix(self, lam: float, gap: Optional[Tuple[float, float]] = None) -> SecularMatrix:
        """Matriz secular en λ (comprueba el margen respecto al hueco)"""
        self._check_margin(lam, gap or self.enclosing_gap(lam))
        M = self._b_matrix(lam).conj().T
        sigma_min, sigma_max, _ = singular_values_2x2(M)
        return SecularMatrix(lam=lam, M=M, sigma_min=sigma_min, sigma_max=sigma_max)

    def characteristic(self, lam: float, W: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
        """K(λ) = U†·W·conj(W)⁻¹ y su defecto de unitariedad"""
        W = self._blocks(lam) if W is None else W
        K = self.extension_at(lam).adjoint @ W @ np.linalg.inv(W.conj())
        defect = float(np.max(np.abs(K @ K.conj().T - np.eye(2))))
        return K, defect

    # --- funciones escalares del barrido ---

    def _relative_sigma(self, lam: float) -> float:
        sigma_min, sigma_max, _ = singular_values_2x2(self._b_matrix(lam))
        return sigma_min / sigma_max if sigma_max > 0 else 0.0

    @staticmethod
    def _rescale_factor(lam: float, gap: Tuple[float, float]) -> float:
        """(λ − n_k)(n_{k+1} − λ)/ancho²; mantiene σ_min acotado junto a los polos"""
        lo, hi = gap
        return (lam - lo) * (hi - lam) / (hi - lo) ** 2

    def _det(self, lam: float) -> complex:
        B = self._b_matrix(lam)
        return complex(B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])

    def _grid(self, a: float, b: float, step: float, width: float) -> np.ndarray:
        uniform = np.linspace(a, b, self.grid_points)
        limit = (b - a) / self.grid_points
        powers = step * 2.0 ** np.arange(0, 64)
        powers = powers[powers < limit]
        return np.unique(np.concatenate([uniform, a + powers, b - powers]))

    def _polish(self, lam: float, lo: float, hi: float) -> float:
        """
        Pasos de Newton sobre det(λ) (raíz real de una función compleja)

        (lo, hi) es el bracket del candidato, no el hueco entero: un paso que
        sale del bracket se descarta y queda el mejor punto ya visto.
        """
        best, best_value = lam, self._relative_sigma(lam)
        x = lam
        for _ in range(4):
            h = 1e-7 * min(x - lo, hi - x)
            if h <= 0:
                break
            slope = (self._det(x + h) - self._det(x - h)) / (2 * h)
            if slope == 0:
                break
            x = x - (self._det(x) / slope).real
            if not lo < x < hi:
                break
            value = self._relative_sigma(x)
            if value < best_value:
                best, best_value = x, value
        return best

    def _refine_minimum(self, f: Callable[[float], float], left: float, mid: float, right: float) -> float:
        f_mid = f(mid)
        if not (f_mid < f(left) and f_mid < f(right)):
            return mid
        result = minimize_scalar(f, bracket=(left, mid, right), method='golden',
                                 options={'xtol': 1e-15, 'maxiter': 200})
        x = float(result.x)
        return x if left < x < right else mid

    def _phase_crossings(self, grid: np.ndarray, gap: Tuple[float, float]) -> Optional[List[Tuple[float, float, float]]]:
        """
        Cruces por −1 de las autofases de K a lo largo de la malla

        Devuelve (λ, izq, der) con la celda de malla del cruce, o None si el
        monitor de unitariedad falla en este hueco.
        """
        eigs = []
        for x in grid:
            K, defect = self.characteristic(x)
            if defect > MONITOR_TOLERANCE:
                logger.warning(f"⚠️ Monitor de unitariedad: ‖KK†−I‖={defect:.2e} en λ={x}; "
                               "sin seguimiento de fases en este hueco")
                return None
            eigs.append(np.linalg.eigvals(K))

        def offset_angle(lam: float) -> float:
            values = np.linalg.eigvals(self.characteristic(lam)[0])
            nearest = values[np.argmin(np.abs(values + 1.0))]
            return float(np.angle(-nearest))

        roots = []
        for i in range(len(grid) - 1):
            now, nxt = eigs[i], eigs[i + 1]
            straight = abs(now[0] - nxt[0]) + abs(now[1] - nxt[1])
            crossed = abs(now[0] - nxt[1]) + abs(now[1] - nxt[0])
            if crossed < straight:
                nxt = nxt[::-1]
            for k in range(2):
                g0, g1 = np.angle(-now[k]), np.angle(-nxt[k])
                cell = (float(grid[max(i - 1, 0)]), float(grid[i + 1]))
                if g0 == 0.0:
                    roots.append((float(grid[i]),) + cell)
                elif g0 * g1 < 0 and abs(g0) < math.pi / 2 and abs(g1) < math.pi / 2:
                    try:
                        x = float(brentq(offset_angle, grid[i], grid[i + 1],
                                         xtol=1e-14, rtol=4 * np.finfo(float).eps))
                    except ValueError:
                        x = 0.5 * float(grid[i] + grid[i + 1])
                    roots.append((x, float(grid[i]), float(grid[i + 1])))
        return roots

    def _sigma_candidates(self, grid: np.ndarray, gap: Tuple[float, float]) -> List[Tuple[float, float, float]]:
        """Brackets (izq, centro, der) de mínimos locales interiores"""
        rel = np.zeros(len(grid))
        res = np.zeros(len(grid))
        for i, x in enumerate(grid):
            sigma_min, sigma_max, _ = singular_values_2x2(self._b_matrix(x))
            rel[i] = sigma_min / sigma_max if sigma_max > 0 else 0.0
            res[i] = sigma_min * self._rescale_factor(x, gap)
        brackets = []
        for values in (rel, res):
            for i in range(1, len(grid) - 1):
                if values[i] <= values[i - 1] and values[i] <= values[i + 1]:
                    brackets.append((float(grid[i - 1]), float(grid[i]), float(grid[i + 1])))
        return brackets

    def _accept(self, lam: float, gap: Tuple[float, float], width: float) -> bool:
        value = self._relative_sigma(lam)
        if value > self.tol:
            return False
        offset = 10 * self.tol * width
        lo, hi = gap
        for neighbour in (lam - offset, lam + offset):
            if lo < neighbour < hi and self._relative_sigma(neighbour) <= value:
                return False
        return True

    def find_roots(self, gap: Tuple[float, float]) -> List[NewEigenpair]:
        """
        Autovalores nuevos en el hueco abierto (lo, hi)

        Args:
            gap: Extremos consecutivos del espectro (lo puede ser el suelo)

        Returns:
            Lista ordenada de NewEigenpair validados
        """
        lo, hi = float(gap[0]), float(gap[1])
        if not hi > lo:
            raise ValueError(f"Hueco vacío: ({lo}, {hi})")
        width = hi - lo
        step = self.margin * width
        a, b = lo + step, hi - step
        grid = self._grid(a, b, step, width)

        def relative(x: float) -> float:
            return self._relative_sigma(x)

        candidates: List[float] = []
        pending = [(br, 0) for br in self._sigma_candidates(grid, (lo, hi))]
        while pending:
            (left, mid, right), depth = pending.pop()
            x = self._polish(self._refine_minimum(relative, left, mid, right), left, right)
            value = relative(x)
            if value <= self.tol:
                candidates.append(x)
            elif value <= SUSPECT_LEVEL:
                if depth >= MAX_REFINEMENTS:
                    raise UnresolvedRootError(
                        f"Raíz casi doble sin resolver en ({left}, {right}), σ_rel={value:.2e}",
                        bracket={'gap': [lo, hi], 'left': left, 'right': right,
                                 'best': x, 'sigma_rel': value})
                sub = np.linspace(left, right, 33)
                sub_values = [relative(s) for s in sub]
                for i in range(1, len(sub) - 1):
                    if sub_values[i] <= sub_values[i - 1] and sub_values[i] <= sub_values[i + 1]:
                        pending.append(((float(sub[i - 1]), float(sub[i]), float(sub[i + 1])), depth + 1))

        if self.phase_tracking:
            for x, left, right in self._phase_crossings(grid, (lo, hi)) or []:
                candidates.append(self._polish(x, left, right))

        roots: List[float] = []
        for x in sorted(candidates):
            if not a <= x <= b or not self._accept(x, (lo, hi), width):
                continue
            if roots and x - roots[-1] < 1e-9:
                if relative(x) < relative(roots[-1]):
                    roots[-1] = x
                continue
            roots.append(x)

        pairs = [self._eigenpair(x) for x in roots]
        if len(pairs) > 2:
            logger.error(f"❌ {len(pairs)} raíces en el hueco ({lo}, {hi}); se esperaban ≤ 2")
        return pairs

    def _eigenpair(self, lam: float) -> NewEigenpair:
        B = self._b_matrix(lam)
        M = B.conj().T
        _, singular, vh = np.linalg.svd(M)
        v = vh[-1].conj()
        U = self.extension_at(lam)
        lifted = (np.eye(2) + U.adjoint) @ v
        if np.linalg.norm(lifted) <= RANK_TOLERANCE:
            raise AssertionFailure(f"v ∈ Ker(I+U†) en λ={lam}", witness={'lambda': lam})
        d = self.T.T @ lifted
        d = d / np.linalg.norm(d)
        residual = float(singular[-1] / singular[0]) if singular[0] > 0 else 0.0
        return NewEigenpair(lam=float(lam), v=v, d=d, residual=residual)


def secular_matrix(lam: float, geom: TorusGeometry, U: ExtensionLike, T: MixingMatrix,
                   R: Optional[float] = None) -> SecularMatrix:
    """Matriz secular M(λ) para la extensión U"""
    solver = SecularSolver(geom, U, R or secular_cutoff(lam), mixing=T)
    return solver.matrix(lam)


def find_new_eigenvalues(gap: Tuple[float, float], geom: TorusGeometry, U: ExtensionLike,
                         T: Optional[MixingMatrix] = None, tol: float = 1e-8,
                         R: Optional[float] = None, **options) -> List[NewEigenpair]:
    """
    Todas las raíces de la ecuación secular en un hueco

    Args:
        gap: (n_k, n_{k+1})
        geom: Geometría
        U: Extensión (fija o dependiente de λ)
        T: Matriz de mezcla; se calcula si es None
        tol: Tolerancia relativa sobre σ_min
        R: Corte de red

    Returns:
        Lista de NewEigenpair
    """
    R = R or secular_cutoff(max(abs(gap[0]), abs(gap[1])))
    solver = SecularSolver(geom, U, R, mixing=T, tol=tol, **options)
    return solver.find_roots(gap)


@dataclass
class OldLevel:
    """Autovalor del Laplaciano retenido con multiplicidad reducida"""
    norm: float
    d: int
    multiplicity: int
    floored: bool = False

    def record(self) -> Dict:
        return {'lambda': float(self.norm), 'kind': 'old', 'multiplicity': int(self.multiplicity),
                'd': None, 'residual': 0.0}


@dataclass
class SpectrumReport:
    """Resultado de spectrum_scan"""
    lam_max: float
    rank_defect: int
    new: List[NewEigenpair]
    old: List[OldLevel]
    gap_counts: List[Tuple[float, float, int]]
    deficit_min: int
    deficit_max: int
    failures: List[Dict] = field(default_factory=list)

    @property
    def deficit_abs_max(self) -> int:
        return max(abs(self.deficit_min), abs(self.deficit_max))

    @property
    def passed(self) -> bool:
        return not self.failures

    def new_eigenvalues(self) -> np.ndarray:
        return np.array([pair.lam for pair in self.new])

    def records(self) -> List[Dict]:
        """Registros JSON-lines ordenados por λ"""
        rows = [pair.record() for pair in self.new] + [level.record() for level in self.old]
        return sorted(rows, key=lambda r: (r['lambda'], r['kind']))


def counting_deficit(new: Sequence[float], old: Sequence[OldLevel]) -> Tuple[int, int]:
    """
    Extremos de N_U(X) − N_Δ(X) evaluada tras cada evento (continua a la derecha)

    Returns:
        (mínimo, máximo), incluyendo el valor 0 antes del primer evento
    """
    events: Dict[float, int] = {}
    for lam in new:
        events[lam] = events.get(lam, 0) + 1
    for level in old:
        events[level.norm] = events.get(level.norm, 0) + level.multiplicity - level.d
    running, low, high = 0, 0, 0
    for position in sorted(events):
        running += events[position]
        low, high = min(low, running), max(high, running)
    return low, high


def old_levels(table: NormTable, lam_max: float, extension: ExtensionLike) -> List[OldLevel]:
    """Multiplicidades d − rank(I+U) (con suelo en 0) para normas ≤ lam_max"""
    levels = []
    for norm, d in table.entries():
        if norm > lam_max:
            break
        U = extension if isinstance(extension, ExtensionU) else extension(norm)
        mult = d - U.rank_defect
        floored = mult < 0
        if floored:
            logger.warning(f"⚠️ Capa n={norm} con d={d} < rank(I+U)={U.rank_defect}; multiplicidad 0")
        levels.append(OldLevel(norm=norm, d=d, multiplicity=max(mult, 0), floored=floored))
    return levels


def _table_beyond(lam_max: float, aspect_sq) -> NormTable:
    extra = max(10.0, 2.0 * math.sqrt(max(lam_max, 1.0)))
    while True:
        table = sieve_norms(lam_max + extra, aspect_sq)
        if table.norms.size and table.norms[-1] > lam_max:
            return table
        extra *= 2


def spectrum_scan(lam_max: float, geom: TorusGeometry, U: ExtensionLike, R: Optional[float] = None,
                  tol: float = 1e-8, floor: float = DEFAULT_FLOOR, threads: int = 1,
                  margin: float = 1e-6, grid_points: int = 64, phase_tracking: bool = True,
                  mixing: Optional[MixingMatrix] = None) -> SpectrumReport:
    """
    Espectro de −Δ_U hasta lam_max: autovalores nuevos por hueco,
    multiplicidades de los viejos y déficit de conteo

    Args:
        lam_max: Cota superior del barrido
        geom: Geometría
        U: Extensión (fija o callback U(λ))
        R: Corte de red (política por defecto si es None)
        tol: Tolerancia del resolvedor
        floor: Extremo inferior del hueco fundamental (suelo, 0)
        threads: Hilos para el mapeo sobre huecos

    Returns:
        SpectrumReport
    """
    table = _table_beyond(lam_max, geom.aspect_sq)
    R = R or secular_cutoff(lam_max)
    top = float(table.norms[np.searchsorted(table.norms, lam_max, side='right')])
    solver = SecularSolver(geom, U, R, mixing=mixing, tol=tol, margin=margin, grid_points=grid_points,
                           phase_tracking=phase_tracking, lam_abs_max=max(top, abs(floor)))

    norms = table.norms
    gaps = [(floor, float(norms[0]))]
    for k in range(norms.size - 1):
        if norms[k] >= lam_max:
            break
        gaps.append((float(norms[k]), float(norms[k + 1])))
    logger.info(f"🔍 Barrido espectral: {len(gaps)} huecos hasta λ={lam_max}")

    def solve(gap: Tuple[float, float]) -> List[NewEigenpair]:
        try:
            return solver.find_roots(gap)
        except UnresolvedRootError as exc:
            raise UnresolvedRootError(f"hueco {gap}: {exc}", exc.bracket) from exc
        except LabError as exc:
            logger.error(f"❌ Fallo del resolvedor en el hueco {gap}: {exc}")
            raise

    per_gap = parallel_map(solve, gaps, threads)

    new: List[NewEigenpair] = []
    gap_counts = []
    failures: List[Dict] = []
    for gap, pairs in zip(gaps, per_gap):
        gap_counts.append((gap[0], gap[1], len(pairs)))
        if len(pairs) > 2:
            failures.append({'check': 'gap_count', 'gap': list(gap), 'count': len(pairs)})
        new.extend(pair for pair in pairs if pair.lam <= lam_max)

    old = old_levels(table, lam_max, U)
    integer_hits = [p.lam for p in new if table.multiplicity_of(p.lam)]
    if integer_hits:
        failures.append({'check': 'disjoint_from_laplace', 'lambdas': integer_hits})
    low, high = counting_deficit([p.lam for p in new], old)
    if max(abs(low), abs(high)) > 2:
        failures.append({'check': 'counting_deficit', 'min': low, 'max': high})

    reference = U if isinstance(U, ExtensionU) else U(lam_max)
    report = SpectrumReport(lam_max=lam_max, rank_defect=reference.rank_defect, new=new, old=old,
                            gap_counts=gap_counts, deficit_min=low, deficit_max=high, failures=failures)
    status = "✅" if report.passed else "❌"
    logger.info(f"{status} {len(new)} autovalores nuevos; déficit en [{low}, {high}]")
    return report
