"""
Criba diofántica
Estimación del tipo diofántico de x0/π y filtros de subsucesiones de
densidad uno Λ1, Λ2, Λ′, Λ_ζ, Λ∞ sobre una base débilmente entrelazada Λ0
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from .errors import PreconditionError
from .greens import TorusGeometry
from .lattice import (AspectLike, LatticePoint, NormTable, annulus_points, as_aspect,
                      n_lambda, norm_of, points_of_norm)
from .utils import parallel_map

logger = logging.getLogger(__name__)

DENSITY_COLUMNS = ['block_lo', 'block_hi', 'count_base', 'count_l1', 'count_l2',
                   'count_lprime', 'count_linf']
ZETA_MODES = ('lambda_eps', 'lambda_eps_and_delta')
# Cota de Dirichlet: ningún par real tiene tipo menor que 3/2
DIRICHLET_KAPPA = 1.5
RATIONAL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FilterParams:
    """
    Constantes de los filtros

    Args:
        epsilon: ε ∈ (0, 1/20]
        delta: δ ∈ (0, 1/4); por defecto 1/4 − ε
        C1: Constante de Λ1
        c2_low: Constante de Λ2
        zeta_radius_mode: 'lambda_eps' (|ζ| ≤ λ^ε) o 'lambda_eps_and_delta'
            (además |ζ|² ≤ λ^δ)
    """
    epsilon: float = 0.05
    delta: Optional[float] = None
    C1: float = 1.0
    c2_low: float = 0.5
    zeta_radius_mode: str = 'lambda_eps'

    def __post_init__(self):
        if self.delta is None:
            object.__setattr__(self, 'delta', 0.25 - self.epsilon)
        problems = []
        if not 0 < self.epsilon <= 0.05:
            problems.append(f"epsilon fuera de (0, 1/20]: {self.epsilon}")
        if not 0 < self.delta < 0.25:
            problems.append(f"delta fuera de (0, 1/4): {self.delta}")
        if self.C1 <= 0 or self.c2_low <= 0:
            problems.append("C1 y c2_low deben ser positivos")
        if self.zeta_radius_mode not in ZETA_MODES:
            problems.append(f"zeta_radius_mode desconocido: {self.zeta_radius_mode}")
        if problems:
            raise ValueError("; ".join(problems))

    def window(self, lam: float) -> float:
        """Semiancho L = λ^δ de la ventana espectral"""
        return lam ** self.delta


@dataclass
class DiophantineReport:
    """Resultado de estimate_type"""
    alpha_pair: Tuple[float, float]
    Q: int
    records: List[Tuple[int, float]]
    kappa_hat: Optional[float]
    rational_flag: bool
    rational_q: Optional[int] = None


def _distance_to_integer(t: np.ndarray) -> np.ndarray:
    return np.abs(t - np.round(t))


def estimate_type(alpha_pair: Sequence[float], Q: int = 100000) -> DiophantineReport:
    """
    Estima el tipo diofántico κ de un par (α1, α2)

    Recorre 1 ≤ q ≤ Q calculando m(q) = max_j ‖q·α_j‖ y ajusta la envolvente
    inferior (los mínimos récord) en escala log-log: m(q) ≈ C·q^{−s} da κ = 1 + s.

    Args:
        alpha_pair: Par de reales
        Q: Cota de búsqueda (≥ 10³)

    Returns:
        DiophantineReport
    """
    if Q < 1000:
        raise ValueError(f"Q debe ser ≥ 1000, recibido: {Q}")
    alpha = np.array([float(alpha_pair[0]), float(alpha_pair[1])])
    q = np.arange(1, Q + 1, dtype=float)
    m = np.maximum(_distance_to_integer(q * alpha[0]), _distance_to_integer(q * alpha[1]))

    zeros = np.flatnonzero(m <= RATIONAL_TOLERANCE)
    if zeros.size:
        q_hit = int(q[zeros[0]])
        logger.info(f"⚠️ Par racional: m({q_hit}) = 0")
        return DiophantineReport(tuple(alpha), Q, [(q_hit, 0.0)], None, True, q_hit)

    running = np.minimum.accumulate(m)
    is_record = np.concatenate([[True], running[1:] < running[:-1]])
    rec_q, rec_m = q[is_record], m[is_record]
    records = [(int(a), float(b)) for a, b in zip(rec_q, rec_m)]

    kappa_hat = None
    if rec_q.size >= 3:
        model = LinearRegression().fit(np.log(rec_q).reshape(-1, 1), np.log(rec_m))
        slope = -float(model.coef_[0])
        kappa_hat = max(DIRICHLET_KAPPA, 1.0 + slope)
    return DiophantineReport(tuple(alpha), Q, records, kappa_hat, False)


def filter_lambda1(lam: float, table: NormTable, params: FilterParams) -> bool:
    """λ ∈ Λ1 ⟺ λ − n_λ ≤ C1·λ^ε"""
    if lam <= 1:
        raise ValueError(f"Λ1 requiere λ > 1, recibido: {lam}")
    return lam - n_lambda(lam, table) <= params.C1 * lam ** params.epsilon


def filter_lambda2(lam: float, geom: TorusGeometry, table: NormTable, params: FilterParams) -> bool:
    """
    λ ∈ Λ2 ⟺ todo ξ con norma n_λ cumple max_j |sin(ξ_j·α_j)| ≥ c2_low·λ^{−ε}

    En el toro rectangular las fases por coordenada son a·ξ1·α1 y ξ2·α2/a.
    """
    n = n_lambda(lam, table)
    u, v = geom.phase_rates(geom.x0)
    points = np.array(points_of_norm(n, geom.aspect_sq), dtype=float).reshape(-1, 2)
    if points.size == 0:
        return False
    sines = np.maximum(np.abs(np.sin(points[:, 0] * u)), np.abs(np.sin(points[:, 1] * v)))
    return bool(np.all(sines >= params.c2_low * lam ** (-params.epsilon)))


def inner(xi: Sequence[int], zeta: Sequence[int], aspect_sq: AspectLike = 1) -> float:
    """⟨ξ, ζ⟩ físico: a²ξ1ζ1 + ξ2ζ2/a²"""
    a2 = float(as_aspect(aspect_sq))
    return a2 * xi[0] * zeta[0] + xi[1] * zeta[1] / a2


def in_S_zeta(xi: Sequence[int], zeta: Sequence[int], delta: float, aspect_sq: AspectLike = 1) -> bool:
    """ξ ∈ S_ζ ⟺ |⟨ξ, ζ⟩| ≤ 2·norma(ξ)^δ"""
    if zeta[0] == 0 and zeta[1] == 0:
        raise ValueError("ζ debe ser no nulo")
    return abs(inner(xi, zeta, aspect_sq)) <= 2.0 * float(norm_of(xi[0], xi[1], aspect_sq)) ** delta


def _s_zeta_mask(points: np.ndarray, norms: np.ndarray, zeta: Sequence[int], delta: float,
                 aspect_sq: AspectLike) -> np.ndarray:
    a2 = float(as_aspect(aspect_sq))
    products = a2 * points[:, 0] * zeta[0] + points[:, 1] * zeta[1] / a2
    return np.abs(products) <= 2.0 * norms ** delta


def zeta_ball(radius: float, aspect_sq: AspectLike = 1) -> List[LatticePoint]:
    """ζ no nulos con |ζ| ≤ radius (norma física), en orden lexicográfico"""
    if radius < 0:
        return []
    a2 = float(as_aspect(aspect_sq))
    bound1 = int(math.floor(radius / math.sqrt(a2)))
    bound2 = int(math.floor(radius * math.sqrt(a2)))
    ball = []
    for z1 in range(-bound1, bound1 + 1):
        for z2 in range(-bound2, bound2 + 1):
            if (z1, z2) != (0, 0) and a2 * z1 * z1 + z2 * z2 / a2 <= radius * radius:
                ball.append(LatticePoint(z1, z2))
    return ball


def zeta_range(lam: float, params: FilterParams, aspect_sq: AspectLike = 1) -> List[LatticePoint]:
    """Rango de ζ cuantificado en Λ∞ según zeta_radius_mode"""
    ball = zeta_ball(lam ** params.epsilon, aspect_sq)
    if params.zeta_radius_mode == 'lambda_eps_and_delta':
        limit = lam ** params.delta
        ball = [z for z in ball if float(norm_of(z[0], z[1], aspect_sq)) <= limit]
    return ball


def in_lambda_prime(lam: float, geom: TorusGeometry, table: NormTable, params: FilterParams) -> bool:
    """Λ′ = Λ1 ∩ Λ2"""
    return filter_lambda1(lam, table, params) and filter_lambda2(lam, geom, table, params)


def in_lambda_zeta(lam: float, zeta: Sequence[int], geom: TorusGeometry, table: NormTable,
                   params: FilterParams, skip_prime_gate: bool = False) -> bool:
    """
    λ ∈ Λ_ζ ⟺ λ ∈ Λ′ y ningún ξ ∈ S_ζ cumple |norma(ξ) − λ| ≤ L

    Basta revisar los puntos de la corona: fuera de ella la condición sobre
    la norma se cumple trivialmente.

    Args:
        skip_prime_gate: Omite la comprobación λ ∈ Λ′
    """
    if not skip_prime_gate and not in_lambda_prime(lam, geom, table, params):
        return False
    return _annulus_avoids_s_zeta(lam, zeta, params, geom.aspect_sq)


def _annulus_avoids_s_zeta(lam: float, zeta: Sequence[int], params: FilterParams,
                           aspect_sq: AspectLike) -> bool:
    window = annulus_points(lam, params.window(lam), aspect_sq)
    if len(window) == 0:
        return True
    return not bool(np.any(_s_zeta_mask(window.points, window.norms, zeta, params.delta, aspect_sq)))


def in_lambda_infinity(lam: float, geom: TorusGeometry, table: NormTable, params: FilterParams) -> bool:
    """Λ∞ = {λ ∈ Λ′ : λ ∈ Λ_ζ para todo ζ no nulo del rango}"""
    if not in_lambda_prime(lam, geom, table, params):
        return False
    window = annulus_points(lam, params.window(lam), geom.aspect_sq)
    if len(window) == 0:
        return True
    for zeta in zeta_range(lam, params, geom.aspect_sq):
        if np.any(_s_zeta_mask(window.points, window.norms, zeta, params.delta, geom.aspect_sq)):
            return False
    return True


def window_overlaps(lam: float, zeta: Sequence[int], L: float,
                    aspect_sq: AspectLike = 1) -> List[Tuple[LatticePoint, LatticePoint]]:
    """Pares (ξ, ξ+ζ) con ambos puntos en la ventana |norma − λ| ≤ L"""
    window = annulus_points(lam, L, aspect_sq)
    if len(window) == 0:
        return []
    shifted = window.points + np.asarray(zeta, dtype=np.int64)
    shifted_norms = norm_of(shifted[:, 0], shifted[:, 1], aspect_sq)
    hits = np.flatnonzero(np.abs(shifted_norms - lam) <= L)
    return [(LatticePoint(int(window.points[i, 0]), int(window.points[i, 1])),
             LatticePoint(int(shifted[i, 0]), int(shifted[i, 1]))) for i in hits]


def window_disjointness(lam: float, zeta: Sequence[int], params: FilterParams,
                        aspect_sq: AspectLike = 1) -> bool:
    """
    Comprueba exhaustivamente que |norma(ξ+ζ) − λ| > L para cada ξ de la ventana

    Precondiciones: la corona evita S_ζ y |ζ|² ≤ λ^δ. Un False es un fallo.
    """
    if zeta[0] == 0 and zeta[1] == 0:
        raise PreconditionError("ζ debe ser no nulo")
    if float(norm_of(zeta[0], zeta[1], aspect_sq)) > lam ** params.delta:
        raise PreconditionError(f"|ζ|² > λ^δ para λ={lam}, ζ={tuple(zeta)}")
    if not _annulus_avoids_s_zeta(lam, zeta, params, aspect_sq):
        raise PreconditionError(f"λ={lam} no pertenece a Λ_ζ para ζ={tuple(zeta)}")
    return not window_overlaps(lam, zeta, params.window(lam), aspect_sq)


def find_overlap_counterexample(lams: Sequence[float], zeta: Sequence[int], params: FilterParams,
                                aspect_sq: AspectLike = 1) -> Optional[Dict]:
    """Primer λ fuera de Λ_ζ cuya ventana se solapa con su traslación por ζ"""
    for lam in lams:
        if _annulus_avoids_s_zeta(lam, zeta, params, aspect_sq):
            continue
        pairs = window_overlaps(lam, zeta, params.window(lam), aspect_sq)
        if pairs:
            xi, moved = pairs[0]
            return {'lambda': float(lam), 'zeta': tuple(zeta), 'xi': tuple(xi), 'xi_plus_zeta': tuple(moved)}
    return None


def gap_midpoints(table: NormTable, X: float) -> np.ndarray:
    """Puntos medios de huecos consecutivos del espectro, ≤ X"""
    norms = table.norms
    mids = 0.5 * (norms[:-1] + norms[1:])
    return mids[mids <= X]


@dataclass
class Membership:
    """Pertenencia de un λ a cada filtro"""
    lam: float
    l1: bool = False
    l2: bool = False
    lprime: bool = False
    linf: bool = False


def classify(lam: float, geom: TorusGeometry, table: NormTable, params: FilterParams) -> Membership:
    """Evalúa los cuatro filtros; λ ≤ 1 no pertenece a ninguno"""
    if lam <= 1:
        return Membership(lam)
    l1 = filter_lambda1(lam, table, params)
    l2 = filter_lambda2(lam, geom, table, params)
    lprime = l1 and l2
    linf = lprime and in_lambda_infinity(lam, geom, table, params)
    return Membership(lam, l1, l2, lprime, linf)


def dyadic_blocks(X: float) -> List[Tuple[float, float]]:
    """[0,1), [1,2), [2,4), ... hasta cubrir X"""
    blocks = [(0.0, 1.0)]
    lo = 1.0
    while lo <= X:
        blocks.append((lo, 2.0 * lo))
        lo *= 2.0
    return blocks


def density_report(base: Union[str, Sequence[float]], X: float, geom: TorusGeometry, table: NormTable,
                   params: FilterParams, threads: int = 1, interlace_constant: int = 2) -> pd.DataFrame:
    """
    Conteos de Λ0, Λ1, Λ2, Λ′, Λ∞ en Λ0 ∩ [0, X] por bloque diádico

    Args:
        base: 'gap-midpoints' o lista ordenada explícita
        X: Cota superior
        geom, table, params: Datos de la criba
        threads: Hilos para clasificar
        interlace_constant: C del entrelazado exigido a la base

    Returns:
        DataFrame con las columnas de DENSITY_COLUMNS
    """
    from .verify import weak_interlacing

    if isinstance(base, str):
        if base != 'gap-midpoints':
            raise ValueError(f"Generador de base desconocido: {base}")
        members = gap_midpoints(table, X)
    else:
        members = np.asarray(base, dtype=float)
        members = members[members <= X]
        laplace = table.norms[table.norms <= X + 1]
        report = weak_interlacing(members.tolist(), laplace.tolist(), interlace_constant)
        if not report.ok:
            raise PreconditionError(f"La base no se entrelaza débilmente con el espectro: {report}")

    memberships = parallel_map(lambda lam: classify(float(lam), geom, table, params), members, threads)
    rows = []
    for lo, hi in dyadic_blocks(X):
        inside = [m for m in memberships if lo <= m.lam < hi]
        rows.append({
            'block_lo': lo, 'block_hi': hi, 'count_base': len(inside),
            'count_l1': sum(m.l1 for m in inside), 'count_l2': sum(m.l2 for m in inside),
            'count_lprime': sum(m.lprime for m in inside), 'count_linf': sum(m.linf for m in inside),
        })
    frame = pd.DataFrame(rows, columns=DENSITY_COLUMNS)
    logger.info(f"📊 Densidades calculadas sobre {len(members)} miembros de Λ0")
    return frame


def density_trend(frame: pd.DataFrame, lo: float = 1e3, hi: float = 1e5) -> Dict:
    """Densidad de Λ∞ por bloque en [lo, hi] y si es no decreciente"""
    blocks = frame[(frame['block_lo'] >= lo / 2) & (frame['block_lo'] < hi) & (frame['count_base'] > 0)]
    densities = (blocks['count_linf'] / blocks['count_base']).tolist()
    monotone = all(b >= a for a, b in zip(densities, densities[1:]))
    return {'densities': densities, 'non_decreasing': monotone,
            'final_density': densities[-1] if densities else None}
