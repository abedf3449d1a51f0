"""
Laboratorio espectral - orquestador
Ejecuta los subcomandos norms, spectrum, sieve, equidist, verify y report
sobre una RunConfig validada y escribe los artefactos
"""

import os
import json
import math
import time
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List

import numpy as np

from .cache import ArtifactCache, atomic_write, serialize_spectrum
from .config import RunConfig
from .equidist import (DECAY_COLUMNS, RECTANGULAR_GAMMA, Observable, decay_experiment, matrix_element,
                       norm_lower_bound_experiment, quadrature_matrix_element, truncated_state,
                       truncation_bound_experiment)
from .errors import LabError
from .greens import (IDENTITY_TOLERANCE, TorusGeometry, deficiency_constants, lattice_sums, mixing_matrix,
                     secular_cutoff)
from .lattice import NormTable, consecutive_gaps, landau_ratio
from .scattering import (ExtensionLike, StrongCoupling, make_unitary, preset_extension,
                         spectrum_scan)
from .sieve import (DENSITY_COLUMNS, FilterParams, classify, density_report, density_trend, estimate_type,
                    gap_midpoints)
from .utils import log_uniform_samples, parallel_map, seed_fraction
from .verify import (CheckResult, appendix_sweep, half_period_oracle, im_gi_nondegeneracy,
                     multiplicity_checks, spectrum_cross_check)

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('norms', 'spectrum', 'sieve', 'equidist', 'verify', 'report')
DEFAULT_X2 = TorusGeometry().x2
QUADRATURE_LAMBDA = 100.5
QUADRATURE_ZETAS = ((1, 0), (1, 1), (2, 1), (0, 3))
QUADRATURE_TOLERANCE = 1e-8


@dataclass
class RunResult:
    """Resultado de un subcomando: comprobaciones, avisos y artefactos"""
    subcommand: str
    checks: List[CheckResult] = field(default_factory=list)
    advisory: List[CheckResult] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    summary: Dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]


class SpectralLab:
    """
    Clase principal del laboratorio: toro plano con dos dispersores
    """

    def __init__(self, config: RunConfig):
        """
        Inicializa el laboratorio

        Args:
            config: Configuración validada
        """
        self.config = config
        self.output_dir = config['run.output_dir']
        self.threads = int(config['run.threads'])
        self.cache = ArtifactCache(config['run.cache_dir'])
        self.config_hash = config.config_hash()
        os.makedirs(self.output_dir, exist_ok=True)
        self.params = FilterParams(epsilon=config['sieve.epsilon'], delta=config['sieve.delta'],
                                   C1=config['sieve.C1'], c2_low=config['sieve.c2_low'],
                                   zeta_radius_mode=config['sieve.zeta_radius_mode'])
        self._results: Dict[str, RunResult] = {}
        self._decay = None

    # ---------------------------------------------------------------- datos

    def geometry(self, aspect_sq=None) -> TorusGeometry:
        """
        Geometría de la configuración; con otro a² el x2 por defecto se
        reescala para conservar el par diofántico del toro cuadrado
        """
        base_aspect = Fraction(str(self.config['geometry.aspect_sq']))
        aspect = base_aspect if aspect_sq is None else Fraction(str(aspect_sq))
        x1 = tuple(self.config['geometry.x1'])
        x2 = self.config['geometry.x2']
        if x2 is None:
            a = math.sqrt(float(aspect))
            x2 = (x1[0] + DEFAULT_X2[0] / a, x1[1] + DEFAULT_X2[1] * a)
        return TorusGeometry(aspect, x1, tuple(x2))

    def extension(self) -> ExtensionLike:
        preset = self.config['extension.preset']
        if preset == 'strong-coupling':
            return StrongCoupling(self.config['extension.coupling'])
        if preset:
            return preset_extension(preset)
        return make_unitary(self.config['extension.phase'], self.config['extension.su2'])

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _write_text(self, name: str, text: str) -> str:
        path = self._path(name)
        atomic_write(path, text.encode('utf-8'))
        return path

    def _write_json(self, name: str, payload) -> str:
        return self._write_text(name, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")

    def _write_frame(self, name: str, frame, columns: List[str]) -> str:
        return self._write_text(name, frame[columns].to_csv(index=False))

    # ---------------------------------------------------------- subcomandos

    def run(self, subcommand: str) -> RunResult:
        """
        Ejecuta un subcomando

        Args:
            subcommand: Uno de SUBCOMMANDS

        Returns:
            RunResult con comprobaciones y artefactos
        """
        if subcommand not in SUBCOMMANDS:
            raise ValueError(f"Subcomando desconocido: {subcommand}. Opciones: {SUBCOMMANDS}")
        start = time.time()
        print(f"🚀 Ejecutando '{subcommand}' (config {self.config_hash[:12]})")
        result = getattr(self, f"run_{subcommand}")()
        result.elapsed = time.time() - start
        if not self.config['assertions.enabled']:
            result.advisory.extend(result.checks)
            result.checks = []
        self._results[subcommand] = result
        status = "✅" if result.passed else "❌"
        print(f"{status} '{subcommand}' terminado en {result.elapsed:.1f} s")
        return result

    def run_norms(self) -> RunResult:
        result = RunResult('norms')
        X = float(self.config['norms.x_max'])
        table = self.cache.norms(X, self.geometry().aspect_sq)
        gaps = consecutive_gaps(table)
        result.artifacts['norms'] = self.cache.norm_path(X, table.aspect_sq)
        result.summary = {
            'x_max': X, 'distinct_norms': len(table), 'lattice_points': table.point_count(),
            'max_gap': float(gaps.max()) if gaps.size else None,
            'landau_ratio': landau_ratio(table) if X > math.e else None,
        }
        print(f"📊 {len(table)} normas distintas hasta X={X:g}")
        return result

    def run_spectrum(self) -> RunResult:
        result = RunResult('spectrum')
        geom = self.geometry()
        lam_max = float(self.config['solver.lambda_max'])
        report = self._scan(geom, self.extension(), lam_max)
        records = report.records()
        self.cache.save_spectrum(self.config_hash[:16], records)
        result.artifacts['spectrum'] = self._write_text('spectrum.jsonl', serialize_spectrum(records).decode('utf-8'))
        result.checks.append(CheckResult('spectrum_scan', report.passed, {'failures': report.failures}))
        table = self.cache.norms(self._table_limit(lam_max), geom.aspect_sq)
        result.checks.append(spectrum_cross_check(report, table))
        result.summary = {'new': len(report.new), 'old_levels': len(report.old),
                          'deficit': [report.deficit_min, report.deficit_max], 'rank': report.rank_defect}
        print(f"📊 {len(report.new)} autovalores nuevos hasta λ={lam_max:g}")
        return result

    def _scan(self, geom: TorusGeometry, extension: ExtensionLike, lam_max: float):
        cutoff = self.config['solver.cutoff'] or secular_cutoff(lam_max)
        return spectrum_scan(lam_max, geom, extension, R=cutoff, tol=self.config['solver.tol'],
                             floor=self.config['solver.spectral_floor'], threads=self.threads,
                             margin=self.config['solver.margin'], grid_points=self.config['solver.grid_points'],
                             phase_tracking=self.config['solver.phase_tracking'])

    def _table_limit(self, lam: float) -> float:
        """Cota de tabla que cubre λ y su ventana"""
        return lam + max(10.0, 2.0 * self.params.window(max(lam, 1.0)) + 2.0 * math.sqrt(max(lam, 1.0)))

    def run_sieve(self) -> RunResult:
        result = RunResult('sieve')
        X = float(self.config['sieve.x_max'])
        modes = [('', self.geometry())]
        if self.config['rectangular.enabled']:
            modes.append(('_rect', self.geometry(self.config['rectangular.aspect_sq'])))
        for suffix, geom in modes:
            table = self.cache.norms(self._table_limit(X), geom.aspect_sq)
            frame = density_report(self.config['sieve.base'], X, geom, table, self.params, self.threads)
            result.artifacts[f'density{suffix}'] = self._write_frame(f'density{suffix}.csv', frame, DENSITY_COLUMNS)
            trend = density_trend(frame)
            threshold_ok = trend['final_density'] is not None and trend['final_density'] > 0.8
            check = CheckResult(f'density_trend{suffix}', trend['non_decreasing'] and threshold_ok, trend)
            if self.config['assertions.enforce_calibrated']:
                result.checks.append(check)
            else:
                check.witness['advisory'] = True
                result.advisory.append(check)

        diophantine = estimate_type(self.geometry().diophantine_pair(), int(self.config['sieve.diophantine_q']))
        result.summary = {'kappa_hat': diophantine.kappa_hat, 'rational': diophantine.rational_flag,
                          'records': len(diophantine.records)}
        result.artifacts['diophantine'] = self._write_json('diophantine.json', {
            'alpha_pair': list(diophantine.alpha_pair), 'Q': diophantine.Q, 'kappa_hat': diophantine.kappa_hat,
            'rational_flag': diophantine.rational_flag, 'rational_q': diophantine.rational_q,
            'records': diophantine.records})
        if diophantine.rational_flag:
            logger.warning("⚠️ x0/π es racional: Λ2 puede ser vacío")
        return result

    def _members(self, geom: TorusGeometry, table: NormTable, lo: float, hi: float, attribute: str) -> np.ndarray:
        """Miembros de Λ0 (puntos medios) en [lo, hi] que pertenecen al filtro dado"""
        mids = gap_midpoints(table, hi)
        mids = mids[mids >= lo]
        memberships = parallel_map(lambda lam: classify(float(lam), geom, table, self.params), mids, self.threads)
        return np.array([m.lam for m in memberships if getattr(m, attribute)])

    def run_equidist(self) -> RunResult:
        result = RunResult('equidist')
        lo, hi = float(self.config['equidist.lambda_min']), float(self.config['equidist.lambda_max'])
        count = int(self.config['equidist.samples'])
        d = np.array(self.config['equidist.d'], dtype=complex)
        d = d / np.linalg.norm(d)
        seed = seed_fraction(self.config_hash)

        modes = [('', self.geometry())]
        if self.config['rectangular.enabled']:
            modes.append(('_rect', self.geometry(self.config['rectangular.aspect_sq'])))
        for suffix, geom in modes:
            table = self.cache.norms(self._table_limit(hi), geom.aspect_sq)
            observable = Observable.gaussian_bump(self.config['equidist.observable_cutoff'], geom.aspect_sq)
            samples = log_uniform_samples(self._members(geom, table, lo, hi, 'linf'), count, lo, hi, seed)
            decay = decay_experiment(samples, observable, geom, table, self.params, d=d, threads=self.threads)
            frame = decay.frame
            result.artifacts[f'decay{suffix}'] = self._write_frame(f'decay{suffix}.csv', frame, DECAY_COLUMNS)
            result.artifacts[f'decay_plot{suffix}'] = self._write_text(
                f'decay_plot{suffix}.dat', decay.plot_data.to_csv(index=False, sep=' '))

            linf = frame[frame['in_linf']]
            nonzero = linf[(linf['dev_trunc'] != 0.0) | ~linf['structural_zero']]
            result.checks.append(CheckResult(f'exact_zero{suffix}', bool(len(linf)) and nonzero.empty, {
                'samples': int(len(linf)), 'violations': nonzero['lambda'].tolist()[:20]}))
            if not suffix:
                result.checks.append(CheckResult('decay_envelope', decay.envelope['passed'], decay.envelope))
                result.summary['fit'] = decay.fit
                result.summary['excluded_empty'] = decay.excluded
                self._decay = decay
            else:
                result.summary['rectangular_gamma'] = RECTANGULAR_GAMMA

        geom = self.geometry()
        top = float(self.config['equidist.norm_lambda_max'])
        table = self.cache.norms(self._table_limit(top), geom.aspect_sq)
        prime = log_uniform_samples(self._members(geom, table, 10.0, top, 'lprime'), count, 10.0, top, seed)
        lower = norm_lower_bound_experiment(prime, d, geom, self.params, threads=self.threads)
        result.checks.append(CheckResult('norm_lower_bound', lower['passed'], lower))
        truncation = truncation_bound_experiment(prime, d, geom, self.params, threads=self.threads)
        result.checks.append(CheckResult('truncation_bound', truncation['passed'], truncation))
        return result

    def run_verify(self) -> RunResult:
        result = RunResult('verify')
        geom = self.geometry()
        sums = lattice_sums(geom, 1e6)
        constants = deficiency_constants(geom, 1e6, sums=sums, strict=False)
        mixing = mixing_matrix(constants)
        whitening = mixing.whitening_error(constants.c1, constants.c2)
        result.summary['constants'] = {'c1': constants.c1, 'c2': constants.c2, 'tail_bound': constants.tail_bound}
        result.checks.append(CheckResult('deficiency_identity', constants.identities_hold,
                                         {'defect': constants.identity_defect, 'tolerance': IDENTITY_TOLERANCE}))
        result.checks.append(CheckResult('whitening', whitening < 1e-10, {'max_error': whitening}))

        result.checks.append(appendix_sweep(float(self.config['verify.n_max']), geom, self.threads))
        extensions = {rank: preset_extension(name)
                      for rank, name in ((0, 'minus-identity'), (1, 'rank1-sample'), (2, 'rank2-sample'))}
        result.checks.append(multiplicity_checks(geom, extensions, self.config['verify.multiplicity_shells'], mixing))
        table = self.cache.norms(60.0, geom.aspect_sq)
        v0 = extensions[1].v0
        result.checks.append(CheckResult('im_gi_nondegeneracy', im_gi_nondegeneracy(v0, geom, table, mixing),
                                         {'v0': [complex(x) for x in v0]}))

        result.checks.append(half_period_oracle(float(self.config['verify.oracle_lambda_max']),
                                                self.config['verify.oracle_phase'],
                                                self.config['verify.oracle_theta'],
                                                float(self.config['verify.oracle_cutoff']), threads=self.threads))

        lam_max = float(self.config['verify.interlace_lambda_max'])
        spectrum_table = self.cache.norms(self._table_limit(lam_max), geom.aspect_sq)
        for rank in (1, 2):
            report = self._scan(geom, extensions[rank], lam_max)
            check = spectrum_cross_check(report, spectrum_table)
            check.name = f'interlacing_rank{rank}'
            check.witness['scan_failures'] = report.failures
            check.passed = check.passed and report.passed
            result.checks.append(check)

        result.checks.append(self._quadrature_check(geom))
        result.artifacts['verify'] = self._write_json('verify.json', [c.record() for c in result.checks])
        return result

    def _quadrature_check(self, geom: TorusGeometry) -> CheckResult:
        state = truncated_state(QUADRATURE_LAMBDA, (1.0, 0.0), geom, self.params)
        worst = 0.0
        for zeta in QUADRATURE_ZETAS:
            exact = matrix_element(state, zeta).value
            grid = quadrature_matrix_element(state, zeta)
            worst = max(worst, abs(exact - grid) / max(abs(grid), 1.0))
        return CheckResult('quadrature_oracle', worst <= QUADRATURE_TOLERANCE,
                           {'lambda': QUADRATURE_LAMBDA, 'window_size': len(state), 'max_relative_error': worst})

    def run_report(self) -> RunResult:
        from .report_generator import ReportGenerator

        result = RunResult('report')
        for name in SUBCOMMANDS[:-1]:
            try:
                sub = self.run(name)
            except LabError as exc:
                logger.error(f"❌ '{name}' falló: {exc}")
                sub = RunResult(name, checks=[CheckResult(name, False, {'error': str(exc)})])
                self._results[name] = sub
            result.checks.extend(sub.checks)
            result.advisory.extend(sub.advisory)
            result.artifacts.update(sub.artifacts)

        generator = ReportGenerator(self.output_dir)
        paths = generator.generate_report(self._results, self.config, self._decay)
        result.artifacts.update(paths)
        return result


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"No serializable: {type(value).__name__}")
