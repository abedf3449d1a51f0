"""
Configuración de ejecución
Valores por defecto, lectura de JSON o texto plano `seccion.clave = valor`,
sobreescrituras por entorno y línea de comandos, validación y hash estable
"""

import os
import copy
import json
import math
import hashlib
import logging
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config/lab_config.json"

DEFAULTS: Dict[str, Dict[str, Any]] = {
    'geometry': {'aspect_sq': '1', 'x1': [0.0, 0.0], 'x2': None},
    'extension': {'preset': 'rank2-sample', 'phase': None, 'su2': None, 'coupling': 1.0},
    'solver': {'cutoff': None, 'tol': 1e-8, 'margin': 1e-6, 'grid_points': 64,
               'phase_tracking': True, 'spectral_floor': -1e4, 'lambda_max': 500.0},
    'sieve': {'epsilon': 0.05, 'delta': None, 'C1': 1.0, 'c2_low': 0.5, 'zeta_radius_mode': 'lambda_eps',
              'base': 'gap-midpoints', 'x_max': 1e5, 'diophantine_q': 100000},
    'equidist': {'lambda_min': 1e3, 'lambda_max': 1e5, 'samples': 100, 'observable_cutoff': 8.0,
                 'd': [1.0, 0.0], 'norm_lambda_max': 1e4},
    'verify': {'n_max': 2000, 'oracle_lambda_max': 200.0, 'oracle_phase': math.pi / 2,
               'oracle_theta': math.pi / 6, 'oracle_cutoff': 1e6, 'multiplicity_shells': [1, 2, 5],
               'interlace_lambda_max': 500.0},
    'norms': {'x_max': 1e4},
    'rectangular': {'enabled': True, 'aspect_sq': '2'},
    'assertions': {'enabled': True, 'enforce_calibrated': False},
    'run': {'output_dir': 'output', 'cache_dir': 'cache', 'threads': 1, 'log_level': 'INFO'},
}

PRESET_NAMES = ('minus-identity', 'identity', 'rank1-sample', 'rank2-sample', 'strong-coupling')
ZETA_MODES = ('lambda_eps', 'lambda_eps_and_delta')
ENV_OVERRIDES = {'LAB_OUTPUT_DIR': 'run.output_dir', 'LAB_CACHE_DIR': 'run.cache_dir', 'LAB_THREADS': 'run.threads'}
# Claves que no cambian los artefactos y quedan fuera del hash
UNHASHED_SECTIONS = ('run',)


def flatten(nested: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    """{'a': {'b': 1}} → {'a.b': 1}"""
    flat = {}
    for key, value in nested.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, dotted + '.'))
        else:
            flat[dotted] = value
    return flat


def parse_value(text: str) -> Any:
    """Interpreta un valor de texto como JSON si es posible; si no, como cadena"""
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_flat_text(content: str) -> Dict[str, Any]:
    """Lee líneas `seccion.clave = valor`; '#' inicia un comentario"""
    values = {}
    problems = []
    for number, raw in enumerate(content.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            problems.append(f"línea {number}: falta '=' en {raw.strip()!r}")
            continue
        key, value = line.split('=', 1)
        values[key.strip()] = parse_value(value)
    if problems:
        raise ConfigError(problems)
    return values


class RunConfig:
    """
    Configuración validada de una ejecución

    Se guarda aplanada en claves con puntos; los valores por defecto cubren
    todos los campos.
    """

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        self.values = flatten(copy.deepcopy(DEFAULTS))
        if values:
            self.update(values)

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
             use_env: bool = True) -> 'RunConfig':
        """
        Construye la configuración: defaults → archivo → entorno → overrides

        Args:
            path: Archivo JSON (.json) o de texto plano; None usa solo defaults
            overrides: Claves con puntos de mayor precedencia (CLI)
            use_env: Aplica las variables LAB_* (cargando .env)

        Returns:
            RunConfig validada
        """
        config = cls()
        if path:
            if not os.path.exists(path):
                raise ConfigError([f"archivo de configuración no encontrado: {path}"])
            with open(path, 'r', encoding='utf-8') as f:
                content = f.read()
            if path.endswith('.json'):
                try:
                    config.update(flatten(json.loads(content)))
                except json.JSONDecodeError as exc:
                    raise ConfigError([f"JSON inválido en {path}: {exc}"]) from exc
            else:
                config.update(parse_flat_text(content))
            logger.info(f"📊 Configuración cargada desde: {path}")
        if use_env:
            load_dotenv()
            env = {key: parse_value(os.environ[name]) for name, key in ENV_OVERRIDES.items() if os.getenv(name)}
            config.update(env)
        if overrides:
            config.update(overrides)
        config.validate()
        return config

    def update(self, values: Dict[str, Any]) -> None:
        unknown = [key for key in values if key not in self.values]
        if unknown:
            raise ConfigError([f"clave desconocida: {key}" for key in sorted(unknown)])
        self.values.update(values)

    def get(self, key: str) -> Any:
        return self.values[key]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def section(self, name: str) -> Dict[str, Any]:
        prefix = name + '.'
        return {key[len(prefix):]: value for key, value in self.values.items() if key.startswith(prefix)}

    def validate(self) -> None:
        """Acumula todos los problemas y lanza ConfigError si hay alguno"""
        v = self.values
        problems: List[str] = []

        def number(key: str, low: Optional[float] = None, high: Optional[float] = None,
                   optional: bool = False, strict_low: bool = False) -> None:
            value = v[key]
            if value is None and optional:
                return
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"{key}: se esperaba un número, recibido {value!r}")
                return
            if low is not None and (value <= low if strict_low else value < low):
                problems.append(f"{key}: {value} fuera de rango (mínimo {low})")
            if high is not None and value > high:
                problems.append(f"{key}: {value} fuera de rango (máximo {high})")

        def pair(key: str, optional: bool = False) -> None:
            value = v[key]
            if value is None and optional:
                return
            if not (isinstance(value, list) and len(value) == 2
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
                problems.append(f"{key}: se esperaba un par de números, recibido {value!r}")

        for key in ('geometry.aspect_sq', 'rectangular.aspect_sq'):
            try:
                aspect = Fraction(str(v[key]))
                if aspect <= 0:
                    problems.append(f"{key}: a² debe ser positivo")
            except (ValueError, ZeroDivisionError):
                problems.append(f"{key}: a² debe ser racional (p/q), recibido {v[key]!r}")
        pair('geometry.x1')
        pair('geometry.x2', optional=True)

        if v['extension.preset'] is not None and v['extension.preset'] not in PRESET_NAMES:
            problems.append(f"extension.preset: desconocido {v['extension.preset']!r}; opciones {PRESET_NAMES}")
        if v['extension.preset'] is None:
            number('extension.phase')
            su2 = v['extension.su2']
            if not (isinstance(su2, list) and len(su2) == 3):
                problems.append("extension.su2: se esperaban tres ángulos (θ, ψ, χ)")
        number('extension.coupling', 0, strict_low=True)

        number('solver.cutoff', 0, optional=True, strict_low=True)
        number('solver.tol', 0, 1e-3, strict_low=True)
        number('solver.margin', 0, 0.1, strict_low=True)
        number('solver.grid_points', 8)
        number('solver.spectral_floor', high=0)
        number('solver.lambda_max', 0, strict_low=True)

        number('sieve.epsilon', 0, 0.05, strict_low=True)
        number('sieve.delta', 0, optional=True, strict_low=True)
        if isinstance(v['sieve.delta'], (int, float)) and v['sieve.delta'] >= 0.25:
            problems.append(f"sieve.delta: {v['sieve.delta']} debe ser < 1/4")
        number('sieve.C1', 0, strict_low=True)
        number('sieve.c2_low', 0, strict_low=True)
        if v['sieve.zeta_radius_mode'] not in ZETA_MODES:
            problems.append(f"sieve.zeta_radius_mode: desconocido {v['sieve.zeta_radius_mode']!r}")
        base = v['sieve.base']
        if not (base == 'gap-midpoints' or isinstance(base, list)):
            problems.append("sieve.base: 'gap-midpoints' o lista explícita de valores")
        number('sieve.x_max', 2)
        number('sieve.diophantine_q', 1000)

        number('equidist.lambda_min', 1, strict_low=True)
        number('equidist.lambda_max', 1, strict_low=True)
        if all(isinstance(v[k], (int, float)) for k in ('equidist.lambda_min', 'equidist.lambda_max')) \
                and v['equidist.lambda_min'] >= v['equidist.lambda_max']:
            problems.append("equidist: lambda_min debe ser menor que lambda_max")
        number('equidist.samples', 1)
        number('equidist.observable_cutoff', 0)
        pair('equidist.d')
        number('equidist.norm_lambda_max', 10)

        number('verify.n_max', 1)
        number('verify.oracle_lambda_max', 0, strict_low=True)
        number('verify.oracle_cutoff', 1e4)
        number('norms.x_max', 0, strict_low=True)
        number('run.threads', 1)
        if str(v['run.log_level']).upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR'):
            problems.append(f"run.log_level: nivel desconocido {v['run.log_level']!r}")

        if problems:
            raise ConfigError(problems)

    def hashed_values(self) -> Dict[str, Any]:
        return {key: value for key, value in self.values.items() if key.split('.', 1)[0] not in UNHASHED_SECTIONS}

    def config_hash(self) -> str:
        """SHA-256 del JSON canónico (claves ordenadas) de los valores que afectan a los artefactos"""
        canonical = json.dumps(self.hashed_values(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        nested: Dict[str, Any] = {}
        for key, value in self.values.items():
            section, name = key.split('.', 1)
            nested.setdefault(section, {})[name] = value
        return nested


def parse_overrides(assignments: Iterable[str]) -> Dict[str, Any]:
    """['solver.tol=1e-9', ...] → {'solver.tol': 1e-9}"""
    overrides = {}
    problems = []
    for item in assignments or []:
        if '=' not in item:
            problems.append(f"--set espera seccion.clave=valor, recibido {item!r}")
            continue
        key, value = item.split('=', 1)
        overrides[key.strip()] = parse_value(value)
    if problems:
        raise ConfigError(problems)
    return overrides
