"""
Caché de artefactos
Tablas de normas en CSV y espectros en JSON-lines, con checksum SHA-256 en
un archivo adjunto y escritura atómica por renombrado
"""

import os
import json
import hashlib
import logging
import tempfile
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import CacheChecksumError
from .lattice import AspectLike, NormTable, as_aspect, sieve_norms

logger = logging.getLogger(__name__)

NORM_HEADER = "norm,multiplicity"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def atomic_write(path: str, data: bytes) -> None:
    """Escribe en un temporal del mismo directorio y lo renombra sobre path"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp_')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def _sidecar(path: str) -> str:
    return path + '.sha256'


def write_with_checksum(path: str, data: bytes, meta: Optional[Dict] = None) -> str:
    """Escribe data y su sidecar {sha256, meta}; devuelve el checksum"""
    digest = sha256_bytes(data)
    atomic_write(path, data)
    atomic_write(_sidecar(path), json.dumps({'sha256': digest, 'meta': meta or {}}, sort_keys=True).encode('utf-8'))
    return digest


def read_with_checksum(path: str) -> Tuple[bytes, Dict]:
    """Lee path y verifica el sidecar; lanza CacheChecksumError si no coincide"""
    sidecar = _sidecar(path)
    if not os.path.exists(sidecar):
        raise CacheChecksumError(f"Falta el checksum de {path}")
    with open(path, 'rb') as f:
        data = f.read()
    with open(sidecar, 'r', encoding='utf-8') as f:
        try:
            info = json.load(f)
        except json.JSONDecodeError as exc:
            raise CacheChecksumError(f"Checksum ilegible para {path}") from exc
    if info.get('sha256') != sha256_bytes(data):
        raise CacheChecksumError(f"Checksum incorrecto en {path}")
    return data, info.get('meta', {})


def serialize_norm_table(table: NormTable) -> bytes:
    """CSV `norm,multiplicity`; normas exactas (enteros en el toro cuadrado, p/q si no)"""
    scale = table.scale
    lines = [NORM_HEADER]
    for key, mult in zip(table.keys.tolist(), table.multiplicities.tolist()):
        norm = Fraction(int(key), scale)
        lines.append(f"{norm},{int(mult)}")
    return ("\n".join(lines) + "\n").encode('utf-8')


def parse_norm_table(data: bytes, aspect_sq: AspectLike, cutoff: float) -> NormTable:
    aspect = as_aspect(aspect_sq)
    scale = aspect.numerator * aspect.denominator
    lines = data.decode('utf-8').strip().splitlines()
    if not lines or lines[0].strip() != NORM_HEADER:
        raise CacheChecksumError("Cabecera de tabla de normas inválida")
    keys, mults = [], []
    for line in lines[1:]:
        norm, mult = line.split(',')
        key = Fraction(norm) * scale
        if key.denominator != 1:
            raise CacheChecksumError(f"Norma {norm} incompatible con a²={aspect}")
        keys.append(int(key))
        mults.append(int(mult))
    return NormTable(aspect_sq=aspect, keys=np.array(keys, dtype=np.int64),
                     multiplicities=np.array(mults, dtype=np.int64), cutoff=float(cutoff))


def serialize_spectrum(records: List[Dict]) -> bytes:
    """Una línea JSON por registro; los floats usan repr (ida y vuelta exacta)"""
    return "".join(json.dumps(record, sort_keys=True) + "\n" for record in records).encode('utf-8')


def parse_spectrum(data: bytes) -> List[Dict]:
    return [json.loads(line) for line in data.decode('utf-8').splitlines() if line.strip()]


class ArtifactCache:
    """
    Caché en disco de tablas de normas y espectros

    Un archivo corrupto se registra y se recalcula; nunca se usa.
    """

    def __init__(self, cache_dir: str = "cache"):
        self.cache_dir = cache_dir
        os.makedirs(cache_dir, exist_ok=True)

    def norm_path(self, X: float, aspect_sq: AspectLike = 1) -> str:
        aspect = as_aspect(aspect_sq)
        return os.path.join(self.cache_dir, f"norms_X{X:.17g}_a{aspect.numerator}-{aspect.denominator}.csv")

    def save_norms(self, table: NormTable) -> str:
        path = self.norm_path(table.cutoff, table.aspect_sq)
        write_with_checksum(path, serialize_norm_table(table),
                            {'cutoff': table.cutoff, 'aspect_sq': str(table.aspect_sq)})
        return path

    def load_norms(self, X: float, aspect_sq: AspectLike = 1) -> NormTable:
        path = self.norm_path(X, aspect_sq)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        data, _ = read_with_checksum(path)
        return parse_norm_table(data, aspect_sq, X)

    def norms(self, X: float, aspect_sq: AspectLike = 1) -> NormTable:
        """Tabla de normas desde caché o recalculada (y guardada)"""
        try:
            table = self.load_norms(X, aspect_sq)
            logger.debug(f"Tabla de normas X={X} leída de caché")
            return table
        except FileNotFoundError:
            logger.info(f"🔍 Caché sin tabla para X={X}; calculando")
        except CacheChecksumError as exc:
            logger.warning(f"⚠️ {exc}; se recalcula")
        table = sieve_norms(X, aspect_sq)
        self.save_norms(table)
        return table

    def spectrum_path(self, tag: str) -> str:
        return os.path.join(self.cache_dir, f"spectrum_{tag}.jsonl")

    def save_spectrum(self, tag: str, records: List[Dict]) -> str:
        path = self.spectrum_path(tag)
        write_with_checksum(path, serialize_spectrum(records), {'tag': tag})
        return path

    def load_spectrum(self, tag: str) -> Optional[List[Dict]]:
        """Registros guardados, o None si no existen o están corruptos"""
        path = self.spectrum_path(tag)
        if not os.path.exists(path):
            return None
        try:
            data, _ = read_with_checksum(path)
        except CacheChecksumError as exc:
            logger.warning(f"⚠️ {exc}; se recalcula")
            return None
        return parse_spectrum(data)
