"""
Errores del laboratorio espectral
Jerarquía pequeña de excepciones compartida por todos los módulos
"""

from typing import Any, Dict, List, Optional


class LabError(Exception):
    """Clase base de los errores propios del laboratorio"""


class ConfigError(LabError, ValueError):
    """Configuración inválida; acumula todos los diagnósticos por campo"""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("Configuración inválida:\n  - " + "\n  - ".join(self.problems))


class SingularInputError(LabError, ValueError):
    """Parámetro espectral sobre (o a menos de 1e-9 de) una norma de la red"""


class NearSingularityError(LabError, ValueError):
    """λ demasiado cerca de un extremo del hueco; hay que refinar adaptativamente"""


class DegenerateGramError(LabError, ValueError):
    """Matriz de Gram de las funciones de Green no definida positiva (c1 ≤ |c2|)"""


class PreconditionError(LabError, ValueError):
    """Precondición de una operación no satisfecha"""


class IdentityCheckError(LabError, RuntimeError):
    """Las identidades Im G_i = -4π² c fallan más allá de la tolerancia"""


class UnresolvedRootError(LabError, RuntimeError):
    """Raíz casi doble no resuelta tras agotar el presupuesto de refinamiento"""

    def __init__(self, message: str, bracket: Optional[Dict[str, Any]] = None):
        self.bracket = bracket or {}
        super().__init__(message)


class CacheChecksumError(LabError, RuntimeError):
    """Archivo de caché corrupto (checksum no coincide)"""


class AssertionFailure(LabError, RuntimeError):
    """Una comprobación habilitada falló; lleva el testigo para el reporte"""

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        self.witness = witness or {}
        super().__init__(message)
