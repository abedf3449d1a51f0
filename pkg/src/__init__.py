"""
Laboratorio Espectral
Espectro de −Δ_U en el toro plano con dos dispersores puntuales, criba
diofántica y equidistribución de elementos de matriz
"""

from .config import RunConfig
from .greens import TorusGeometry, deficiency_constants, mixing_matrix
from .lattice import NormTable, sieve_norms
from .lab_runner import SpectralLab
from .report_generator import ReportGenerator
from .scattering import ExtensionU, SecularSolver, spectrum_scan

__version__ = "1.0.0"
__author__ = "Spectral Lab Team"

# Exportar clases principales
__all__ = [
    'RunConfig',
    'TorusGeometry',
    'deficiency_constants',
    'mixing_matrix',
    'NormTable',
    'sieve_norms',
    'SpectralLab',
    'ReportGenerator',
    'ExtensionU',
    'SecularSolver',
    'spectrum_scan',
]
