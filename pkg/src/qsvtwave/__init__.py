"""Quantum singular value transformation applied to a one-dimensional wave problem.

The package builds the discretized boundary-value problem, block-encodes its
matrix, computes QSP phase factors for a regularized inverse and emulates
the resulting circuits on a statevector simulator, together with read-out
pipelines (spectra, amplitude estimation, Gaussian filters, absorbed power).
"""

from .config import VERSION as __version__
from .config import RunConfig, load_config
from .errors import (AngleDomain, BlockMismatch, CapExceeded, ConfigError, NoConvergence,
                     QsvtWaveError, SingularMatrix, ZeroProbability)
from .qsp import PhaseVector, inverse_phases, solve_phases
from .qsvt import invert_apply
from .wave import WaveProblem, build_matrix, classical_solve, compare_solutions

__all__ = [
    "__version__", "RunConfig", "load_config", "AngleDomain", "BlockMismatch", "CapExceeded",
    "ConfigError", "NoConvergence", "QsvtWaveError", "SingularMatrix", "ZeroProbability",
    "PhaseVector", "inverse_phases", "solve_phases", "invert_apply", "WaveProblem",
    "build_matrix", "classical_solve", "compare_solutions",
]
