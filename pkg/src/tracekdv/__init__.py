"""Inverse scattering for the Schrodinger operator on the line and KdV evolution."""
from importlib.metadata import PackageNotFoundError, version

from .estimators import ForwardScattering, KdVSolver, MarchenkoReconstructor
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DegenerateSpectrumError,
    NumericalGuardError,
    ParameterError,
    PositivityError,
    TraceKdVError,
)
from .forward import ScatteringData, compute_TR, forward
from .grids import KGrid, PotentialSpec, XGrid, sample_potential
from .kdv import EvolvedProfile, kdv_solve
from .reconstruction import METHODS, reconstruct

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateSpectrumError",
    "EvolvedProfile",
    "ForwardScattering",
    "KGrid",
    "KdVSolver",
    "METHODS",
    "MarchenkoReconstructor",
    "NumericalGuardError",
    "ParameterError",
    "PositivityError",
    "PotentialSpec",
    "ScatteringData",
    "TraceKdVError",
    "XGrid",
    "compute_TR",
    "forward",
    "kdv_solve",
    "reconstruct",
    "sample_potential",
]
