"""Linear time-delay models of periodic and quasi-periodic signals.

Submodules
----------
signals         generators, noise, resampling, CSV I/O
spectral        DFT of one period, sparsity patterns, minimal sampling
delay_solver    Hankel and spectral systems, solvers, rollout, NMSE
vector_analysis rank test and output-controllability index for J > 1
modal           companion matrices, eigenmodes, delay-embedded DMD, pseudospectra
conditioning    condition numbers and bounds
"""
from .errors import NumericalError, ValidationError
from .signals import NoiseSpec, TimeSeries
from .spectral import FourierSpectrum, SparsityPattern
from .delay_solver import DelayModel

__version__ = "0.1.0"

__all__ = [
    "NumericalError",
    "ValidationError",
    "NoiseSpec",
    "TimeSeries",
    "FourierSpectrum",
    "SparsityPattern",
    "DelayModel",
]
