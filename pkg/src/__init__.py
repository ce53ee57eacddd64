"""Spectral numerics for the massless Dirac-Coulomb operator."""

from pkgutil import extend_path

__path__ = extend_path(__path__, __name__)

from .eigen import EigenChannel, WaveIndex, make_channel
from .hankel import HankelTransformer, SpectralField, TransformPlan
from .nonlinear import ConvolutionKernel, PicardSolver, PicardState
from .partialwave import PartialWaveField, RadialGrid
from .propagator import Propagator, Trajectory

__all__ = [
    "ConvolutionKernel",
    "EigenChannel",
    "HankelTransformer",
    "PartialWaveField",
    "PicardSolver",
    "PicardState",
    "Propagator",
    "RadialGrid",
    "SpectralField",
    "Trajectory",
    "TransformPlan",
    "WaveIndex",
    "make_channel",
]
