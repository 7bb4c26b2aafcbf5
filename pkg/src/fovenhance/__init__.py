"""Foveated-image enhancement by extrapolating local orientation, phase and
intensity into the frequency bands a foveated renderer dropped."""
from . import _backend
from .analysis import ParameterFields, analyze_level, dominant_orientation, local_phase
from .config import RunConfig, load_config
from .errors import (ConfigError, DegenerateSpectrumError, DimensionError, FovEnhanceError, InputError,
                     InvariantError)
from .extrapolate import SlopeFit, estimate_spectrum_slope, extrapolate_all, relative_phase
from .filterbank import KERNELS, BasisKernels, basis_responses, steer_g, steer_h
from .foveation import FoveationModel, ReliabilityMap, compose_enhanced, eccentricity_of, foveate
from .image import LevelStack, build_level_stack, from_luma_chroma, to_luma_chroma
from .pipeline import DiagnosticsReport, contrast_enhance_simple, run_compare, run_enhance
from .synthesis import (ImpulseMap, ImpulseSubmapBank, accelerated_splat, build_submap_bank,
                        generate_impulse_map, match_global_std, naive_splat)

__version__ = "0.1.0"


def backend() -> str:
    """Name of the active kernel backend (``compiled`` or ``python``)."""
    return _backend.name()
