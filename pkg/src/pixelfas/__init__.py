"""Pixel-reconfigurable antenna state-set synthesis for fluid antenna systems."""

__version__ = "0.1.0"

from .numerics import bessel_j0, build_quadrature, QuadratureGrid
from .em_model import (FrequencyGrid, MultiportNetwork, PatternGrid,
                       PowerAngularSpectrum, SurrogateParams,
                       load_network, load_pattern_bundle,
                       save_network, save_pattern_bundle,
                       synth_dipole_translations, synth_pixel_surrogate)
from .impm import (CircuitBranch, LoadMap, PixelConfiguration, PortSolution,
                   SwitchModel, build_load_map, input_impedance,
                   port_currents, reflection_coefficient, total_pattern)
from .pcdm import (CovarianceMatrix, PatternKernel, TargetCovariance,
                   average_error, compute_kernel, covariance_direct,
                   covariance_from_currents, target_covariance)
from .search import (GAParams, MatchedSet, RunResult, brute_force_order,
                     decode, ga_order, make_evaluator, random_matched_search,
                     two_step_pipeline)

__all__ = [name for name in dir() if not name.startswith("_")]
