"""Fourier-space solver for transition densities of symmetric pure-jump Levy
processes.

Pipeline: (1) a double-exponential quadrature turns the jump density into
weighted point sources whose semi-infinite Fourier transform is evaluated on a
uniform frequency grid by a Gaussian-gridding nonuniform FFT; (2) a sinc-Gauss
sampling formula integrates the transform indefinitely (once or twice) via FFT
convolution, yielding the characteristic exponent; (3) a continuous Euler
transform inverts e^{t G} back to the density with a fractional FFT.
"""

from .de_ft import DeFtParams, DeSources, build_sources, phi, phi_parts, splice_plan
from .euler_ft import EulerParams, inverse_ft, weight
from .numkit import ComplexSeries, FrftPlan, bessel_k, erf, erfc, fft, fft_array, frft
from .nufft import (IndexWindows, NufftParams, build_windows, extend_conjugate,
                    nufft_forward, nufft_params)
from .sinc_gauss import (KernelTable, SincGaussConfig, indefinite_integral,
                         kernel_table, negative_extension, sg_interpolate)
from .solver import (GridSpec, LevyModel, SolveResult, clear_exponent_cache,
                     custom_model, exact_nig, exact_vg, g_gamma, gamma_fn,
                     make_grid, nig_model, solve, vg_model)

__version__ = "0.1.0"

__all__ = [
    "ComplexSeries", "FrftPlan", "bessel_k", "erf", "erfc", "fft", "fft_array",
    "frft",
    "DeFtParams", "DeSources", "build_sources", "phi", "phi_parts", "splice_plan",
    "IndexWindows", "NufftParams", "build_windows", "extend_conjugate",
    "nufft_forward", "nufft_params",
    "KernelTable", "SincGaussConfig", "indefinite_integral", "kernel_table",
    "negative_extension", "sg_interpolate",
    "EulerParams", "inverse_ft", "weight",
    "GridSpec", "LevyModel", "SolveResult", "clear_exponent_cache",
    "custom_model", "exact_nig", "exact_vg", "g_gamma", "gamma_fn", "make_grid",
    "nig_model", "solve", "vg_model",
    "__version__",
]
