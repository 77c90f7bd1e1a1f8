"""High-precision Gaussian-weighted Laguerre and Bessel kernels for three-body matrix elements."""
from .errors import DomainError, NumericalError, PoleError, TruncationError
from .kernels import (
    EvalReport,
    KernelParams,
    LaguerreKernelParams,
    b_kernel,
    j_integral,
    k_closed,
    k_eval,
    k_series,
    laguerre_kernel_erfc,
    laguerre_kernel_expansion,
    legendre_pair_integral,
    neumann_adams_coeffs,
    ts_polynomials,
)
from .matelem import (
    ChannelIndices,
    GaussianPotential,
    PairGeometry,
    channel_params,
    i2_integral,
    i3_integral,
    pair_distances,
    potential_matrix_element,
)
from .mpnum import PrecisionContext

__all__ = [
    "ChannelIndices", "DomainError", "EvalReport", "GaussianPotential", "KernelParams",
    "LaguerreKernelParams", "NumericalError", "PairGeometry", "PoleError", "PrecisionContext",
    "TruncationError", "b_kernel", "channel_params", "i2_integral", "i3_integral", "j_integral",
    "k_closed", "k_eval", "k_series", "laguerre_kernel_erfc", "laguerre_kernel_expansion",
    "legendre_pair_integral", "neumann_adams_coeffs", "pair_distances",
    "potential_matrix_element", "ts_polynomials",
]
