"""Reduced GLT matrix sequences on subdomains of the unit hypercube."""

from .multiindex import GridSize, delinearize, iter_range, lex_compare, linearize
from .functions import CoefficientFn, Stencil
from .domain import Domain, GridMask, boundary_band_count, grid_points, mask, measure_estimate, near_boundary_points
from .glt_core import (ConjTranspose, DiagD, DiagI, GltExpr, Product, Reduce, Scaled, Sum, Toeplitz, Zero,
                       build_matrix, derive_symbol, diag_sampling_D, diag_sampling_I, toeplitz)
from .reduction import Projector, expand, projector_gram_checks, restrict, restricted_grid_equivalence, zero_out
from .spectra import (SpectralSample, eigvals_general, eigvals_hermitian, matrix_function, pseudoinverse,
                      singvals)
from .symbols import (DistributionReport, SeparableSymbol, acs_p, compare_distributions, dacs_estimate, pmea,
                      sample_symbol, verify_lambda, verify_sigma, zero_distribution_score)
from .fd_sw import SWProblem, assemble_sw, neighbor_fraction, sw_skew_norm_report, sw_symbol
from .fe_p1 import P1Problem, assemble_p1, fe_symbol_square, fe_symbol_subdomain, map_coefficients, masked_nodes

__version__ = "0.1.0"
