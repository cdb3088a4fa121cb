"""
Weak-noise perturbation theory for the escape rate of noisy 1-D maps.

The leading eigenvalue of the evolution operator of ``x -> f(x) + sigma xi``
is expanded as ``nu_0 + nu_2 sigma**2 + nu_4 sigma**4 + ...`` by a cycle
expansion of the spectral determinant built from polynomial-basis matrix
representations of the operator along periodic orbits, and checked against
direct finite-noise discretizations.
"""
from .errors import *  # noqa: F401,F403
from .series import Jet, SigmaSeries, jet_compose, jet_fractional_power, jet_invert, jet_mul, jet_pow, sigma_mul
from .maps import MapSpec, branch_inverse_jet, check_hyperbolic, linear_map, polynomial_map, quartic_map
from .cycles import PrimeCycle, enumerate_prime_itineraries, locate_cycle, locate_cycles
from .operators import BMatrix, LMatrix, NoiseKernel, build_B, build_L, kernel_moments
from .spectral import (
    CumulantTable,
    DetCoeffs,
    EigenExpansion,
    MatrixSizes,
    TraceTable,
    assemble_traces,
    cumulants,
    cycle_trace,
    det_coeffs,
    euler_cumulants,
    find_z0,
    nu_expansion,
    perturbative_expansion,
    solve_z_series,
)
from .direct import (
    DirectMatrix,
    asymptotic_ratio_fit,
    compare_curves,
    lattice_eigenvalue,
    leading_eigenvalue,
    nystrom_eigenvalue,
    quadrature_matrix,
)

__version__ = "0.1.0"
