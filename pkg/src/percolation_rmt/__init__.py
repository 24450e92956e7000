"""Random matrices built on long-range percolation graphs.

Sampling, eigenvalue statistics, Stieltjes transforms, the finite-n
self-consistent system, cumulant expansion checks and band-width scans.
"""

from .ensemble import EnsembleParams, SampledMatrix, sample_matrix, wigner_reference
from .entries import EntryDistribution, make_distribution, parse_distribution
from .kernels import Kernel, make_kernel, parse_kernel
from .resolvent import semicircle_stieltjes, solve_finite_system
from .spectra import Spectrum, eigenvalues, ks_distance

__version__ = "0.1.0"

__all__ = [
    "EnsembleParams",
    "EntryDistribution",
    "Kernel",
    "SampledMatrix",
    "Spectrum",
    "eigenvalues",
    "ks_distance",
    "make_distribution",
    "make_kernel",
    "parse_distribution",
    "parse_kernel",
    "sample_matrix",
    "semicircle_stieltjes",
    "solve_finite_system",
    "wigner_reference",
]
