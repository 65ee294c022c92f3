"""Incremental weak-constraint 4D-Var linear systems: Lorenz 96 operators,
Krylov solvers, dense spectra and eigenvalue bounds."""

from .bounds import (BoundsReport, Interval, bounds_a1, bounds_a2, bounds_a3, bounds_an,
                     check_containment, individual_bounds, monotonicity_report)
from .covariance import BlockDiagCovariance, CovarianceSpec, build_D, build_R, sample_gaussian, soar_matrix
from .krylov import SolveLog, SolverConfig, cg, minres
from .lorenz96 import ModelConfig, Trajectory, adjoint_apply, integrate, rk4_step, tendency, tlm_apply
from .operators import (BlockOperators, Formulation, ObservationNetwork, SystemInstance,
                        assemble_dense, make_system, recover_increment)
from .spectral import SpectralSummary, Spectrum, extreme_singular_values, inertia, summarize, sym_eig

__version__ = "0.1.0"
