"""Geometric multigrid for the 2D Poisson model problem, with variational
coarse-grid correction and measures of algebraic smoothness."""

from .cycles import CycleParams, SolveReport, fmg_solve, img_solve, mg_cycle, two_grid_cycle, v_cycle, w_cycle
from .diagnostics import (
    SaturationFit,
    SmoothnessReport,
    asymptotic_convergence_factor,
    cycles_needed,
    energy_functional,
    estimate_saturation,
    identity_audit,
    relaxation_identity_check,
    strong_measure,
    weak_measure,
)
from .linalg import ShapeError, SparseMatrix, SpectralEstimate, estimate_spectral_norm, spmv
from .problems import GridSpec, ModelProblem, assemble_poisson_5pt, figure1_initial_guess, manufactured_poisson
from .smoother import SmootherConfig, relax
from .transfer import Hierarchy, Level, WorkCounter, build_hierarchy, coarse_grid_correction

__version__ = "0.1.0"
