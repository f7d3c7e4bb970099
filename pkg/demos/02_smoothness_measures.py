"""Weak and strong measures of eigenmodes and of random vectors.

For eigenvectors both measures equal lambda / lambda_max; for mixtures the
strong measure is larger.  The identities linking the measures to one
Richardson step are checked on each vector.
"""
import numpy as np

from varmg.diagnostics import relaxation_identity_check
from varmg.problems import GridSpec, figure1_initial_guess, homogeneous_poisson, poisson_eigenvector
from varmg.transfer import build_hierarchy

grid = GridSpec(16)
level = build_hierarchy(homogeneous_poisson(grid), coarsest_N=16).finest
rng = np.random.default_rng(0)

vectors = {
    "mode (1,1)": poisson_eigenvector(grid, 1, 1),
    "mode (8,8)": poisson_eigenvector(grid, 8, 8),
    "mode (15,15)": poisson_eigenvector(grid, 15, 15),
    "low + high": poisson_eigenvector(grid, 1, 1) + poisson_eigenvector(grid, 15, 15),
    "white noise": rng.standard_normal(grid.n_unknowns),
    "rough guess": figure1_initial_guess(grid),
}

print(f"{'vector':14s} {'M_w':>8s} {'M_s':>8s} {'|Ge|^2/|e|^2':>13s} {'energy':>8s}  identities")
for name, e in vectors.items():
    r = relaxation_identity_check(level, e)
    print(f"{name:14s} {r.m_weak:8.5f} {r.m_strong:8.5f} {r.euclidean_factor_sq:13.5f} "
          f"{r.energy_factor_sq:8.5f}  {'ok' if r.holds() else 'VIOLATED'}")
