"""Intergrid transfers, Galerkin coarse operators and the grid hierarchy."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .linalg import (
    CholeskySolver,
    ShapeError,
    SparseMatrix,
    SpectralEstimate,
    as_vector,
    estimate_spectral_norm,
    spmv,
)
from .problems import GridSpec

__all__ = [
    "Level",
    "Hierarchy",
    "WorkCounter",
    "bilinear_prolongation",
    "galerkin_coarse_operator",
    "build_hierarchy",
    "coarse_grid_correction",
    "spd_probe",
]

DROP_TOL = 1e-14


def _prolongation_1d(n_coarse):
    """Linear interpolation from ``n_coarse - 1`` to ``2 n_coarse - 1`` interior points."""
    mc = n_coarse - 1
    cols = np.repeat(np.arange(mc), 3)
    rows = (2 * cols + np.tile([0, 1, 2], mc))
    vals = np.tile([0.5, 1.0, 0.5], mc)
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * n_coarse - 1, mc))


def bilinear_prolongation(coarse, fine):
    """Bilinear (9-point) interpolation from ``coarse`` to ``fine``.

    Fine nodes coinciding with a coarse node take weight 1, nodes on a
    coarse edge 1/2 from each end, cell centres 1/4 from each corner.
    Contributions from boundary nodes are dropped (their values are zero).
    """
    if fine.N != 2 * coarse.N:
        raise ValueError(f"non-nested grids: fine N={fine.N}, coarse N={coarse.N}")
    p = _prolongation_1d(coarse.N)
    return SparseMatrix.from_scipy(sp.kron(p, p).tocsr(), symmetric=False)


def galerkin_coarse_operator(P, L_fine, alpha=1.0):
    """Coarse operator ``alpha * P^t L P`` in canonical CSR form.

    Computed as ``L P`` followed by ``P^t (L P)``; entries smaller than
    ``1e-14`` times their row's largest magnitude are dropped.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if L_fine.shape[0] != L_fine.shape[1] or L_fine.shape[1] != P.shape[0]:
        raise ShapeError(f"shape: P {P.shape} does not conform with L {L_fine.shape}")
    if isinstance(L_fine, SparseMatrix) and not L_fine.symmetric:
        raise ValueError("galerkin product requires symmetric fine operator")
    Pc = P.tocsr() if isinstance(P, SparseMatrix) else sp.csr_matrix(P)
    Lc = L_fine.tocsr() if isinstance(L_fine, SparseMatrix) else sp.csr_matrix(L_fine)
    LP = (Lc @ Pc).tocsr()
    C = (Pc.T.tocsr() @ LP).tocsr()
    if alpha != 1.0:
        C = alpha * C
    C = _drop_small(C)
    result = SparseMatrix.from_scipy(C)
    if not result.symmetric:
        raise ValueError("galerkin asymmetry: coarse operator is not symmetric")
    return result


def _drop_small(C):
    C = C.tocsr()
    C.sum_duplicates()
    rowmax = abs(C).max(axis=1).toarray().ravel()
    row_of = np.repeat(np.arange(C.shape[0]), np.diff(C.indptr))
    C.data[np.abs(C.data) < DROP_TOL * rowmax[row_of]] = 0.0
    C.eliminate_zeros()
    return C


def spd_probe(A, n_probes=100, seed=0):
    """Smallest Rayleigh quotient ``<Ax,x>/<x,x>`` over random probe vectors."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((A.shape[0], n_probes))
    AX = A.tocsr() @ X
    return float(np.min(np.sum(AX * X, axis=0) / np.sum(X * X, axis=0)))


@dataclass(frozen=True)
class Level:
    """One level of the hierarchy.

    ``prolongation_to_here`` maps the next coarser level onto this one and
    ``restriction_from_here = alpha * prolongation_to_here^t`` maps this
    level's residuals down.  Both are ``None`` on the coarsest level.
    """

    index: int
    grid: GridSpec
    operator: SparseMatrix
    spectral: SpectralEstimate
    prolongation_to_here: Optional[SparseMatrix] = None
    restriction_from_here: Optional[SparseMatrix] = None
    alpha: float = 1.0

    @classmethod
    def single(cls, operator, grid=None, lambda_max=None, spectral_method="lanczos"):
        """A stand-alone level, optionally with a known ``lambda_max``."""
        if lambda_max is None:
            spectral = estimate_spectral_norm(operator, method=spectral_method)
        else:
            spectral = SpectralEstimate(float(lambda_max), 0, 0.0, "exact")
        return cls(0, grid, operator, spectral)

    @property
    def n(self):
        return self.operator.n_rows

    @property
    def nnz(self):
        return self.operator.nnz

    @property
    def lambda_max(self):
        return self.spectral.lambda_max

    @property
    def is_coarsest(self):
        return self.prolongation_to_here is None

    @cached_property
    def diagonal(self):
        return self.operator.diagonal()

    @cached_property
    def direct_solver(self):
        return CholeskySolver(self.operator)

    def apply(self, x):
        return spmv(self.operator, x)

    def residual(self, v, g):
        """``L v - g``."""
        return spmv(self.operator, v) - g

    def restrict(self, r):
        return spmv(self.restriction_from_here, r)

    def prolong(self, w):
        return spmv(self.prolongation_to_here, w)

    def check_invariants(self, atol=1e-14, n_probes=100):
        """Raise ``AssertionError`` when a :class:`Level` invariant fails."""
        if self.prolongation_to_here is not None:
            R = self.restriction_from_here.toarray()
            Pt = self.prolongation_to_here.toarray().T
            if not np.allclose(R, self.alpha * Pt, rtol=0.0, atol=atol):
                raise AssertionError("restriction is not alpha * P^t")
        if not self.operator.symmetric:
            raise AssertionError("operator not symmetric")
        if spd_probe(self.operator, n_probes) <= 0.0:
            raise AssertionError("operator failed the SPD probe")


@dataclass(frozen=True)
class Hierarchy:
    """Levels ordered from finest (index 0) to coarsest."""

    levels: tuple
    alpha: float = 1.0

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]

    def __iter__(self):
        return iter(self.levels)

    @property
    def finest(self):
        return self.levels[0]

    @property
    def coarsest(self):
        return self.levels[-1]

    def nnz_ratios(self):
        """``nnz_l / nnz_0`` per level."""
        base = self.levels[0].nnz
        return [lvl.nnz / base for lvl in self.levels]

    def restrict_source(self, f):
        """Per-level sources obtained by repeated restriction of ``f``."""
        sources = [as_vector(f, self.finest.n, "source")]
        for lvl in self.levels[:-1]:
            sources.append(lvl.restrict(sources[-1]))
        return sources

    def manifest(self):
        return {
            "level_count": len(self.levels),
            "N": [lvl.grid.N for lvl in self.levels],
            "n_unknowns": [lvl.n for lvl in self.levels],
            "nnz": [lvl.nnz for lvl in self.levels],
            "alpha": self.alpha,
            "lambda_max": [lvl.lambda_max for lvl in self.levels],
            "spectral_method": [lvl.spectral.method for lvl in self.levels],
        }


def build_hierarchy(problem, coarsest_N=2, alpha=1.0, spectral_method="lanczos",
                    spectral_tol=1e-10, spectral_max_iter=5000):
    """Build the Galerkin hierarchy below ``problem.matrix``.

    Parameters
    ----------
    problem : ModelProblem
        Supplies the finest grid and operator.
    coarsest_N : int
        ``N`` of the coarsest grid; ``problem.grid.N / coarsest_N`` must be a
        power of two.
    alpha : float
        Restriction scaling, ``R = alpha * P^t``.
    spectral_method : {"lanczos", "power"}
        How each level's ``lambda_max`` is estimated (once, at build time).
    """
    N = problem.grid.N
    if coarsest_N < 2 or N % coarsest_N:
        raise ValueError(f"non-nested: N={N} is not coarsest_N={coarsest_N} times 2^m")
    ratio = N // coarsest_N
    if ratio & (ratio - 1):
        raise ValueError(f"non-nested: N/coarsest_N = {ratio} is not a power of two")
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def spectral(A):
        return estimate_spectral_norm(A, spectral_tol, spectral_max_iter, spectral_method)

    grids = [problem.grid]
    while grids[-1].N > coarsest_N:
        grids.append(grids[-1].coarsen())
    operators = [problem.matrix]
    prolongations = []
    for fine, coarse in zip(grids, grids[1:]):
        P = bilinear_prolongation(coarse, fine)
        prolongations.append(P)
        operators.append(galerkin_coarse_operator(P, operators[-1], alpha))
    levels = []
    for i, (grid, A) in enumerate(zip(grids, operators)):
        P = prolongations[i] if i < len(prolongations) else None
        R = P.transpose().scaled(alpha) if P is not None else None
        levels.append(Level(i, grid, A, spectral(A), P, R, alpha))
    return Hierarchy(tuple(levels), alpha)


class WorkCounter:
    """Accumulates cost in work units (1 WU = ``nnz`` of the finest operator)."""

    def __init__(self, finest_nnz):
        self.finest_nnz = float(finest_nnz)
        self.nonzeros = 0.0

    def charge(self, level, applications=1):
        self.nonzeros += applications * level.nnz

    def charge_dense_solve(self, n):
        # forward and back substitution with a cached factor
        self.nonzeros += float(n) * n

    @property
    def units(self):
        return self.nonzeros / self.finest_nnz


def _default_coarse_solver(coarse):
    return coarse.direct_solver.solve


def coarse_grid_correction(fine, coarse, v, g, coarse_solver=None):
    """Energy-minimizing coarse-grid correction ``v - P L_c^{-1} R (L v - g)``.

    ``coarse_solver`` maps a coarse right-hand side to a coarse solution; the
    default is an exact Cholesky solve with ``coarse.operator``.
    """
    if fine.prolongation_to_here is None:
        raise ValueError("fine level has no coarser level")
    v = as_vector(v, fine.n, "v")
    g = as_vector(g, fine.n, "g")
    solve = coarse_solver or _default_coarse_solver(coarse)
    g_coarse = fine.restrict(fine.residual(v, g))
    return v - fine.prolong(solve(g_coarse))
