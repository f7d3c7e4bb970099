"""Model problems on the unit square.

Interior unknowns are numbered lexicographically, row-major by ``y`` then
``x``: unknown ``(i, j)`` with ``x = i*h``, ``y = j*h`` (``1 <= i, j <= N-1``)
has index ``(j-1)*(N-1) + (i-1)``.  Reshaping a vector to ``(N-1, N-1)``
therefore gives one row per constant ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .linalg import SparseMatrix

__all__ = [
    "GridSpec",
    "ModelProblem",
    "assemble_poisson_5pt",
    "figure1_components",
    "figure1_initial_guess",
    "manufactured_poisson",
    "homogeneous_poisson",
    "poisson_eigenvector",
    "poisson_eigenvalue",
    "consistent_load",
    "continuum_energy_error",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with mesh size ``h = 1/N`` on the unit square."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"invalid grid: N must be an integer >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def mesh_size_h(self):
        return 1.0 / self.N

    h = mesh_size_h

    @property
    def interior_points_per_side(self):
        return self.N - 1

    @property
    def n_unknowns(self):
        return (self.N - 1) ** 2

    def coarsen(self):
        if self.N % 2:
            raise ValueError(f"non-nested grids: N={self.N} cannot be halved")
        return GridSpec(self.N // 2)

    def nodes(self):
        """Coordinates ``(x, y)`` of the interior nodes in unknown order."""
        t = np.arange(1, self.N) * self.mesh_size_h
        Y, X = np.meshgrid(t, t, indexing="ij")
        return X.ravel(), Y.ravel()

    def as_grid(self, v):
        """Reshape an unknown vector to ``(N-1, N-1)``, one row per ``y``."""
        m = self.N - 1
        return np.asarray(v).reshape(m, m)


@dataclass(frozen=True)
class ModelProblem:
    grid: GridSpec
    matrix: SparseMatrix
    source: np.ndarray
    exact_u: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default=None)
    #: ``-Laplace(exact_u)`` as a function, when known
    load_function: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default=None)
    #: ``int |grad exact_u|^2`` over the unit square, when known
    exact_energy_sq: Optional[float] = None

    def sampled_exact(self):
        """The continuous solution evaluated at the interior nodes."""
        if self.exact_u is None:
            raise ValueError("problem has no exact solution attached")
        return self.exact_u(*self.grid.nodes())


def _laplacian_1d(m):
    return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(m, m))


def assemble_poisson_5pt(grid):
    """Five-point Poisson stiffness matrix (diagonal 4, neighbours -1).

    Homogeneous Dirichlet boundary: rows next to the boundary simply lack the
    out-of-domain neighbours.  No ``1/h^2`` factor is applied.
    """
    m = grid.interior_points_per_side
    T = _laplacian_1d(m)
    eye = sp.identity(m)
    A = sp.kron(eye, T) + sp.kron(T, eye)
    return SparseMatrix.from_scipy(A.tocsr(), symmetric=True)


def poisson_eigenvalue(grid, p, q):
    """Closed-form eigenvalue ``4 - 2cos(p pi h) - 2cos(q pi h)``."""
    h = grid.mesh_size_h
    return 4.0 - 2.0 * np.cos(p * np.pi * h) - 2.0 * np.cos(q * np.pi * h)


def poisson_eigenvector(grid, p, q, normalize=True):
    """Discrete eigenvector ``sin(p pi x) sin(q pi y)`` of the 5-point matrix."""
    x, y = grid.nodes()
    w = np.sin(p * np.pi * x) * np.sin(q * np.pi * y)
    if normalize:
        w /= np.linalg.norm(w)
    return w


def figure1_components(grid, seed=42):
    """Unscaled smooth/oscillatory part and noise part of the smoothing demo guess.

    Returns ``(structured, noise)`` where ``structured`` is
    ``sin(1.4x+0.1) sin(1.4y+0.1) (1 + sin(17x-2) sin(9y))`` and ``noise`` is
    ``0.7 * U[0, 1)`` drawn node by node in unknown order from
    ``numpy.random.default_rng(seed)``.
    """
    x, y = grid.nodes()
    structured = (np.sin(1.4 * x + 0.1) * np.sin(1.4 * y + 0.1)
                  * (1.0 + np.sin(17.0 * x - 2.0) * np.sin(9.0 * y)))
    rng = np.random.default_rng(seed)
    noise = 0.7 * rng.random(grid.n_unknowns)
    return structured, noise


def figure1_initial_guess(grid, seed=42):
    """Composite initial error scaled so that its maximum absolute entry is 1."""
    structured, noise = figure1_components(grid, seed)
    raw = structured + noise
    return raw / np.abs(raw).max()


def _sin_sin(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def manufactured_poisson(grid):
    """Poisson problem with exact solution ``sin(pi x) sin(pi y)``.

    The load is ``h^2 * 2 pi^2 sin(pi x) sin(pi y)`` at each node, matching
    the unscaled stencil.
    """
    x, y = grid.nodes()
    h = grid.mesh_size_h
    f = h * h * 2.0 * np.pi ** 2 * _sin_sin(x, y)
    return ModelProblem(grid, assemble_poisson_5pt(grid), f, _sin_sin,
                        load_function=lambda x, y: 2.0 * np.pi ** 2 * _sin_sin(x, y),
                        exact_energy_sq=np.pi ** 2 / 2.0)


def homogeneous_poisson(grid):
    """Poisson problem with zero source; the exact solution is zero."""
    return ModelProblem(grid, assemble_poisson_5pt(grid), np.zeros(grid.n_unknowns),
                        lambda x, y: np.zeros_like(x))


def _triangle_rule(n):
    """Collapsed Gauss-Legendre rule on the reference triangle.

    Returns barycentric points ``(m, 3)`` and weights summing to 1.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    s = np.repeat(x, n)
    t = np.tile(x, n) * (1.0 - s)
    weights = 2.0 * np.outer(w, w).ravel() * (1.0 - s)
    return np.stack([1.0 - s - t, s, t], axis=1), weights


# each cell is split along its (0,0)-(1,1) diagonal; P1 elements on this mesh
# reproduce the 5-point stiffness matrix
_CELL_TRIANGLES = (((0, 0), (1, 0), (1, 1)), ((0, 0), (1, 1), (0, 1)))


def consistent_load(grid, f, order=6):
    """Finite element load ``F_i = int f phi_i`` for P1 hat functions ``phi_i``."""
    N = grid.N
    h = grid.mesh_size_h
    bary, weights = _triangle_rule(order)
    area = 0.5 * h * h
    F = np.zeros((N + 1, N + 1))
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    for tri in _CELL_TRIANGLES:
        verts = [(I + a, J + b) for a, b in tri]
        xq = sum(bary[:, k] * (h * verts[k][0][..., None]) for k in range(3))
        yq = sum(bary[:, k] * (h * verts[k][1][..., None]) for k in range(3))
        fq = f(xq, yq) * weights
        for k in range(3):
            np.add.at(F, verts[k], area * (fq * bary[:, k]).sum(axis=-1))
    # F is indexed [x, y]; unknown order is row-major by y
    return F[1:N, 1:N].T.ravel()


def continuum_energy_error(problem, u_h, order=6):
    """Energy-norm distance between the PDE solution and a discrete P1 function.

    Uses ``|u - u_h|_a^2 = |u|_a^2 - 2 int f u_h + u_h^t L u_h``, valid for
    any nodal vector ``u_h`` because ``a(u, phi_i) = int f phi_i``.
    """
    if problem.load_function is None or problem.exact_energy_sq is None:
        raise ValueError("problem lacks the continuum data for an energy error")
    u_h = np.asarray(u_h, dtype=np.float64)
    F = consistent_load(problem.grid, problem.load_function, order)
    sq = problem.exact_energy_sq - 2.0 * F @ u_h + u_h @ (problem.matrix.tocsr() @ u_h)
    return float(np.sqrt(max(sq, 0.0)))
