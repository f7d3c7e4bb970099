"""Sparse and dense kernels shared by every level of the hierarchy.

Matrices are held in canonical CSR form (sorted column indices, no
duplicates, no explicit zeros) by :class:`SparseMatrix`; grid functions are
plain 1-D ``float64`` numpy arrays.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "ShapeError",
    "SparseMatrix",
    "SpectralEstimate",
    "CholeskySolver",
    "as_vector",
    "spmv",
    "dot",
    "energy_inner",
    "energy_norm",
    "estimate_spectral_norm",
    "gershgorin_bound",
    "dense_solve",
    "set_threads",
    "get_threads",
    "DIRECT_SOLVE_CAP",
]

#: Default cap on the number of unknowns accepted by :func:`dense_solve`.
DIRECT_SOLVE_CAP = 4096

SYMMETRY_RTOL = 1e-12

_threads = 1
_PARALLEL_MIN_ROWS = 4096


class ShapeError(ValueError):
    """Operand dimensions do not conform."""


def set_threads(n):
    """Set the number of threads used by :func:`spmv` (1 = sequential)."""
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads():
    return _threads


class SparseMatrix:
    """Immutable CSR matrix in canonical form.

    Parameters
    ----------
    row_offsets, col_indices, values : array_like
        Standard CSR arrays.  They are validated and canonicalized: duplicate
        entries are summed, explicit zeros dropped, columns sorted per row.
    shape : tuple of int
        ``(n_rows, n_cols)``.
    symmetric : bool, optional
        Symmetry flag.  When omitted it is determined with
        :meth:`check_symmetric`.  Passing ``True`` for a matrix that is not
        symmetric raises ``ValueError``.
    """

    __slots__ = ("_csr", "symmetric", "_blocks", "__weakref__")

    def __init__(self, row_offsets, col_indices, values, shape, symmetric=None):
        n_rows, n_cols = (int(s) for s in shape)
        if n_rows < 1 or n_cols < 1:
            raise ShapeError("shape: matrix dimensions must be positive")
        row_offsets = np.asarray(row_offsets, dtype=np.int64)
        col_indices = np.asarray(col_indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if row_offsets.shape != (n_rows + 1,):
            raise ShapeError("shape: row_offsets must have length n_rows + 1")
        if col_indices.shape != values.shape or col_indices.ndim != 1:
            raise ShapeError("shape: col_indices and values must match")
        if row_offsets[0] != 0 or row_offsets[-1] != len(values):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(row_offsets) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if len(col_indices) and (col_indices.min() < 0 or col_indices.max() >= n_cols):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix values must be finite")
        csr = sp.csr_matrix((values, col_indices, row_offsets), shape=(n_rows, n_cols))
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        csr.indptr = csr.indptr.astype(np.int64, copy=False)
        csr.indices = csr.indices.astype(np.int64, copy=False)
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr
        self._blocks = {}
        is_sym = self.check_symmetric()
        if symmetric is None:
            symmetric = is_sym
        elif symmetric and not is_sym:
            raise ValueError("matrix flagged symmetric but is not")
        self.symmetric = bool(symmetric)

    @classmethod
    def from_scipy(cls, A, symmetric=None):
        A = sp.csr_matrix(A, dtype=np.float64)
        return cls(A.indptr, A.indices, A.data, A.shape, symmetric=symmetric)

    @classmethod
    def from_coo(cls, rows, cols, values, shape, symmetric=None):
        """Assemble from triplets; duplicates are summed."""
        A = sp.coo_matrix((values, (rows, cols)), shape=shape, dtype=np.float64)
        return cls.from_scipy(A.tocsr(), symmetric=symmetric)

    @classmethod
    def from_dense(cls, array, symmetric=None):
        return cls.from_scipy(sp.csr_matrix(np.asarray(array, dtype=np.float64)),
                              symmetric=symmetric)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n + 1), np.arange(n), np.ones(n), (n, n), symmetric=True)

    @property
    def shape(self):
        return self._csr.shape

    @property
    def n_rows(self):
        return self._csr.shape[0]

    @property
    def n_cols(self):
        return self._csr.shape[1]

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def row_offsets(self):
        return self._csr.indptr

    @property
    def col_indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    def tocsr(self):
        """The underlying read-only scipy CSR matrix."""
        return self._csr

    def toarray(self):
        return self._csr.toarray()

    def diagonal(self):
        return self._csr.diagonal()

    def transpose(self):
        return SparseMatrix.from_scipy(self._csr.T.tocsr(), symmetric=self.symmetric)

    @property
    def T(self):
        return self.transpose()

    def scaled(self, c):
        """Return ``c * self``."""
        return SparseMatrix(self.row_offsets, self.col_indices, c * self.values,
                            self.shape, symmetric=self.symmetric)

    def max_abs(self):
        return float(np.abs(self.values).max()) if self.nnz else 0.0

    def check_symmetric(self, rtol=SYMMETRY_RTOL):
        """Whether every stored ``(i, j, v)`` has a mirror ``(j, i)`` equal within ``rtol``."""
        A = self._csr
        if A.shape[0] != A.shape[1]:
            return False
        At = A.T.tocsr()
        gap = abs(A - At) - rtol * abs(A).maximum(abs(At))
        return gap.nnz == 0 or gap.data.max() <= 0.0

    def row_blocks(self, n):
        """Row-partitioned sub-matrices used for threaded SpMV (cached)."""
        if n not in self._blocks:
            edges = np.linspace(0, self.n_rows, n + 1).astype(int)
            self._blocks[n] = [(lo, hi, self._csr[lo:hi]) for lo, hi in zip(edges, edges[1:])]
        return self._blocks[n]

    def __matmul__(self, x):
        return spmv(self, x)

    def __repr__(self):
        return (f"SparseMatrix(shape={self.shape}, nnz={self.nnz}, "
                f"symmetric={self.symmetric})")


@dataclass(frozen=True)
class SpectralEstimate:
    """Estimate of ``||A||_2 = lambda_max`` for a symmetric matrix.

    ``method`` is one of ``"power_iteration"``, ``"lanczos"``, ``"dense"`` or
    ``"gershgorin_bound"``; only the last is a guaranteed upper bound.
    """

    lambda_max: float
    iterations_used: int
    residual_tol_achieved: float
    method: str

    def to_dict(self):
        return {
            "lambda_max": self.lambda_max,
            "iterations_used": self.iterations_used,
            "residual_tol_achieved": self.residual_tol_achieved,
            "method": self.method,
        }


def as_vector(x, n=None, name="vector"):
    """Return ``x`` as a finite 1-D float64 array, optionally of length ``n``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"shape: {name} must be one-dimensional")
    if n is not None and x.shape[0] != n:
        raise ShapeError(f"shape: {name} has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def _csr(A):
    if isinstance(A, SparseMatrix):
        return A.tocsr()
    return sp.csr_matrix(A)


def spmv(A, x):
    """Sparse matrix-vector product ``y = A x``.

    Each row is accumulated left to right over its sorted columns, so the
    threaded path returns bitwise the same result as the sequential one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ShapeError(f"shape: cannot multiply {A.shape} matrix by vector of "
                         f"shape {x.shape}")
    if _threads > 1 and isinstance(A, SparseMatrix) and A.n_rows >= _PARALLEL_MIN_ROWS:
        y = np.empty(A.n_rows)
        blocks = A.row_blocks(_threads)

        def work(block):
            lo, hi, sub = block
            y[lo:hi] = sub @ x

        with concurrent.futures.ThreadPoolExecutor(_threads) as pool:
            list(pool.map(work, blocks))
        return y
    return _csr(A) @ x


def dot(x, y):
    """Euclidean inner product."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"shape: dot of {x.shape} and {y.shape}")
    return float(np.dot(x, y))


def energy_inner(A, x, y):
    """Energy inner product ``<A x, y>`` for symmetric ``A``."""
    if isinstance(A, SparseMatrix) and not A.symmetric:
        raise ValueError("energy inner product requires symmetric matrix")
    return dot(spmv(A, x), y)


def energy_norm(A, x):
    return float(np.sqrt(max(energy_inner(A, x, x), 0.0)))


def gershgorin_bound(A):
    """``max_i sum_j |A_ij|``, an upper bound on the spectral radius."""
    absA = abs(_csr(A))
    return float(np.asarray(absA.sum(axis=1)).max())


def estimate_spectral_norm(A, tol=1e-10, max_iter=5000, method="lanczos"):
    """Estimate the largest eigenvalue of a symmetric matrix.

    Parameters
    ----------
    A : SparseMatrix
        Symmetric, nonzero matrix.
    tol : float
        Relative accuracy target for the Rayleigh quotient.
    max_iter : int
        Iteration cap (matrix-vector products).
    method : {"lanczos", "power"}
        ``"power"`` runs power iteration from a normalized, deterministically
        jittered all-ones vector.
        It stops once successive Rayleigh quotients differ relatively by at
        most ``tol`` *and* the geometric extrapolation of the remaining error
        ``delta_k * r / (1 - r)`` (``r`` the ratio of successive differences)
        is also below ``tol``.  ``"lanczos"`` uses ARPACK from the same start
        vector.  Matrices with at most 8 rows are handled densely.

    Returns
    -------
    SpectralEstimate
        Falls back to :func:`gershgorin_bound` when the iteration does not
        reach ``tol`` within ``max_iter``.
    """
    if isinstance(A, SparseMatrix) and not A.symmetric:
        raise ValueError("spectral norm estimate requires symmetric matrix")
    csr = _csr(A)
    if csr.shape[0] != csr.shape[1]:
        raise ShapeError("shape: spectral norm needs a square matrix")
    if csr.nnz == 0 or not np.any(csr.data):
        raise ValueError("singular norm: zero matrix")
    n = csr.shape[0]
    if n <= 8:
        lam = float(np.abs(np.linalg.eigvalsh(csr.toarray())).max())
        return SpectralEstimate(lam, 0, 0.0, "dense")
    if method == "power":
        est = _power_iteration(csr, tol, max_iter)
    elif method == "lanczos":
        est = _lanczos(csr, tol, max_iter)
    else:
        raise ValueError(f"unknown spectral method {method!r}")
    if est is None:
        return SpectralEstimate(gershgorin_bound(csr), max_iter, np.inf, "gershgorin_bound")
    return est


def _start_vector(n):
    # all ones is orthogonal to the top eigenvector of reflection-symmetric
    # operators such as 1D Poisson with an even number of points, so perturb
    # it with a fixed-seed positive jitter
    x = 1.0 + 0.5 * np.random.default_rng(0).random(n)
    return x / np.linalg.norm(x)


def _power_iteration(csr, tol, max_iter):
    x = _start_vector(csr.shape[0])
    theta = 0.0
    delta_prev = None
    for k in range(1, max_iter + 1):
        y = csr @ x
        theta_new = float(x @ y)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return None
        x = y / ynorm
        delta = abs(theta_new - theta) / abs(theta_new)
        theta = theta_new
        if delta == 0.0:
            return SpectralEstimate(abs(theta), k, 0.0, "power_iteration")
        if delta <= tol and delta_prev is not None:
            ratio = delta / delta_prev
            err = delta * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
            if err <= tol:
                return SpectralEstimate(abs(theta), k, max(delta, err), "power_iteration")
        delta_prev = delta
    return None


def _lanczos(csr, tol, max_iter):
    n = csr.shape[0]
    count = [0]

    def matvec(v):
        count[0] += 1
        return csr @ np.ravel(v)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    v0 = _start_vector(n)
    try:
        vals, vecs = spla.eigsh(op, k=1, which="LA", v0=v0, tol=tol,
                                maxiter=max_iter, ncv=min(n, 24))
    except spla.ArpackNoConvergence:
        return None
    lam = float(vals[0])
    w = vecs[:, 0]
    resid = float(np.linalg.norm(csr @ w - lam * w) / abs(lam))
    return SpectralEstimate(abs(lam), count[0], resid, "lanczos")


class CholeskySolver:
    """Dense Cholesky factorization of an SPD matrix, reusable across solves."""

    def __init__(self, A, max_size=DIRECT_SOLVE_CAP):
        n = A.shape[0]
        if A.shape[0] != A.shape[1]:
            raise ShapeError("shape: direct solve needs a square matrix")
        if n > max_size:
            raise ValueError(f"matrix with {n} unknowns too large for direct solve "
                             f"(cap {max_size})")
        dense = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=np.float64)
        try:
            self._factor = scipy.linalg.cho_factor(dense, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("matrix not positive definite") from exc
        self.n = n

    def solve(self, b):
        b = as_vector(b, self.n, "right-hand side")
        return scipy.linalg.cho_solve(self._factor, b)


def dense_solve(A, b, max_size=DIRECT_SOLVE_CAP):
    """Solve ``A x = b`` for SPD ``A`` by dense Cholesky factorization."""
    b = as_vector(b, A.shape[0], "right-hand side")
    return CholeskySolver(A, max_size=max_size).solve(b)
