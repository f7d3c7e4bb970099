"""Smoothness measures, the energy functional, and convergence/saturation estimates.

The measures use a level's cached ``lambda_max`` in place of ``||L||``, so
they can exceed 1 by the relative error of that estimate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import as_vector, dot, spmv
from .smoother import error_propagation_apply

__all__ = [
    "SmoothnessReport",
    "SaturationFit",
    "weak_measure",
    "strong_measure",
    "relaxation_identity_check",
    "identity_audit",
    "energy_functional",
    "asymptotic_convergence_factor",
    "estimate_saturation",
    "cycles_needed",
]


@dataclass(frozen=True)
class SmoothnessReport:
    """Measures of one error vector and its measured Richardson reduction.

    ``euclidean_factor_sq`` and ``energy_factor_sq`` are obtained by actually
    applying the error propagation matrix; the identities
    ``1 - (1 + xi) m_weak`` and ``1 - (1 + chi) m_strong`` should reproduce
    them.
    """

    m_weak: float
    m_strong: float
    xi: float
    chi: float
    euclidean_factor_sq: float
    energy_factor_sq: float

    @property
    def euclidean_identity_gap(self):
        return abs(self.euclidean_factor_sq - (1.0 - (1.0 + self.xi) * self.m_weak))

    @property
    def energy_identity_gap(self):
        return abs(self.energy_factor_sq - (1.0 - (1.0 + self.chi) * self.m_strong))

    def holds(self, tol=1e-10):
        """Both identities within ``tol``, ``m_weak <= m_strong`` and ``xi, chi`` in [0, 1)."""
        return (self.euclidean_identity_gap <= tol
                and self.energy_identity_gap <= tol
                and self.m_weak <= self.m_strong * (1.0 + tol)
                and -tol <= self.xi < 1.0
                and -tol <= self.chi < 1.0)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SaturationFit:
    """Least-squares fit ``error ~ C h^k`` in log space."""

    C: float
    k: float
    levels_used: int
    residual_of_fit: float

    def predict(self, h):
        return self.C * np.asarray(h, dtype=np.float64) ** self.k

    def to_dict(self):
        return asdict(self)


def _nonzero(e, n):
    e = as_vector(e, n, "e")
    ee = dot(e, e)
    if ee == 0.0:
        raise ValueError("undefined measure for the zero vector")
    return e, ee


def weak_measure(level, e):
    """``<L e, e> / (||L|| <e, e>)``: small for algebraically smooth ``e``."""
    e, ee = _nonzero(e, level.n)
    return dot(spmv(level.operator, e), e) / (level.lambda_max * ee)


def strong_measure(level, e):
    """``<L e, L e> / (||L|| <L e, e>)``; never smaller than :func:`weak_measure`."""
    e, _ = _nonzero(e, level.n)
    Le = spmv(level.operator, e)
    return dot(Le, Le) / (level.lambda_max * dot(Le, e))


def relaxation_identity_check(level, e):
    """Measure one Richardson step on ``e`` directly and via the measure identities."""
    e, ee = _nonzero(e, level.n)
    lam = level.lambda_max
    L = level.operator
    Le = spmv(L, e)
    LLe = spmv(L, Le)
    eLe = dot(Le, e)
    LeLe = dot(Le, Le)
    m_weak = eLe / (lam * ee)
    m_strong = LeLe / (lam * eLe)
    # the factors expand to 1 - 2 m + (squared term); xi and chi are the
    # squared terms' deficits relative to m, normalized by m
    xi = 1.0 - m_strong
    chi = 1.0 - dot(LLe, Le) / (lam * LeLe)
    Ge = error_propagation_apply(level, e)
    euclid = dot(Ge, Ge) / ee
    energy = dot(spmv(L, Ge), Ge) / eLe
    return SmoothnessReport(m_weak, m_strong, xi, chi, euclid, energy)


def identity_audit(level, n_samples=1000, seed=0, tol=1e-10):
    """Run :func:`relaxation_identity_check` on random vectors; return ``(passed, failed)``."""
    rng = np.random.default_rng(seed)
    passed = 0
    for _ in range(n_samples):
        e = rng.standard_normal(level.n)
        if relaxation_identity_check(level, e).holds(tol):
            passed += 1
    return passed, n_samples - passed


def energy_functional(level, v, g):
    """``E(v) = <L v, v> - 2 <v, g>``; ``level`` may be a Level or a matrix."""
    L = getattr(level, "operator", level)
    v = as_vector(v, L.shape[0], "v")
    g = as_vector(g, L.shape[0], "g")
    return dot(spmv(L, v), v) - 2.0 * dot(v, g)


def asymptotic_convergence_factor(history):
    """Geometric mean of the last ``max(3, len // 3)`` successive ratios."""
    h = np.asarray(history, dtype=np.float64)
    if h.ndim != 1 or len(h) < 5:
        raise ValueError("history too short: need at least 5 entries")
    if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
        raise ValueError("history entries must be positive and finite")
    window = min(max(3, len(h) // 3), len(h) - 1)
    return float(np.exp(np.mean(np.diff(np.log(h[-window - 1:])))))


def estimate_saturation(energy_errors, mesh_sizes, fixed_k=None, drop_coarsest=False):
    """Fit ``error = C h^k`` by unweighted least squares on ``log``'s.

    Parameters
    ----------
    energy_errors, mesh_sizes : sequence of float
        Positive errors and distinct mesh sizes, one pair per level.
    fixed_k : float, optional
        Known order; only ``C`` is fitted (needs 2 points instead of 3).
    drop_coarsest : bool
        Exclude the pair with the largest mesh size, where saturation may not
        have set in.
    """
    e = np.asarray(energy_errors, dtype=np.float64)
    h = np.asarray(mesh_sizes, dtype=np.float64)
    if e.shape != h.shape or e.ndim != 1:
        raise ValueError("errors and mesh sizes must be equal-length sequences")
    if np.any(e <= 0.0) or np.any(h <= 0.0):
        raise ValueError("errors and mesh sizes must be positive")
    if len(np.unique(h)) != len(h):
        raise ValueError("mesh sizes must be distinct")
    if drop_coarsest and len(h):
        keep = np.arange(len(h)) != np.argmax(h)
        e, h = e[keep], h[keep]
    need = 2 if fixed_k is not None else 3
    if len(e) < need:
        raise ValueError(f"insufficient points: need {need}, got {len(e)}")
    log_e, log_h = np.log(e), np.log(h)
    if fixed_k is None:
        A = np.column_stack([np.ones_like(log_h), log_h])
        (log_C, k), *_ = np.linalg.lstsq(A, log_e, rcond=None)
    else:
        k = float(fixed_k)
        log_C = float(np.mean(log_e - k * log_h))
    resid = log_e - (log_C + k * log_h)
    return SaturationFit(float(np.exp(log_C)), float(k), len(e),
                         float(np.sqrt(np.mean(resid ** 2))))


def cycles_needed(rho, k):
    """Cycles per refinement by 2 to keep pace with an ``O(h^k)`` error: ``ceil(k / |log2 rho|)``."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if k <= 0:
        raise ValueError("k must be positive")
    return int(math.ceil(round(k / abs(math.log2(rho)), 10)))
