"""Relaxation sweeps: scaled Richardson, damped Jacobi, optimal-step Richardson."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_vector, dot, spmv

__all__ = ["SmootherConfig", "SMOOTHER_KINDS", "relax", "error_propagation_apply"]

SMOOTHER_KINDS = ("richardson", "jacobi", "richardson_optimal_step")


@dataclass(frozen=True)
class SmootherConfig:
    """Which relaxation to run and how many sweeps.

    ``jacobi_step_s`` is only used by ``kind="jacobi"``.
    """

    kind: str = "richardson"
    sweeps: int = 1
    jacobi_step_s: float = 2.0 / 3.0

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if int(self.sweeps) != self.sweeps or self.sweeps < 0:
            raise ValueError("sweeps must be a nonnegative integer")
        if not 0.0 < self.jacobi_step_s < 2.0:
            raise ValueError("jacobi_step_s must lie in (0, 2)")

    def with_sweeps(self, sweeps):
        return SmootherConfig(self.kind, sweeps, self.jacobi_step_s)


def relax(level, v, g, config, counter=None):
    """Apply ``config.sweeps`` relaxation sweeps to ``L v = g``.

    Parameters
    ----------
    level : Level
        Supplies the operator and its cached ``lambda_max``.
    v, g : ndarray
        Current iterate and source.  ``v`` is not modified.
    config : SmootherConfig
    counter : WorkCounter, optional
        Charged one operator application per matrix-vector product.

    Returns
    -------
    ndarray
        The relaxed iterate.
    """
    L = level.operator
    v = as_vector(v, L.n_rows, "v").copy()
    g = as_vector(g, L.n_rows, "g")
    if config.sweeps == 0:
        return v
    if config.kind == "richardson":
        scale = 1.0 / level.lambda_max
        for _ in range(config.sweeps):
            v = v - scale * (spmv(L, v) - g)
        _charge(counter, level, config.sweeps)
    elif config.kind == "jacobi":
        d = level.diagonal
        if np.any(d == 0.0):
            raise ValueError("singular diagonal: Jacobi needs a nonzero diagonal")
        s = config.jacobi_step_s
        for _ in range(config.sweeps):
            v = v - s * ((spmv(L, v) - g) / d)
        _charge(counter, level, config.sweeps)
    else:
        for _ in range(config.sweeps):
            r = spmv(L, v) - g
            rr = dot(r, r)
            _charge(counter, level, 1)
            if rr == 0.0:
                break
            Lr = spmv(L, r)
            _charge(counter, level, 1)
            v = v - (rr / dot(Lr, r)) * r
    return v


def _charge(counter, level, applications):
    if counter is not None:
        counter.charge(level, applications)


def error_propagation_apply(level, e):
    """Apply the Richardson error propagation matrix ``I - L / lambda_max``."""
    e = as_vector(e, level.operator.n_rows, "e")
    scale = 1.0 / level.lambda_max
    return e - scale * spmv(level.operator, e)
