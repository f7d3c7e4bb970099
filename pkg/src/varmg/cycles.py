"""Multigrid cycles and solvers over a :class:`~varmg.transfer.Hierarchy`.

All cycles act on the correction form ``L v = g`` with residual convention
``r = L v - g`` and coarse correction ``v <- v - P v_coarse``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import as_vector, energy_norm
from .smoother import SmootherConfig, relax
from .transfer import WorkCounter

__all__ = [
    "CycleParams",
    "SolveReport",
    "CYCLE_KINDS",
    "two_grid_cycle",
    "v_cycle",
    "w_cycle",
    "mg_cycle",
    "img_solve",
    "fmg_solve",
]

CYCLE_KINDS = ("two_grid", "v_cycle", "w_cycle")
COARSEST_POLICIES = ("direct_solve", "relax_only")


@dataclass(frozen=True)
class CycleParams:
    """Cycle shape and solver controls.

    ``epsilon=None`` makes :func:`img_solve` use ``1e-8 * ||f||`` (or
    ``1e-8`` times the initial residual norm when ``f = 0``).
    """

    mu: int = 1
    nu: int = 1
    kind: str = "v_cycle"
    q: int = 1
    epsilon: Optional[float] = None
    max_img_cycles: int = 100
    coarsest_policy: str = "direct_solve"
    smoother: str = "richardson"
    jacobi_step_s: float = 2.0 / 3.0

    def __post_init__(self):
        if self.kind not in CYCLE_KINDS:
            raise ValueError(f"unknown cycle kind {self.kind!r}")
        if self.coarsest_policy not in COARSEST_POLICIES:
            raise ValueError(f"unknown coarsest policy {self.coarsest_policy!r}")
        if self.mu < 0 or self.nu < 0:
            raise ValueError("mu and nu must be nonnegative")
        # a two-grid cycle without relaxation is a pure exact coarse correction
        if self.mu + self.nu < 1 and self.kind != "two_grid":
            raise ValueError("mu + nu must be at least 1")
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.max_img_cycles < 1:
            raise ValueError("max_img_cycles must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        SmootherConfig(self.smoother, 0, self.jacobi_step_s)

    def pre(self):
        return SmootherConfig(self.smoother, self.mu, self.jacobi_step_s)

    def post(self):
        return SmootherConfig(self.smoother, self.nu, self.jacobi_step_s)

    def to_dict(self):
        return {
            "mu": self.mu,
            "nu": self.nu,
            "kind": self.kind,
            "q": self.q,
            "epsilon": self.epsilon,
            "max_img_cycles": self.max_img_cycles,
            "coarsest_policy": self.coarsest_policy,
            "smoother": self.smoother,
            "jacobi_step_s": self.jacobi_step_s,
        }


@dataclass
class SolveReport:
    """Outcome of an iterative or FMG solve.

    ``residual_history`` holds Euclidean residual norms (entry 0 is the
    initial one for IMG); ``work_units`` counts operator applications
    weighted by ``nnz_l / nnz_0``.
    """

    residual_history: list = field(default_factory=list)
    energy_error_history: Optional[list] = None
    convergence_factors: list = field(default_factory=list)
    work_units: float = 0.0
    cycles_executed: int = 0
    converged: bool = False
    epsilon: Optional[float] = None
    n_unknowns: int = 0
    finest_nnz: int = 0

    @property
    def work_nonzeros(self):
        """Total cost in nonzero visits, ``work_units * nnz_0``."""
        return self.work_units * self.finest_nnz

    def to_dict(self):
        return {
            "residual_history": list(self.residual_history),
            "energy_error_history": (None if self.energy_error_history is None
                                     else list(self.energy_error_history)),
            "convergence_factors": list(self.convergence_factors),
            "work_units": self.work_units,
            "cycles_executed": self.cycles_executed,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "n_unknowns": self.n_unknowns,
            "finest_nnz": self.finest_nnz,
        }


def _ratios(history):
    return [b / a if a > 0 else math.nan for a, b in zip(history, history[1:])]


def _coarsest(hier, level_index, v, g, params, counter):
    level = hier[level_index]
    if params.coarsest_policy == "direct_solve" and level_index > 0:
        if counter is not None:
            counter.charge_dense_solve(level.n)
        return level.direct_solver.solve(g)
    v = relax(level, v, g, params.pre(), counter)
    return relax(level, v, g, params.post(), counter)


def _correct(hier, level_index, v, g, coarse_solve, counter, trace):
    """Restrict the residual, obtain a coarse correction, apply it."""
    level = hier[level_index]
    if counter is not None:
        counter.charge(level)
    g_coarse = level.restrict(level.residual(v, g))
    v_new = v - level.prolong(coarse_solve(g_coarse))
    if trace is not None:
        trace(level_index, v, v_new, g)
    return v_new


def two_grid_cycle(hier, v, g, params, counter=None, trace=None, level_index=0):
    """Relax ``mu`` times, exact coarse-grid correction, relax ``nu`` times."""
    if level_index + 1 >= len(hier):
        raise ValueError("two-grid cycle needs two levels")
    level = hier[level_index]
    coarse = hier[level_index + 1]
    v = as_vector(v, level.n, "v")
    g = as_vector(g, level.n, "g")

    def exact(g_coarse):
        if counter is not None:
            counter.charge_dense_solve(coarse.n)
        return coarse.direct_solver.solve(g_coarse)

    v = relax(level, v, g, params.pre(), counter)
    v = _correct(hier, level_index, v, g, exact, counter, trace)
    return relax(level, v, g, params.post(), counter)


def v_cycle(hier, level_index, v, g, params, counter=None, trace=None):
    """Recursive V(mu, nu) cycle starting at ``level_index``.

    On the coarsest level the ``mu + nu`` sweeps are replaced by a direct
    solve when ``coarsest_policy == "direct_solve"`` and the hierarchy has
    more than one level.
    """
    level = hier[level_index]
    v = as_vector(v, level.n, "v")
    g = as_vector(g, level.n, "g")
    if level.is_coarsest:
        return _coarsest(hier, level_index, v, g, params, counter)

    def recurse(g_coarse):
        return v_cycle(hier, level_index + 1, np.zeros_like(g_coarse), g_coarse,
                       params, counter, trace)

    v = relax(level, v, g, params.pre(), counter)
    v = _correct(hier, level_index, v, g, recurse, counter, trace)
    return relax(level, v, g, params.post(), counter)


def w_cycle(hier, level_index, v, g, params, counter=None, trace=None):
    """Recursive W(mu, nu) cycle: two coarse visits per level, the second warm-started."""
    level = hier[level_index]
    v = as_vector(v, level.n, "v")
    g = as_vector(g, level.n, "g")
    if level.is_coarsest:
        return _coarsest(hier, level_index, v, g, params, counter)

    def recurse(g_coarse):
        w = w_cycle(hier, level_index + 1, np.zeros_like(g_coarse), g_coarse,
                    params, counter, trace)
        return w_cycle(hier, level_index + 1, w, g_coarse, params, counter, trace)

    v = relax(level, v, g, params.pre(), counter)
    v = _correct(hier, level_index, v, g, recurse, counter, trace)
    return relax(level, v, g, params.post(), counter)


def mg_cycle(hier, level_index, v, g, params, counter=None, trace=None):
    """One cycle of ``params.kind`` at ``level_index``."""
    if hier[level_index].is_coarsest:
        return _coarsest(hier, level_index, as_vector(v, hier[level_index].n, "v"),
                         as_vector(g, hier[level_index].n, "g"), params, counter)
    if params.kind == "two_grid":
        return two_grid_cycle(hier, v, g, params, counter, trace, level_index)
    if params.kind == "v_cycle":
        return v_cycle(hier, level_index, v, g, params, counter, trace)
    return w_cycle(hier, level_index, v, g, params, counter, trace)


def img_solve(hier, u, f, params, exact=None, trace=None):
    """Iterative multigrid solve of ``L u = f`` to residual norm ``epsilon``.

    Each pass forms ``g = L u - f``, stops if ``||g|| <= epsilon``, and
    otherwise applies one cycle to ``L v = g`` from ``v = 0`` and sets
    ``u <- u - v``.

    Parameters
    ----------
    hier : Hierarchy
    u : ndarray
        Initial guess.
    f : ndarray
        Finest-level source.
    params : CycleParams
    exact : ndarray, optional
        Exact discrete solution; when given the report carries energy-norm
        errors per pass.

    Returns
    -------
    u : ndarray
    report : SolveReport
        ``converged`` is False when ``max_img_cycles`` ran out.
    """
    level = hier.finest
    u = as_vector(u, level.n, "u").copy()
    f = as_vector(f, level.n, "f")
    counter = WorkCounter(level.nnz)
    history = []
    energy = [] if exact is not None else None
    eps = params.epsilon
    cycles = 0
    converged = False
    while True:
        counter.charge(level)
        g = level.residual(u, f)
        rnorm = float(np.linalg.norm(g))
        if eps is None:
            fnorm = float(np.linalg.norm(f))
            eps = 1e-8 * (fnorm if fnorm > 0 else rnorm)
        history.append(rnorm)
        if energy is not None:
            energy.append(energy_norm(level.operator, u - exact))
        if rnorm <= eps:
            converged = True
            break
        if cycles >= params.max_img_cycles:
            break
        v = mg_cycle(hier, 0, np.zeros_like(g), g, params, counter, trace)
        u = u - v
        cycles += 1
    report = SolveReport(history, energy, _ratios(history), counter.units, cycles,
                         converged, eps, level.n, level.nnz)
    return u, report


def fmg_solve(hier, sources, params, exact=None, trace=None):
    """Full multigrid: nested iteration from the coarsest level, ``q`` cycles per level.

    Parameters
    ----------
    hier : Hierarchy
    sources : list of ndarray or ndarray
        One source per level, finest first.  A single finest-level vector is
        expanded by repeated restriction.
    params : CycleParams
    exact : ndarray, optional
        Exact finest-level discrete solution for the energy error.

    Returns
    -------
    u : ndarray
    report : SolveReport
        ``residual_history`` lists the finest residual norm after the
        prolongated initial guess and after each of the ``q`` cycles.
    """
    if isinstance(sources, np.ndarray) and sources.ndim == 1:
        sources = hier.restrict_source(sources)
    if sources is None or len(sources) != len(hier) or any(s is None for s in sources):
        raise ValueError("incomplete sources: need one source per level")
    sources = [as_vector(s, lvl.n, "source") for s, lvl in zip(sources, hier)]
    counter = WorkCounter(hier.finest.nnz)
    u = np.zeros(hier.coarsest.n)
    history = []
    for index in range(len(hier) - 1, -1, -1):
        level = hier[index]
        if index < len(hier) - 1:
            u = level.prolong(u)
        if index == 0:
            history.append(float(np.linalg.norm(level.residual(u, sources[0]))))
        for _ in range(params.q):
            u = mg_cycle(hier, index, u, sources[index], params, counter, trace)
            if index == 0:
                history.append(float(np.linalg.norm(level.residual(u, sources[0]))))
    energy = None
    if exact is not None:
        energy = [energy_norm(hier.finest.operator, u - as_vector(exact, hier.finest.n))]
    report = SolveReport(history, energy, _ratios(history), counter.units,
                         params.q * len(hier), True, None, hier.finest.n, hier.finest.nnz)
    return u, report
