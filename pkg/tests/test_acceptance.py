"""Acceptance criteria, one test each.

Every test records a one-line PASS/FAIL verdict with its measured numbers;
the lines are printed in the pytest terminal summary, or directly when this
file is run as a script.
"""

import time

import numpy as np

from varmg.cycles import CycleParams, fmg_solve, img_solve, mg_cycle, two_grid_cycle, v_cycle, w_cycle
from varmg.diagnostics import (
    asymptotic_convergence_factor,
    cycles_needed,
    energy_functional,
    estimate_saturation,
    relaxation_identity_check,
    strong_measure,
    weak_measure,
)
from varmg.linalg import dense_solve, energy_norm, spmv
from varmg.problems import (
    GridSpec,
    continuum_energy_error,
    figure1_initial_guess,
    homogeneous_poisson,
    manufactured_poisson,
    poisson_eigenvalue,
    poisson_eigenvector,
)
from varmg.smoother import error_propagation_apply
from varmg.transfer import build_hierarchy, coarse_grid_correction, galerkin_coarse_operator

from conftest import ACCEPTANCE_LINES, poisson_hierarchy

SAMPLES = 1000


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number:>2} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def random_errors(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(SAMPLES):
        e = rng.standard_normal(n)
        if np.any(e):
            yield e


def test_01_richardson_contraction():
    start = time.perf_counter()
    worst_e = worst_l = 0.0
    for N in (4, 8, 16):
        level = poisson_hierarchy(N)[0]
        for e in random_errors(level.n, N):
            Ge = error_propagation_apply(level, e)
            worst_e = max(worst_e, np.linalg.norm(Ge) / np.linalg.norm(e))
            worst_l = max(worst_l, energy_norm(level.operator, Ge) / energy_norm(level.operator, e))
    elapsed = time.perf_counter() - start
    record(1, "Richardson contraction", worst_e < 1 and worst_l < 1 and elapsed < 5,
           f"max |Ge|/|e| = {worst_e:.6f}, max energy ratio = {worst_l:.6f}, "
           f"{3 * SAMPLES} samples in {elapsed:.2f} s")


def test_02_xi_chi_identities():
    gap = 0.0
    lo, hi = np.inf, -np.inf
    for N in (4, 8, 16):
        level = poisson_hierarchy(N)[0]
        for e in random_errors(level.n, 100 + N):
            r = relaxation_identity_check(level, e)
            gap = max(gap, r.euclidean_identity_gap, r.energy_identity_gap)
            lo, hi = min(lo, r.xi, r.chi), max(hi, r.xi, r.chi)
    record(2, "xi/chi identities", gap <= 1e-10 and lo >= 0 and hi < 1,
           f"max identity gap = {gap:.2e}, xi and chi in [{lo:.4f}, {hi:.4f}]")


def test_03_measure_ordering_and_eigenmodes():
    ordered = True
    for N in (4, 8, 16):
        level = poisson_hierarchy(N)[0]
        for e in random_errors(level.n, 200 + N):
            ordered &= weak_measure(level, e) <= strong_measure(level, e)
    grid = GridSpec(16)
    level = poisson_hierarchy(16)[0]
    worst = 0.0
    for p in range(1, 16):
        for q in range(1, 16):
            w = poisson_eigenvector(grid, p, q)
            target = poisson_eigenvalue(grid, p, q) / (4 + 4 * np.cos(np.pi / 16))
            worst = max(worst, abs(weak_measure(level, w) - target),
                        abs(strong_measure(level, w) - target))
    record(3, "measure ordering and eigenmodes", bool(ordered) and worst <= 1e-8,
           f"M_w <= M_s in all samples: {bool(ordered)}, "
           f"max eigenmode deviation over 225 modes = {worst:.2e}")


def test_04_variational_identity_and_optimality():
    hier = poisson_hierarchy(16)
    fine, coarse = hier[0], hier[1]
    P = fine.prolongation_to_here
    L2h = galerkin_coarse_operator(P, fine.operator)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        v, g = rng.standard_normal((2, fine.n))
        w = rng.standard_normal(coarse.n)
        lhs = energy_functional(fine, v - spmv(P, w), g)
        rhs = energy_functional(fine, v, g) + energy_functional(L2h, w, spmv(P.T, fine.residual(v, g)))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    v, g = rng.standard_normal((2, fine.n))
    v_new = coarse_grid_correction(fine, coarse, v, g)
    ortho = np.linalg.norm(spmv(P.T, fine.residual(v_new, g))) / np.linalg.norm(g)
    best = energy_functional(fine, v_new, g)
    margin = min(energy_functional(fine, v - spmv(P, rng.standard_normal(coarse.n)), g) - best
                 for _ in range(100))
    record(4, "variational identity and optimality", worst <= 1e-10 and ortho <= 1e-10 and margin > 0,
           f"max relative identity error = {worst:.2e}, coarse residual / |g| = {ortho:.2e}, "
           f"min energy margin over 100 random corrections = {margin:.3e}")


def test_05_alpha_invariance():
    rng = np.random.default_rng(5)
    v, g = rng.standard_normal((2, GridSpec(16).n_unknowns))
    outs = []
    for alpha in (0.25, 1.0, 4.0):
        hier = poisson_hierarchy(16, alpha=alpha)
        outs.append(coarse_grid_correction(hier[0], hier[1], v, g))
    diff = max(np.abs(o - outs[1]).max() for o in outs)
    record(5, "alpha invariance", diff <= 1e-12, f"max deviation across alpha in {{1/4, 1, 4}} = {diff:.2e}")


def test_06_structural_equivalences():
    hier = poisson_hierarchy(16, 8)
    rng = np.random.default_rng(6)
    v, g = rng.standard_normal((2, hier[0].n))
    params = CycleParams()
    tg = two_grid_cycle(hier, v, g, params)
    dv = np.abs(v_cycle(hier, 0, v, g, params) - tg).max()
    dw = np.abs(w_cycle(hier, 0, v, g, params) - tg).max()
    g_c = rng.standard_normal(hier[1].n)
    w = w_cycle(hier, 1, np.zeros_like(g_c), g_c, params)
    noop = np.abs(w_cycle(hier, 1, w, g_c, params) - w).max()
    record(6, "structural equivalences", max(dv, dw, noop) <= 1e-12,
           f"|V - TG| = {dv:.2e}, |W - TG| = {dw:.2e}, second exact coarse call change = {noop:.2e}")


def v_factor(N, cycles=30):
    hier = poisson_hierarchy(N)
    v = figure1_initial_guess(hier[0].grid)
    g = np.zeros_like(v)
    hist = [np.linalg.norm(v)]
    for _ in range(cycles):
        v = mg_cycle(hier, 0, v, g, CycleParams())
        hist.append(np.linalg.norm(v))
    return asymptotic_convergence_factor(hist)


def test_07_h_independent_factors():
    start = time.perf_counter()
    rho = {N: v_factor(N) for N in (16, 32, 64, 128)}
    elapsed = time.perf_counter() - start
    span = max(rho.values()) - min(rho.values())
    record(7, "h-independent V(1,1) factors",
           max(rho.values()) < 0.8 and span <= 0.15 and elapsed < 60,
           ", ".join(f"N={N}: {r:.4f}" for N, r in rho.items()) + f"; span {span:.4f}, {elapsed:.1f} s")


def test_08_img_cycle_count_law():
    Ns = (16, 32, 64)
    counts, gammas = [], []
    for N in Ns:
        hier = poisson_hierarchy(N)
        u0 = figure1_initial_guess(hier[0].grid)
        f = np.zeros_like(u0)
        r0 = np.linalg.norm(spmv(hier[0].operator, u0))
        _, report = img_solve(hier, u0, f, CycleParams(epsilon=1e-2 * (16 / N) ** 2 * r0))
        counts.append(report.cycles_executed)
        # measured residual factor from a long run on the same level
        _, long_run = img_solve(hier, u0, f, CycleParams(epsilon=1e-13 * r0, max_img_cycles=60))
        gammas.append(cycles_needed(asymptotic_convergence_factor(long_run.residual_history), 2))
    predicted = [counts[0]]
    for gamma in gammas[1:]:
        predicted.append(predicted[-1] + gamma)
    deviation = [c - p for c, p in zip(counts, predicted)]
    ok = counts == sorted(counts) and all(abs(d) <= 2 for d in deviation)
    record(8, "IMG cycle-count law", ok,
           f"counts {counts}, predicted {predicted} (gamma {gammas[1:]} per refinement), "
           f"deviation {deviation}")


def fmg_run(N):
    problem = manufactured_poisson(GridSpec(N))
    hier = poisson_hierarchy(N, kind="manufactured")
    exact = dense_solve(problem.matrix, problem.source) if N <= 64 else None
    if exact is None:
        import scipy.sparse.linalg as spla
        exact = spla.spsolve(problem.matrix.tocsr().tocsc(), problem.source)
    u, report = fmg_solve(hier, problem.source, CycleParams(), exact=exact)
    return problem, exact, u, report


def test_09_fmg_accuracy_and_cost():
    start = time.perf_counter()
    runs = {N: fmg_run(N) for N in (32, 64, 128)}
    elapsed = time.perf_counter() - start
    problem, exact, u, report = runs[64]
    algebraic = report.energy_error_history[0]
    discretization = continuum_energy_error(problem, exact)
    per_unknown = {N: r[3].work_nonzeros / r[3].n_unknowns for N, r in runs.items()}
    spread = max(per_unknown.values()) / min(per_unknown.values()) - 1
    ratio = algebraic / discretization
    record(9, "FMG accuracy and O(n) cost", ratio <= 2 and spread <= 0.15 and elapsed < 120,
           f"N=64 |u_h - u_fmg|_L = {algebraic:.4e} vs |u - u_h|_a = {discretization:.4e} "
           f"(ratio {ratio:.3f}); work per unknown "
           + ", ".join(f"N={N}: {w:.2f}" for N, w in per_unknown.items())
           + f" (spread {spread:.1%}); {elapsed:.1f} s")
    # the same run measured against the sampled-solution proxy, reported only
    proxy = energy_norm(problem.matrix, problem.sampled_exact() - exact)
    ACCEPTANCE_LINES.append(
        f"[INFO]  9b FMG against the sampled-solution proxy |u_I - u_h|_L = {proxy:.4e}: "
        f"ratio {algebraic / proxy:.1f} (> 2: the proxy shrinks like h^2, the error left by one cycle per level like h)")


def test_10_saturation_estimator():
    errs, hs = [], []
    for N in (8, 16, 32, 64):
        p = manufactured_poisson(GridSpec(N))
        u = dense_solve(p.matrix, p.source)
        errs.append(energy_norm(p.matrix, p.sampled_exact() - u))
        hs.append(1.0 / N)
    fit = estimate_saturation(errs, hs)
    h = np.array(hs)
    exact = estimate_saturation(3.0 * h ** 2, h)
    synth = max(abs(exact.C - 3.0), abs(exact.k - 2.0))
    record(10, "saturation estimator", 1.6 <= fit.k <= 2.4 and synth <= 1e-10,
           f"manufactured fit k = {fit.k:.4f}, C = {fit.C:.4f}; synthetic 3h^2 recovered to {synth:.1e}")


def test_11_relaxation_snapshot(tmp_path):
    from varmg.cli import main
    assert main(["snapshot", "--n", "32", "--out", str(tmp_path)]) == 0
    norms = np.loadtxt(tmp_path / "norms.csv", delimiter=",", skiprows=1)
    e = norms[:, 1]
    steps = e[1:] / e[:-1]
    decreasing = bool(np.all(np.diff(e) < 0))
    early, late = steps[:3].mean(), steps[-10:].mean()
    grid = GridSpec(32)
    level = build_hierarchy(homogeneous_poisson(grid), coarsest_N=32)[0]
    first = np.loadtxt(tmp_path / "snapshot_iter00.csv", delimiter=",")
    last = np.loadtxt(tmp_path / "snapshot_iter20.csv", delimiter=",")
    # the files hold magnitudes; the signed fields come from the run itself
    from varmg.cli import run_snapshot
    _, iterates, _ = run_snapshot(grid)
    np.testing.assert_array_equal(np.abs(grid.as_grid(iterates[20])), last)
    np.testing.assert_array_equal(np.abs(grid.as_grid(iterates[0])), first)
    mw0, mw20 = weak_measure(level, iterates[0]), weak_measure(level, iterates[20])
    record(11, "relaxation snapshot", decreasing and late > early and mw20 < mw0,
           f"Euclidean norms strictly decreasing: {decreasing}; mean step ratio iters 1-3 "
           f"{early:.4f} < iters 11-20 {late:.4f}; M_w {mw0:.4f} -> {mw20:.4f}")


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failures += 1
    for line in ACCEPTANCE_LINES:
        if line.startswith("[INFO]"):
            print(line)
    sys.exit(1 if failures else 0)
