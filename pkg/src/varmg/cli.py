"""Command-line front end: ``varmg {solve,fmg,diagnose,snapshot}``.

Every command writes its results under ``--out``.  Output files depend only
on the options, so repeated single-threaded runs are byte-identical; wall
times go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from . import io
from .cycles import CycleParams, fmg_solve, img_solve
from .diagnostics import (
    asymptotic_convergence_factor,
    estimate_saturation,
    identity_audit,
    relaxation_identity_check,
)
from .linalg import energy_norm, set_threads
from .problems import (
    GridSpec,
    continuum_energy_error,
    figure1_initial_guess,
    homogeneous_poisson,
    manufactured_poisson,
    poisson_eigenvector,
)
from .smoother import SmootherConfig, relax
from .transfer import build_hierarchy

COMMANDS = ("solve", "fmg", "diagnose", "snapshot")
CYCLES = {"tg": "two_grid", "v": "v_cycle", "w": "w_cycle"}
SMOOTHERS = {"richardson": "richardson", "jacobi": "jacobi",
             "optimal": "richardson_optimal_step"}
SNAPSHOT_ITERATIONS = (0, 1, 2, 3, 10, 20)


@dataclass(frozen=True)
class RunConfig:
    command: str
    N: int = 32
    coarsest_N: int = 2
    cycle: str = "v_cycle"
    mu: int = 1
    nu: int = 1
    q: int = 1
    epsilon: float = 1e-8
    seed: int = 42
    smoother: str = "richardson"
    alpha: float = 1.0
    output_dir: str = "varmg-out"
    format: str = "json"
    threads: int = 1
    deterministic: bool = False

    def params(self, **overrides):
        kw = dict(mu=self.mu, nu=self.nu, kind=self.cycle, q=self.q, smoother=self.smoother)
        kw.update(overrides)
        return CycleParams(**kw)

    def to_dict(self):
        # the output location and thread count do not affect results
        d = asdict(self)
        for key in ("output_dir", "threads", "deterministic"):
            d.pop(key)
        return d


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=32, help="finest grid N (h = 1/N)")
    common.add_argument("--coarsest-n", type=int, default=2)
    common.add_argument("--cycle", choices=sorted(CYCLES), default="v")
    common.add_argument("--mu", type=int, default=1, help="pre-relaxation sweeps")
    common.add_argument("--nu", type=int, default=1, help="post-relaxation sweeps")
    common.add_argument("--q", type=int, default=1, help="FMG cycles per level")
    common.add_argument("--eps", type=float, default=1e-8,
                        help="IMG tolerance relative to the source norm")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--smoother", choices=sorted(SMOOTHERS), default="richardson")
    common.add_argument("--alpha", type=float, default=1.0, help="restriction scale")
    common.add_argument("--out", default="varmg-out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="threads for SpMV")
    common.add_argument("--deterministic", action="store_true",
                        help="force sequential SpMV regardless of --threads")
    parser = argparse.ArgumentParser(prog="varmg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="iterative multigrid on the manufactured problem")
    sub.add_parser("fmg", parents=[common], help="full multigrid on the manufactured problem")
    sub.add_parser("diagnose", parents=[common], help="smoothness measures, audits, saturation fit")
    sub.add_parser("snapshot", parents=[common], help="relaxation error grids from the rough guess")
    return parser


def config_from_args(args):
    if args.threads < 1:
        raise ValueError("--threads must be positive")
    return RunConfig(args.command, args.n, args.coarsest_n, CYCLES[args.cycle], args.mu,
                     args.nu, args.q, args.eps, args.seed, SMOOTHERS[args.smoother],
                     args.alpha, args.out, args.format, args.threads, args.deterministic)


def _out_dir(config):
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"unwritable output_dir {out}: {exc}") from exc
    return out


def _discrete_solution(problem):
    return spla.spsolve(problem.matrix.tocsr().tocsc(), problem.source)


def _hierarchy(config, problem):
    return build_hierarchy(problem, config.coarsest_N, config.alpha)


def _summary_rows(d, prefix=""):
    rows = []
    for key, value in d.items():
        if isinstance(value, dict):
            rows.extend(_summary_rows(value, f"{prefix}{key}."))
        elif isinstance(value, (list, tuple)):
            rows.append((prefix + key, ";".join(io.format_float(x) if isinstance(x, float)
                                                else str(x) for x in value)))
        else:
            rows.append((prefix + key, value))
    return rows


def _write_summary(out, stem, config, payload):
    if config.format == "json":
        io.write_json(out / f"{stem}.json", payload)
    else:
        io.write_rows_csv(out / f"{stem}_summary.csv", ["key", "value"],
                          _summary_rows(io.jsonable(payload)))


def cmd_solve(config):
    out = _out_dir(config)
    problem = manufactured_poisson(GridSpec(config.N))
    hier = _hierarchy(config, problem)
    exact = _discrete_solution(problem)
    eps = config.epsilon * float(np.linalg.norm(problem.source))
    u, report = img_solve(hier, np.zeros(hier.finest.n), problem.source,
                          config.params(epsilon=eps), exact=exact)
    rho = (asymptotic_convergence_factor(report.residual_history)
           if len(report.residual_history) >= 5 else None)
    payload = {
        "command": "solve",
        "config": config.to_dict(),
        "hierarchy": hier.manifest(),
        "report": report.to_dict(),
        "asymptotic_factor": rho,
        "work_nonzeros_per_unknown": report.work_nonzeros / report.n_unknowns,
    }
    _write_summary(out, "solve", config, payload)
    if config.format == "csv":
        factors = [None] + report.convergence_factors
        io.write_rows_csv(out / "solve_history.csv",
                          ["cycle", "residual", "energy_error", "factor"],
                          [(i, r, e, "" if f is None else f) for i, (r, e, f) in
                           enumerate(zip(report.residual_history,
                                         report.energy_error_history, factors))])
    return 0 if report.converged else 1


def cmd_fmg(config):
    out = _out_dir(config)
    problem = manufactured_poisson(GridSpec(config.N))
    hier = _hierarchy(config, problem)
    exact = _discrete_solution(problem)
    u, report = fmg_solve(hier, problem.source, config.params(), exact=exact)
    discretization = continuum_energy_error(problem, exact)
    total = continuum_energy_error(problem, u)
    sampled = problem.sampled_exact()
    payload = {
        "command": "fmg",
        "config": config.to_dict(),
        "hierarchy": hier.manifest(),
        "report": report.to_dict(),
        "algebraic_energy_error": report.energy_error_history[0],
        "discretization_energy_error": discretization,
        "fmg_energy_error": total,
        "algebraic_to_discretization_ratio": report.energy_error_history[0] / discretization,
        "total_to_discretization_ratio": total / discretization,
        "nodal_discretization_energy_error": energy_norm(problem.matrix, sampled - exact),
        "nodal_fmg_energy_error": energy_norm(problem.matrix, sampled - u),
        "work_nonzeros_per_unknown": report.work_nonzeros / report.n_unknowns,
    }
    _write_summary(out, "fmg", config, payload)
    return 0


def _saturation_errors(config):
    """Nodal energy errors of exact discrete solutions on the hierarchy's grids."""
    Ns, errors = [], []
    N = config.N
    while N >= max(4, config.coarsest_N):
        problem = manufactured_poisson(GridSpec(N))
        exact = _discrete_solution(problem)
        Ns.append(N)
        errors.append(energy_norm(problem.matrix, problem.sampled_exact() - exact))
        if N % 2:
            break
        N //= 2
    return Ns[::-1], errors[::-1]


def cmd_diagnose(config):
    out = _out_dir(config)
    grid = GridSpec(config.N)
    hier = _hierarchy(config, homogeneous_poisson(grid))
    level = hier.finest
    m = config.N - 1
    vectors = {
        "lowest_mode": poisson_eigenvector(grid, 1, 1),
        "highest_mode": poisson_eigenvector(grid, m, m),
        "rough_guess": figure1_initial_guess(grid, config.seed),
    }
    reports = {name: relaxation_identity_check(level, e) for name, e in vectors.items()}
    passed, failed = identity_audit(level, 1000, config.seed)
    Ns, errors = _saturation_errors(config)
    fit = None
    if len(Ns) >= 3:
        fit = estimate_saturation(errors, [1.0 / N for N in Ns])
    payload = {
        "command": "diagnose",
        "config": config.to_dict(),
        "lambda_max": level.lambda_max,
        "smoothness": {name: r.to_dict() for name, r in reports.items()},
        "identity_audit": {"passed": passed, "failed": failed},
        "saturation": {"N": Ns, "energy_errors": errors,
                       "fit": None if fit is None else fit.to_dict()},
    }
    _write_summary(out, "diagnose", config, payload)
    if config.format == "csv":
        fields = list(next(iter(reports.values())).to_dict())
        io.write_rows_csv(out / "diagnose_smoothness.csv", ["vector"] + fields,
                          [[name] + [float(v) for v in r.to_dict().values()]
                           for name, r in reports.items()])
        io.write_rows_csv(out / "diagnose_saturation.csv", ["N", "h", "energy_error"],
                          [(N, 1.0 / N, e) for N, e in zip(Ns, errors)])
    ok = failed == 0 and all(r.holds() for r in reports.values())
    return 0 if ok else 1


def run_snapshot(grid, seed=42, smoother="richardson", iterations=max(SNAPSHOT_ITERATIONS)):
    """Relax ``L v = 0`` from the rough guess; return the iterates and their norms."""
    hier = build_hierarchy(homogeneous_poisson(grid), coarsest_N=grid.N)
    level = hier.finest
    g = np.zeros(level.n)
    v = figure1_initial_guess(grid, seed)
    config = SmootherConfig(smoother, 1)
    iterates = [v]
    for _ in range(iterations):
        v = relax(level, v, g, config)
        iterates.append(v)
    norms = [(float(np.linalg.norm(x)), energy_norm(level.operator, x)) for x in iterates]
    return level, iterates, norms


def cmd_snapshot(config):
    out = _out_dir(config)
    grid = GridSpec(config.N)
    _, iterates, norms = run_snapshot(grid, config.seed, config.smoother)
    for k in SNAPSHOT_ITERATIONS:
        io.write_grid_csv(out / f"snapshot_iter{k:02d}.csv", np.abs(iterates[k]), grid)
    io.write_rows_csv(out / "norms.csv", ["iteration", "euclidean", "energy"],
                      [(i, a, b) for i, (a, b) in enumerate(norms)])
    return 0


HANDLERS = {"solve": cmd_solve, "fmg": cmd_fmg, "diagnose": cmd_diagnose,
            "snapshot": cmd_snapshot}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        set_threads(1 if config.deterministic else config.threads)
        start = time.perf_counter()
        code = HANDLERS[config.command](config)
    except (ValueError, OSError) as exc:
        print(f"varmg: error: {exc}", file=sys.stderr)
        return 2
    finally:
        set_threads(1)
    print(f"varmg {config.command}: wall time {time.perf_counter() - start:.3f} s",
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
