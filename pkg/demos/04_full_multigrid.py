"""One FMG pass reaches the discretization error at a fixed cost per unknown."""
import scipy.sparse.linalg as spla

from varmg.cycles import CycleParams, fmg_solve
from varmg.problems import GridSpec, continuum_energy_error, manufactured_poisson
from varmg.transfer import build_hierarchy

print("   N   |u-u_h|_a   |u_h-u_fmg|_L  ratio   nonzeros/unknown")
for N in (16, 32, 64, 128):
    problem = manufactured_poisson(GridSpec(N))
    hier = build_hierarchy(problem)
    u_h = spla.spsolve(problem.matrix.tocsr().tocsc(), problem.source)
    u, report = fmg_solve(hier, problem.source, CycleParams(), exact=u_h)
    disc = continuum_energy_error(problem, u_h)
    alg = report.energy_error_history[0]
    print(f"{N:4d}  {disc:10.3e}  {alg:13.3e}  {alg / disc:5.3f}  "
          f"{report.work_nonzeros / report.n_unknowns:8.2f}")
