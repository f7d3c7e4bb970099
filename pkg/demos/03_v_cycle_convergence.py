"""V(1,1) convergence factors do not deteriorate as the grid is refined."""
import numpy as np

from varmg.cycles import CycleParams, mg_cycle
from varmg.diagnostics import asymptotic_convergence_factor
from varmg.problems import GridSpec, figure1_initial_guess, homogeneous_poisson
from varmg.transfer import build_hierarchy

for kind in ("v_cycle", "w_cycle"):
    params = CycleParams(kind=kind)
    for N in (16, 32, 64, 128):
        hier = build_hierarchy(homogeneous_poisson(GridSpec(N)))
        v = figure1_initial_guess(hier.finest.grid)
        g = np.zeros_like(v)
        hist = [np.linalg.norm(v)]
        for _ in range(25):
            v = mg_cycle(hier, 0, v, g, params)
            hist.append(np.linalg.norm(v))
        print(f"{kind}  N={N:4d}  levels={len(hier)}  rho={asymptotic_convergence_factor(hist):.4f}")
