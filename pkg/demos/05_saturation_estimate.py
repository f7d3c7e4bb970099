"""Estimating C and k in error ~ C h^k from cheap coarse levels.

The fit on N = 4..16 predicts the errors on the finer grids.
"""
import numpy as np
import scipy.sparse.linalg as spla

from varmg.diagnostics import estimate_saturation
from varmg.linalg import energy_norm
from varmg.problems import GridSpec, manufactured_poisson

Ns = [4, 8, 16, 32, 64]
errors = []
for N in Ns:
    p = manufactured_poisson(GridSpec(N))
    u = spla.spsolve(p.matrix.tocsr().tocsc(), p.source)
    errors.append(energy_norm(p.matrix, p.sampled_exact() - u))

fit = estimate_saturation(errors[:3], [1.0 / N for N in Ns[:3]])
print(f"fit on N=4,8,16: C={fit.C:.4f} k={fit.k:.4f} (rms log residual {fit.residual_of_fit:.1e})")
for N, e in zip(Ns, errors):
    print(f"N={N:3d}  measured {e:.4e}  predicted {float(fit.predict(1.0 / N)):.4e}")
