"""
Transporting a single point mass onto the disk
==============================================

All the mass sits at the origin, so the potential is the cone |x| and its
gradient spreads the point over the whole unit disk.  We solve on a few
grids and watch the error shrink.
"""

#%%
import numpy as np

from pogorelov_ma import DiracMeasure, SchemeParams, newton_solve
from pogorelov_ma.harness import convergence_fit

diracs = DiracMeasure([(0.0, 0.0)], [np.pi])

#%%
# Each solve starts from the cone-min guess.  The error compares the two
# functions after removing their means on the square.
rows = []
for n in (17, 33, 65):
    rep = newton_solve(SchemeParams(n), diracs)
    g = rep.grid
    u = g.restrict(rep.potential)
    ref = np.hypot(g.restrict(g.X), g.restrict(g.Y))
    err = np.max(np.abs((u - u.mean()) - (ref - ref.mean())))
    rows.append((n, err))
    print(f"n_x = {n:3d}  iterations = {rep.iterations:2d}  max error = {err:.3e}")

#%%
# First order in h
order, r2 = convergence_fit(rows)
print(f"observed order {order:.2f}")
