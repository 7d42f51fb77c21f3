"""
Heights of several point masses
===============================

With more than one mass the potential is a maximum of planes, and the only
unknowns are the plane heights.  The geometric oracle finds them by lifting
one plane at a time; the PDE solver gets them from the potential at the
masses.
"""

#%%
import numpy as np

from pogorelov_ma import DiracMeasure, SchemeParams, newton_solve, pogorelov_solve
from pogorelov_ma.geometry import laguerre_areas
from pogorelov_ma.harness import FIVE_DIRAC

diracs = DiracMeasure.normalized(*FIVE_DIRAC)

#%%
# Oracle first.  Heights are reported with the smallest one at zero.
exact = pogorelov_solve(diracs)
print("oracle heights ", np.round(exact.heights, 6), f"({exact.sweeps} sweeps)")

#%%
# The corner masses sit at (+-0.5, +-0.5) and one at the origin.  Three of them
# end up 0.2 above the other two.
rep = newton_solve(SchemeParams(65), diracs)
print("scheme heights ", np.round(rep.heights, 6))
print("max height error", np.max(np.abs(rep.heights - exact.heights)))

#%%
# Cells built from the scheme's heights, against the prescribed areas
areas = laguerre_areas(diracs.locations, rep.heights)
for k, (a, w) in enumerate(zip(areas, diracs.weights)):
    print(f"cell {k + 1}: area {a:.5f}  target {w:.5f}")
