"""
Measuring a subgradient with a wide stencil
===========================================

At a kink the subgradient is a whole set of slopes.  Its area is read off
one-sided differences along the stencil directions.
"""

#%%
import numpy as np

from pogorelov_ma.stencil import build_stencil
from pogorelov_ma.subgradient import DiracNodeView, radial_bounds, subgradient_measure

h = 0.05

#%%
# A cone has the unit disk as subgradient.  The sum over stencil angles is exact.
for w in (1, 2, 3, 4):
    s = build_stencil(w)
    view = DiracNodeView.from_function(np.hypot, (0.0, 0.0), s, h)
    print(f"w = {w}: {len(s):2d} directions, M = {subgradient_measure(view, s):.15f}")

#%%
# max(|x|, |y|) has a diamond of area 2.  Now the angular sum is a quadrature
# and improves as the stencil widens.
diamond = lambda x, y: np.maximum(np.abs(x), np.abs(y))
for w in (1, 2, 4, 8):
    s = build_stencil(w)
    view = DiracNodeView.from_function(diamond, (0.0, 0.0), s, h)
    print(f"w = {w}: M = {subgradient_measure(view, s):.6f}")

#%%
# The radial bounds trace the diamond's edge: r(theta) = 1 / (|cos| + |sin|)
s = build_stencil(2)
b = radial_bounds(DiracNodeView.from_function(diamond, (0.0, 0.0), s, h), s)
print(np.c_[s.angles, b.r_plus, 1 / (np.abs(np.cos(s.angles)) + np.abs(np.sin(s.angles)))].round(4))
