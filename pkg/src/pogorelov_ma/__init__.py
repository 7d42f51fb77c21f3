"""Monotone finite-difference solver for semi-discrete optimal transport.

Diracs in a square are transported onto a convex target (the unit disk by
default).  The potential solves a Monge-Ampere equation whose Dirac masses
are enforced through a discrete subgradient measure, with a Hamilton-Jacobi
condition on the boundary layer.  An exact geometric solver for the Laguerre
cell heights serves as the reference.
"""

from .errors import (ConfigError, ContractViolation, DegenerateInputError, NonConvergenceError,
                     SolverError, StagnationError, StencilRangeError)
from .geometry import (ConvexTarget, HalfPlane, cell_area, clip_polygon, disk_cell, laguerre_areas,
                       laguerre_cell, mc_area, signed_distance, support_function)
from .harness import ExperimentConfig, ErrorTable, cell_raster, convergence_fit, run_experiment
from .newton import SolveReport, default_initialization, newton_solve, sparse_solve
from .oracle import OracleResult, oracle_vs_scheme, pogorelov_solve
from .scheme import MongeAmpereScheme, SchemeParams, mean_zero_shift
from .stencil import Grid, StencilSet, build_stencil, default_width
from .subgradient import (DiracNodeView, linearize_measure, radial_bounds, subgradient_measure,
                          weighted_subgradient_measure)
from .transport import (ConeMinFunction, DiracMeasure, MaxOfPlanesPotential, check_duality,
                        eval_potential, legendre_transform, recover_heights, transport_map)

__version__ = "0.1.0"
