"""Balanced measures of rational maps: pullback approximation, Julia-set bounds,
and harmonic measure by walk-on-spheres."""

__version__ = "0.1.0"

from .errors import (BLError, BudgetExceeded, CoprimalityError, EmptySetError, ExceptionalPointError,
                     GeometryUnderflowError, InputError, MeasureError, NoRepellingPointFound, NoValidBallError,
                     RootConvergenceError, SolverError, WalkBudgetExceeded)
from .tolerances import Tolerances
from .sphere import (RationalMap, SpherePoint, critical_points, evaluate, iterate, multiplier, periodic_points,
                     preimages, sph_dist)
from .measures import DiscreteMeasure, TestFunction, enumerate_family, integrate, load_measure, thin_measure
from .transport import w1, w1_dual_lb
from .pullback import (balanced_defect, bl_measure, convergence_study, invariance_defect, pullback_measure)
from .julia import filled_julia_outer, hausdorff, julia_inner
from .walk import (CompactSetOracle, DiskOracle, JuliaOracle, WalkConfig, capacity, harmonic_measure, wos_sample)
from .gapdomain import GapDomainSpec, gap_domain, gate_mass
