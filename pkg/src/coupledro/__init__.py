"""Robust linear programs under coupled uncertainty sets.

Modules: ``lp_core`` (simplex), ``polyhedra`` (sets and geometry),
``shrinkage`` (factors and bound checks), ``robust_model`` (problem types and
reformulations), ``solvers`` (solution methods), ``experiments`` (generators
and sweeps).
"""

from .errors import *  # noqa: F401,F403
from .lp_core import LinearProgram, LpSolution, Status, solve_lp
from .polyhedra import UncertaintySpec, box_spec
from .robust_model import CoeffRobustProblem, RhsRobustProblem
from .shrinkage import bound_check, compute_coeff_factors, compute_rhs_factors
from .solvers import SolveResult, solve

__version__ = "0.1.0"
