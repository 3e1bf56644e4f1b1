"""A small SMT-LIB v2 solver for quantifier-free boolean + rational-order
problems, shipped as the default backend for the constraint learner.

Runs as a subprocess (`python -m regrobust.minismt`) speaking SMT-LIB over
stdio: CDCL SAT core plus a difference-order theory over the rationals.
"""

from .sat import SatSolver
from .theory import OrderTheory

__all__ = ["SatSolver", "OrderTheory"]
