"""Exact dynamics of polynomials over non-archimedean fields on the Berkovich affine line.

Valuations, disk radii and derivative sizes are kept as exact rationals in
log coordinates (``log_p |x| = -v(x)``), so every identity and inequality is
checked with an exact margin.
"""

from .berk import BerkPoint, compare, gauss_point, join, precedes, rho, xi
from .dyn import DynamicsContext, KappaBounds, analyze, base_point, kappa_d, kappa_of_f
from .errors import BerkdynError, BudgetExceeded, InconsistentGrid, InputError, VerificationFailure
from .grid import FibonacciGrid, LengthTable, MarkedGrid, Seeds, fibonacci_grid, fibonacci_seeds, length_engine
from .lyap import OrbitMeasure, LyapunovReport, Verdict, lyapunov_sequence, orbit_measure_exponent
from .parse import parse_element, parse_poly
from .valfield import FieldDescriptor, FieldElement, ValuedPoly

__version__ = "0.1.0"

__all__ = [
    "BerkPoint", "compare", "gauss_point", "join", "precedes", "rho", "xi",
    "DynamicsContext", "KappaBounds", "analyze", "base_point", "kappa_d", "kappa_of_f",
    "BerkdynError", "BudgetExceeded", "InconsistentGrid", "InputError", "VerificationFailure",
    "FibonacciGrid", "LengthTable", "MarkedGrid", "Seeds", "fibonacci_grid", "fibonacci_seeds", "length_engine",
    "OrbitMeasure", "LyapunovReport", "Verdict", "lyapunov_sequence", "orbit_measure_exponent",
    "parse_element", "parse_poly",
    "FieldDescriptor", "FieldElement", "ValuedPoly",
]
