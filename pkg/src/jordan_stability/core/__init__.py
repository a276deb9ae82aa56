"""
Core Stability Module.

This module provides the numerical pieces of the stability theory:
- The matrix C*-algebra M_k(C) (operator norm, involution, seeded sampling)
- Maps on the algebra (inner derivations, controlled perturbations, odd parts)
- Control functions, their scaling law and the generalized metric
- Defect functionals (Jensen-type, n-Jordan, star) and theta fitting
- The fixed-point corrector D(x) = lim f(2^m x) / 2^m and its diagnostics
- Structure checks and closed-form error-bound certificates
"""

from . import algebra  # noqa
from . import control  # noqa
from . import corrector  # noqa
from . import defects  # noqa
from . import maps  # noqa
from . import verify  # noqa
