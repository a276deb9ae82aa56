"""
Jordan Stability Package.

Numerical verification of the fixed-point stability of approximate
n-Jordan derivations on matrix C*-algebras.
"""

__version__ = "0.1.0"

from .core import *  # noqa
