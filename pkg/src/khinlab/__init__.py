"""Exact-arithmetic laboratory for convergence-case approximation on
hyperplanes: exterior algebra, lattice flows, and shell-measure scans."""

__version__ = "0.1.0"

from .exactnum import Interval, Scalar, as_scalar  # noqa: F401
from .exterior import Multivector  # noqa: F401
from .affine import AffineForm, AffineMultivector, Box  # noqa: F401
