"""releuler2d: pseudospectral lab for 2D relativistic Euler in good variables.

Evolves the symmetric-hyperbolic form of the equations in (log-enthalpy,
rescaled velocity) on a periodic grid and numerically certifies the derived
structures: wave-transport reformulation, elliptic velocity splitting,
vorticity transport, stiff-fluid degeneration, acoustic null geometry, and
energy/frequency diagnostics.
"""

from .fields import Grid2D, ScalarField2D, DyadicBand
from .thermo import EquationOfState, FluidState, AcousticMetric

__all__ = [
    "Grid2D", "ScalarField2D", "DyadicBand",
    "EquationOfState", "FluidState", "AcousticMetric",
]

__version__ = "0.1.0"
