"""Planar viscous shock stability workbench on the duct R x T^(d-1).

Builds the shock states, the viscous profile, the oscillatory backgrounds,
the shift curves and the composite ansatz, evolves the full nonlinear system
in a shock-attached frame, and measures every stability claim numerically.
"""

from shockduct.gasdyn import GasModel, ShockTriple, solve_shock
from shockduct.profile import Profile, ProfileSpec, solve_profile

__version__ = "0.1.0"

__all__ = [
    "GasModel",
    "ShockTriple",
    "solve_shock",
    "Profile",
    "ProfileSpec",
    "solve_profile",
    "__version__",
]
