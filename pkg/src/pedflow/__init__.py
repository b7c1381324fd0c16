"""Multi-tier simulation toolkit for bidirectional corridor pedestrian flow.

Three tiers of the same model on one clock and frame: a stochastic
exclusion lattice with slowdown interactions, its closed mean-density
lattice ODE, and the limiting two-species PDE system (inviscid or with
nonlinear cross-diffusion) solved by a central-upwind scheme.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    VelocityParams,
    classify_hyperbolicity_map,
    diffusion_coefficient,
    flux_f,
    flux_g,
    hyperbolicity_discriminant,
    jacobian,
)
