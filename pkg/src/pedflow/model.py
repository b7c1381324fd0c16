"""Shared mathematical kernel for the two-species corridor flow model.

Holds the four interaction velocities, the macroscopic flux pair
f(u) = u(1-u) and the quadratic slowdown factor g(u), the 2x2 flux
Jacobian, the hyperbolicity discriminant, and the nonlinear diffusion
coefficient. Every tier (stochastic lattice, lattice ODE, PDE solver)
evaluates these through the functions below, so there is a single
canonical definition of each quantity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VelocityParams",
    "flux_f",
    "flux_f_prime",
    "flux_g",
    "flux_g_prime",
    "jacobian",
    "jacobian_trace",
    "hyperbolicity_discriminant",
    "diffusion_coefficient",
    "classify_hyperbolicity_map",
    "write_hyperbolicity_csv",
]


@dataclass(frozen=True)
class VelocityParams:
    """Interaction velocities c0 >= c1, c2 >= c3 > 0 (m/s).

    c0 applies to an unobstructed walker, c1/c2 when an opposite walker
    occupies the current/target cell, c3 when both do. Derived fields
    are the coefficients of the quadratic g and the diffusion ratios.
    """

    c0: float
    c1: float
    c2: float
    c3: float
    g_a: float = field(init=False, repr=False)
    g_b: float = field(init=False, repr=False)
    g_c: float = field(init=False, repr=False)
    alpha1: float = field(init=False, repr=False)
    alpha3: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        c0, c1, c2, c3 = self.c0, self.c1, self.c2, self.c3
        if not (0.0 < c3 <= min(c1, c2) and max(c1, c2) <= c0):
            raise ValueError(
                f"velocities must satisfy 0 < c3 <= min(c1,c2) <= max(c1,c2) <= c0, "
                f"got c0={c0}, c1={c1}, c2={c2}, c3={c3}"
            )
        object.__setattr__(self, "g_a", c3 - c2 - c1 + c0)
        object.__setattr__(self, "g_b", c1 + c2 - 2.0 * c0)
        object.__setattr__(self, "g_c", c0)
        object.__setattr__(self, "alpha1", c1 / c0)
        object.__setattr__(self, "alpha3", c3 / c0)

    @classmethod
    def from_slowdown(cls, a: float, c0: float = 1.0) -> "VelocityParams":
        """Velocity family c1 = c2 = c0/a, c3 = c0/(2a) for slowdown strength a."""
        if a < 1.0:
            raise ValueError(f"slowdown strength must be >= 1, got {a}")
        return cls(c0, c0 / a, c0 / a, c0 / (2.0 * a))

    def scaled(self, lam: float) -> "VelocityParams":
        return VelocityParams(lam * self.c0, lam * self.c1, lam * self.c2, lam * self.c3)

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3])


def flux_f(u):
    """Exclusion flux factor f(u) = u(1-u)."""
    return u * (1.0 - u)


def flux_f_prime(u):
    """f'(u) = 1 - 2u."""
    return 1.0 - 2.0 * u


def flux_g(u, v: VelocityParams):
    """Slowdown factor g(u) = g_a u^2 + g_b u + c0.

    Evaluated in the blend form c0(1-u)^2 + (c1+c2) u(1-u) + c3 u^2,
    which is the same polynomial but hits g(0) = c0 and g(1) = c3
    exactly in floating point.
    """
    w = 1.0 - u
    return v.c0 * w * w + (v.c1 + v.c2) * (u * w) + v.c3 * (u * u)


def flux_g_prime(u, v: VelocityParams):
    """g'(u) = 2 g_a u + g_b."""
    return 2.0 * v.g_a * u + v.g_b


def jacobian(rho_plus: float, rho_minus: float, v: VelocityParams) -> np.ndarray:
    """Jacobian of the signed flux vector (f(r+)g(r-), -f(r-)g(r+)) as a 2x2 array."""
    fp_p = flux_f_prime(rho_plus)
    fp_m = flux_f_prime(rho_minus)
    return np.array(
        [
            [fp_p * flux_g(rho_minus, v), flux_f(rho_plus) * flux_g_prime(rho_minus, v)],
            [-flux_f(rho_minus) * flux_g_prime(rho_plus, v), -fp_m * flux_g(rho_plus, v)],
        ]
    )


def jacobian_trace(rho_plus, rho_minus, v: VelocityParams):
    """Trace of the flux Jacobian: f'(r+)g(r-) - f'(r-)g(r+). Broadcasts."""
    return flux_f_prime(rho_plus) * flux_g(rho_minus, v) - flux_f_prime(rho_minus) * flux_g(
        rho_plus, v
    )


def hyperbolicity_discriminant(rho_plus, rho_minus, v: VelocityParams):
    """Eigenvalue discriminant of the flux Jacobian. Real eigenvalues iff > 0.

    Broadcasts over array inputs. Written so that swapping the two
    densities gives a bit-identical result.
    """
    s = flux_f_prime(rho_minus) * flux_g(rho_plus, v) + flux_f_prime(rho_plus) * flux_g(
        rho_minus, v
    )
    cross = (flux_f(rho_minus) * flux_f(rho_plus)) * (
        flux_g_prime(rho_minus, v) * flux_g_prime(rho_plus, v)
    )
    return s * s - 4.0 * cross


def diffusion_coefficient(rho_opposite, v: VelocityParams, eps: float):
    """Nonlinear diffusivity (eps c0/2)[(1-r)^2 + 2 a1 r(1-r) + a3 r^2].

    `rho_opposite` is the density of the opposite-direction species: the
    rightward equation diffuses against the leftward density and vice
    versa. Reduces to eps*c0/2 at r=0 and eps*c3/2 at r=1.
    """
    if eps < 0.0:
        raise ValueError(f"viscosity coefficient must be >= 0, got {eps}")
    r = rho_opposite
    w = 1.0 - r
    shape = w * w + 2.0 * v.alpha1 * (r * w) + v.alpha3 * (r * r)
    return (0.5 * eps * v.c0) * shape


def classify_hyperbolicity_map(
    v: VelocityParams, resolution: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample the nonhyperbolic region of the unit density square.

    Evaluates the discriminant at the centers of a resolution x resolution
    grid of (rho_minus, rho_plus) and flags D <= 0 (the boundary counts as
    nonhyperbolic). Returns (rho_minus_centers, rho_plus_centers, flags)
    with flags[i, j] for (rho_minus_centers[i], rho_plus_centers[j]).
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    centers = (np.arange(resolution) + 0.5) / resolution
    rm = centers[:, None]
    rp = centers[None, :]
    flags = hyperbolicity_discriminant(rp, rm, v) <= 0.0
    return centers.copy(), centers.copy(), flags


def write_hyperbolicity_csv(path, rho_minus, rho_plus, flags) -> None:
    """Write the classification grid: one row per sample, flag as 0/1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho_minus", "rho_plus", "nonhyperbolic"])
        for i, rm in enumerate(rho_minus):
            for j, rp in enumerate(rho_plus):
                w.writerow([repr(float(rm)), repr(float(rp)), int(flags[i, j])])
