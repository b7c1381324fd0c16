"""PDE tier: semi-discrete second-order central-upwind finite volumes.

Solves the two-species system rho_t + F(rho)_x = (Q rho_x)_x on a periodic
grid, with F = (f(r+)g(r-), -f(r-)g(r+)) and the diagonal nonlinear
viscosity Q (zero when eps=0). Piecewise-linear minmod reconstruction,
one-sided local speeds with separate hyperbolic/nonhyperbolic estimates,
explicit parabolic fluxes, and three-stage strong-stability-preserving
Runge-Kutta stepping under a CFL-derived dt.

Densities leaving [0,1] are reported in diagnostics, never clamped: in
the nonhyperbolic regime the inviscid system genuinely blows up, and the
solver must reproduce that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    VelocityParams,
    diffusion_coefficient,
    flux_f,
    flux_g,
    hyperbolicity_discriminant,
    jacobian_trace,
)

__all__ = [
    "Grid",
    "PDEState",
    "SchemeParams",
    "NumericsError",
    "minmod",
    "reconstruct",
    "local_speeds",
    "hyperbolic_flux",
    "parabolic_flux",
    "semi_discrete_rhs",
    "cfl_dt",
    "ssp_rk3_step",
    "run_pde",
]

_SPEED_FLOOR = 1e-12
_GAP_FLOOR = 1e-12


class NumericsError(RuntimeError):
    """The solution lost finiteness (NaN/Inf) during a run."""

    def __init__(self, time: float, cell: int):
        super().__init__(f"non-finite density at t={time}, cell {cell}")
        self.time = time
        self.cell = cell


@dataclass(frozen=True)
class Grid:
    length: float
    m: int

    def __post_init__(self) -> None:
        if self.m < 4:
            raise ValueError(f"need at least 4 cells, got {self.m}")
        if self.length <= 0.0:
            raise ValueError(f"domain length must be > 0, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.m

    def centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.dx


@dataclass
class PDEState:
    rho_plus: np.ndarray
    rho_minus: np.ndarray

    def __post_init__(self) -> None:
        self.rho_plus = np.asarray(self.rho_plus, dtype=float)
        self.rho_minus = np.asarray(self.rho_minus, dtype=float)
        if self.rho_plus.shape != self.rho_minus.shape or self.rho_plus.ndim != 1:
            raise ValueError("density arrays must be 1-D and of equal length")

    def copy(self) -> "PDEState":
        return PDEState(self.rho_plus.copy(), self.rho_minus.copy())

    def mass(self, dx: float) -> tuple[float, float]:
        return float(self.rho_plus.sum() * dx), float(self.rho_minus.sum() * dx)


@dataclass(frozen=True)
class SchemeParams:
    theta: float = 1.0
    cfl: float = 0.5
    eps: float = 0.0

    def __post_init__(self) -> None:
        if not 1.0 <= self.theta <= 2.0:
            raise ValueError(f"minmod parameter must lie in [1,2], got {self.theta}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"CFL number must lie in (0,1], got {self.cfl}")
        if self.eps < 0.0:
            raise ValueError(f"viscosity coefficient must be >= 0, got {self.eps}")


def minmod(z1, z2, z3):
    """Smallest argument if all positive, largest if all negative, else 0."""
    mn = np.minimum(np.minimum(z1, z2), z3)
    mx = np.maximum(np.maximum(z1, z2), z3)
    return np.where(mn > 0.0, mn, np.where(mx < 0.0, mx, 0.0))


def _limited_slope(u: np.ndarray, theta: float, dx: float) -> np.ndarray:
    back = u - np.roll(u, 1)
    fwd = np.roll(u, -1) - u
    central = (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * dx)
    return minmod(theta * back / dx, central, theta * fwd / dx)


def reconstruct(
    state: PDEState, theta: float, dx: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Piecewise-linear interface values (east_p, west_p, east_m, west_m)."""
    half = 0.5 * dx
    sp = _limited_slope(state.rho_plus, theta, dx)
    sm = _limited_slope(state.rho_minus, theta, dx)
    return (
        state.rho_plus + half * sp,
        state.rho_plus - half * sp,
        state.rho_minus + half * sm,
        state.rho_minus - half * sm,
    )


def local_speeds(plus_l, minus_l, plus_r, minus_r, v: VelocityParams):
    """One-sided speed bounds (a_plus, a_minus) at an interface.

    The left state is the east value of the cell before the interface,
    the right state the west value of the cell after it. If either side
    has a negative discriminant the symmetric nonhyperbolic estimate
    (the magnitude of the complex eigenvalues) is used instead.
    """
    r_l = jacobian_trace(plus_l, minus_l, v)
    r_r = jacobian_trace(plus_r, minus_r, v)
    d_l = hyperbolicity_discriminant(plus_l, minus_l, v)
    d_r = hyperbolicity_discriminant(plus_r, minus_r, v)

    sq_l = np.sqrt(np.maximum(d_l, 0.0))
    sq_r = np.sqrt(np.maximum(d_r, 0.0))
    a_plus_h = 0.5 * np.maximum(np.maximum(r_l + sq_l, r_r + sq_r), 0.0)
    a_minus_h = 0.5 * np.minimum(np.minimum(r_l - sq_l, r_r - sq_r), 0.0)

    mod_l = np.sqrt(np.maximum(r_l * r_l - d_l, 0.0))
    mod_r = np.sqrt(np.maximum(r_r * r_r - d_r, 0.0))
    a_plus_n = 0.5 * np.maximum(mod_l, mod_r)

    hyp = (d_l >= 0.0) & (d_r >= 0.0)
    a_plus = np.where(hyp, a_plus_h, a_plus_n)
    a_minus = np.where(hyp, a_minus_h, -a_plus_n)
    return a_plus, a_minus


def _flux_vector(rho_plus, rho_minus, v: VelocityParams):
    """Signed flux components: the leftward species moves against x."""
    return flux_f(rho_plus) * flux_g(rho_minus, v), -(flux_f(rho_minus) * flux_g(rho_plus, v))


def hyperbolic_flux(plus_l, minus_l, plus_r, minus_r, a_plus, a_minus, v: VelocityParams):
    """Central-upwind numerical flux, componentwise for both species.

    Falls back to the arithmetic mean of the side fluxes when the speed
    gap is below 1e-12 (the limit of the formula at equal states).
    """
    f1_l, f2_l = _flux_vector(plus_l, minus_l, v)
    f1_r, f2_r = _flux_vector(plus_r, minus_r, v)
    gap = a_plus - a_minus
    ok = gap >= _GAP_FLOOR
    safe_gap = np.where(ok, gap, 1.0)
    spread = a_plus * a_minus / safe_gap
    h1 = np.where(
        ok,
        (a_plus * f1_l - a_minus * f1_r) / safe_gap + spread * (plus_r - plus_l),
        0.5 * (f1_l + f1_r),
    )
    h2 = np.where(
        ok,
        (a_plus * f2_l - a_minus * f2_r) / safe_gap + spread * (minus_r - minus_l),
        0.5 * (f2_l + f2_r),
    )
    return h1, h2


def parabolic_flux(state: PDEState, east_p, west_p, east_m, west_m, dx: float, v: VelocityParams, eps: float):
    """Viscous interface flux Q(midpoint) * (cell-average difference)/dx."""
    mid_p = 0.5 * (east_p + np.roll(west_p, -1))
    mid_m = 0.5 * (east_m + np.roll(west_m, -1))
    q1 = diffusion_coefficient(mid_m, v, eps)
    q2 = diffusion_coefficient(mid_p, v, eps)
    p1 = q1 * (np.roll(state.rho_plus, -1) - state.rho_plus) / dx
    p2 = q2 * (np.roll(state.rho_minus, -1) - state.rho_minus) / dx
    return p1, p2


def _interface_terms(state: PDEState, dx: float, params: SchemeParams, v: VelocityParams):
    east_p, west_p, east_m, west_m = reconstruct(state, params.theta, dx)
    plus_l, minus_l = east_p, east_m
    plus_r, minus_r = np.roll(west_p, -1), np.roll(west_m, -1)
    a_plus, a_minus = local_speeds(plus_l, minus_l, plus_r, minus_r, v)
    return east_p, west_p, east_m, west_m, plus_l, minus_l, plus_r, minus_r, a_plus, a_minus


def semi_discrete_rhs(state: PDEState, dx: float, params: SchemeParams, v: VelocityParams):
    """Time derivatives of both cell-average arrays."""
    east_p, west_p, east_m, west_m, plus_l, minus_l, plus_r, minus_r, a_plus, a_minus = (
        _interface_terms(state, dx, params, v)
    )
    h1, h2 = hyperbolic_flux(plus_l, minus_l, plus_r, minus_r, a_plus, a_minus, v)
    if params.eps > 0.0:
        p1, p2 = parabolic_flux(state, east_p, west_p, east_m, west_m, dx, v, params.eps)
        d_plus = (-(h1 - np.roll(h1, 1)) + (p1 - np.roll(p1, 1))) / dx
        d_minus = (-(h2 - np.roll(h2, 1)) + (p2 - np.roll(p2, 1))) / dx
    else:
        d_plus = -(h1 - np.roll(h1, 1)) / dx
        d_minus = -(h2 - np.roll(h2, 1)) / dx
    return d_plus, d_minus


def cfl_dt(state: PDEState, dx: float, params: SchemeParams, v: VelocityParams) -> float:
    """Stable step: cfl * min(dx/amax, dx^2/(2 qmax)), amax floored at 1e-12."""
    east_p, west_p, east_m, west_m, plus_l, minus_l, plus_r, minus_r, a_plus, a_minus = (
        _interface_terms(state, dx, params, v)
    )
    amax = max(float(np.max(a_plus)), float(np.max(-a_minus)), _SPEED_FLOOR)
    dt = dx / amax
    if params.eps > 0.0:
        mid_p = 0.5 * (east_p + np.roll(west_p, -1))
        mid_m = 0.5 * (east_m + np.roll(west_m, -1))
        qmax = max(
            float(np.max(diffusion_coefficient(mid_m, v, params.eps))),
            float(np.max(diffusion_coefficient(mid_p, v, params.eps))),
        )
        if qmax > 0.0:
            dt = min(dt, dx * dx / (2.0 * qmax))
    return params.cfl * dt


def ssp_rk3_step(state: PDEState, dt: float, rhs) -> PDEState:
    """Three-stage strong-stability-preserving Runge-Kutta step."""
    d1p, d1m = rhs(state)
    u1 = PDEState(state.rho_plus + dt * d1p, state.rho_minus + dt * d1m)
    d2p, d2m = rhs(u1)
    u2 = PDEState(
        0.75 * state.rho_plus + 0.25 * (u1.rho_plus + dt * d2p),
        0.75 * state.rho_minus + 0.25 * (u1.rho_minus + dt * d2m),
    )
    d3p, d3m = rhs(u2)
    third = 1.0 / 3.0
    return PDEState(
        third * state.rho_plus + 2.0 * third * (u2.rho_plus + dt * d3p),
        third * state.rho_minus + 2.0 * third * (u2.rho_minus + dt * d3m),
    )


def _check_finite(state: PDEState, time: float) -> None:
    for rho in (state.rho_plus, state.rho_minus):
        bad = ~np.isfinite(rho)
        if bad.any():
            raise NumericsError(time, int(np.argmax(bad)))


def run_pde(
    grid: Grid,
    state0: PDEState,
    params: SchemeParams,
    v: VelocityParams,
    t_end: float,
    snapshot_times: tuple[float, ...],
) -> list[tuple[float, PDEState]]:
    """Advance to each snapshot time exactly; returns (time, state) pairs.

    The CFL step is recomputed from the current state each step and
    truncated to land on snapshot times, so runs are deterministic and
    directly comparable across tiers.
    """
    times = [float(t) for t in snapshot_times]
    if times != sorted(times):
        raise ValueError("snapshot times must be sorted")
    for t in times:
        if not 0.0 <= t <= t_end + 1e-12:
            raise ValueError(f"snapshot time {t} outside [0, {t_end}]")
    if state0.rho_plus.shape[0] != grid.m:
        raise ValueError("state length does not match the grid")

    state = state0.copy()
    out: list[tuple[float, PDEState]] = []
    t = 0.0
    i = 0
    while i < len(times) and times[i] <= 1e-12:
        out.append((0.0, state.copy()))
        i += 1
    rhs = lambda s: semi_discrete_rhs(s, grid.dx, params, v)
    while i < len(times):
        target = times[i]
        while t < target - 1e-12:
            dt = cfl_dt(state, grid.dx, params, v)
            if t + dt > target:
                dt = target - t
            state = ssp_rk3_step(state, dt, rhs)
            t += dt
            _check_finite(state, t)
        t = target
        while i < len(times) and times[i] <= t + 1e-12:
            out.append((target, state.copy()))
            i += 1
    return out
