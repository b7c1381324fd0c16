"""Lattice ODE tier: closed mean-occupancy dynamics on the CA lattice.

The expected per-cell densities evolve under the same local rules as the
stochastic tier with products of neighbors replaced by products of means.
Written in flux form with a 1/h scaling, so the clock matches both the
stochastic and the PDE tiers. Serves as a fine-grid oracle between them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import VelocityParams

__all__ = ["MesoState", "MesoStabilityError", "meso_flux_pair", "meso_rhs", "integrate_meso"]

_BOUND_TOL = 1e-10


class MesoStabilityError(RuntimeError):
    """A density left [0,1] beyond tolerance during integration."""

    def __init__(self, time: float, cell: int, value: float):
        super().__init__(
            f"density {value} outside [0,1] at t={time}, cell {cell}; reduce the time step"
        )
        self.time = time
        self.cell = cell
        self.value = value


@dataclass
class MesoState:
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    h: float

    def __post_init__(self) -> None:
        self.rho_plus = np.asarray(self.rho_plus, dtype=float)
        self.rho_minus = np.asarray(self.rho_minus, dtype=float)
        if self.rho_plus.shape != self.rho_minus.shape or self.rho_plus.ndim != 1:
            raise ValueError("density arrays must be 1-D and of equal length")
        if self.rho_plus.shape[0] < 2:
            raise ValueError("need at least 2 cells")
        if self.h <= 0.0:
            raise ValueError(f"cell length must be > 0, got {self.h}")

    @property
    def n_cells(self) -> int:
        return self.rho_plus.shape[0]

    def copy(self) -> "MesoState":
        return MesoState(self.rho_plus.copy(), self.rho_minus.copy(), self.h)

    def mass(self) -> tuple[float, float]:
        return float(self.rho_plus.sum() * self.h), float(self.rho_minus.sum() * self.h)


def _interface_fluxes(rp: np.ndarray, rm: np.ndarray, v: VelocityParams) -> tuple[np.ndarray, np.ndarray]:
    """Directed fluxes through interface (k, k+1), periodic, vectorized.

    Rightward: walkers in k move into k+1; leftward: walkers in k+1 move
    into k. The bracketed factor blends the four interaction velocities by
    the opposite-direction occupancies of the two cells.
    """
    rp_a = np.roll(rp, -1)
    rm_a = np.roll(rm, -1)
    f_plus = (rp * (1.0 - rp_a)) * (
        (1.0 - rm_a) * (v.c0 * (1.0 - rm) + v.c1 * rm)
        + rm_a * (v.c2 * (1.0 - rm) + v.c3 * rm)
    )
    f_minus = (rm_a * (1.0 - rm)) * (
        (1.0 - rp) * (v.c0 * (1.0 - rp_a) + v.c1 * rp_a)
        + rp * (v.c2 * (1.0 - rp_a) + v.c3 * rp_a)
    )
    return f_plus, f_minus


def meso_flux_pair(state: MesoState, k: int, v: VelocityParams) -> tuple[float, float]:
    """The (rightward, leftward) fluxes through interface (k, k+1)."""
    f_plus, f_minus = _interface_fluxes(state.rho_plus, state.rho_minus, v)
    return float(f_plus[k % state.n_cells]), float(f_minus[k % state.n_cells])


def meso_rhs(state: MesoState, v: VelocityParams) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of both densities (flux differences over h)."""
    f_plus, f_minus = _interface_fluxes(state.rho_plus, state.rho_minus, v)
    d_plus = -(f_plus - np.roll(f_plus, 1)) / state.h
    d_minus = (f_minus - np.roll(f_minus, 1)) / state.h
    return d_plus, d_minus


def default_dt(state: MesoState, v: VelocityParams) -> float:
    """Step bound 0.25 h / c0, which empirically keeps densities in [0,1]."""
    return 0.25 * state.h / v.c0


def integrate_meso(
    state0: MesoState,
    v: VelocityParams,
    t_end: float,
    dt: float | None = None,
    snapshot_times: tuple[float, ...] = (),
) -> list[tuple[float, MesoState]]:
    """Forward-Euler integration; returns (realized time, state) snapshots.

    Snapshots are taken at the last step whose time does not exceed the
    requested time, matching the stochastic tier. Densities escaping
    [0,1] by more than 1e-10 raise MesoStabilityError instead of being
    clamped.
    """
    if dt is None:
        dt = default_dt(state0, v)
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    for t in snapshot_times:
        if not 0.0 <= t <= t_end + 1e-12:
            raise ValueError(f"snapshot time {t} outside [0, {t_end}]")

    n_steps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    snap_steps = [min(n_steps, int(np.floor(t / dt + 1e-9))) for t in snapshot_times]

    state = state0.copy()
    out: list[tuple[float, MesoState]] = []
    i = 0
    while i < len(snap_steps) and snap_steps[i] == 0:
        out.append((0.0, state.copy()))
        i += 1
    last_step = max(snap_steps) if snap_steps else 0
    for s in range(1, last_step + 1):
        d_plus, d_minus = meso_rhs(state, v)
        state.rho_plus += dt * d_plus
        state.rho_minus += dt * d_minus
        _check_bounds(state, s * dt)
        while i < len(snap_steps) and snap_steps[i] == s:
            out.append((s * dt, state.copy()))
            i += 1
    return out


def _check_bounds(state: MesoState, time: float) -> None:
    for rho in (state.rho_plus, state.rho_minus):
        lo = rho.argmin()
        hi = rho.argmax()
        if rho[lo] < -_BOUND_TOL:
            raise MesoStabilityError(time, int(lo), float(rho[lo]))
        if rho[hi] > 1.0 + _BOUND_TOL:
            raise MesoStabilityError(time, int(hi), float(rho[hi]))
