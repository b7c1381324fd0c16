"""Built-in experiment setups and cross-tier plumbing.

A ScenarioSpec describes one corridor experiment once; expand() turns it
into matched stochastic, lattice-ODE, and PDE inputs that share the same
velocities, physical frame, clock, and initial mass. Also holds the
conservative CA-to-grid binning and the discrepancy metrics used to
compare tiers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .ca import CAConfig, DensityInit, MixedSectorsInit, RedLightInit
from .macro import Grid, PDEState, SchemeParams
from .meso import MesoState
from .model import VelocityParams

__all__ = [
    "CASettings",
    "PDESettings",
    "RedLightPayload",
    "FullyMixedPayload",
    "PlateauPayload",
    "ScenarioSpec",
    "ExpandedScenario",
    "ComparisonEntry",
    "FrameMismatchError",
    "builtin_scenarios",
    "get_scenario",
    "expand",
    "bin_to_grid",
    "compare",
    "total_variation",
    "piecewise_cell_averages",
    "write_report_csv",
    "scenario_to_dict",
    "scenario_from_dict",
    "load_scenario",
]


class FrameMismatchError(ValueError):
    """Two tiers do not cover the same physical domain."""


@dataclass(frozen=True)
class CASettings:
    n_cells: int
    dt: float
    mc_runs: int
    seed: int


@dataclass(frozen=True)
class PDESettings:
    m: int
    theta: float = 1.0
    cfl: float = 0.5
    eps: float = 0.0


@dataclass(frozen=True)
class RedLightPayload:
    """Packed opposing blocks: 1-based lattice cells n1..n2 and its mirror."""

    n1: int
    n2: int


@dataclass(frozen=True)
class FullyMixedPayload:
    """Per-sector walker counts, uniformly shuffled inside each sector."""

    counts_plus: tuple[int, ...]
    counts_minus: tuple[int, ...]
    cells_per_sector: int


@dataclass(frozen=True)
class PlateauPayload:
    """Piecewise-constant density blocks (lo, hi, value) per species."""

    plus: tuple[tuple[float, float, float], ...]
    minus: tuple[tuple[float, float, float], ...]


Payload = RedLightPayload | FullyMixedPayload | PlateauPayload


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    family: str  # red_light | fully_mixed | nonhyperbolic | custom
    velocities: VelocityParams
    length: float
    ca: CASettings
    pde: PDESettings
    t_end: float
    snapshot_times: tuple[float, ...]
    payload: Payload

    @property
    def cell_length(self) -> float:
        return self.length / self.ca.n_cells


@dataclass
class ExpandedScenario:
    ca: CAConfig
    meso: MesoState
    grid: Grid
    pde_state: PDEState
    pde_params: SchemeParams
    velocities: VelocityParams
    t_end: float
    snapshot_times: tuple[float, ...]


@dataclass(frozen=True)
class ComparisonEntry:
    time: float
    species: str
    l1: float
    linf: float
    tv_ca: float
    tv_pde: float
    min_pde: float
    max_pde: float


# Sector counts for the fully-mixed scenarios: the source experiment fixes
# 35 walkers per direction over 30 sectors but not their split. These were
# drawn once from default_rng(20240501).multinomial(35, [1/30]*30) and
# frozen for reproducibility; override via the payload for other splits.
_MIXED_PLUS = (0, 1, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 4, 1, 2, 0, 3, 2, 0,
               0, 3, 3, 3, 0, 2, 1, 1, 3, 1)
_MIXED_MINUS = (1, 0, 0, 1, 1, 1, 3, 1, 1, 0, 3, 0, 0, 1, 3, 0, 2, 0, 2, 1,
                1, 1, 2, 3, 1, 2, 2, 0, 1, 1)


def builtin_scenarios() -> list[ScenarioSpec]:
    """The bundled experiments, one clock and frame per scenario."""
    out = []
    for a in (2, 3):
        out.append(
            ScenarioSpec(
                name=f"redlight-a{a}",
                family="red_light",
                velocities=VelocityParams.from_slowdown(a, c0=0.8),
                length=280.0,
                ca=CASettings(n_cells=1400, dt=0.01, mc_runs=5000, seed=52801 + a),
                pde=PDESettings(m=350),
                t_end=210.0,
                snapshot_times=(80.0, 110.0, 140.0, 170.0, 210.0),
                payload=RedLightPayload(n1=301, n2=340),
            )
        )
    for a in (2, 3):
        out.append(
            ScenarioSpec(
                name=f"mixed-a{a}",
                family="fully_mixed",
                velocities=VelocityParams.from_slowdown(a, c0=1.0),
                length=210.0,
                ca=CASettings(n_cells=450, dt=0.005, mc_runs=3000, seed=52101 + a),
                pde=PDESettings(m=210, eps=0.5),
                t_end=100.0,
                snapshot_times=(0.0, 25.0, 50.0, 75.0, 100.0),
                payload=FullyMixedPayload(_MIXED_PLUS, _MIXED_MINUS, cells_per_sector=15),
            )
        )
    out.append(
        ScenarioSpec(
            name="nonhyp-a2",
            family="nonhyperbolic",
            velocities=VelocityParams.from_slowdown(2, c0=1.0),
            length=420.0,
            ca=CASettings(n_cells=900, dt=0.005, mc_runs=3000, seed=54201),
            pde=PDESettings(m=1280),
            t_end=45.0,
            snapshot_times=(0.0, 15.0, 30.0, 45.0),
            payload=PlateauPayload(
                plus=((140.0, 210.0, 0.6),),
                minus=((186.6, 233.3, 0.6),),
            ),
        )
    )
    return out


def get_scenario(name: str) -> ScenarioSpec:
    for spec in builtin_scenarios():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in builtin_scenarios())
    raise KeyError(f"unknown scenario {name!r}; built-ins: {known}")


def piecewise_cell_averages(intervals, edges: np.ndarray) -> np.ndarray:
    """Exact cell averages of a sum of constant blocks over given cell edges."""
    widths = np.diff(edges)
    avg = np.zeros(len(edges) - 1)
    for lo, hi, value in intervals:
        overlap = np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo)
        avg += value * np.clip(overlap, 0.0, None) / widths
    return avg


def _density_intervals(spec: ScenarioSpec) -> tuple[tuple, tuple]:
    """The initial density of both species as (lo, hi, value) blocks."""
    h = spec.cell_length
    n = spec.ca.n_cells
    p = spec.payload
    if isinstance(p, RedLightPayload):
        plus = (((p.n1 - 1) * h, p.n2 * h, 1.0),)
        minus = (((n - p.n2 - 1) * h, (n - p.n1) * h, 1.0),)
        return plus, minus
    if isinstance(p, FullyMixedPayload):
        sector_len = spec.length / len(p.counts_plus)
        plus = tuple(
            (i * sector_len, (i + 1) * sector_len, c / p.cells_per_sector)
            for i, c in enumerate(p.counts_plus)
        )
        minus = tuple(
            (i * sector_len, (i + 1) * sector_len, c / p.cells_per_sector)
            for i, c in enumerate(p.counts_minus)
        )
        return plus, minus
    if isinstance(p, PlateauPayload):
        return p.plus, p.minus
    raise TypeError(f"unknown payload type: {type(p)!r}")


def expand(spec: ScenarioSpec) -> ExpandedScenario:
    """Matched inputs for all three tiers from one scenario.

    The stochastic and lattice-ODE tiers share the CA lattice; the PDE
    tier gets exact cell averages of the same initial density, so the
    three initial masses coincide to rounding.
    """
    n = spec.ca.n_cells
    h = spec.cell_length
    grid = Grid(spec.length, spec.pde.m)
    if abs(n * h - spec.length) > 1e-9 * spec.length:
        raise FrameMismatchError(f"CA frame {n}*{h} != domain length {spec.length}")

    plus_iv, minus_iv = _density_intervals(spec)
    ca_edges = np.linspace(0.0, spec.length, n + 1)
    rho_plus_ca = piecewise_cell_averages(plus_iv, ca_edges)
    rho_minus_ca = piecewise_cell_averages(minus_iv, ca_edges)

    if isinstance(spec.payload, RedLightPayload):
        init = RedLightInit(spec.payload.n1, spec.payload.n2)
    elif isinstance(spec.payload, FullyMixedPayload):
        init = MixedSectorsInit(
            spec.payload.counts_plus, spec.payload.counts_minus, spec.payload.cells_per_sector
        )
    else:
        init = DensityInit(tuple(rho_plus_ca), tuple(rho_minus_ca))

    ca_cfg = CAConfig(
        n_cells=n,
        cell_length=h,
        dt=spec.ca.dt,
        t_end=spec.t_end,
        snapshot_times=spec.snapshot_times,
        mc_runs=spec.ca.mc_runs,
        seed=spec.ca.seed,
        velocities=spec.velocities,
        init=init,
    )
    meso_state = MesoState(rho_plus_ca.copy(), rho_minus_ca.copy(), h)

    pde_edges = np.linspace(0.0, spec.length, grid.m + 1)
    pde_state = PDEState(
        piecewise_cell_averages(plus_iv, pde_edges),
        piecewise_cell_averages(minus_iv, pde_edges),
    )
    pde_params = SchemeParams(theta=spec.pde.theta, cfl=spec.pde.cfl, eps=spec.pde.eps)
    return ExpandedScenario(
        ca=ca_cfg,
        meso=meso_state,
        grid=grid,
        pde_state=pde_state,
        pde_params=pde_params,
        velocities=spec.velocities,
        t_end=spec.t_end,
        snapshot_times=spec.snapshot_times,
    )


def bin_to_grid(values: np.ndarray, ca_h: float, grid: Grid) -> np.ndarray:
    """Conservative overlap-weighted rebinning of CA-cell values to the grid.

    Works through the cumulative mass, which is piecewise linear for
    cellwise-constant data, so total mass is preserved exactly.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if abs(n * ca_h - grid.length) > 1e-9 * max(grid.length, 1.0):
        raise FrameMismatchError(f"CA frame {n}*{ca_h} != grid length {grid.length}")
    if n == grid.m:
        return values.copy()
    ca_edges = np.linspace(0.0, grid.length, n + 1)
    cum = np.concatenate(([0.0], np.cumsum(values * ca_h)))
    grid_edges = np.linspace(0.0, grid.length, grid.m + 1)
    mass = np.interp(grid_edges, ca_edges, cum)
    return np.diff(mass) / grid.dx


def total_variation(values: np.ndarray) -> float:
    """Periodic total variation: sum of absolute neighbor jumps."""
    values = np.asarray(values, dtype=float)
    return float(np.abs(np.diff(values)).sum() + abs(values[0] - values[-1]))


def compare(
    binned_plus: np.ndarray,
    binned_minus: np.ndarray,
    pde: PDEState,
    dx: float,
    time: float = 0.0,
) -> list[ComparisonEntry]:
    """Per-species L1/Linf distances plus shape diagnostics for one snapshot."""
    entries = []
    for species, ca_field, pde_field in (
        ("plus", np.asarray(binned_plus, dtype=float), pde.rho_plus),
        ("minus", np.asarray(binned_minus, dtype=float), pde.rho_minus),
    ):
        if ca_field.shape != pde_field.shape:
            raise ValueError(
                f"length mismatch: {ca_field.shape[0]} binned vs {pde_field.shape[0]} grid cells"
            )
        diff = np.abs(ca_field - pde_field)
        entries.append(
            ComparisonEntry(
                time=time,
                species=species,
                l1=float(diff.sum() * dx),
                linf=float(diff.max()),
                tv_ca=total_variation(ca_field),
                tv_pde=total_variation(pde_field),
                min_pde=float(pde_field.min()),
                max_pde=float(pde_field.max()),
            )
        )
    return entries


def write_report_csv(path, entries) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("time,species,l1,linf,tv_ca,tv_pde,min_pde,max_pde\n")
        for e in entries:
            fh.write(
                f"{e.time!r},{e.species},{e.l1!r},{e.linf!r},{e.tv_ca!r},"
                f"{e.tv_pde!r},{e.min_pde!r},{e.max_pde!r}\n"
            )


def _payload_to_dict(p: Payload) -> dict:
    if isinstance(p, RedLightPayload):
        return {"kind": "red_light", "n1": p.n1, "n2": p.n2}
    if isinstance(p, FullyMixedPayload):
        return {
            "kind": "fully_mixed",
            "counts_plus": list(p.counts_plus),
            "counts_minus": list(p.counts_minus),
            "cells_per_sector": p.cells_per_sector,
        }
    if isinstance(p, PlateauPayload):
        return {
            "kind": "plateaus",
            "plus": [list(iv) for iv in p.plus],
            "minus": [list(iv) for iv in p.minus],
        }
    raise TypeError(f"unknown payload type: {type(p)!r}")


def _payload_from_dict(d: dict) -> Payload:
    kind = d.get("kind")
    if kind == "red_light":
        return RedLightPayload(int(d["n1"]), int(d["n2"]))
    if kind == "fully_mixed":
        return FullyMixedPayload(
            tuple(int(c) for c in d["counts_plus"]),
            tuple(int(c) for c in d["counts_minus"]),
            int(d["cells_per_sector"]),
        )
    if kind == "plateaus":
        return PlateauPayload(
            tuple(tuple(float(x) for x in iv) for iv in d["plus"]),
            tuple(tuple(float(x) for x in iv) for iv in d["minus"]),
        )
    raise ValueError(f"unknown payload kind: {kind!r}")


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "name": spec.name,
        "family": spec.family,
        "velocities": {
            "c0": spec.velocities.c0,
            "c1": spec.velocities.c1,
            "c2": spec.velocities.c2,
            "c3": spec.velocities.c3,
        },
        "length": spec.length,
        "ca": {
            "n_cells": spec.ca.n_cells,
            "dt": spec.ca.dt,
            "mc_runs": spec.ca.mc_runs,
            "seed": spec.ca.seed,
        },
        "pde": {
            "m": spec.pde.m,
            "theta": spec.pde.theta,
            "cfl": spec.pde.cfl,
            "eps": spec.pde.eps,
        },
        "t_end": spec.t_end,
        "snapshot_times": list(spec.snapshot_times),
        "payload": _payload_to_dict(spec.payload),
    }


def scenario_from_dict(d: dict) -> ScenarioSpec:
    vel = d["velocities"]
    return ScenarioSpec(
        name=str(d["name"]),
        family=str(d["family"]),
        velocities=VelocityParams(
            float(vel["c0"]), float(vel["c1"]), float(vel["c2"]), float(vel["c3"])
        ),
        length=float(d["length"]),
        ca=CASettings(
            n_cells=int(d["ca"]["n_cells"]),
            dt=float(d["ca"]["dt"]),
            mc_runs=int(d["ca"]["mc_runs"]),
            seed=int(d["ca"]["seed"]),
        ),
        pde=PDESettings(
            m=int(d["pde"]["m"]),
            theta=float(d["pde"].get("theta", 1.0)),
            cfl=float(d["pde"].get("cfl", 0.5)),
            eps=float(d["pde"].get("eps", 0.0)),
        ),
        t_end=float(d["t_end"]),
        snapshot_times=tuple(float(t) for t in d["snapshot_times"]),
        payload=_payload_from_dict(d["payload"]),
    )


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def with_overrides(
    spec: ScenarioSpec,
    seed: int | None = None,
    mc_runs: int | None = None,
    eps: float | None = None,
    dx: float | None = None,
    t_end: float | None = None,
    snapshot_times: tuple[float, ...] | None = None,
) -> ScenarioSpec:
    """Apply CLI-style overrides, keeping the physical frame intact."""
    ca = spec.ca
    pde = spec.pde
    if seed is not None:
        ca = replace(ca, seed=seed)
    if mc_runs is not None:
        ca = replace(ca, mc_runs=mc_runs)
    if eps is not None:
        pde = replace(pde, eps=eps)
    if dx is not None:
        m = round(spec.length / dx)
        if m < 4 or abs(m * dx - spec.length) > 1e-9 * spec.length:
            raise FrameMismatchError(f"dx={dx} does not tile the domain length {spec.length}")
        pde = replace(pde, m=m)
    out = replace(spec, ca=ca, pde=pde)
    if t_end is not None:
        out = replace(out, t_end=t_end)
        if snapshot_times is None:
            kept = tuple(t for t in out.snapshot_times if t <= t_end + 1e-12)
            out = replace(out, snapshot_times=kept if kept else (t_end,))
    if snapshot_times is not None:
        out = replace(out, snapshot_times=tuple(sorted(float(t) for t in snapshot_times)))
    return out
