"""Stochastic lattice tier: paired exclusion walkers on a periodic 1-D lattice.

Right- and left-moving pedestrians live on the same lattice; a cell holds
at most one walker per direction. Each step, every walker attempts a hop
into its forward neighbor with a probability set by the interaction
velocities and the opposite-direction occupancy of the current and target
cells. Updates are synchronous: all decisions are taken on the pre-step
state, which makes the dynamics collision-free and fully parallel.

Hop probabilities use the rate c_i/h so that a free walker travels at
c_i m/s on the physical axis; set literal_rates to interpret the
velocities directly as per-step rates instead.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import VelocityParams

__all__ = [
    "LatticeState",
    "RedLightInit",
    "MixedSectorsInit",
    "DensityInit",
    "ExplicitInit",
    "CAConfig",
    "EnsembleStats",
    "hop_probability_right",
    "hop_probability_left",
    "step",
    "sample_initial",
    "run_realization",
    "run_ensemble",
    "realization_rng",
    "load_ca_config",
]

# realizations are summed in fixed blocks so the reduction order (and the
# float result) is identical for any thread count
_REDUCE_BLOCK = 32
_CHUNK_STEPS = 512


@dataclass
class LatticeState:
    """Occupancy arrays (0/1 per cell) for the two directions."""

    sigma_plus: np.ndarray
    sigma_minus: np.ndarray

    def __post_init__(self) -> None:
        self.sigma_plus = np.ascontiguousarray(self.sigma_plus, dtype=np.int8)
        self.sigma_minus = np.ascontiguousarray(self.sigma_minus, dtype=np.int8)
        if self.sigma_plus.shape != self.sigma_minus.shape or self.sigma_plus.ndim != 1:
            raise ValueError("occupancy arrays must be 1-D and of equal length")

    @classmethod
    def empty(cls, n_cells: int) -> "LatticeState":
        return cls(np.zeros(n_cells, np.int8), np.zeros(n_cells, np.int8))

    @property
    def n_cells(self) -> int:
        return self.sigma_plus.shape[0]

    def counts(self) -> tuple[int, int]:
        return int(self.sigma_plus.sum()), int(self.sigma_minus.sum())

    def copy(self) -> "LatticeState":
        return LatticeState(self.sigma_plus.copy(), self.sigma_minus.copy())


@dataclass(frozen=True)
class RedLightInit:
    """Two packed opposing groups: rightward walkers fill 1-based cells
    n1..n2, leftward walkers fill cells N-n2..N-n1."""

    n1: int
    n2: int


@dataclass(frozen=True)
class MixedSectorsInit:
    """Per-sector walker counts placed uniformly (without replacement)
    inside each sector of cells_per_sector cells."""

    counts_plus: tuple[int, ...]
    counts_minus: tuple[int, ...]
    cells_per_sector: int


@dataclass(frozen=True)
class DensityInit:
    """Independent Bernoulli occupancy per cell per direction."""

    rho_plus: tuple[float, ...]
    rho_minus: tuple[float, ...]


@dataclass(frozen=True)
class ExplicitInit:
    """A fully specified starting state."""

    state: LatticeState


InitialConditionSpec = RedLightInit | MixedSectorsInit | DensityInit | ExplicitInit


@dataclass
class CAConfig:
    n_cells: int
    cell_length: float
    dt: float
    t_end: float
    snapshot_times: tuple[float, ...]
    mc_runs: int
    seed: int
    velocities: VelocityParams
    init: InitialConditionSpec
    literal_rates: bool = False

    def __post_init__(self) -> None:
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)
        if self.n_cells < 2:
            raise ValueError(f"need at least 2 cells, got {self.n_cells}")
        if self.cell_length <= 0.0:
            raise ValueError(f"cell length must be > 0, got {self.cell_length}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.mc_runs < 1:
            raise ValueError(f"mc_runs must be >= 1, got {self.mc_runs}")
        if self.velocities.c0 * self.dt_eff > 1.0:
            raise ValueError(
                f"c0 * dt_eff = {self.velocities.c0 * self.dt_eff} exceeds 1; "
                f"hop chances must be valid probabilities"
            )
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_end + 1e-12:
                raise ValueError(f"snapshot time {t} outside [0, {self.t_end}]")
        if list(self.snapshot_times) != sorted(self.snapshot_times):
            raise ValueError("snapshot times must be sorted")

    @property
    def dt_eff(self) -> float:
        return self.dt if self.literal_rates else self.dt / self.cell_length

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0

    def snapshot_steps(self) -> list[int]:
        """Step index recorded for each snapshot time: the last step whose
        time does not exceed the requested time."""
        return [min(self.n_steps, int(math.floor(t / self.dt + 1e-9))) for t in self.snapshot_times]


@dataclass
class EnsembleStats:
    """Mean occupancies over a seeded ensemble, one row per snapshot."""

    times: tuple[float, ...]
    step_times: tuple[float, ...]
    mean_plus: np.ndarray
    mean_minus: np.ndarray
    mc_runs: int
    cell_length: float


def hop_probability_right(state: LatticeState, k: int, v: VelocityParams, dt_eff: float) -> float:
    """Chance that the rightward walker in cell k hops to k+1 this step."""
    n = state.n_cells
    ka = (k + 1) % n
    s, sa = int(state.sigma_plus[k]), int(state.sigma_plus[ka])
    m, ma = int(state.sigma_minus[k]), int(state.sigma_minus[ka])
    return dt_eff * (
        v.c0 * s * (1 - sa) * (1 - m) * (1 - ma)
        + v.c1 * s * (1 - sa) * m * (1 - ma)
        + v.c2 * s * (1 - sa) * (1 - m) * ma
        + v.c3 * s * (1 - sa) * m * ma
    )


def hop_probability_left(state: LatticeState, k: int, v: VelocityParams, dt_eff: float) -> float:
    """Chance that the leftward walker in cell k hops to k-1 this step."""
    n = state.n_cells
    kb = (k - 1) % n
    m, mb = int(state.sigma_minus[k]), int(state.sigma_minus[kb])
    s, sb = int(state.sigma_plus[k]), int(state.sigma_plus[kb])
    return dt_eff * (
        v.c0 * m * (1 - mb) * (1 - sb) * (1 - s)
        + v.c1 * m * (1 - mb) * (1 - sb) * s
        + v.c2 * m * (1 - mb) * sb * (1 - s)
        + v.c3 * m * (1 - mb) * sb * s
    )


def _ptab(v: VelocityParams, dt_eff: float) -> np.ndarray:
    return dt_eff * v.as_array()


def step(state: LatticeState, v: VelocityParams, dt_eff: float, rng: np.random.Generator) -> LatticeState:
    """One synchronous update; returns a new state, conserving both counts."""
    if v.c0 * dt_eff > 1.0:
        raise ValueError(f"c0 * dt_eff = {v.c0 * dt_eff} is not a probability")
    out = state.copy()
    n = out.n_cells
    u = np.empty((1, 2, n))
    rng.random(out=u)
    scratch_p = np.empty(n, np.int8)
    scratch_m = np.empty(n, np.int8)
    kernels.ca_advance(out.sigma_plus, out.sigma_minus, u, _ptab(v, dt_eff), scratch_p, scratch_m)
    return out


def sample_initial(spec: InitialConditionSpec, n_cells: int, rng: np.random.Generator) -> LatticeState:
    """Draw (or place) a starting state on a lattice of n_cells cells."""
    state = LatticeState.empty(n_cells)
    if isinstance(spec, RedLightInit):
        n1, n2 = spec.n1, spec.n2
        if not (1 <= n1 <= n2 <= n_cells and n_cells - n2 >= 1):
            raise ValueError(f"red-light block 1 <= {n1} <= {n2} does not fit in {n_cells} cells")
        state.sigma_plus[n1 - 1 : n2] = 1
        state.sigma_minus[n_cells - n2 - 1 : n_cells - n1] = 1
    elif isinstance(spec, MixedSectorsInit):
        cps = spec.cells_per_sector
        n_sectors = len(spec.counts_plus)
        if len(spec.counts_minus) != n_sectors:
            raise ValueError("per-sector count lists must have equal length")
        if n_sectors * cps != n_cells:
            raise ValueError(f"{n_sectors} sectors x {cps} cells != {n_cells} cells")
        for counts, sigma in ((spec.counts_plus, state.sigma_plus), (spec.counts_minus, state.sigma_minus)):
            for i, cnt in enumerate(counts):
                if not 0 <= cnt <= cps:
                    raise ValueError(f"sector count {cnt} exceeds sector capacity {cps}")
                cells = rng.choice(cps, size=cnt, replace=False)
                sigma[i * cps + cells] = 1
    elif isinstance(spec, DensityInit):
        rho_p = np.asarray(spec.rho_plus, dtype=float)
        rho_m = np.asarray(spec.rho_minus, dtype=float)
        if rho_p.shape != (n_cells,) or rho_m.shape != (n_cells,):
            raise ValueError("density arrays must match the lattice length")
        if (rho_p < 0).any() or (rho_p > 1).any() or (rho_m < 0).any() or (rho_m > 1).any():
            raise ValueError("densities must lie in [0, 1]")
        state.sigma_plus[:] = rng.random(n_cells) < rho_p
        state.sigma_minus[:] = rng.random(n_cells) < rho_m
    elif isinstance(spec, ExplicitInit):
        if spec.state.n_cells != n_cells:
            raise ValueError("explicit state length does not match the lattice")
        state = spec.state.copy()
    else:
        raise TypeError(f"unknown initial condition spec: {type(spec)!r}")
    return state


def realization_rng(seed: int, realization: int) -> np.random.Generator:
    """Counter-based stream for one realization, derived from (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(realization)))))


def _advance_through_snapshots(cfg: CAConfig, rng: np.random.Generator, on_snapshot) -> None:
    """Run one realization, invoking on_snapshot(i, state) per snapshot."""
    state = sample_initial(cfg.init, cfg.n_cells, rng)
    snap_steps = cfg.snapshot_steps()
    n = cfg.n_cells
    ptab = _ptab(cfg.velocities, cfg.dt_eff)
    scratch_p = np.empty(n, np.int8)
    scratch_m = np.empty(n, np.int8)
    buf = np.empty((_CHUNK_STEPS, 2, n))

    now = 0
    i = 0
    while i < len(snap_steps) and snap_steps[i] == now:
        on_snapshot(i, state)
        i += 1
    while i < len(snap_steps):
        target = snap_steps[i]
        while now < target:
            m = min(_CHUNK_STEPS, target - now)
            u = buf[:m]
            rng.random(out=u)
            kernels.ca_advance(state.sigma_plus, state.sigma_minus, u, ptab, scratch_p, scratch_m)
            now += m
        while i < len(snap_steps) and snap_steps[i] == now:
            on_snapshot(i, state)
            i += 1


def run_realization(cfg: CAConfig, realization: int = 0) -> list[tuple[float, LatticeState]]:
    """One seeded trajectory; returns (realized time, state) per snapshot."""
    rng = realization_rng(cfg.seed, realization)
    snap_steps = cfg.snapshot_steps()
    out: list[tuple[float, LatticeState]] = []
    _advance_through_snapshots(cfg, rng, lambda i, st: out.append((snap_steps[i] * cfg.dt, st.copy())))
    return out


def _block_sums(cfg: CAConfig, first: int, last: int) -> np.ndarray:
    n_snap = len(cfg.snapshot_times)
    acc = np.zeros((n_snap, 2, cfg.n_cells))

    def add(i: int, st: LatticeState) -> None:
        acc[i, 0] += st.sigma_plus
        acc[i, 1] += st.sigma_minus

    for r in range(first, last):
        _advance_through_snapshots(cfg, realization_rng(cfg.seed, r), add)
    return acc


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: explicit argument, else PEDFLOW_THREADS (0 = auto)."""
    if threads is None:
        env = os.environ.get("PEDFLOW_THREADS", "").strip()
        threads = int(env) if env else 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def run_ensemble(cfg: CAConfig, threads: int | None = None) -> EnsembleStats:
    """Mean occupancies over cfg.mc_runs independent realizations.

    Realization r always uses the stream derived from (cfg.seed, r) and
    partial sums are reduced in fixed blocks, so the result is bit-identical
    for any thread count.
    """
    threads = resolve_threads(threads)
    blocks = [
        (b, min(b + _REDUCE_BLOCK, cfg.mc_runs)) for b in range(0, cfg.mc_runs, _REDUCE_BLOCK)
    ]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda fl: _block_sums(cfg, *fl), blocks))
    else:
        partials = [_block_sums(cfg, *fl) for fl in blocks]

    total = partials[0]
    for p in partials[1:]:
        total += p
    total /= cfg.mc_runs
    snap_steps = cfg.snapshot_steps()
    return EnsembleStats(
        times=cfg.snapshot_times,
        step_times=tuple(s * cfg.dt for s in snap_steps),
        mean_plus=total[:, 0].copy(),
        mean_minus=total[:, 1].copy(),
        mc_runs=cfg.mc_runs,
        cell_length=cfg.cell_length,
    )


def _init_to_dict(spec: InitialConditionSpec) -> dict:
    if isinstance(spec, RedLightInit):
        return {"kind": "red_light", "n1": spec.n1, "n2": spec.n2}
    if isinstance(spec, MixedSectorsInit):
        return {
            "kind": "mixed_sectors",
            "counts_plus": list(spec.counts_plus),
            "counts_minus": list(spec.counts_minus),
            "cells_per_sector": spec.cells_per_sector,
        }
    if isinstance(spec, DensityInit):
        return {"kind": "from_density", "rho_plus": list(spec.rho_plus), "rho_minus": list(spec.rho_minus)}
    if isinstance(spec, ExplicitInit):
        return {
            "kind": "explicit",
            "sigma_plus": spec.state.sigma_plus.tolist(),
            "sigma_minus": spec.state.sigma_minus.tolist(),
        }
    raise TypeError(f"unknown initial condition spec: {type(spec)!r}")


def _init_from_dict(d: dict) -> InitialConditionSpec:
    kind = d.get("kind")
    if kind == "red_light":
        return RedLightInit(int(d["n1"]), int(d["n2"]))
    if kind == "mixed_sectors":
        return MixedSectorsInit(
            tuple(int(c) for c in d["counts_plus"]),
            tuple(int(c) for c in d["counts_minus"]),
            int(d["cells_per_sector"]),
        )
    if kind == "from_density":
        return DensityInit(tuple(float(r) for r in d["rho_plus"]), tuple(float(r) for r in d["rho_minus"]))
    if kind == "explicit":
        return ExplicitInit(
            LatticeState(np.array(d["sigma_plus"], np.int8), np.array(d["sigma_minus"], np.int8))
        )
    raise ValueError(f"unknown initial condition kind: {kind!r}")


def config_to_dict(cfg: CAConfig) -> dict:
    return {
        "n_cells": cfg.n_cells,
        "cell_length": cfg.cell_length,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "snapshot_times": list(cfg.snapshot_times),
        "mc_runs": cfg.mc_runs,
        "seed": cfg.seed,
        "velocities": {"c0": cfg.velocities.c0, "c1": cfg.velocities.c1, "c2": cfg.velocities.c2, "c3": cfg.velocities.c3},
        "init": _init_to_dict(cfg.init),
        "literal_rates": cfg.literal_rates,
    }


def config_from_dict(d: dict) -> CAConfig:
    vel = d["velocities"]
    return CAConfig(
        n_cells=int(d["n_cells"]),
        cell_length=float(d["cell_length"]),
        dt=float(d["dt"]),
        t_end=float(d["t_end"]),
        snapshot_times=tuple(float(t) for t in d["snapshot_times"]),
        mc_runs=int(d["mc_runs"]),
        seed=int(d["seed"]),
        velocities=VelocityParams(float(vel["c0"]), float(vel["c1"]), float(vel["c2"]), float(vel["c3"])),
        init=_init_from_dict(d["init"]),
        literal_rates=bool(d.get("literal_rates", False)),
    )


def load_ca_config(path) -> CAConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
