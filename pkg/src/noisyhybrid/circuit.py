"""Brick-wall hybrid circuits with random measurements and reset noise.

Each time step is: even-bond gate layer, odd-bond gate layer, reset layer,
measurement layer.  Randomness per step is drawn in a fixed order (gate
indices, reset uniforms, measurement uniforms, outcome bits; sites 0..L-1),
so a trajectory is a pure function of ``(master_seed, trajectory_index)``.
"""

from __future__ import annotations

import hashlib
import time as _time
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .clifford import CliffordGate, gate_tables, sample_gate_indices, sample_two_qubit_clifford
from .entanglement import Bipartition, EntanglementReport, report
from .oracle import Event, GateEvent, MeasureEvent, ResetEvent
from .stabilizer import Tableau, debug_enabled

__all__ = [
    "Boundary",
    "CircuitConfig",
    "ConfigError",
    "Model",
    "TrajectoryRecord",
    "bonds",
    "noise_schedule",
    "run_trajectory",
    "sample_two_qubit_clifford",
    "step",
    "trajectory_rng",
]


class ConfigError(ValueError):
    pass


class Model(str, Enum):
    BULK_NOISE = "bulk"
    BOUNDARY_PLUS_LATE_BULK = "boundary"


class Boundary(str, Enum):
    PBC = "pbc"
    OBC = "obc"


@dataclass(frozen=True)
class CircuitConfig:
    n_qubits: int
    measure_rate: float
    reset_rate: float
    model: Model = Model.BULK_NOISE
    boundary: Boundary = Boundary.PBC
    t_noise: int = 0
    depth: int | None = None
    master_seed: int = 0
    trajectory_index: int = 0
    boundary_resets: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "model", Model(self.model))
            object.__setattr__(self, "boundary", Boundary(self.boundary))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        L = self.n_qubits
        if not isinstance(L, (int, np.integer)) or L < 2 or L % 2:
            raise ConfigError(f"n_qubits must be an even integer >= 2, got {L!r}")
        if self.depth is None:
            object.__setattr__(self, "depth", 8 * int(L))
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        for name in ("measure_rate", "reset_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.t_noise < 0 or self.t_noise > self.depth:
            raise ConfigError(f"t_noise must lie in [0, depth={self.depth}], got {self.t_noise}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.trajectory_index < 0:
            raise ConfigError("trajectory_index must be >= 0")

    def with_index(self, trajectory_index: int) -> "CircuitConfig":
        return replace(self, trajectory_index=trajectory_index)


@dataclass
class TrajectoryRecord:
    config: CircuitConfig
    report: EntanglementReport
    stream_id: str
    n_measurements: int = 0
    n_random_resets: int = 0
    events: list[Event] | None = None
    wall_time: float = field(default=0.0, compare=False)


def trajectory_seed(master_seed: int, trajectory_index: int) -> int:
    """128-bit stream seed: BLAKE2b of the index keyed by the master seed."""
    h = hashlib.blake2b(
        int(trajectory_index).to_bytes(8, "little"),
        key=int(master_seed).to_bytes(8, "little"),
        digest_size=16,
    )
    return int.from_bytes(h.digest(), "little")


def trajectory_rng(master_seed: int, trajectory_index: int) -> tuple[np.random.Generator, str]:
    seed = trajectory_seed(master_seed, trajectory_index)
    return np.random.Generator(np.random.PCG64(seed)), f"{seed:032x}"


@lru_cache(maxsize=None)
def bonds(n_qubits: int, boundary: Boundary) -> tuple[np.ndarray, np.ndarray]:
    """Site pairs of one step: the even layer followed by the odd layer."""
    L = n_qubits
    pairs = [(i, i + 1) for i in range(0, L - 1, 2)]
    pairs += [(i, i + 1) for i in range(1, L - 1, 2)]
    if Boundary(boundary) is Boundary.PBC:
        pairs.append((L - 1, 0))
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    a.flags.writeable = False
    b.flags.writeable = False
    return a, b


def noise_schedule(cfg: CircuitConfig, site: int, time: int) -> bool:
    """Whether ``(site, time)`` may receive a rate-q reset."""
    if cfg.model is Model.BULK_NOISE:
        return True
    return time >= cfg.depth - cfg.t_noise


def boundary_forced(cfg: CircuitConfig, site: int) -> bool:
    """Deterministic spatial-boundary reset (applies at every step)."""
    return (
        cfg.model is Model.BOUNDARY_PLUS_LATE_BULK
        and cfg.boundary_resets
        and site in (0, cfg.n_qubits - 1)
    )


@dataclass
class StepDraws:
    gate_ids: np.ndarray
    reset_mask: np.ndarray
    meas_mask: np.ndarray
    rand_bits: np.ndarray
    n_random_resets: int


def draw_step(cfg: CircuitConfig, time: int, rng: np.random.Generator) -> StepDraws:
    L = cfg.n_qubits
    a, _ = bonds(L, cfg.boundary)
    gate_ids = sample_gate_indices(rng, a.size)
    u_reset = rng.random(L)
    u_meas = rng.random(L)
    rand_bits = rng.integers(2, size=L, dtype=np.uint8)
    random_reset = (u_reset < cfg.reset_rate) & noise_schedule(cfg, 0, time)
    forced = np.zeros(L, dtype=bool)
    if boundary_forced(cfg, 0):
        forced[[0, L - 1]] = True
    return StepDraws(
        gate_ids=gate_ids,
        reset_mask=forced | random_reset,
        meas_mask=u_meas < cfg.measure_rate,
        rand_bits=rand_bits,
        n_random_resets=int(random_reset.sum()),
    )


def _events_for(cfg: CircuitConfig, d: StepDraws, outcomes: np.ndarray) -> list[Event]:
    a, b = bonds(cfg.n_qubits, cfg.boundary)
    evs: list[Event] = [GateEvent(int(i), int(j), CliffordGate(int(g))) for i, j, g in zip(a, b, d.gate_ids)]
    evs += [ResetEvent(int(s)) for s in np.flatnonzero(d.reset_mask)]
    evs += [MeasureEvent(int(s), int(outcomes[s])) for s in np.flatnonzero(d.meas_mask)]
    return evs


def apply_step(t: Tableau, cfg: CircuitConfig, d: StepDraws) -> np.ndarray:
    """Run one drawn step; returns per-site outcomes (-1 where unmeasured)."""
    a, b = bonds(cfg.n_qubits, cfg.boundary)
    outcomes = np.full(cfg.n_qubits, -1, dtype=np.int64)
    if debug_enabled():
        # channel-by-channel through the validated interface
        t.apply_layer(a, b, d.gate_ids)
        for s in np.flatnonzero(d.reset_mask):
            t.reset(int(s))
        for s in np.flatnonzero(d.meas_mask):
            outcomes[s] = t.measure_z_with(int(s), int(d.rand_bits[s]))
        return outcomes
    out, sgn = gate_tables()
    t.k = K.run_step(
        t.sx, t.sz, t.ss, t.dx, t.dz, t.k, a, b, d.gate_ids, out, sgn,
        d.reset_mask, d.meas_mask, d.rand_bits, outcomes,
    )
    return outcomes


def step(t: Tableau, cfg: CircuitConfig, time: int, rng: np.random.Generator,
         events: list[Event] | None = None) -> StepDraws:
    """Advance ``t`` by one time step, optionally appending to an event log."""
    if not 0 <= time < cfg.depth:
        raise ValueError(f"time {time} outside [0, {cfg.depth})")
    if t.n_qubits != cfg.n_qubits:
        raise ValueError("tableau size does not match the config")
    d = draw_step(cfg, time, rng)
    outcomes = apply_step(t, cfg, d)
    if events is not None:
        events.extend(_events_for(cfg, d, outcomes))
    return d


def run_trajectory(cfg: CircuitConfig, record_events: bool = False,
                   bipartition: Bipartition | None = None) -> TrajectoryRecord:
    """Evolve ``|0...0>`` for ``cfg.depth`` steps and read out the half-chain observables."""
    t0 = _time.perf_counter()
    rng, stream_id = trajectory_rng(cfg.master_seed, cfg.trajectory_index)
    tab = Tableau.product_state(cfg.n_qubits)
    events: list[Event] | None = [] if record_events else None
    n_meas = n_reset = 0
    for time in range(cfg.depth):
        d = step(tab, cfg, time, rng, events)
        n_meas += int(d.meas_mask.sum())
        n_reset += d.n_random_resets
    rep = report(tab, bipartition)
    return TrajectoryRecord(
        config=cfg,
        report=rep,
        stream_id=stream_id,
        n_measurements=n_meas,
        n_random_resets=n_reset,
        events=events,
        wall_time=_time.perf_counter() - t0,
    )
