"""
interchange_sim.py  -  continuous-time interchange dynamics on a phase graph

One unit-rate exponential timer sits on every edge slot of the phase graph
(2N slots, parallel edges and loops included).  When the timer of (i, j)
fires, the two moving-colour pointers that end at i and at j exchange
destinations.  Phases alternate the moving colour, starting with blue.

Two engines share the same law:
  simulate_phase     sequential Gillespie loop (holding times ~ Exp(2N))
  simulate_replicas  vectorised batch: each replica draws Poisson(2N T)
                     events, then uniformly chosen edge slots
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.analysis.isoperimetry import IsoProfile, profile_exact
from src.analysis.spectral import cramer_h
from src.config.settings import (
    PROFILE_SETTINGS,
    RUNTIME_SETTINGS,
    SIMULATION_SETTINGS,
)
from src.orchestration.logger import setup_logger
from src.orchestration.worker_pool import run_indexed
from src.topology.pointer_graph import (
    PhaseGraph,
    PointerColor,
    PointerConfig,
    build_phase_graph,
    identity_config,
    random_config,
    reverse_config,
)

logger = setup_logger()

COUNT_MODES = ("owner_endpoint", "owner")
INITIAL_STATES = ("random", "identity", "reverse")

_EVENT_CHUNK = 4096
# derived phase lengths ln(N)^a carry the rewiring tail bound only above this exponent
TAIL_EXPONENT = 8.0


@dataclass
class SimParams:
    n:             int            = SIMULATION_SETTINGS["n"]
    phase_length:  Optional[float] = SIMULATION_SETTINGS["phase_length"]
    num_phases:    int            = SIMULATION_SETTINGS["num_phases"]
    a_exponent:    float          = SIMULATION_SETTINGS["a_exponent"]
    seed:          int            = 0
    count_mode:    str            = SIMULATION_SETTINGS["count_mode"]
    initial:       str            = SIMULATION_SETTINGS["initial"]
    snapshot_profile: bool        = False

    def __post_init__(self):
        self.validate()
        if self.phase_length is None and self.a_exponent <= TAIL_EXPONENT:
            logger.warning(
                f"a_exponent={self.a_exponent} <= {TAIL_EXPONENT}: the rewiring tail bound needs "
                f"T = ln(N)^a with a > {TAIL_EXPONENT}; results are measurements only"
            )

    def validate(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3 (got {self.n})")
        if self.num_phases < 1:
            raise ValueError(f"num_phases must be >= 1 (got {self.num_phases})")
        if self.phase_length is not None and self.phase_length <= 0:
            raise ValueError(f"phase_length must be > 0 (got {self.phase_length})")
        if self.phase_length is None and self.a_exponent <= 0:
            raise ValueError(f"a_exponent must be > 0 (got {self.a_exponent})")
        if self.count_mode not in COUNT_MODES:
            raise ValueError(f"count_mode must be one of {COUNT_MODES} (got '{self.count_mode}')")
        if self.initial not in INITIAL_STATES:
            raise ValueError(f"initial must be one of {INITIAL_STATES} (got '{self.initial}')")

    @property
    def T(self) -> float:
        """Phase length; ln(N)^a when no explicit length is set."""
        if self.phase_length is not None:
            return float(self.phase_length)
        return math.log(self.n) ** self.a_exponent

    def initial_config(self, rng: np.random.Generator) -> PointerConfig:
        if self.initial == "identity":
            return identity_config(self.n)
        if self.initial == "reverse":
            return reverse_config(self.n)
        return random_config(self.n, rng)


@dataclass
class RewiringStats:
    per_node_modifications: np.ndarray
    total_swaps:  int
    phase_index:  int
    elapsed_time: float
    moving_color: PointerColor = PointerColor.BLUE

    @property
    def max_modifications(self) -> int:
        return int(self.per_node_modifications.max(initial=0))

    @property
    def mean_modifications(self) -> float:
        return float(self.per_node_modifications.mean())


@dataclass
class ProtocolResult:
    final_config: PointerConfig
    initial_config: PointerConfig
    phases:   List[RewiringStats]            = field(default_factory=list)
    profiles: List[Optional[IsoProfile]]     = field(default_factory=list)
    T: float = 0.0

    @property
    def tau(self) -> float:
        return len(self.phases) * self.T

    @property
    def total_modifications(self) -> np.ndarray:
        if not self.phases:
            return np.zeros(self.final_config.n, dtype=np.int64)
        return np.sum([s.per_node_modifications for s in self.phases], axis=0)

    @property
    def max_modifications(self) -> int:
        return int(self.total_modifications.max(initial=0))

    def rewiring_threshold(self, factor: float = SIMULATION_SETTINGS["rewiring_threshold_factor"]) -> float:
        return factor * self.tau

    def within_rewiring_bound(self, factor: float = SIMULATION_SETTINGS["rewiring_threshold_factor"]) -> bool:
        return self.max_modifications <= self.rewiring_threshold(factor)


# ═══════════════════════════════════════════════════════════════════════
# RNG STREAMS
# ═══════════════════════════════════════════════════════════════════════

def replica_rng(seed: int, replica_id: int) -> np.random.Generator:
    """Independent reproducible stream for (seed, replica_id)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replica_id,)))


# ═══════════════════════════════════════════════════════════════════════
# SEQUENTIAL ENGINE
# ═══════════════════════════════════════════════════════════════════════

def _owners(pointers: np.ndarray) -> np.ndarray:
    owner = np.empty_like(pointers)
    owner[pointers] = np.arange(len(pointers))
    return owner


def apply_swap(pointers: np.ndarray, owner: np.ndarray, i: int, j: int) -> Tuple[int, int]:
    """Exchange the destinations of the pointers ending at i and j in place."""
    n, m = int(owner[i]), int(owner[j])
    pointers[n], pointers[m] = j, i
    owner[i], owner[j] = m, n
    return n, m


def simulate_phase(
    config: PointerConfig,
    moving_color: PointerColor,
    T: float,
    rng: np.random.Generator,
    count_mode: str = SIMULATION_SETTINGS["count_mode"],
    phase_index: int = 0,
) -> Tuple[PointerConfig, RewiringStats]:
    if T < 0:
        raise ValueError(f"T must be >= 0 (got {T})")
    if count_mode not in COUNT_MODES:
        raise ValueError(f"count_mode must be one of {COUNT_MODES} (got '{count_mode}')")

    graph = phase_graph_for(config, moving_color)
    edges = graph.edges
    num_slots = graph.num_edges

    pointers = np.array(config.pointers(moving_color))
    owner = _owners(pointers)
    modifications = np.zeros(config.n, dtype=np.int64)
    total_swaps = 0

    clock = 0.0
    done = T == 0
    while not done:
        times = clock + np.cumsum(rng.exponential(1.0 / num_slots, size=_EVENT_CHUNK))
        slots = rng.integers(num_slots, size=_EVENT_CHUNK)
        fired = int(np.searchsorted(times, T, side="right"))
        for e in slots[:fired]:
            i, j = int(edges[e, 0]), int(edges[e, 1])
            total_swaps += 1
            if i == j:
                continue
            n, m = apply_swap(pointers, owner, i, j)
            modifications[n] += 1
            modifications[m] += 1
            if count_mode == "owner_endpoint":
                modifications[i] += 1
                modifications[j] += 1
        clock = float(times[-1])
        done = fired < _EVENT_CHUNK

    stats = RewiringStats(
        per_node_modifications=modifications,
        total_swaps=total_swaps,
        phase_index=phase_index,
        elapsed_time=float(T),
        moving_color=moving_color,
    )
    return config.with_pointers(moving_color, pointers), stats


# ═══════════════════════════════════════════════════════════════════════
# BATCH ENGINE
# ═══════════════════════════════════════════════════════════════════════

def simulate_replicas(
    config: PointerConfig,
    moving_color: PointerColor,
    T: float,
    replicas: int,
    rng: np.random.Generator,
    track_modifications: bool = False,
    count_mode: str = SIMULATION_SETTINGS["count_mode"],
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Run `replicas` independent copies of one phase from the same start.

    Returns the final moving-colour arrays (R x N) and, when requested, the
    per-node modification counts (R x N).
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1 (got {replicas})")
    if T < 0:
        raise ValueError(f"T must be >= 0 (got {T})")

    graph = phase_graph_for(config, moving_color)
    edges = graph.edges
    num_slots = graph.num_edges
    n = config.n

    pointers = np.tile(np.asarray(config.pointers(moving_color)), (replicas, 1))
    owner = np.tile(_owners(np.asarray(config.pointers(moving_color))), (replicas, 1))
    modifications = np.zeros((replicas, n), dtype=np.int64) if track_modifications else None

    event_counts = rng.poisson(num_slots * T, size=replicas)
    for step in range(int(event_counts.max(initial=0))):
        rows = np.flatnonzero(event_counts > step)
        picked = edges[rng.integers(num_slots, size=len(rows))]
        i, j = picked[:, 0], picked[:, 1]
        src_i = owner[rows, i]
        src_j = owner[rows, j]
        pointers[rows, src_i] = j
        pointers[rows, src_j] = i
        owner[rows, i] = src_j
        owner[rows, j] = src_i
        if modifications is not None:
            moved = i != j
            r = rows[moved]
            np.add.at(modifications, (r, src_i[moved]), 1)
            np.add.at(modifications, (r, src_j[moved]), 1)
            if count_mode == "owner_endpoint":
                np.add.at(modifications, (r, i[moved]), 1)
                np.add.at(modifications, (r, j[moved]), 1)

    return pointers, modifications


def simulate_replica_blocks(
    config: PointerConfig,
    moving_color: PointerColor,
    T: float,
    replicas: int,
    seed: int,
    threads: int = RUNTIME_SETTINGS["threads"],
    track_modifications: bool = False,
    count_mode: str = SIMULATION_SETTINGS["count_mode"],
    block_size: int = RUNTIME_SETTINGS["replica_block_size"],
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Blocked batch run; block b uses replica_rng(seed, b), so output is thread-count independent."""
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1 (got {replicas})")
    sizes = [min(block_size, replicas - start) for start in range(0, replicas, block_size)]

    def _block(b: int):
        return simulate_replicas(config, moving_color, T, sizes[b], replica_rng(seed, b),
                                 track_modifications=track_modifications, count_mode=count_mode)

    parts = run_indexed(_block, range(len(sizes)), threads)
    finals = np.concatenate([p[0] for p in parts])
    mods = np.concatenate([p[1] for p in parts]) if track_modifications else None
    return finals, mods


# ═══════════════════════════════════════════════════════════════════════
# PROTOCOL
# ═══════════════════════════════════════════════════════════════════════

def run_protocol(
    params: SimParams,
    rng: np.random.Generator,
    initial: Optional[PointerConfig] = None,
) -> ProtocolResult:
    params.validate()
    config = initial if initial is not None else params.initial_config(rng)
    if config.n != params.n:
        raise ValueError(f"initial config has N={config.n}, params expect n={params.n}")

    T = params.T
    budget = PROFILE_SETTINGS["enumeration_budget"]
    result = ProtocolResult(final_config=config, initial_config=config, T=T)
    logger.info(f"Protocol started: N={params.n}, phases={params.num_phases}, T={T:.6g}")

    color = PointerColor.BLUE
    for phase in range(params.num_phases):
        config, stats = simulate_phase(config, color, T, rng,
                                       count_mode=params.count_mode, phase_index=phase)
        result.phases.append(stats)

        profile = None
        if params.snapshot_profile and params.n <= budget:
            profile = profile_exact(build_phase_graph(config, color), params.n // 2)
        result.profiles.append(profile)

        logger.info(
            f"Phase {phase} ({color.value}) done",
            extra={"context": {"swaps": stats.total_swaps, "max_Mn": stats.max_modifications}},
        )
        color = color.other

    result.final_config = config
    return result


def poisson_rewiring_tail(tau: float, threshold_factor: float = 2.0) -> float:
    """Bound exp(-8 tau h(c)) on P(Poisson(8 tau) >= c * 8 tau)."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0 (got {tau})")
    if threshold_factor < 1:
        raise ValueError(f"threshold_factor must be >= 1 (got {threshold_factor})")
    return float(np.exp(-8.0 * tau * cramer_h(threshold_factor)))


def phase_graph_for(config: PointerConfig, moving_color: PointerColor) -> PhaseGraph:
    """Graph the given colour moves on."""
    return build_phase_graph(config, moving_color.other)
