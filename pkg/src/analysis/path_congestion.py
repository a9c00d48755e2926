"""
path_congestion.py  -  randomized canonical paths and the mixing budget

From every source i, sample W independent walks of Delta_path steps; the
path for (i, j) is the first sampled walk from i that ends at j.  Only the
selected paths are stored.  Congestion K is the largest number of
selected paths that use a given edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from src.config.settings import PATH_SETTINGS, RUNTIME_SETTINGS
from src.orchestration.logger import setup_logger
from src.orchestration.worker_pool import run_indexed
from src.topology.pointer_graph import PhaseGraph

logger = setup_logger()


def path_length_bound(n: int, d: float, gamma: float) -> int:
    """Delta_path = ceil(2 ln(N) d^2 / gamma^2)."""
    if n < 2 or d <= 0 or not 0 < gamma <= 1:
        raise ValueError(f"invalid path length parameters (n={n}, d={d}, gamma={gamma})")
    return int(math.ceil(2.0 * math.log(n) * d * d / (gamma * gamma)))


def default_walks_per_source(n: int) -> int:
    return int(math.ceil(PATH_SETTINGS["walks_per_source_factor"] * n * math.log(n)))


def mixing_budget(n: float, path_length: float, K: float) -> float:
    """Time 8 ln(N) Delta_path K / N after which the interchange process has mixed."""
    if n <= 1 or path_length <= 0 or K <= 0:
        raise ValueError(f"mixing budget needs n > 1, path_length > 0, K > 0 (got {n}, {path_length}, {K})")
    return 8.0 * math.log(n) * path_length * K / n


@dataclass
class PathSystem:
    n:                 int
    path_length_bound: int
    walks_per_source:  int
    lazy:              bool
    paths:             Dict[Tuple[int, int], Tuple[int, ...]] = field(repr=False)
    node_visits:       np.ndarray = field(repr=False)
    edge_congestion:   np.ndarray = field(repr=False)
    unreachable:       List[Tuple[int, int]] = field(default_factory=list, repr=False)

    @property
    def K(self) -> int:
        return int(self.edge_congestion.max(initial=0))

    @property
    def max_node_visits(self) -> int:
        return int(self.node_visits.max(initial=0))

    @property
    def coverage(self) -> float:
        pairs = self.n * (self.n - 1)
        return len(self.paths) / pairs if pairs else 1.0

    @property
    def visit_threshold(self) -> float:
        return PATH_SETTINGS["visit_threshold_factor"] * self.n * math.log(self.n) * self.path_length_bound

    @property
    def visits_within_threshold(self) -> bool:
        return self.max_node_visits <= self.visit_threshold

    @property
    def expected_visits_per_node(self) -> float:
        """walks_per_source * (Delta_path + 1); exact in expectation on regular graphs."""
        return float(self.walks_per_source * (self.path_length_bound + 1))

    @property
    def mixing_budget_T(self) -> float:
        return mixing_budget(self.n, self.path_length_bound, max(self.K, 1))


def _walks_from(graph: PhaseGraph, source: int, walks: int, steps: int, lazy: bool,
                rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Node trajectories (W, steps+1) and traversed edge ids (W, steps), -1 for lazy holds."""
    nodes = np.empty((walks, steps + 1), dtype=np.int64)
    edges = np.full((walks, steps), -1, dtype=np.int64)
    pos = np.full(walks, source, dtype=np.int64)
    nodes[:, 0] = pos
    for step in range(steps):
        slot = (rng.random(walks) * graph.degree[pos]).astype(np.int64)
        move = np.ones(walks, dtype=bool) if not lazy else rng.random(walks) < 0.5
        nxt = np.where(move, graph.neighbours[pos, slot], pos)
        edges[:, step] = np.where(move, graph.edge_ids[pos, slot], -1)
        pos = nxt
        nodes[:, step + 1] = pos
    return nodes, edges


def build_path_system(
    graph: PhaseGraph,
    gamma: float,
    rng: np.random.Generator,
    walks_per_source: Optional[int] = None,
    d: float = PATH_SETTINGS["degree"],
    path_length: Optional[int] = None,
    lazy: bool = PATH_SETTINGS["lazy"],
    threads: int = RUNTIME_SETTINGS["threads"],
) -> PathSystem:
    n = graph.n
    if n < 2:
        raise ValueError(f"path system needs at least 2 nodes (got {n})")
    if (graph.degree == 0).any():
        raise ValueError("every node needs at least one incident edge")
    steps = path_length if path_length is not None else path_length_bound(n, d, gamma)
    if steps < 1:
        raise ValueError(f"path_length must be >= 1 (got {steps})")
    walks = walks_per_source if walks_per_source is not None else default_walks_per_source(n)
    if walks < 1:
        raise ValueError(f"walks_per_source must be >= 1 (got {walks})")

    streams = rng.spawn(n)

    def _source(i: int):
        nodes, edges = _walks_from(graph, i, walks, steps, lazy, streams[i])
        visits = np.bincount(nodes.ravel(), minlength=n)
        chosen = {}
        ends = nodes[:, -1]
        for j in range(n):
            if j == i:
                continue
            hits = np.flatnonzero(ends == j)
            if hits.size:
                w = int(hits[0])
                chosen[j] = (tuple(int(v) for v in nodes[w]), np.unique(edges[w][edges[w] >= 0]))
        return visits, chosen

    per_source = run_indexed(_source, range(n), threads)

    node_visits = np.zeros(n, dtype=np.int64)
    edge_congestion = np.zeros(graph.num_edges, dtype=np.int64)
    paths, unreachable = {}, []
    for i, (visits, chosen) in enumerate(per_source):
        node_visits += visits
        for j in range(n):
            if j == i:
                continue
            if j not in chosen:
                unreachable.append((i, j))
                continue
            path, used = chosen[j]
            paths[(i, j)] = path
            edge_congestion[used] += 1

    system = PathSystem(
        n=n, path_length_bound=int(steps), walks_per_source=int(walks), lazy=lazy,
        paths=paths, node_visits=node_visits, edge_congestion=edge_congestion,
        unreachable=unreachable,
    )
    logger.info(
        "Path system built",
        extra={"context": {"n": n, "coverage": system.coverage, "K": system.K,
                           "max_node_visits": system.max_node_visits, "lazy": lazy}},
    )
    return system


# ═══════════════════════════════════════════════════════════════════════
# EXACT WALK CHECKS
# ═══════════════════════════════════════════════════════════════════════

def transition_matrix(graph: PhaseGraph, lazy: bool = False) -> np.ndarray:
    """Uniform over incident edge slots; a loop holds two slots."""
    if (graph.degree == 0).any():
        raise ValueError("every node needs at least one incident edge")
    counts = np.zeros((graph.n, graph.n))
    for v in range(graph.n):
        np.add.at(counts[v], graph.incident(v), 1.0)
    P = counts / graph.degree[:, None]
    if lazy:
        P = 0.5 * (np.eye(graph.n) + P)
    return P


@dataclass
class EndpointHitReport:
    steps:               int
    lazy:                bool
    min_hit_probability: float
    threshold:           float
    spectral_radius:     float
    premise_holds:       bool
    failing_pairs:       int

    @property
    def holds(self) -> bool:
        return self.failing_pairs == 0


def endpoint_hit_report(graph: PhaseGraph, steps: int, lazy: bool = False) -> EndpointHitReport:
    """
    Exact P(X_steps = j | X_0 = i) over all pairs against 1/(2N).  The
    premise is lambda*^steps <= 1/(2N), lambda* the second largest |eigenvalue|.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0 (got {steps})")
    P = transition_matrix(graph, lazy)
    power = np.linalg.matrix_power(P, steps)
    threshold = 1.0 / (2 * graph.n)

    if np.allclose(P, P.T):
        eigenvalues = np.abs(linalg.eigvalsh(P))
    else:
        eigenvalues = np.abs(linalg.eigvals(P))
    eigenvalues = np.sort(eigenvalues)[::-1]
    radius = float(eigenvalues[1]) if graph.n > 1 else 0.0

    return EndpointHitReport(
        steps=steps,
        lazy=lazy,
        min_hit_probability=float(power.min()),
        threshold=threshold,
        spectral_radius=radius,
        premise_holds=radius ** steps <= threshold,
        failing_pairs=int(np.count_nonzero(power < threshold)),
    )


def walk_symmetry_defect(graph: PhaseGraph, ell: int) -> float:
    """max_u |sum_i P^ell_iu - sum_i P^ell_ui|."""
    power = np.linalg.matrix_power(transition_matrix(graph), ell)
    return float(np.abs(power.sum(axis=0) - power.sum(axis=1)).max())
