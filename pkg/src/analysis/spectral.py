"""
spectral.py  -  Laplacian machinery

L = D - A on the multigraph, with multiplicities as weights.  A self-loop
adds 2 to A_ii and 2 to d_i, so loops cancel in L while the degree still
counts them.

Heat kernel exp(-tL) v is computed by uniformization:
    exp(-tL) = sum_k Poisson(k; Lambda t) P^k,   P = I - L / Lambda
with the Poisson tail beyond the last term below the configured tolerance.
P is stochastic, so every partial sum stays nonnegative and mass-preserving.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import linalg, stats
from scipy.sparse import csgraph
from scipy.special import xlogy

from src.config.settings import SPECTRAL_SETTINGS
from src.orchestration.logger import setup_logger
from src.topology.pointer_graph import PhaseGraph

logger = setup_logger()


@dataclass(frozen=True, eq=False)
class LaplacianView:
    n:         int
    adjacency: np.ndarray = field(repr=False)
    degrees:   np.ndarray = field(repr=False)
    graph:     Optional[PhaseGraph] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_graph(cls, graph: PhaseGraph) -> "LaplacianView":
        if graph.n > SPECTRAL_SETTINGS["dense_limit"]:
            raise ValueError(
                f"dense Laplacian limited to N <= {SPECTRAL_SETTINGS['dense_limit']} (got {graph.n})"
            )
        adjacency = np.zeros((graph.n, graph.n))
        u, v = graph.edges[:, 0], graph.edges[:, 1]
        np.add.at(adjacency, (u, v), 1.0)
        np.add.at(adjacency, (v, u), 1.0)
        return cls._build(graph.n, adjacency, graph)

    @classmethod
    def from_weights(cls, adjacency) -> "LaplacianView":
        adjacency = np.array(adjacency, dtype=float)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"adjacency must be square (got shape {adjacency.shape})")
        if not np.allclose(adjacency, adjacency.T):
            raise ValueError("adjacency must be symmetric")
        if (adjacency < 0).any():
            raise ValueError("adjacency weights must be nonnegative")
        return cls._build(adjacency.shape[0], adjacency, None)

    @classmethod
    def _build(cls, n, adjacency, graph):
        degrees = adjacency.sum(axis=1)
        adjacency.setflags(write=False)
        degrees.setflags(write=False)
        return cls(n, adjacency, degrees, graph)

    @property
    def max_degree(self) -> float:
        return float(self.degrees.max(initial=0.0))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.degrees) - self.adjacency

    @property
    def is_connected(self) -> bool:
        off = self.adjacency - np.diag(np.diag(self.adjacency))
        count, _ = csgraph.connected_components(off, directed=False)
        return count == 1


@dataclass(frozen=True, eq=False)
class MassVector:
    values: np.ndarray
    time:   float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("mass vector must be a nonempty 1-d array")
        if values.min() < -SPECTRAL_SETTINGS["negativity_tolerance"]:
            raise ValueError(f"mass vector has negative entry {values.min():.3e}")
        if abs(values.sum() - 1.0) > SPECTRAL_SETTINGS["mass_tolerance"]:
            raise ValueError(f"mass vector sums to {values.sum():.12g}, expected 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def point_mass(cls, n: int, node: int) -> "MassVector":
        values = np.zeros(n)
        values[node] = 1.0
        return cls(values)

    @classmethod
    def uniform_on(cls, n: int, members: Iterable[int]) -> "MassVector":
        idx = np.fromiter((int(v) for v in members), dtype=np.int64)
        if idx.size == 0:
            raise ValueError("uniform_on needs a nonempty node set")
        values = np.zeros(n)
        values[idx] = 1.0 / len(np.unique(idx))
        return cls(values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def order(self) -> np.ndarray:
        return sorted_order(self.values)

    @property
    def sorted_values(self) -> np.ndarray:
        """pi_(1) >= pi_(2) >= ..."""
        return self.values[self.order]

    @property
    def sorted_prefix(self) -> np.ndarray:
        """sorted_prefix[m-1] = pi_[m], the mass of the m largest entries."""
        return np.cumsum(self.sorted_values)

    @property
    def index_prefix(self) -> np.ndarray:
        """Prefix sums in node-index order."""
        return np.cumsum(self.values)


def sorted_order(values) -> np.ndarray:
    """Descending by value, ties broken by ascending index."""
    values = np.asarray(values, dtype=float)
    return np.lexsort((np.arange(values.size), -values))


# ═══════════════════════════════════════════════════════════════════════
# GAP / CHEEGER
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class SpectralGap:
    lambda2:   float
    connected: bool


def spectral_gap(lap: LaplacianView) -> SpectralGap:
    if lap.n < 2:
        raise ValueError(f"spectral gap needs at least 2 nodes (got {lap.n})")
    if not lap.is_connected:
        return SpectralGap(0.0, False)
    eigenvalues = linalg.eigh(lap.matrix, eigvals_only=True, subset_by_index=[1, 1])
    return SpectralGap(float(eigenvalues[0]), True)


def lambda_star(phi_ratio_k: float, max_degree: float) -> float:
    """phi^2 / (2 Delta)."""
    if phi_ratio_k < 0:
        raise ValueError(f"phi must be >= 0 (got {phi_ratio_k})")
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1 (got {max_degree})")
    return phi_ratio_k ** 2 / (2.0 * max_degree)


@dataclass
class CheegerReport:
    lambda2:     float
    lower_bound: float
    holds:       bool
    ratio:       float


def cheeger_check(lap: LaplacianView, phi_ratio_half: float) -> CheegerReport:
    gap = spectral_gap(lap).lambda2
    bound = lambda_star(phi_ratio_half, lap.max_degree)
    tol = SPECTRAL_SETTINGS["violation_tolerance"]
    return CheegerReport(
        lambda2=gap,
        lower_bound=bound,
        holds=gap >= bound - tol,
        ratio=gap / bound if bound > 0 else float("inf"),
    )


@dataclass
class HypothesisCertificate:
    lambda2:         float
    certified_sizes: List[int]
    failed_sizes:    List[int]

    @property
    def holds(self) -> bool:
        return not self.failed_sizes


def spectral_hypothesis_certificate(lap: LaplacianView, gamma: float, d: float) -> HypothesisCertificate:
    """
    Sufficient condition for |E(S, S̄)| >= min(gamma |S|, d) at every size
    s <= N/2, from |E(S, S̄)| >= lambda2 |S| |S̄| / N.  A failed size means
    "not certified", not "violated".
    """
    gap = spectral_gap(lap).lambda2
    tol = SPECTRAL_SETTINGS["violation_tolerance"]
    certified, failed = [], []
    for s in range(1, lap.n // 2 + 1):
        bound = gap * s * (lap.n - s) / lap.n
        (certified if bound >= min(gamma * s, d) - tol else failed).append(s)
    return HypothesisCertificate(gap, certified, failed)


# ═══════════════════════════════════════════════════════════════════════
# HEAT KERNEL
# ═══════════════════════════════════════════════════════════════════════

def heat_evolve(
    lap: LaplacianView,
    vectors: np.ndarray,
    t: float,
    tolerance: float = SPECTRAL_SETTINGS["uniformization_tolerance"],
) -> np.ndarray:
    """exp(-tL) applied to a vector (N,) or a stack of column vectors (N, m)."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    vectors = np.array(vectors, dtype=float)
    rate = float(np.max(np.diag(lap.matrix), initial=0.0))
    if t == 0 or rate == 0:
        return vectors

    transition = np.eye(lap.n) - lap.matrix / rate
    mean = rate * t
    last = int(stats.poisson.isf(tolerance, mean)) + 1
    first = int(stats.poisson.ppf(tolerance, mean))
    weights = stats.poisson.pmf(np.arange(last + 1), mean)

    term = vectors
    result = np.zeros_like(vectors)
    for k in range(last + 1):
        if k >= first:
            result += weights[k] * term
        term = transition @ term
    return result


def heat_kernel(lap: LaplacianView, pi0: MassVector, t: float) -> MassVector:
    return MassVector(heat_evolve(lap, pi0.values, t), time=pi0.time + t)


# ═══════════════════════════════════════════════════════════════════════
# COLLAPSED GRAPH
# ═══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class CollapsedGraph:
    ordering:  np.ndarray
    k:         int
    laplacian: LaplacianView
    base_max_degree: float

    @property
    def adjacency(self) -> np.ndarray:
        return self.laplacian.adjacency


def collapse(lap: LaplacianView, ordering: Sequence[int], k: int) -> CollapsedGraph:
    """
    Keep nodes ordering[0..k-1] as 0..k-1 and merge the rest into node k.
    Edges internal to the merged block are dropped.
    """
    ordering = np.asarray(ordering, dtype=np.int64)
    if sorted(ordering.tolist()) != list(range(lap.n)):
        raise ValueError("ordering must be a permutation of the nodes")
    if not 1 <= k < lap.n:
        raise ValueError(f"k must satisfy 1 <= k < N (got k={k}, N={lap.n})")

    kept, rest = ordering[:k], ordering[k:]
    adjacency = np.zeros((k + 1, k + 1))
    adjacency[:k, :k] = lap.adjacency[np.ix_(kept, kept)]
    outward = lap.adjacency[np.ix_(kept, rest)].sum(axis=1)
    adjacency[:k, k] = outward
    adjacency[k, :k] = outward
    ordering = ordering.copy()
    ordering.setflags(write=False)
    return CollapsedGraph(ordering, k, LaplacianView.from_weights(adjacency), lap.max_degree)


# ═══════════════════════════════════════════════════════════════════════
# TAILS
# ═══════════════════════════════════════════════════════════════════════

def cramer_h(x) -> np.ndarray | float:
    """h(x) = x ln x - x + 1, with h(0) = 1."""
    x = np.asarray(x, dtype=float)
    if (x < 0).any():
        raise ValueError("h(x) is defined for x >= 0")
    out = xlogy(x, x) - x + 1.0
    return float(out) if out.ndim == 0 else out


def chernoff_tail(mu: float, r: float) -> float:
    """Lower-tail bound exp(-mu h(r)) on P(X <= r mu)."""
    if mu <= 0:
        raise ValueError(f"mu must be > 0 (got {mu})")
    if not 0 <= r < 1:
        raise ValueError(f"r must lie in [0, 1) for the lower tail (got {r})")
    return float(np.exp(-mu * cramer_h(r)))
