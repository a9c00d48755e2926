"""
pointer_graph.py  -  network state and per-phase multigraphs

Every node i of the ring [N] keeps one red and one blue pointer.  Each
colour forms a permutation of [N].  During a phase the pointers of one
colour move along the 4-regular multigraph made of the ring plus the
(unoriented) pointer edges of the other colour.

Indexing is 0-based inside the package and 1-based in every file this
module reads or writes.

Usage:
    config = random_config(16, np.random.default_rng(7))
    graph  = build_phase_graph(config, PointerColor.RED)
    cut    = cut_of(graph, {0, 1, 2})
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from src.orchestration.logger import setup_logger

logger = setup_logger()

EDGE_CYCLE   = 0
EDGE_POINTER = 1
EDGE_RAW     = 2


class PointerColor(Enum):
    RED  = "red"
    BLUE = "blue"

    @property
    def other(self) -> "PointerColor":
        return PointerColor.BLUE if self is PointerColor.RED else PointerColor.RED


def _as_permutation(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).copy()
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n} (got shape {arr.shape})")
    if arr.min(initial=0) < 0 or arr.max(initial=0) >= n:
        raise ValueError(f"{name} has destinations outside [0, {n})")
    if np.bincount(arr, minlength=n).max(initial=0) != 1:
        raise ValueError(f"{name} is not a permutation")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PointerConfig:
    n:    int
    red:  np.ndarray
    blue: np.ndarray

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"N must be >= 3 (got {self.n})")
        object.__setattr__(self, "red",  _as_permutation(self.red,  self.n, "red"))
        object.__setattr__(self, "blue", _as_permutation(self.blue, self.n, "blue"))

    def __eq__(self, other):
        if not isinstance(other, PointerConfig):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.red, other.red)
                and np.array_equal(self.blue, other.blue))

    def __hash__(self):
        return hash((self.n, self.red.tobytes(), self.blue.tobytes()))

    def pointers(self, color: PointerColor) -> np.ndarray:
        return self.red if color is PointerColor.RED else self.blue

    def with_pointers(self, color: PointerColor, values) -> "PointerConfig":
        if color is PointerColor.RED:
            return PointerConfig(self.n, values, self.blue)
        return PointerConfig(self.n, self.red, values)


@dataclass(frozen=True, eq=False)
class PhaseGraph:
    """Undirected multigraph kept as an edge list plus an incidence index."""

    n:     int
    edges: np.ndarray            # (E, 2) endpoints
    kinds: np.ndarray            # (E,)   EDGE_CYCLE | EDGE_POINTER | EDGE_RAW
    # per-node half-edges: neighbours[v, s] / edge_ids[v, s] for s < degree[v]
    neighbours: np.ndarray = field(repr=False)
    edge_ids:   np.ndarray = field(repr=False)
    degree:     np.ndarray = field(repr=False)

    @classmethod
    def _from_arrays(cls, n: int, edges: np.ndarray, kinds: np.ndarray) -> "PhaseGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"edge endpoints outside [0, {n})")
        degree = np.zeros(n, dtype=np.int64)
        np.add.at(degree, edges[:, 0], 1)
        np.add.at(degree, edges[:, 1], 1)
        width = int(degree.max(initial=0))
        neighbours = np.full((n, max(width, 1)), -1, dtype=np.int64)
        edge_ids   = np.full((n, max(width, 1)), -1, dtype=np.int64)
        fill = np.zeros(n, dtype=np.int64)
        # a self-loop contributes two half-edges at its node
        for e, (u, v) in enumerate(edges):
            neighbours[u, fill[u]] = v
            edge_ids[u, fill[u]] = e
            fill[u] += 1
            neighbours[v, fill[v]] = u
            edge_ids[v, fill[v]] = e
            fill[v] += 1
        for arr in (edges, kinds, neighbours, edge_ids, degree):
            arr.setflags(write=False)
        return cls(n, edges, np.asarray(kinds, dtype=np.int8), neighbours, edge_ids, degree)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "PhaseGraph":
        """Raw multigraph constructor (0-based pairs), for falsification tests."""
        if n < 1:
            raise ValueError(f"n must be positive (got {n})")
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        kinds = np.full(len(arr), EDGE_RAW, dtype=np.int8)
        return cls._from_arrays(n, arr, kinds)

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "PhaseGraph":
        nodes = sorted(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), [(index[u], index[v]) for u, v in g.edges()])

    @property
    def num_edges(self) -> int:
        return int(len(self.edges))

    @property
    def max_degree(self) -> int:
        return int(self.degree.max(initial=0))

    def incident(self, v: int) -> np.ndarray:
        return self.neighbours[v, : self.degree[v]]

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from((int(u), int(v)) for u, v in self.edges)
        return g

    @property
    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def edge_list_key(self) -> str:
        return f"{self.n}:" + ",".join(f"{u}-{v}" for u, v in self.edges)


@dataclass(frozen=True)
class Cut:
    members:          frozenset
    boundary_total:   int
    boundary_pointer: int
    arcs:             int


# ═══════════════════════════════════════════════════════════════════════
# CONSTRUCTION
# ═══════════════════════════════════════════════════════════════════════

def random_config(n: int, rng: np.random.Generator) -> PointerConfig:
    return PointerConfig(n, rng.permutation(n), rng.permutation(n))


def identity_config(n: int) -> PointerConfig:
    ident = np.arange(n)
    return PointerConfig(n, ident, ident)


def reverse_config(n: int) -> PointerConfig:
    back = (np.arange(n) - 1) % n
    return PointerConfig(n, back, back)


def cycle_edges(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.stack([i, (i + 1) % n], axis=1)


def build_phase_graph(config: PointerConfig, color: PointerColor) -> PhaseGraph:
    """Ring plus the unoriented pointer edges (i, p_i) of the given colour."""
    n = config.n
    pointers = config.pointers(color)
    edges = np.concatenate([cycle_edges(n), np.stack([np.arange(n), pointers], axis=1)])
    kinds = np.concatenate([np.full(n, EDGE_CYCLE), np.full(n, EDGE_POINTER)]).astype(np.int8)
    return PhaseGraph._from_arrays(n, edges, kinds)


# ═══════════════════════════════════════════════════════════════════════
# CUTS
# ═══════════════════════════════════════════════════════════════════════

def _membership(n: int, members) -> np.ndarray:
    inside = np.zeros(n, dtype=bool)
    idx = np.fromiter((int(v) for v in members), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError(f"subset has nodes outside [0, {n})")
    inside[idx] = True
    count = int(inside.sum())
    if count == 0 or count == n:
        raise ValueError("subset must be a proper nonempty subset of the nodes")
    return inside


def _crossing(graph: PhaseGraph, inside: np.ndarray) -> np.ndarray:
    return inside[graph.edges[:, 0]] != inside[graph.edges[:, 1]]


def edge_boundary(graph: PhaseGraph, members) -> int:
    """|E(S, S̄)| with multiplicity; self-loops never cross."""
    return int(_crossing(graph, _membership(graph.n, members)).sum())


def count_arcs(n: int, members) -> int:
    """Number of maximal runs of consecutive (mod n) members."""
    inside = _membership(n, members)
    return int(np.sum(inside & ~np.roll(inside, 1)))


def cut_of(graph: PhaseGraph, members) -> Cut:
    inside = _membership(graph.n, members)
    crossing = _crossing(graph, inside)
    return Cut(
        members=frozenset(int(v) for v in np.flatnonzero(inside)),
        boundary_total=int(crossing.sum()),
        boundary_pointer=int((crossing & (graph.kinds == EDGE_POINTER)).sum()),
        arcs=int(np.sum(inside & ~np.roll(inside, 1))),
    )


# ═══════════════════════════════════════════════════════════════════════
# TEXT FORMAT  (header "N <n>", then "red i j" / "blue i j", 1-based)
# ═══════════════════════════════════════════════════════════════════════

def format_config(config: PointerConfig) -> str:
    lines = [f"N {config.n}"]
    for color in (PointerColor.RED, PointerColor.BLUE):
        pointers = config.pointers(color)
        lines.extend(f"{color.value} {i + 1} {int(pointers[i]) + 1}" for i in range(config.n))
    return "\n".join(lines) + "\n"


def _parse_lines(text: str):
    n: Optional[int] = None
    pointers = {"red": {}, "blue": {}}
    raw: List[Tuple[int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0].lower()
        try:
            if tag == "n" and len(parts) == 2:
                n = int(parts[1])
            elif tag in pointers and len(parts) == 3:
                pointers[tag][int(parts[1]) - 1] = int(parts[2]) - 1
            elif tag == "edge" and len(parts) == 3:
                raw.append((int(parts[1]) - 1, int(parts[2]) - 1))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse '{line.strip()}'") from None
    if n is None:
        raise ValueError("missing 'N <n>' header")
    return n, pointers, raw


def parse_config(text: str) -> PointerConfig:
    n, pointers, _ = _parse_lines(text)
    arrays = {}
    for color, mapping in pointers.items():
        if sorted(mapping) != list(range(n)):
            raise ValueError(f"{color} pointers must be given for every node 1..{n}")
        arrays[color] = [mapping[i] for i in range(n)]
    return PointerConfig(n, arrays["red"], arrays["blue"])


def write_config(config: PointerConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(config), encoding="utf-8")
    logger.info(f"Pointer configuration written to {path}")
    return path


def read_config(path: Union[str, Path]) -> PointerConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def read_graph(path: Union[str, Path], color: PointerColor = PointerColor.RED) -> PhaseGraph:
    """
    Load a graph file.  Files with 'edge i j' lines are raw multigraphs;
    otherwise the file is a pointer configuration and the phase graph of
    `color` is returned.
    """
    text = Path(path).read_text(encoding="utf-8")
    n, _, raw = _parse_lines(text)
    if raw:
        return PhaseGraph.from_edges(n, raw)
    return build_phase_graph(parse_config(text), color)


def format_graph(graph: PhaseGraph) -> str:
    lines = [f"N {graph.n}"]
    lines.extend(f"edge {int(u) + 1} {int(v) + 1}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"
