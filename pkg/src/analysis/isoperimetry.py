"""
isoperimetry.py  -  exact isoperimetric profiles and arc-set counting

Two profile variants are kept side by side and never aliased:
  phi_card[k]   min over 1 <= |S| <= k of |E(S, S̄)|
  phi_ratio[k]  min over 1 <= |S| <= k of |E(S, S̄)| / |S|
Arrays are indexed by k directly; entry 0 is NaN.

Exact enumeration scans all 2^N subsets as integer bitmasks, in blocks of
2^chunk_bits masks; blocks are independent and merge by index, ties going
to the smallest mask.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from src.analysis.spectral import chernoff_tail
from src.config.settings import PROFILE_SETTINGS, SPECTRAL_SETTINGS
from src.orchestration.cache_manager import ProfileCache
from src.orchestration.logger import setup_logger
from src.orchestration.worker_pool import run_indexed
from src.topology.pointer_graph import PhaseGraph

logger = setup_logger()


class ProfileBudgetError(ValueError):
    """Exact enumeration refused: graph larger than the enumeration budget."""


@dataclass
class IsoProfile:
    n:    int
    kmax: int
    phi_card:  np.ndarray
    phi_ratio: np.ndarray
    min_boundary_by_size: np.ndarray
    card_witnesses:  Dict[int, frozenset] = field(default_factory=dict)
    ratio_witnesses: Dict[int, frozenset] = field(default_factory=dict)
    size_witnesses:  Dict[int, frozenset] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kmax": self.kmax,
            "min_boundary_by_size": [int(v) for v in self.min_boundary_by_size[1:]],
            "size_witnesses": {str(k): sorted(v) for k, v in self.size_witnesses.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IsoProfile":
        by_size = np.array(data["min_boundary_by_size"], dtype=np.int64)
        witnesses = {int(k): sorted(v) for k, v in data["size_witnesses"].items()}
        masks = np.array([sum(1 << v for v in witnesses[s]) for s in range(1, data["kmax"] + 1)])
        return _assemble(data["n"], data["kmax"], by_size, masks)


@dataclass
class ExpansionHypothesis:
    gamma: float
    d:     float
    beta:  Optional[float] = None

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1] (got {self.gamma})")
        if self.d <= 0:
            raise ValueError(f"d must be positive (got {self.d})")
        if self.beta is not None and self.beta <= 1:
            raise ValueError(f"beta must be > 1 (got {self.beta})")

    @classmethod
    def from_beta(cls, n: int, beta: float, d: float) -> "ExpansionHypothesis":
        """gamma = ln(N)^(-beta)."""
        if n < 3:
            raise ValueError(f"n must be >= 3 (got {n})")
        return cls(gamma=math.log(n) ** (-beta), d=d, beta=beta)

    def required(self, size: int) -> float:
        return min(self.gamma * size, self.d)


@dataclass
class HypothesisCheck:
    holds: bool
    form:  str
    first_violation: Optional[int]  = None
    witness:  Optional[frozenset]   = None
    boundary: Optional[float]       = None
    required: Optional[float]       = None


# ═══════════════════════════════════════════════════════════════════════
# EXACT PROFILE (BITMASK BLOCKS)
# ═══════════════════════════════════════════════════════════════════════

def _popcount(masks: np.ndarray) -> np.ndarray:
    counts = np.zeros(masks.shape, dtype=np.int64)
    work = masks.copy()
    while work.any():
        counts += work & 1
        work >>= 1
    return counts


def _mask_to_set(mask: int) -> frozenset:
    return frozenset(v for v in range(int(mask).bit_length()) if (int(mask) >> v) & 1)


def _scan_block(graph: PhaseGraph, kmax: int, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-size minimum boundary and first minimizing mask over masks in [start, stop)."""
    masks = np.arange(start, stop, dtype=np.int64)
    sizes = _popcount(masks)
    keep = (sizes >= 1) & (sizes <= kmax)
    masks, sizes = masks[keep], sizes[keep]

    boundary = np.zeros(masks.shape, dtype=np.int64)
    for u, v in graph.edges:
        if u != v:
            boundary += ((masks >> u) ^ (masks >> v)) & 1

    best = np.full(kmax + 1, np.iinfo(np.int64).max, dtype=np.int64)
    best_mask = np.full(kmax + 1, -1, dtype=np.int64)
    for s in range(1, kmax + 1):
        at_size = sizes == s
        if at_size.any():
            local = boundary[at_size]
            pos = int(np.argmin(local))
            best[s] = local[pos]
            best_mask[s] = masks[at_size][pos]
    return best, best_mask


def _assemble(n: int, kmax: int, by_size: np.ndarray, masks: np.ndarray) -> IsoProfile:
    by_size = np.concatenate([[0], np.asarray(by_size, dtype=np.int64)])
    masks = np.concatenate([[-1], np.asarray(masks, dtype=np.int64)])
    phi_card = np.full(kmax + 1, np.nan)
    phi_ratio = np.full(kmax + 1, np.nan)
    size_witnesses = {s: _mask_to_set(masks[s]) for s in range(1, kmax + 1)}
    card_witnesses, ratio_witnesses = {}, {}

    best_card, best_ratio = None, None
    for k in range(1, kmax + 1):
        if best_card is None or by_size[k] < by_size[best_card]:
            best_card = k
        if best_ratio is None or by_size[k] / k < by_size[best_ratio] / best_ratio:
            best_ratio = k
        phi_card[k] = by_size[best_card]
        phi_ratio[k] = by_size[best_ratio] / best_ratio
        card_witnesses[k] = size_witnesses[best_card]
        ratio_witnesses[k] = size_witnesses[best_ratio]

    return IsoProfile(
        n=n, kmax=kmax,
        phi_card=phi_card, phi_ratio=phi_ratio,
        min_boundary_by_size=by_size,
        card_witnesses=card_witnesses,
        ratio_witnesses=ratio_witnesses,
        size_witnesses=size_witnesses,
    )


def _check_profile_args(graph: PhaseGraph, kmax: int, budget: int):
    if graph.n > budget:
        raise ProfileBudgetError(
            f"exact profile refused: N={graph.n} exceeds the enumeration budget {budget}"
        )
    if graph.n < 2:
        raise ValueError(f"profile needs at least 2 nodes (got {graph.n})")
    if not 1 <= kmax <= graph.n // 2:
        raise ValueError(f"kmax must satisfy 1 <= kmax <= N/2 (got kmax={kmax}, N={graph.n})")


def profile_exact(
    graph: PhaseGraph,
    kmax: int,
    budget: int = PROFILE_SETTINGS["enumeration_budget"],
    workers: int = PROFILE_SETTINGS["workers"],
    cache: Optional[ProfileCache] = None,
) -> IsoProfile:
    _check_profile_args(graph, kmax, budget)
    cache = cache or ProfileCache()
    key = graph.edge_list_key()
    cached = cache.get(key, kmax)
    if cached is not None:
        return IsoProfile.from_dict(cached)

    total = 1 << graph.n
    block = 1 << PROFILE_SETTINGS["chunk_bits"]
    starts = list(range(0, total, block))
    parts = run_indexed(
        lambda b: _scan_block(graph, kmax, starts[b], min(starts[b] + block, total)),
        range(len(starts)),
        workers,
    )

    best = np.full(kmax + 1, np.iinfo(np.int64).max, dtype=np.int64)
    best_mask = np.full(kmax + 1, -1, dtype=np.int64)
    for block_best, block_mask in parts:
        better = block_best < best
        best[better] = block_best[better]
        best_mask[better] = block_mask[better]

    profile = _assemble(graph.n, kmax, best[1:], best_mask[1:])
    cache.set(key, kmax, profile.to_dict())
    logger.debug(f"Exact profile computed for N={graph.n}, kmax={kmax}")
    return profile


def profile_gray_code(
    graph: PhaseGraph,
    kmax: int,
    budget: int = PROFILE_SETTINGS["enumeration_budget"],
) -> IsoProfile:
    """
    Reference enumeration: walk all subsets in Gray-code order, flipping one
    node per step and updating the boundary in O(degree).
    """
    _check_profile_args(graph, kmax, budget)
    n = graph.n
    inside = [False] * n
    incident = [[int(w) for w in graph.incident(v) if int(w) != v] for v in range(n)]

    best = [None] * (kmax + 1)
    best_mask = [0] * (kmax + 1)
    size = boundary = mask = 0
    for step in range(1, 1 << n):
        v = (step & -step).bit_length() - 1
        same_side = sum(1 for w in incident[v] if inside[w] == inside[v])
        boundary += 2 * same_side - len(incident[v])
        inside[v] = not inside[v]
        mask ^= 1 << v
        size += 1 if inside[v] else -1
        if 1 <= size <= kmax:
            if best[size] is None or boundary < best[size] or (boundary == best[size] and mask < best_mask[size]):
                best[size] = boundary
                best_mask[size] = mask

    return _assemble(n, kmax, np.array(best[1:]), np.array(best_mask[1:]))


# ═══════════════════════════════════════════════════════════════════════
# HYPOTHESIS PREDICATE
# ═══════════════════════════════════════════════════════════════════════

def check_hypothesis(
    profile: IsoProfile,
    hyp: ExpansionHypothesis,
    form: str = "per_set",
) -> HypothesisCheck:
    """
    per_set:    min_{|S| = k} |E(S, S̄)| >= min(gamma k, d) for every k
    cumulative: phi_card[k] >= min(gamma k, d) for every k
    """
    if form not in ("per_set", "cumulative"):
        raise ValueError(f"form must be 'per_set' or 'cumulative' (got '{form}')")
    tol = SPECTRAL_SETTINGS["violation_tolerance"]
    for k in range(1, profile.kmax + 1):
        if form == "per_set":
            boundary, witness = profile.min_boundary_by_size[k], profile.size_witnesses[k]
        else:
            boundary, witness = profile.phi_card[k], profile.card_witnesses[k]
        required = hyp.required(k)
        if boundary < required - tol:
            return HypothesisCheck(False, form, k, witness, float(boundary), float(required))
    return HypothesisCheck(True, form)


# ═══════════════════════════════════════════════════════════════════════
# ARC SETS
# ═══════════════════════════════════════════════════════════════════════

def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def enumerate_arc_sets(n: int, k: int, ell: int) -> Iterator[frozenset]:
    """Size-k subsets of the n-cycle made of exactly ell arcs (0-based)."""
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (got k={k}, n={n})")
    if ell < 1:
        raise ValueError(f"ell must be >= 1 (got {ell})")
    if ell > min(k, n - k):
        return
    for runs in _compositions(k, ell):
        for gaps in _compositions(n - k, ell):
            for start in range(n):
                members, starts = [], []
                pos = start
                for run, gap in zip(runs, gaps):
                    starts.append(pos % n)
                    members.extend((pos + i) % n for i in range(run))
                    pos += run + gap
                # each set arises once per choice of first arc; keep the lowest start
                if starts[0] == min(starts):
                    yield frozenset(members)


def arc_set_count(n: int, k: int, ell: int) -> int:
    """Closed form n C(k-1, ell-1) C(n-k-1, ell-1) / ell."""
    if not 1 <= k < n or ell < 1:
        raise ValueError(f"need 1 <= k < n and ell >= 1 (got n={n}, k={k}, ell={ell})")
    if ell > min(k, n - k):
        return 0
    return n * math.comb(k - 1, ell - 1) * math.comb(n - k - 1, ell - 1) // ell


def counting_bound(n: int, ell: int) -> int:
    return n ** (2 * ell)


# ═══════════════════════════════════════════════════════════════════════
# UNION BOUND
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class UnionBoundTerm:
    ell:       int
    threshold: float
    r:         float
    log_term:  float


def union_bound_terms(n: int, k: int, gamma: float, d: float) -> List[UnionBoundTerm]:
    """
    Terms N^(2 ell) P(|F| <= min(gamma k, 2d) - 2 ell), each probability
    bounded by exp(-mu h(r)) with mu = min(gamma k, 2d) / (2 gamma).
    Case gamma k <= 2d and case gamma k > 2d differ only through the min.
    Thresholds below 0 give probability 0 and are omitted; r >= 1 is
    capped at probability 1.
    """
    if n < 2 or k < 1 or not 0 < gamma <= 1 or d <= 0:
        raise ValueError(f"invalid union bound parameters (n={n}, k={k}, gamma={gamma}, d={d})")
    scale = min(gamma * k, 2 * d)
    mu = scale / (2 * gamma)
    terms = []
    for ell in range(1, k + 1):
        threshold = scale - 2 * ell
        if threshold < 0:
            break
        r = threshold / mu
        log_p = 0.0 if r >= 1 else float(np.log(chernoff_tail(mu, r)))
        terms.append(UnionBoundTerm(ell, threshold, r, 2 * ell * math.log(n) + log_p))
    return terms


def log_union_bound_pk(n: int, k: int, gamma: float, d: float) -> float:
    if k < 2 / gamma:
        return float("-inf")
    terms = union_bound_terms(n, k, gamma, d)
    if not terms:
        return float("-inf")
    return float(logsumexp([t.log_term for t in terms]))


def union_bound_pk(n: int, k: int, gamma: float, d: float) -> float:
    """p_k bound; 0 for k < 2/gamma where phi_k >= gamma holds outright."""
    return float(np.exp(log_union_bound_pk(n, k, gamma, d)))


