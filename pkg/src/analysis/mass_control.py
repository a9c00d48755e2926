"""
mass_control.py  -  checks on how heat-kernel mass leaves a set

    check_partial_spread          prefix bound  pi_[s](t) <= s/(k+1) + sqrt(k+1) e^{-lambda* t}
    check_collapsed_gap           lambda2(collapsed) >= phi_k^2 / (2 Delta_base)
    sorted_mass_derivative_bound  d/dt pi_[m] against the sorted-difference bound
    aux_nu_process                +-d' jump walk confined to an index interval
    check_majorization            pi_[i](t) <= nu_[i](t)
    check_collapsed_majorization  pi_(i)(t) <= nu_{min(i, k+1)}(t), nu on the collapsed graph

Violations are returned as records inside the reports, never raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.analysis.isoperimetry import profile_exact
from src.analysis.spectral import (
    LaplacianView,
    MassVector,
    collapse,
    heat_evolve,
    heat_kernel,
    lambda_star,
    sorted_order,
    spectral_gap,
)
from src.config.settings import SPECTRAL_SETTINGS
from src.orchestration.logger import setup_logger
from src.topology.pointer_graph import PhaseGraph

logger = setup_logger()


def _phi_ratio_for(lap: LaplacianView, k: int, phi_ratio_k: Optional[float]) -> float:
    if phi_ratio_k is not None:
        return float(phi_ratio_k)
    if lap.graph is None:
        raise ValueError("phi_ratio_k must be supplied for a Laplacian without a source graph")
    return float(profile_exact(lap.graph, k).phi_ratio[k])


# ═══════════════════════════════════════════════════════════════════════
# PARTIAL SPREAD
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class SpreadViolation:
    t:   float
    s:   int
    lhs: float
    rhs: float


@dataclass
class SpreadReport:
    k:            int
    phi_ratio_k:  float
    max_degree:   float
    lambda_star:  float
    checked:      int = 0
    min_slack:    float = float("inf")
    violations:   List[SpreadViolation] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def check_partial_spread(
    lap: LaplacianView,
    k: int,
    pi0: MassVector,
    t_grid: Sequence[float],
    phi_ratio_k: Optional[float] = None,
) -> SpreadReport:
    if not 1 <= k <= lap.n // 2:
        raise ValueError(f"k must satisfy 1 <= k <= N/2 (got k={k}, N={lap.n})")
    if pi0.n != lap.n:
        raise ValueError(f"pi0 has {pi0.n} entries, graph has {lap.n} nodes")

    phi = _phi_ratio_for(lap, k, phi_ratio_k)
    lam = lambda_star(phi, lap.max_degree)
    report = SpreadReport(k=k, phi_ratio_k=phi, max_degree=lap.max_degree, lambda_star=lam)
    tol = SPECTRAL_SETTINGS["violation_tolerance"]
    s = np.arange(1, k + 1)

    for t in sorted(float(t) for t in t_grid):
        prefix = heat_kernel(lap, pi0, t).sorted_prefix[:k]
        rhs = s / (k + 1) + math.sqrt(k + 1) * math.exp(-lam * t)
        slack = rhs - prefix
        report.checked += k
        report.min_slack = min(report.min_slack, float(slack.min()))
        for idx in np.flatnonzero(slack < -tol):
            report.violations.append(SpreadViolation(t, int(s[idx]), float(prefix[idx]), float(rhs[idx])))

    if report.violations:
        logger.warning(f"Partial-spread violations found: {len(report.violations)} (k={k})")
    return report


# ═══════════════════════════════════════════════════════════════════════
# COLLAPSED GAP
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class CollapseViolation:
    ordering: List[int]
    lambda2:  float
    bound:    float


@dataclass
class CollapseReport:
    k:           int
    phi_ratio_k: float
    base_max_degree: float
    lambda_star: float
    orderings_checked: int = 0
    min_ratio:   float = float("inf")
    min_lambda2: float = float("inf")
    violations:  List[CollapseViolation] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def sorted_order_candidates(lap: LaplacianView, t_grid: Iterable[float] = (0.1, 0.5, 2.0)) -> List[np.ndarray]:
    """Orderings that sorting the heat-kernel mass actually produces, from every point-mass start."""
    t_grid = list(t_grid)
    candidates = []
    for t in t_grid:
        evolved = heat_evolve(lap, np.eye(lap.n), t)
        candidates.extend(sorted_order(evolved[:, start]) for start in range(lap.n))
    return candidates


def check_collapsed_gap(
    graph: PhaseGraph,
    k: int,
    samples: int = 50,
    rng: Optional[np.random.Generator] = None,
    orderings: Optional[Sequence[Sequence[int]]] = None,
    phi_ratio_k: Optional[float] = None,
) -> CollapseReport:
    lap = LaplacianView.from_graph(graph)
    if not 1 <= k <= graph.n // 2:
        raise ValueError(f"k must satisfy 1 <= k <= N/2 (got k={k}, N={graph.n})")
    phi = _phi_ratio_for(lap, k, phi_ratio_k)
    lam = lambda_star(phi, lap.max_degree)
    report = CollapseReport(k=k, phi_ratio_k=phi, base_max_degree=lap.max_degree, lambda_star=lam)

    if orderings is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        orderings = [np.arange(graph.n)]
        orderings += [rng.permutation(graph.n) for _ in range(samples)]
        orderings += sorted_order_candidates(lap)

    tol = SPECTRAL_SETTINGS["violation_tolerance"]
    seen = set()
    for ordering in orderings:
        ordering = np.asarray(ordering, dtype=np.int64)
        # the collapsed graph depends on the kept prefix only
        key = tuple(ordering[:k].tolist())
        if key in seen:
            continue
        seen.add(key)
        gap = spectral_gap(collapse(lap, ordering, k).laplacian).lambda2
        report.orderings_checked += 1
        report.min_lambda2 = min(report.min_lambda2, gap)
        if lam > 0:
            report.min_ratio = min(report.min_ratio, gap / lam)
        if gap < lam - tol:
            report.violations.append(CollapseViolation(ordering.tolist(), gap, lam))

    if report.violations:
        logger.warning(f"Collapsed-gap violations found: {len(report.violations)} (k={k})")
    return report


# ═══════════════════════════════════════════════════════════════════════
# SORTED-MASS DERIVATIVE
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class DerivativeBound:
    m:   int
    d_m: int
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + SPECTRAL_SETTINGS["violation_tolerance"]


def sorted_mass_derivative_bound(
    lap: LaplacianView,
    pi: MassVector,
    m: int,
    gamma: float,
    d: float,
) -> DerivativeBound:
    """
    lhs = sum over top-m i, other j of A_ij (pi_j - pi_i)
    rhs = -4 sum_{j=1}^{d_m} (pi_(m-j+1) - pi_(m-j+1+d_m)),  d_m = floor(min(gamma m, d) / 4)
    """
    if not 1 <= m < lap.n:
        raise ValueError(f"m must satisfy 1 <= m < N (got m={m}, N={lap.n})")
    order = pi.order
    top, rest = order[:m], order[m:]
    values = pi.values
    cross = lap.adjacency[np.ix_(top, rest)]
    lhs = float(np.sum(cross * (values[rest][None, :] - values[top][:, None])))

    d_m = int(math.floor(min(gamma * m, d) / 4))
    d_m = min(d_m, m, lap.n - m)
    ranked = pi.sorted_values
    j = np.arange(1, d_m + 1)
    # 1-based ranks m-j+1 and m-j+1+d_m
    rhs = -4.0 * float(np.sum(ranked[m - j] - ranked[m - j + d_m])) if d_m else 0.0
    return DerivativeBound(m=m, d_m=d_m, lhs=lhs, rhs=rhs)


def prefix_derivative_fd(
    lap: LaplacianView,
    pi: MassVector,
    m: int,
    h: float = SPECTRAL_SETTINGS["fd_step"],
) -> float:
    """Second-order one-sided difference of pi_[m] under the heat flow."""
    later = heat_evolve(lap, pi.values, h, tolerance=1e-15)
    twice = heat_evolve(lap, later, h, tolerance=1e-15)
    one = np.sort(later)[::-1][:m].sum()
    two = np.sort(twice)[::-1][:m].sum()
    return float((-3.0 * pi.sorted_prefix[m - 1] + 4.0 * one - two) / (2.0 * h))


def derivative_fd_error(
    lap: LaplacianView,
    pi: MassVector,
    m: int,
    analytic: float,
    h: float = SPECTRAL_SETTINGS["fd_step"],
) -> Optional[float]:
    """
    Relative error between the analytic d/dt pi_[m] and its finite difference.

    None when the comparison is not meaningful: the derivative is too small
    for a relative error, or the rank-m boundary gap is narrow enough for the
    step to reorder the values across it.
    """
    if abs(analytic) < SPECTRAL_SETTINGS["fd_min_derivative"]:
        return None
    ranked = pi.sorted_values
    drift = 2.0 * h * float(np.abs(lap.matrix @ pi.values).max(initial=0.0))
    if ranked[m - 1] - ranked[m] <= 4.0 * drift + 1e-12:
        return None
    numeric = prefix_derivative_fd(lap, pi, m, h)
    return abs(numeric - analytic) / abs(analytic)


# ═══════════════════════════════════════════════════════════════════════
# AUXILIARY NU PROCESS
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class NuProcess:
    values:    np.ndarray
    prefix:    np.ndarray
    t:         float
    d_prime:   int
    kappa:     float
    k_d:       float
    interval:  Tuple[int, int]
    clipped:   bool
    degenerate: bool


def _nu_interval(n: int, k: int, gamma: float, d: float):
    kappa = 4.0 / gamma
    k_d = kappa * d
    lo = math.ceil(k - (2.0 / 3.0) * k_d)
    hi = math.floor(k + (2.0 / 3.0) * k_d)
    clipped = lo < 1 or hi > n
    return kappa, k_d, max(lo, 1), min(hi, n), clipped


def nu_generator(n: int, k: int, gamma: float, d: float) -> LaplacianView:
    """Rate-4 jumps between i and i+d' when both lie in the interval (1-based sites)."""
    d_prime = int(math.floor(d / 4))
    _, _, lo, hi, _ = _nu_interval(n, k, gamma, d)
    weights = np.zeros((n, n))
    if d_prime >= 1:
        for site in range(lo, hi - d_prime + 1):
            weights[site - 1, site - 1 + d_prime] = 4.0
            weights[site - 1 + d_prime, site - 1] = 4.0
    return LaplacianView.from_weights(weights)


def aux_nu_process(n: int, k: int, gamma: float, d: float, t: float) -> NuProcess:
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (got k={k}, n={n})")
    if not 0 < gamma <= 1 or d <= 0:
        raise ValueError(f"need 0 < gamma <= 1 and d > 0 (got gamma={gamma}, d={d})")
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")

    d_prime = int(math.floor(d / 4))
    kappa, k_d, lo, hi, clipped = _nu_interval(n, k, gamma, d)
    start = np.zeros(n)
    start[:k] = 1.0 / k

    degenerate = d_prime < 1
    if degenerate:
        logger.warning(f"nu process frozen: d'=floor({d}/4)=0")
        values = start
    else:
        values = heat_evolve(nu_generator(n, k, gamma, d), start, t)

    return NuProcess(
        values=values, prefix=np.cumsum(values), t=float(t),
        d_prime=d_prime, kappa=kappa, k_d=k_d,
        interval=(lo, hi), clipped=clipped, degenerate=degenerate,
    )


def nu_stationary(n: int, k: int, gamma: float, d: float) -> np.ndarray:
    """Limit law: initial mass spread evenly over each reachable chain of sites."""
    d_prime = int(math.floor(d / 4))
    start = np.zeros(n)
    start[:k] = 1.0 / k
    if d_prime < 1:
        return start
    _, _, lo, hi, _ = _nu_interval(n, k, gamma, d)
    limit = start.copy()
    for residue in range(d_prime):
        chain = [s - 1 for s in range(lo + residue, hi + 1, d_prime)]
        if len(chain) > 1:
            limit[chain] = start[chain].sum() / len(chain)
    return limit


# ═══════════════════════════════════════════════════════════════════════
# MAJORIZATION
# ═══════════════════════════════════════════════════════════════════════

@dataclass
class MajorizationViolation:
    t:        float
    i:        int
    pi_value: float
    nu_value: float


@dataclass
class MajorizationReport:
    k:          int
    tolerance:  float
    checked:    int = 0
    max_excess: float = float("-inf")
    violations: List[MajorizationViolation] = field(default_factory=list)
    details:    Dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return not self.violations


def check_majorization(
    lap: LaplacianView,
    members: Iterable[int],
    gamma: float,
    d: float,
    t_grid: Sequence[float],
) -> MajorizationReport:
    """pi(0) uniform on the k-set `members`; compares sorted prefixes with nu's index prefixes."""
    pi0 = MassVector.uniform_on(lap.n, members)
    k = int(np.count_nonzero(pi0.values))
    tol = SPECTRAL_SETTINGS["majorization_tolerance"]
    report = MajorizationReport(k=k, tolerance=tol)

    nu = None
    for t in sorted(float(t) for t in t_grid):
        pi_prefix = heat_kernel(lap, pi0, t).sorted_prefix
        nu = aux_nu_process(lap.n, k, gamma, d, t)
        excess = pi_prefix - nu.prefix
        report.checked += lap.n
        report.max_excess = max(report.max_excess, float(excess.max()))
        for i in np.flatnonzero(excess > tol):
            report.violations.append(MajorizationViolation(t, int(i) + 1, float(pi_prefix[i]), float(nu.prefix[i])))

    if nu is not None:
        kappa = nu.kappa
        report.details["kappa"] = kappa
        report.details["interval_clipped"] = float(nu.clipped)
        report.details["one_over_three_kappa"] = 1.0 / (3.0 * kappa)
        report.details["gamma_over_twelve"] = gamma / 12.0
        # mass of the k-set leaving [k] under nu, against the target d / gamma
        report.details["measured_cut_ratio"] = k * (1.0 - float(nu.prefix[k - 1])) / (d / gamma)
    return report


def check_collapsed_majorization(
    lap: LaplacianView,
    pi0: MassVector,
    k: int,
    t_end: float,
    step_scale: float = SPECTRAL_SETTINGS["step_scale"],
) -> MajorizationReport:
    """
    Step both flows by exp(-hL), h = step_scale / Delta, re-sorting pi each
    step.  nu lives on the k+1 ranks of the collapsed graph for the current
    ordering; ranks keep their mass when the ordering changes.
    """
    if not 1 <= k < lap.n:
        raise ValueError(f"k must satisfy 1 <= k < N (got k={k}, N={lap.n})")
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0 (got {t_end})")

    tol = SPECTRAL_SETTINGS["collapsed_majorization_tolerance"]
    report = MajorizationReport(k=k, tolerance=tol)
    h = step_scale / max(lap.max_degree, 1.0)
    steps = int(math.ceil(t_end / h)) if t_end > 0 else 0
    h = t_end / steps if steps else 0.0

    base_step = linalg.expm(-h * lap.matrix) if steps else np.eye(lap.n)
    collapsed_steps: Dict[tuple, np.ndarray] = {}

    pi = pi0.values.copy()
    ranked = pi[sorted_order(pi)]
    nu = np.concatenate([ranked[:k], [ranked[k:].sum()]])

    def _compare(t: float, order: np.ndarray):
        ranked = pi[order]
        bound = np.concatenate([nu[:k], np.full(lap.n - k, nu[k])])
        excess = ranked - bound
        report.checked += lap.n
        report.max_excess = max(report.max_excess, float(excess.max()))
        for i in np.flatnonzero(excess > tol):
            report.violations.append(MajorizationViolation(t, int(i) + 1, float(ranked[i]), float(bound[i])))

    order = sorted_order(pi)
    _compare(0.0, order)
    for step in range(steps):
        key = tuple(order[:k].tolist())
        if key not in collapsed_steps:
            collapsed = collapse(lap, order, k)
            collapsed_steps[key] = linalg.expm(-h * collapsed.laplacian.matrix)
        nu = collapsed_steps[key] @ nu
        pi = base_step @ pi
        order = sorted_order(pi)
        _compare((step + 1) * h, order)

    report.details["steps"] = float(steps)
    report.details["step"] = h
    report.details["orderings_seen"] = float(len(collapsed_steps))
    if report.violations:
        logger.warning(f"Collapsed majorization violations found: {len(report.violations)} (k={k})")
    return report
