"""
falsification.py  -  randomized campaigns over small exactly-profiled graphs

Families:
  pointer   ring plus the edges of a uniform random permutation (4-regular multigraph)
  regular   networkx random 4-regular simple graph

Each campaign returns a CampaignReport {instances, violations, min_slack};
violations are records, and a nonempty list means an inequality failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import networkx as nx
import numpy as np

from src.analysis.isoperimetry import (
    ExpansionHypothesis,
    IsoProfile,
    check_hypothesis,
    profile_exact,
)
from src.analysis.mass_control import (
    check_collapsed_gap,
    check_collapsed_majorization,
    check_majorization,
    check_partial_spread,
    derivative_fd_error,
    sorted_mass_derivative_bound,
)
from src.analysis.spectral import LaplacianView, MassVector, cheeger_check, heat_kernel
from src.config.settings import RUNTIME_SETTINGS, SPECTRAL_SETTINGS
from src.dynamics.interchange_sim import replica_rng
from src.orchestration.logger import setup_logger
from src.orchestration.worker_pool import run_indexed
from src.topology.pointer_graph import PhaseGraph, PointerColor, build_phase_graph, random_config

logger = setup_logger()

FAMILIES = ("pointer", "regular")


@dataclass
class CampaignConfig:
    family:   str = "pointer"
    n_values: List[int] = field(default_factory=lambda: [8, 10, 12])
    seeds:    List[int] = field(default_factory=lambda: list(range(10)))
    k_values: Optional[List[int]] = None
    t_grid:   List[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 1.0, 3.0, 10.0])
    samples:  int = 20
    gamma:    float = 0.5
    d:        float = 4.0
    t_end:    float = 1.0
    threads:  int = RUNTIME_SETTINGS["threads"]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES} (got '{self.family}')")
        if not self.n_values or min(self.n_values) < 4:
            raise ValueError("n_values must be nonempty with every n >= 4")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if any(t < 0 for t in self.t_grid):
            raise ValueError("t_grid entries must be >= 0")

    def ks_for(self, n: int) -> List[int]:
        if self.k_values is None:
            return list(range(1, n // 2 + 1))
        return [k for k in self.k_values if 1 <= k <= n // 2]


@dataclass
class CampaignReport:
    kind:       str
    family:     str
    instances:  int = 0
    skipped:    int = 0
    min_slack:  float = float("inf")
    violations: List[dict] = field(default_factory=list)
    details:    Dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return not self.violations

    def merge(self, other: "CampaignReport"):
        self.instances += other.instances
        self.skipped += other.skipped
        self.min_slack = min(self.min_slack, other.min_slack)
        self.violations.extend(other.violations)
        for key, value in other.details.items():
            if key.startswith("min_"):
                self.details[key] = min(self.details.get(key, value), value)
            elif key.startswith("max_"):
                self.details[key] = max(self.details.get(key, value), value)
            else:
                self.details[key] = self.details.get(key, 0.0) + value


def random_graph(family: str, n: int, seed: int) -> PhaseGraph:
    if family == "pointer":
        return build_phase_graph(random_config(n, replica_rng(seed, n)), PointerColor.RED)
    if family == "regular":
        return PhaseGraph.from_networkx(nx.random_regular_graph(4, n, seed=seed))
    raise ValueError(f"family must be one of {FAMILIES} (got '{family}')")


def _instances(config: CampaignConfig):
    return [(n, seed) for n in config.n_values for seed in config.seeds]


def _run(config: CampaignConfig, kind: str, body) -> CampaignReport:
    pairs = _instances(config)

    def _one(i: int) -> CampaignReport:
        n, seed = pairs[i]
        graph = random_graph(config.family, n, seed)
        part = CampaignReport(kind=kind, family=config.family)
        body(graph, profile_exact(graph, n // 2), seed, part)
        return part

    report = CampaignReport(kind=kind, family=config.family)
    for part in run_indexed(_one, range(len(pairs)), config.threads):
        report.merge(part)
    logger.info(
        f"Campaign {kind} finished",
        extra={"context": {"instances": report.instances, "violations": len(report.violations)}},
    )
    return report


# ═══════════════════════════════════════════════════════════════════════
# CAMPAIGNS
# ═══════════════════════════════════════════════════════════════════════

def verify_spread_campaign(config: CampaignConfig) -> CampaignReport:
    """Prefix partial-spread bound from a point mass and from a uniform k-set start."""

    def body(graph: PhaseGraph, profile: IsoProfile, seed: int, part: CampaignReport):
        lap = LaplacianView.from_graph(graph)
        rng = replica_rng(seed, 1)
        for k in config.ks_for(graph.n):
            starts = [MassVector.point_mass(graph.n, int(rng.integers(graph.n))),
                      MassVector.uniform_on(graph.n, rng.choice(graph.n, size=k, replace=False))]
            for pi0 in starts:
                rep = check_partial_spread(lap, k, pi0, config.t_grid, phi_ratio_k=profile.phi_ratio[k])
                part.instances += rep.checked
                part.min_slack = min(part.min_slack, rep.min_slack)
                part.violations.extend(
                    {"n": graph.n, "seed": seed, "k": k, "t": v.t, "s": v.s, "lhs": v.lhs, "rhs": v.rhs}
                    for v in rep.violations
                )

    return _run(config, "verify-spread", body)


def verify_collapse_campaign(config: CampaignConfig) -> CampaignReport:
    """Collapsed-graph gap over sampled and sorted-order orderings, plus the classical Cheeger check."""

    def body(graph: PhaseGraph, profile: IsoProfile, seed: int, part: CampaignReport):
        rng = replica_rng(seed, 2)
        for k in config.ks_for(graph.n):
            rep = check_collapsed_gap(graph, k, samples=config.samples, rng=rng,
                                      phi_ratio_k=profile.phi_ratio[k])
            part.instances += rep.orderings_checked
            if rep.lambda_star > 0:
                part.min_slack = min(part.min_slack, rep.min_lambda2 - rep.lambda_star)
                part.details["min_gap_ratio"] = min(part.details.get("min_gap_ratio", rep.min_ratio), rep.min_ratio)
            part.violations.extend(
                {"n": graph.n, "seed": seed, "k": k, "ordering": v.ordering, "lambda2": v.lambda2, "bound": v.bound}
                for v in rep.violations
            )

        cheeger = cheeger_check(LaplacianView.from_graph(graph), profile.phi_ratio[graph.n // 2])
        part.details["cheeger_checked"] = part.details.get("cheeger_checked", 0.0) + 1
        if not cheeger.holds:
            part.violations.append({"n": graph.n, "seed": seed, "check": "cheeger",
                                    "lambda2": cheeger.lambda2, "bound": cheeger.lower_bound})

    return _run(config, "verify-collapse", body)


def verify_majorization_campaign(config: CampaignConfig) -> CampaignReport:
    """
    Three mass-control checks per graph:
      sorted-mass derivative bound (hypothesis-satisfying graphs), with the
      analytic derivative held to its finite difference within fd_relative_tolerance;
      nu-process majorization (hypothesis-satisfying graphs);
      collapsed-walk elementwise majorization (every graph).
    """
    hyp = ExpansionHypothesis(gamma=config.gamma, d=config.d)
    fd_tolerance = SPECTRAL_SETTINGS["fd_relative_tolerance"]

    def body(graph: PhaseGraph, profile: IsoProfile, seed: int, part: CampaignReport):
        lap = LaplacianView.from_graph(graph)
        rng = replica_rng(seed, 3)
        satisfied = check_hypothesis(profile, hyp).holds

        for k in config.ks_for(graph.n):
            members = rng.choice(graph.n, size=k, replace=False)
            pi0 = MassVector.uniform_on(graph.n, members)

            if satisfied:
                for t in config.t_grid:
                    pi = heat_kernel(lap, pi0, t)
                    for m in range(1, graph.n // 2 + 1):
                        bound = sorted_mass_derivative_bound(lap, pi, m, config.gamma, config.d)
                        part.instances += 1
                        part.min_slack = min(part.min_slack, bound.rhs - bound.lhs)
                        if not bound.holds:
                            part.violations.append({"check": "derivative", "n": graph.n, "seed": seed,
                                                    "k": k, "t": t, "m": m, "lhs": bound.lhs, "rhs": bound.rhs})
                        rel = derivative_fd_error(lap, pi, m, bound.lhs) if t > 0 else None
                        if rel is None:
                            continue
                        part.details["fd_checked"] = part.details.get("fd_checked", 0.0) + 1
                        part.details["max_fd_relative_error"] = max(
                            part.details.get("max_fd_relative_error", 0.0), rel)
                        if rel > fd_tolerance:
                            part.violations.append({"check": "fd", "n": graph.n, "seed": seed, "k": k,
                                                    "t": t, "m": m, "lhs": bound.lhs, "rel_error": rel})

                rep = check_majorization(lap, members, config.gamma, config.d, config.t_grid)
                part.instances += rep.checked
                part.violations.extend(
                    {"check": "nu", "n": graph.n, "seed": seed, "k": k, "t": v.t, "i": v.i,
                     "pi": v.pi_value, "nu": v.nu_value}
                    for v in rep.violations
                )
            else:
                part.skipped += 1

            rep = check_collapsed_majorization(lap, pi0, k, config.t_end)
            part.instances += rep.checked
            part.details["max_collapsed_excess"] = max(part.details.get("max_collapsed_excess", rep.max_excess),
                                                       rep.max_excess)
            part.violations.extend(
                {"check": "collapsed", "n": graph.n, "seed": seed, "k": k, "t": v.t, "i": v.i,
                 "pi": v.pi_value, "nu": v.nu_value}
                for v in rep.violations
            )

    return _run(config, "verify-majorization", body)


def campaign_for(kind: str, config: CampaignConfig) -> CampaignReport:
    runners = {
        "verify-spread": verify_spread_campaign,
        "verify-collapse": verify_collapse_campaign,
        "verify-majorization": verify_majorization_campaign,
    }
    if kind not in runners:
        raise ValueError(f"unknown campaign '{kind}'")
    return runners[kind](config)
