"""
bootstrap.py  -  expansion bootstrap over log2(N) phases

Phase f is evaluated on the graph the next phase will move on, with the
expansion hypothesis at parameter d_f = 2^(f+1).  f = 0 is the initial
graph at d = 2, which the ring alone guarantees.  Violations are data.

Simulation-only mode skips profiles (any N) and keeps the rewiring check
max_n M_n <= 16 tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.analysis.isoperimetry import (
    ExpansionHypothesis,
    IsoProfile,
    check_hypothesis,
    profile_exact,
)
from src.config.settings import PROFILE_SETTINGS, SIMULATION_SETTINGS
from src.dynamics.interchange_sim import SimParams, replica_rng, simulate_phase
from src.orchestration.logger import setup_logger
from src.orchestration.worker_pool import run_indexed
from src.topology.pointer_graph import PointerColor, build_phase_graph

logger = setup_logger()


@dataclass
class BootstrapConfig:
    n:               int   = SIMULATION_SETTINGS["n"]
    gamma:           float = 0.25
    seed:            int   = 0
    phase_length:    Optional[float] = SIMULATION_SETTINGS["phase_length"]
    a_exponent:      float = SIMULATION_SETTINGS["a_exponent"]
    num_phases:      Optional[int] = None
    simulation_only: bool  = False
    form:            str   = "per_set"
    initial:         str   = SIMULATION_SETTINGS["initial"]
    count_mode:      str   = SIMULATION_SETTINGS["count_mode"]

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3 (got {self.n})")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1] (got {self.gamma})")
        if not self.simulation_only and self.n > PROFILE_SETTINGS["enumeration_budget"]:
            raise ValueError(
                f"full verification needs n <= {PROFILE_SETTINGS['enumeration_budget']}; "
                f"use simulation_only for n={self.n}"
            )

    @property
    def phases(self) -> int:
        return self.num_phases if self.num_phases is not None else math.ceil(math.log2(self.n))

    def sim_params(self) -> SimParams:
        return SimParams(
            n=self.n, phase_length=self.phase_length, num_phases=self.phases,
            a_exponent=self.a_exponent, seed=self.seed,
            count_mode=self.count_mode, initial=self.initial,
        )


@dataclass
class PhaseRecord:
    phase:            int
    d_f:              int
    moving_color:     str
    hypothesis_holds: Optional[bool]
    first_violation:  Optional[int] = None
    witness:          Optional[List[int]] = None
    phi_ratio_half:   Optional[float] = None
    is_expander:      Optional[bool] = None
    max_modifications: int = 0


@dataclass
class BootstrapReport:
    n:        int
    gamma:    float
    seed:     int
    T:        float
    records:  List[PhaseRecord] = field(default_factory=list)
    final_profile: Optional[IsoProfile] = field(default=None, repr=False)
    per_node_rewiring: Optional[np.ndarray] = field(default=None, repr=False)
    expander_phase: Optional[int] = None
    tau:      float = 0.0
    max_modifications: int = 0
    rewiring_threshold: float = 0.0

    @property
    def within_rewiring_bound(self) -> bool:
        return self.max_modifications <= self.rewiring_threshold

    @property
    def all_events_hold(self) -> Optional[bool]:
        flags = [r.hypothesis_holds for r in self.records]
        if any(f is None for f in flags):
            return None
        return all(flags)


class BootstrapExperiment:

    def __init__(self, config: BootstrapConfig):
        self.config = config

    def _evaluate(self, graph, phase: int, record: PhaseRecord) -> Optional[IsoProfile]:
        if self.config.simulation_only:
            return None
        profile = profile_exact(graph, self.config.n // 2)
        hyp = ExpansionHypothesis(gamma=self.config.gamma, d=2 ** (phase + 1))
        check = check_hypothesis(profile, hyp, form=self.config.form)
        record.hypothesis_holds = check.holds
        record.first_violation = check.first_violation
        record.witness = sorted(check.witness) if check.witness is not None else None
        record.phi_ratio_half = float(profile.phi_ratio[self.config.n // 2])
        record.is_expander = record.phi_ratio_half >= self.config.gamma
        return profile

    def run(self) -> BootstrapReport:
        cfg = self.config
        params = cfg.sim_params()
        rng = replica_rng(cfg.seed, 0)
        config = params.initial_config(rng)
        T = params.T
        report = BootstrapReport(n=cfg.n, gamma=cfg.gamma, seed=cfg.seed, T=T)
        totals = np.zeros(cfg.n, dtype=np.int64)

        # f = 0: the graph blue moves on first
        color = PointerColor.BLUE
        record = PhaseRecord(phase=0, d_f=2, moving_color=color.value, hypothesis_holds=None)
        profile = self._evaluate(build_phase_graph(config, color.other), 0, record)
        report.records.append(record)

        for f in range(1, cfg.phases + 1):
            config, stats = simulate_phase(config, color, T, rng, count_mode=cfg.count_mode, phase_index=f - 1)
            totals += stats.per_node_modifications
            record = PhaseRecord(
                phase=f, d_f=2 ** (f + 1), moving_color=color.other.value,
                hypothesis_holds=None, max_modifications=stats.max_modifications,
            )
            profile = self._evaluate(build_phase_graph(config, color), f, record)
            report.records.append(record)
            logger.info(
                f"Bootstrap phase {f}/{cfg.phases}",
                extra={"context": {"d_f": record.d_f, "holds": record.hypothesis_holds}},
            )
            color = color.other

        report.final_profile = profile
        report.per_node_rewiring = totals
        report.tau = cfg.phases * T
        report.max_modifications = int(totals.max(initial=0))
        report.rewiring_threshold = SIMULATION_SETTINGS["rewiring_threshold_factor"] * report.tau
        report.expander_phase = next((r.phase for r in report.records if r.is_expander), None)
        return report


def run_bootstrap(config: BootstrapConfig) -> BootstrapReport:
    return BootstrapExperiment(config).run()


@dataclass
class BootstrapCampaign:
    seeds:               List[int]
    reports:             List[BootstrapReport] = field(repr=False)
    base_case_fraction:  float
    all_events_fraction: Optional[float]
    expander_phases:     List[Optional[int]]


def bootstrap_campaign(config: BootstrapConfig, seeds: Sequence[int], threads: int = 1) -> BootstrapCampaign:
    """Same schedule over many seeds; reports fractions, asserts nothing."""
    seeds = list(seeds)

    def _one(i: int) -> BootstrapReport:
        cfg = BootstrapConfig(**{**config.__dict__, "seed": seeds[i]})
        return run_bootstrap(cfg)

    reports = run_indexed(_one, range(len(seeds)), threads)
    base = [r.records[0].hypothesis_holds for r in reports]
    events = [r.all_events_hold for r in reports]
    return BootstrapCampaign(
        seeds=seeds,
        reports=reports,
        base_case_fraction=float(np.mean([bool(b) for b in base])) if reports else 0.0,
        all_events_fraction=None if any(e is None for e in events) else float(np.mean(events)),
        expander_phases=[r.expander_phase for r in reports],
    )
