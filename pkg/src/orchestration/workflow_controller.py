import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from .logger import LOG_DIR, setup_logger
from .state_manager import ExperimentState, StateManager
from .worker_pool import run_indexed
from ..analysis.isoperimetry import ExpansionHypothesis, check_hypothesis, profile_exact
from ..analysis.path_congestion import build_path_system, endpoint_hit_report
from ..config.config_loader import ConfigError, ExperimentConfig, config_hash
from ..config.settings import PROFILE_SETTINGS, STATISTICAL_THRESHOLDS
from ..dynamics.interchange_sim import SimParams, phase_graph_for, replica_rng, run_protocol
from ..experiments.bootstrap import BootstrapConfig, bootstrap_campaign
from ..experiments.falsification import CampaignConfig, campaign_for
from ..experiments.statistical_tests import (
    CONFIG_STREAM,
    exclusion_duality_test,
    mean_cut_test,
    uniformity_test,
)
from ..output.report_generator import ReportGenerator, build_report
from ..topology.pointer_graph import (
    PointerColor,
    PointerConfig,
    format_config,
    format_graph,
    random_config,
    read_config,
    read_graph,
)

EXIT_OK        = 0
EXIT_VIOLATION = 1
EXIT_USAGE     = 2

# (summary, rows, violation, extra text files)
Outcome = Tuple[dict, List[dict], bool, Dict[str, str]]


def _one_based(nodes) -> List[int]:
    return [int(v) + 1 for v in sorted(nodes)]


def _witness_text(nodes) -> str:
    return " ".join(str(v) for v in _one_based(nodes))


class ExperimentController:

    def __init__(self, config: ExperimentConfig):
        self.logger        = setup_logger()
        StateManager.reset()
        self.state_manager = StateManager()
        self.config        = config
        self.exit_code     = EXIT_OK
        self.outcome: Optional[Outcome] = None
        self.written: Dict[str, str] = {}
        self.snapshot_path = LOG_DIR / "state_snapshot.json"
        self.logger.info(f"ExperimentController initialized for '{config.kind}'")

    # ═══════════════════════════════════════════════════════════════════════
    # MAIN FSM LOOP
    # ═══════════════════════════════════════════════════════════════════════

    def run(self) -> int:
        self.logger.info("Experiment started")
        try:
            while True:
                state = self.state_manager.current_state

                if state == ExperimentState.COMPLETED:
                    self.finish_experiment(); break
                if state == ExperimentState.ERROR:
                    self.logger.error("Experiment stopped due to error")
                    self.state_manager.dump_to_file(self.snapshot_path); break

                if   state == ExperimentState.INITIALIZED: self.handle_configuration()
                elif state == ExperimentState.CONFIGURED:  self.handle_run()
                elif state == ExperimentState.RUNNING:     self.state_manager.update_state(ExperimentState.REPORTING)
                elif state == ExperimentState.REPORTING:   self.handle_reporting()
                else:
                    self._fail(f"Unknown state: {state}")

        except Exception as exc:
            self._fail(f"Critical experiment failure: {exc}")

        return self.exit_code

    # ── error helpers ─────────────────────────────────────────────────────

    def _fail(self, msg: str):
        self.logger.error(msg)
        self.state_manager.add_error(msg)
        self.state_manager.update_state(ExperimentState.ERROR)
        self.exit_code = EXIT_USAGE

    def _warn_partial(self, msg: str):
        self.logger.warning(msg)
        self.state_manager.errors.append(f"[PARTIAL] {msg}")

    # ═══════════════════════════════════════════════════════════════════════
    # CONFIGURATION
    # ═══════════════════════════════════════════════════════════════════════

    def handle_configuration(self):
        try:
            self.config.validate()
        except ConfigError as exc:
            self._fail(f"Invalid configuration: {exc}"); return
        self.state_manager.add_data("config_hash", config_hash(self.config))
        self.state_manager.add_data("kind", self.config.kind)
        self.state_manager.update_progress(10)
        self.state_manager.update_state(ExperimentState.CONFIGURED)

    # ═══════════════════════════════════════════════════════════════════════
    # RUN
    # ═══════════════════════════════════════════════════════════════════════

    def handle_run(self):
        runners = {
            "simulate":            self.run_simulate,
            "profile":             self.run_profile,
            "verify-spread":       self.run_campaign,
            "verify-collapse":     self.run_campaign,
            "verify-majorization": self.run_campaign,
            "paths":               self.run_paths,
            "bootstrap":           self.run_bootstrap,
            "uniformity":          self.run_uniformity,
            "duality":             self.run_duality,
            "meancut":             self.run_meancut,
        }
        self.state_manager.update_state(ExperimentState.RUNNING)
        try:
            self.outcome = runners[self.config.kind]()
        except (ValueError, OSError) as exc:
            self._fail(f"{self.config.kind} failed: {exc}"); return

        summary, rows, violation, _ = self.outcome
        self.state_manager.add_data("summary", summary)
        self.state_manager.add_data("violation", violation)
        self.state_manager.update_progress(80)
        if violation:
            self.logger.warning(f"{self.config.kind}: violation recorded")

    # ── helpers ───────────────────────────────────────────────────────────

    def _members(self) -> List[int]:
        # members are 1-based in configs and on the command line
        return [m - 1 for m in self.config.members]

    def _pointer_config(self) -> PointerConfig:
        cfg = self.config
        if cfg.graph:
            return read_config(cfg.graph)
        return random_config(cfg.n, replica_rng(cfg.seed, CONFIG_STREAM))

    # ── kinds ─────────────────────────────────────────────────────────────

    def run_simulate(self) -> Outcome:
        cfg = self.config
        initial = read_config(cfg.graph) if cfg.graph else None
        params = SimParams(
            n=initial.n if initial is not None else cfg.n,
            phase_length=cfg.phase_length, num_phases=cfg.phases, a_exponent=cfg.a_exponent,
            seed=cfg.seed, count_mode=cfg.count_mode, initial=cfg.initial,
            snapshot_profile=cfg.snapshot_profile,
        )
        replicas = cfg.replica_count
        results = run_indexed(
            lambda r: run_protocol(params, replica_rng(cfg.seed, r), initial),
            range(replicas), cfg.threads,
        )
        first = results[0]

        # one row per phase, aggregated over replicas
        rows = []
        for phase in range(len(first.phases)):
            stats = [res.phases[phase] for res in results]
            row = {
                "phase":       phase + 1,
                "clock":       (phase + 1) * first.T,
                "total_swaps": sum(s.total_swaps for s in stats),
                "max_Mn":      max(s.max_modifications for s in stats),
                "mean_Mn":     float(np.mean([s.per_node_modifications for s in stats])),
            }
            if cfg.snapshot_profile:
                ratios = [float(res.profiles[phase].phi_ratio[params.n // 2])
                          for res in results if res.profiles[phase] is not None]
                row["phi_ratio_half"] = min(ratios) if ratios else None
            rows.append(row)

        within = [res.within_rewiring_bound() for res in results]
        summary = {
            "n": params.n, "T": first.T, "phases": len(first.phases), "tau": first.tau,
            "replicas": replicas,
            "initial": cfg.initial if initial is None else "file",
            "count_mode": cfg.count_mode,
            "max_modifications": max(res.max_modifications for res in results),
            "rewiring_threshold": first.rewiring_threshold(),
            "within_rewiring_bound": all(within),
            "within_bound_fraction": sum(within) / replicas,
        }
        last_moved = first.phases[-1].moving_color
        extra = {
            "final_config.txt": format_config(first.final_config),
            # the graph the next phase would move on, in raw edge format
            "final_graph.txt": format_graph(phase_graph_for(first.final_config, last_moved.other)),
        }
        return summary, rows, not all(within), extra

    def run_profile(self) -> Outcome:
        cfg = self.config
        graph = read_graph(cfg.graph, PointerColor(cfg.color))
        kmax = cfg.kmax if cfg.kmax is not None else graph.n // 2
        profile = profile_exact(graph, kmax, workers=cfg.threads)

        rows = []
        for k in range(1, kmax + 1):
            row = {"k": k}
            if cfg.variant in ("card", "both"):
                row["phi_card"] = int(profile.phi_card[k])
            if cfg.variant in ("ratio", "both"):
                row["phi_ratio"] = float(profile.phi_ratio[k])
            if cfg.witnesses:
                witnesses = profile.ratio_witnesses if cfg.variant == "ratio" else profile.card_witnesses
                row["witness"] = _witness_text(witnesses[k])
                if cfg.variant == "both":
                    row["ratio_witness"] = _witness_text(profile.ratio_witnesses[k])
            rows.append(row)

        check = check_hypothesis(profile, ExpansionHypothesis(gamma=cfg.gamma, d=cfg.d), form=cfg.hypothesis_form)
        summary = {
            "n": graph.n, "kmax": kmax,
            "phi_ratio_half": float(profile.phi_ratio[min(kmax, graph.n // 2)]),
            "gamma": cfg.gamma, "d": cfg.d,
            "hypothesis_form": check.form,
            "hypothesis_holds": check.holds,
            "first_violation": check.first_violation,
            "violation_witness": _one_based(check.witness) if check.witness is not None else None,
        }
        # a profile is a measurement; a failed hypothesis is not a violation
        return summary, rows, False, {}

    def run_campaign(self) -> Outcome:
        cfg = self.config
        campaign = CampaignConfig(
            family=cfg.family, n_values=list(cfg.n_values), seeds=cfg.seed_list,
            k_values=[cfg.k] if cfg.k is not None else None,
            t_grid=list(cfg.t_grid), samples=cfg.samples,
            gamma=cfg.gamma, d=cfg.d, t_end=cfg.t_end, threads=cfg.threads,
        )
        report = campaign_for(cfg.kind, campaign)

        rows = []
        for v in report.violations:
            row = dict(v)
            if "ordering" in row:
                row["ordering"] = " ".join(str(int(u) + 1) for u in row["ordering"])
            rows.append(row)

        summary = {
            "family": report.family, "instances": report.instances, "skipped": report.skipped,
            "violations": len(report.violations), "min_slack": report.min_slack,
            "holds": report.holds, "details": dict(report.details),
        }
        return summary, rows, not report.holds, {}

    def run_paths(self) -> Outcome:
        cfg = self.config
        graph = read_graph(cfg.graph, PointerColor(cfg.color))
        system = build_path_system(
            graph, cfg.gamma, replica_rng(cfg.seed, 0),
            walks_per_source=cfg.walks_per_source, d=cfg.d,
            path_length=cfg.path_length, lazy=cfg.lazy, threads=cfg.threads,
        )
        rows = [{"node": v + 1, "visits": int(c)} for v, c in enumerate(system.node_visits)]
        summary = {
            "n": graph.n, "K": system.K, "coverage": system.coverage,
            "path_length_bound": system.path_length_bound,
            "walks_per_source": system.walks_per_source, "lazy": system.lazy,
            "max_node_visits": system.max_node_visits,
            "expected_visits_per_node": system.expected_visits_per_node,
            "visit_threshold": system.visit_threshold,
            "visits_within_threshold": system.visits_within_threshold,
            "unreachable_pairs": len(system.unreachable),
            "mixing_budget_T": system.mixing_budget_T,
        }
        violation = system.coverage < 1.0 or not system.visits_within_threshold

        if graph.n <= STATISTICAL_THRESHOLDS["max_duality_n"]:
            hit = endpoint_hit_report(graph, system.path_length_bound, lazy=cfg.lazy)
            summary["endpoint_hit"] = {
                "min_hit_probability": hit.min_hit_probability, "threshold": hit.threshold,
                "spectral_radius": hit.spectral_radius, "premise_holds": hit.premise_holds,
                "failing_pairs": hit.failing_pairs,
            }
            # without the spectral premise a miss is reported, not counted
            violation = violation or (hit.premise_holds and not hit.holds)
        return summary, rows, violation, {}

    def run_bootstrap(self) -> Outcome:
        cfg = self.config
        base = BootstrapConfig(
            n=cfg.n, gamma=cfg.gamma, seed=cfg.seed, phase_length=cfg.phase_length,
            a_exponent=cfg.a_exponent, simulation_only=cfg.simulation_only,
            initial=cfg.initial, count_mode=cfg.count_mode, form=cfg.hypothesis_form,
        )
        seeds = cfg.seed_list
        campaign = bootstrap_campaign(base, seeds, threads=cfg.threads)

        rows = []
        for seed, report in zip(campaign.seeds, campaign.reports):
            for r in report.records:
                rows.append({
                    "seed": seed, "phase": r.phase, "d_f": r.d_f, "moving_color": r.moving_color,
                    "hypothesis_holds": r.hypothesis_holds, "first_violation": r.first_violation,
                    "witness": _witness_text(r.witness) if r.witness is not None else None,
                    "phi_ratio_half": r.phi_ratio_half, "is_expander": r.is_expander,
                    "max_Mn": r.max_modifications,
                })

        base_flags = [rep.records[0].hypothesis_holds for rep in campaign.reports]
        base_case_holds = None if any(b is None for b in base_flags) else all(base_flags)
        summary = {
            "n": cfg.n, "gamma": cfg.gamma, "seeds": len(seeds), "phases": base.phases,
            "hypothesis_form": base.form,
            "T": campaign.reports[0].T,
            "base_case_holds": base_case_holds,
            "base_case_fraction": campaign.base_case_fraction,
            "all_events_fraction": campaign.all_events_fraction,
            "expander_phase": campaign.expander_phases,
            "max_modifications": max(rep.max_modifications for rep in campaign.reports),
            "rewiring_threshold": campaign.reports[0].rewiring_threshold,
            "within_rewiring_bound": all(rep.within_rewiring_bound for rep in campaign.reports),
        }
        violation = base_case_holds is False or not summary["within_rewiring_bound"]
        return summary, rows, violation, {}

    def run_uniformity(self) -> Outcome:
        cfg = self.config
        initial = read_config(cfg.graph) if cfg.graph else None
        n = initial.n if initial is not None else cfg.n
        report = uniformity_test(n, cfg.T, cfg.replica_count, cfg.seed, threads=cfg.threads, config=initial)
        summary = {
            "n": report.n, "T": report.T, "replicas": report.replicas,
            "statistic": report.statistic, "p_value": report.p_value, "dof": report.dof,
            "p_value_min": report.p_value_min, "passed": report.passed,
            "min_cell": report.min_cell, "max_cell": report.max_cell,
            "expected_cell": report.replicas / math.factorial(report.n),
        }
        return summary, [], not report.passed, {}

    def run_duality(self) -> Outcome:
        cfg = self.config
        report = exclusion_duality_test(self._pointer_config(), self._members(), cfg.T,
                                        cfg.replica_count, cfg.seed, threads=cfg.threads)
        rows = [
            {"node": v + 1, "empirical": float(e), "analytic": float(a)}
            for v, (e, a) in enumerate(zip(report.empirical, report.analytic))
        ]
        summary = {
            "n": report.n, "set_size": report.set_size, "T": report.T, "replicas": report.replicas,
            "max_deviation": report.max_deviation, "sigma_max": report.sigma_max,
            "envelope": report.envelope, "passed": report.passed,
        }
        return summary, rows, not report.passed, {}

    def run_meancut(self) -> Outcome:
        cfg = self.config
        pointer_config = self._pointer_config()
        if pointer_config.n > PROFILE_SETTINGS["enumeration_budget"]:
            self._warn_partial(f"N={pointer_config.n} exceeds the profile budget; hypothesis not checked")
        report = mean_cut_test(pointer_config, self._members(), cfg.T, cfg.replica_count,
                               cfg.gamma, cfg.d, cfg.seed, threads=cfg.threads)
        rows = [
            {"r": t.r, "threshold": t.threshold, "empirical": t.empirical, "bound": t.bound, "holds": t.holds}
            for t in report.tails
        ]
        summary = {
            "n": report.n, "set_size": report.set_size, "T": report.T, "replicas": report.replicas,
            "gamma": report.gamma, "d": report.d,
            "initial_cut": report.initial_cut, "mean_cut": report.mean_cut,
            "mean_outgoing": report.mean_outgoing, "analytic_outgoing": report.analytic_outgoing,
            "cut_bound": report.cut_bound, "cut_ratio": report.cut_ratio,
            "outgoing_ratio": report.outgoing_ratio, "hypothesis_holds": report.hypothesis_holds,
            "passed": report.passed,
        }
        return summary, rows, not report.passed, {}

    # ═══════════════════════════════════════════════════════════════════════
    # REPORTING
    # ═══════════════════════════════════════════════════════════════════════

    def handle_reporting(self):
        if self.outcome is None:
            self._fail("No experiment outcome available for reporting"); return
        summary, rows, violation, extra = self.outcome
        try:
            report = build_report(
                self.config.kind, summary, rows, violation,
                seed=self.config.seed, config_hash=self.state_manager.data["config_hash"],
            )
            generator = ReportGenerator(output_dir=self.config.output_directory)
            self.written = generator.generate(report, fmt=self.config.format, extra_files=extra)
        except (ValueError, OSError) as exc:
            self._fail(f"Report generation failed: {exc}"); return

        self.exit_code = EXIT_VIOLATION if violation else EXIT_OK
        self.state_manager.add_data("written", self.written)
        self.state_manager.update_progress(100)
        self.state_manager.update_state(ExperimentState.COMPLETED)

    def finish_experiment(self):
        self.state_manager.dump_to_file(self.snapshot_path)
        self.logger.info(
            "Experiment finalized",
            extra={"context": {"kind": self.config.kind, "exit_code": self.exit_code}},
        )
