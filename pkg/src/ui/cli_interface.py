# src/ui/cli_interface.py

import argparse
import sys
from typing import List, Optional

from ..config.config_loader import ConfigError, ExperimentConfig, load_config
from ..orchestration.logger import setup_logger
from ..orchestration.workflow_controller import EXIT_USAGE, ExperimentController

logger = setup_logger()

SUPPRESS = argparse.SUPPRESS


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers (got '{text}')") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers (got '{text}')") from None


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=SUPPRESS)
    parent.add_argument("--config", help="INI experiment file; flags override its values")
    parent.add_argument("--seed", type=int)
    parent.add_argument("--out", dest="output_directory", help="output directory")
    parent.add_argument("--threads", type=int)
    parent.add_argument("--format", choices=("csv", "json"))
    return parent


def _add_hypothesis(p):
    p.add_argument("--gamma", type=float)
    p.add_argument("--d", type=float)


def _add_form(p):
    p.add_argument("--hypothesis-form", dest="hypothesis_form", choices=("per_set", "cumulative"),
                   help="per_set: every set of size k; cumulative: phi_card[k]")


def _add_sim(p):
    p.add_argument("--n", type=int)
    p.add_argument("--phase-length", dest="phase_length", type=float)
    p.add_argument("--a-exponent", dest="a_exponent", type=float,
                   help="derive the phase length as ln(N)^a")
    p.add_argument("--count-mode", dest="count_mode", choices=("owner_endpoint", "owner"))
    p.add_argument("--initial", choices=("random", "identity", "reverse"))


def _add_graph(p, help_text="graph or pointer config file (1-based)"):
    p.add_argument("--graph", help=help_text)
    p.add_argument("--color", choices=("red", "blue"), help="fixed pointer colour of the phase graph")


def _add_monte_carlo(p):
    p.add_argument("--n", type=int)
    p.add_argument("--T", dest="T", type=float, help="evolution time")
    p.add_argument("--replicas", type=int)
    p.add_argument("--graph", help="pointer config file; random config when omitted")


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(
        prog="pointermix",
        description="Pointer-network rewiring: simulation, exact profiles and inequality checks.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("simulate", parents=[parent], argument_default=SUPPRESS,
                       help="run the alternating-phase protocol")
    _add_sim(p)
    p.add_argument("--phases", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--snapshot-profile", dest="snapshot_profile", action="store_true")
    p.add_argument("--graph", help="initial pointer config file")

    p = sub.add_parser("profile", parents=[parent], argument_default=SUPPRESS,
                       help="exact isoperimetric profile of a graph")
    _add_graph(p)
    p.add_argument("--kmax", type=int)
    p.add_argument("--variant", choices=("card", "ratio", "both"))
    p.add_argument("--witnesses", action="store_true")
    _add_hypothesis(p)
    _add_form(p)

    for kind in ("verify-spread", "verify-collapse", "verify-majorization"):
        p = sub.add_parser(kind, parents=[parent], argument_default=SUPPRESS,
                           help="randomized campaign over small exactly-profiled graphs")
        p.add_argument("--family", choices=("pointer", "regular"))
        p.add_argument("--n-values", dest="n_values", type=_int_list)
        p.add_argument("--seeds", type=_int_list)
        p.add_argument("--k", type=int)
        p.add_argument("--t-grid", dest="t_grid", type=_float_list)
        p.add_argument("--samples", type=int)
        p.add_argument("--t-end", dest="t_end", type=float)
        _add_hypothesis(p)

    p = sub.add_parser("paths", parents=[parent], argument_default=SUPPRESS,
                       help="randomized canonical paths and congestion")
    _add_graph(p)
    _add_hypothesis(p)
    p.add_argument("--walks-per-source", dest="walks_per_source", type=int)
    p.add_argument("--path-length", dest="path_length", type=int)
    p.add_argument("--lazy", action="store_true")

    p = sub.add_parser("bootstrap", parents=[parent], argument_default=SUPPRESS,
                       help="expansion bootstrap over log2(N) phases")
    _add_sim(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--seeds", type=_int_list)
    p.add_argument("--simulation-only", dest="simulation_only", action="store_true")
    _add_form(p)

    p = sub.add_parser("uniformity", parents=[parent], argument_default=SUPPRESS,
                       help="chi-square test of the final permutation")
    _add_monte_carlo(p)

    p = sub.add_parser("duality", parents=[parent], argument_default=SUPPRESS,
                       help="occupancy means against the heat kernel")
    _add_monte_carlo(p)
    p.add_argument("--members", type=_int_list, help="1-based node set S")

    p = sub.add_parser("meancut", parents=[parent], argument_default=SUPPRESS,
                       help="pointer cut after a phase against the mean and tail bounds")
    _add_monte_carlo(p)
    p.add_argument("--members", type=_int_list, help="1-based node set S")
    _add_hypothesis(p)

    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """File values first, then every flag given on the command line."""
    overrides = dict(vars(args))
    path = overrides.pop("config", None)
    kind = overrides.pop("kind")
    config = load_config(path) if path else ExperimentConfig()
    config.kind = kind
    if "a_exponent" in overrides and "phase_length" not in overrides:
        config.phase_length = None
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = resolve_config(args)
        config.validate()
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    controller = ExperimentController(config)
    code = controller.run()

    for label, path in controller.written.items():
        print(f"{label}: {path}")
    for error in controller.state_manager.errors:
        print(f"error: {error}", file=sys.stderr)
    return code
