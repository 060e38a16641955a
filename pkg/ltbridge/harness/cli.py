import argparse
import sys
from pathlib import Path

import structlog
from pydantic import ValidationError

from ltbridge.common.errors import ConfigError, LtBridgeError
from ltbridge.common.logging_setup import configure_logging
from ltbridge.harness.commands import cmd_bridge, cmd_decompose, cmd_inspect, cmd_simulate
from ltbridge.harness.experiment_config import SUITES, ExperimentConfig, parse_law
from ltbridge.harness.validate_suites import cmd_validate
from ltbridge.harness.write_outputs import dumps

logger = structlog.get_logger()


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _law_arg(text: str):
    try:
        return parse_law(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="ltbridge", description="Local-time bridges and path decompositions of transient diffusions.")
    parser.add_argument("--log-level", default=None, help="override LTBRIDGE_LOG_LEVEL")
    parser.add_argument("--log-json", action="store_true", default=None, help="JSON log lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    common = _ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, help="diffusion spec JSON")
    common.add_argument("--y", type=float, help="level y (default: the model anchor)")
    common.add_argument("--seed", type=int, required=True)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--workers", type=int)

    sim = _ArgumentParser(add_help=False)
    sim.add_argument("--n", type=int)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--eps", type=float, help="local-time bandwidth (default 5 sigma(y) sqrt(dt))")
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--paths", action="store_true", help="also write per-path CSV files")
    sim.add_argument("--bridge-correction", action="store_true", help="Brownian-bridge crossing test at killing ends")

    sub.add_parser("inspect", parents=[common], help="analytic tables of a diffusion")
    p = sub.add_parser("simulate", parents=[common, sim], help="plain Euler-Maruyama batch")
    p.add_argument("--x0", type=float)
    for name, help_text in (("bridge", "local-time bridges pinned at --a or mixed by --g"), ("decompose", "path-decomposition sampler")):
        p = sub.add_parser(name, parents=[common, sim], help=help_text)
        p.add_argument("--launcher", choices=("exact", "offset"))
        if name == "bridge":
            target = p.add_mutually_exclusive_group()
            target.add_argument("--a", type=float, help="local-time level")
            target.add_argument("--g", type=_law_arg, help="mixing law, e.g. exponential:rate=0.5 or gamma:shape=2,rate=1")
    p = sub.add_parser("validate", parents=[common, sim], help="statistical acceptance suites")
    p.add_argument("--suite", choices=SUITES, default="core")
    p.add_argument("--scale", choices=("desk", "quick"), default="desk")
    p.add_argument("--alpha", type=float)
    return parser


def to_config(args: argparse.Namespace) -> ExperimentConfig:
    """Only flags actually given reach the model, so its defaults (and fields_set) stay meaningful."""
    skip = {"command", "log_level", "log_json"}
    given = {k: v for k, v in vars(args).items() if k not in skip and v is not None and v is not False}
    return ExperimentConfig(**given)


def run(args: argparse.Namespace) -> int:
    config = to_config(args)
    log = logger.bind(command=args.command, seed=config.seed)
    match args.command:
        case "inspect":
            print(cmd_inspect(config))
            return 0
        case "simulate":
            print(dumps(cmd_simulate(config)))
            return 0
        case "bridge":
            print(dumps(cmd_bridge(config)))
            return 0
        case "decompose":
            print(dumps(cmd_decompose(config)))
            return 0
        case "validate":
            report = cmd_validate(config)
            print(report.render_table())
            if not report.passed:
                log.warning("validation failed", failures=[e.name for e in report.failures])
                return 1
            return 0
    raise LtBridgeError(f"Invalid command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_json)
    try:
        return run(args)
    except ValidationError as e:
        logger.error("invalid configuration", errors=[f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()])
        return 2
    except LtBridgeError as e:
        logger.error(type(e).__name__, error=str(e), exit_code=e.exit_code)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
