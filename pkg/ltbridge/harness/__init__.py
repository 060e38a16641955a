from ltbridge.harness.commands import cmd_bridge, cmd_decompose, cmd_inspect, cmd_simulate
from ltbridge.harness.experiment_config import ExperimentConfig, parse_law
from ltbridge.harness.validate_suites import cmd_validate

__all__ = [
    "ExperimentConfig",
    "cmd_bridge",
    "cmd_decompose",
    "cmd_inspect",
    "cmd_simulate",
    "cmd_validate",
    "parse_law",
]
