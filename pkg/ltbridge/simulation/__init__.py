from ltbridge.simulation.euler_engine import (
    Domain,
    EulerBatch,
    Path,
    StopRule,
    exit_side,
    simulate,
    simulate_batch,
    step,
)
from ltbridge.simulation.local_time import (
    LocalTimeTracker,
    complete_terminal_local_time,
    default_bandwidth,
    inverse_local_time,
    update,
)
from ltbridge.simulation.passage_times import first_hitting_time, last_passage_time
from ltbridge.simulation.random_source import RandomSource
from ltbridge.simulation.terminal_local_time import TerminalLocalTimes, terminal_local_times

__all__ = [
    "Domain",
    "EulerBatch",
    "LocalTimeTracker",
    "Path",
    "RandomSource",
    "StopRule",
    "TerminalLocalTimes",
    "complete_terminal_local_time",
    "default_bandwidth",
    "exit_side",
    "first_hitting_time",
    "inverse_local_time",
    "last_passage_time",
    "simulate",
    "simulate_batch",
    "step",
    "terminal_local_times",
    "update",
]
