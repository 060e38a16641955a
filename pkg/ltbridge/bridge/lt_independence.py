from typing import Sequence

import numpy as np
import structlog

from ltbridge.common.config import ALPHA
from ltbridge.common.errors import SampleSizeError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.diffusion_spec import DiffusionSpec
from ltbridge.simulation.euler_engine import Path, exit_side
from ltbridge.stats.checks import ks_two_sample_check
from ltbridge.stats.ks_tests import MIN_KS_SAMPLES
from ltbridge.stats.report import TestReportEntry

logger = structlog.get_logger()


def lt_independence_check(
    spec: DiffusionSpec, scale: ScaleTable, x: float, y: float, batch: Sequence[Path], alpha: float = ALPHA
) -> TestReportEntry:
    """KS between L^y_inf on {X_inf = r} and on {X_inf = l} for direct paths from x.

    The two are independent only when x = y, so non-rejection is expected
    there and rejection anywhere else.
    """
    expect = "accept" if x == y else "reject"
    name = f"{spec.name} L^{y:g} vs exit side from x={x:g}"
    oracle = "independent iff x = y"
    if scale.case != "both_finite":
        return TestReportEntry(
            name=name, oracle=oracle, statistic=0.0, n=len(batch), alpha=alpha, expect=expect, passed=False,
            inconclusive=True, notes="exit side is deterministic when only one scale end is finite",
        )
    by_side = {"left": [], "right": []}
    undecided = 0
    for path in batch:
        side = exit_side(spec, scale, path)
        if side == "none":
            undecided += 1
            continue
        by_side[side].append(path.local_time[y])
    if undecided:
        logger.warning("paths without a decided exit side left out", undecided=undecided, n=len(batch))
    right, left = np.array(by_side["right"]), np.array(by_side["left"])
    try:
        entry = ks_two_sample_check(name, oracle, right, left, alpha=alpha, expect=expect)
    except SampleSizeError as e:
        return TestReportEntry(
            name=name, oracle=oracle, statistic=0.0, n=len(right), n2=len(left), alpha=alpha, expect=expect,
            passed=False, inconclusive=True, notes=f"too few exits on one side (need {MIN_KS_SAMPLES}): {e}",
        )
    entry.notes = f"{len(right)} right exits, {len(left)} left exits, {undecided} undecided"
    return entry
