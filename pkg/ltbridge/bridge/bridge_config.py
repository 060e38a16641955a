import math
from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from ltbridge.bridge.mixing_laws import ExponentialLaw, MixingLaw, PointLaw
from ltbridge.common.config import DT, N_PATHS
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.potential import terminal_lt_rate
from ltbridge.simulation.euler_engine import ExitSide, Path
from ltbridge.transforms.entrance_launcher import EntranceLauncher


class BridgeConfig(BaseModel):
    """Settings of a local-time bridge run.

    Set ``a`` for a bridge pinned at L^y_inf = a, or leave it unset for a
    randomized bridge with level drawn from ``g`` (default exponential with
    rate s'(y) / (2 u(y, y))).
    """

    y: float
    a: float | None = Field(default=None, ge=0)
    g: MixingLaw | None = None
    horizon: float | None = Field(default=None, gt=0)
    dt: float = Field(default=DT, gt=0)
    eps: float | None = Field(default=None, gt=0)
    launcher: Literal["exact", "offset"] = "exact"
    offset: float | None = Field(default=None, gt=0)
    n_paths: int = Field(default=N_PATHS, gt=0)
    bridge_correction: bool = False
    stop_at_exit: bool = True
    record_every: int | None = Field(default=None, gt=0)
    observe: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _one_target(self):
        if self.a is not None and self.g is not None:
            raise ValueError("a fixed level a and a mixing law g are exclusive")
        return self

    @property
    def target(self) -> Literal["fixed", "randomized"]:
        return "fixed" if self.a is not None else "randomized"

    def mixing_law(self, scale: ScaleTable) -> MixingLaw:
        if self.a is not None:
            return PointLaw(a=self.a)
        return self.g or ExponentialLaw(rate=terminal_lt_rate(scale, self.y))

    def entrance_launcher(self) -> EntranceLauncher:
        return EntranceLauncher(mode=self.launcher, offset=self.offset)

    def resolved_horizon(self, scale: ScaleTable) -> float:
        return self.horizon or default_horizon(scale, self.y, self.mixing_law(scale).mean())


def default_horizon(scale: ScaleTable, y: float, level_mean: float) -> float:
    """20 times the larger of the target level and the mean terminal local time at y."""
    return 20.0 * max(level_mean, 1.0 / terminal_lt_rate(scale, y))


@dataclass
class BridgeOutcome:
    path: Path
    theta: int
    switch_time: float
    lt_at_switch: float
    lt_terminal: float
    exit_side: ExitSide
    target: float
    reentries: int = 0

    @property
    def switched(self) -> bool:
        return math.isfinite(self.switch_time)

    def to_record(self) -> dict:
        """One JSON-lines summary row."""
        return {
            "seed": self.path.seed,
            "index": self.path.index,
            "theta": self.theta,
            "target": self.target,
            "tau": self.switch_time if self.switched else None,
            "lt_at_switch": self.lt_at_switch if self.switched else None,
            "lt_terminal": self.lt_terminal,
            "exit_side": self.exit_side,
            "lifetime": self.path.lifetime if math.isfinite(self.path.lifetime) else None,
            "stop_reason": self.path.stop_reason,
            "reentries": self.reentries,
        }
