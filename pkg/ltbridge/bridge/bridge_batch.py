import math
from dataclasses import dataclass

import numpy as np

from ltbridge.bridge.bridge_config import BridgeOutcome


@dataclass
class BridgeBatch:
    outcomes: list[BridgeOutcome]
    y: float
    eps: float
    horizon: float
    sigma_y: float = 1.0

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def switched(self) -> list[BridgeOutcome]:
        return [o for o in self.outcomes if o.switched]

    @property
    def switched_fraction(self) -> float:
        return len(self.switched) / len(self.outcomes) if self.outcomes else 0.0

    def theta_count(self) -> tuple[int, int]:
        return sum(o.theta for o in self.outcomes), len(self.outcomes)

    def thetas(self) -> np.ndarray:
        return np.array([o.theta for o in self.outcomes], dtype=float)

    def levels(self) -> np.ndarray:
        return np.array([o.target for o in self.outcomes])

    def pinning_errors(self) -> np.ndarray:
        """|L^y_terminal - level| over the paths that reached phase 2."""
        return np.array([abs(o.lt_terminal - o.target) for o in self.switched])

    def pinning_tolerance(self, a: float) -> float:
        return max(2.0 * self.eps * self.sigma_y**2, 0.02 * a)

    def post_switch_local_time(self) -> np.ndarray:
        """lt_terminal - lt_at_switch: band occupation of the launched motion near y."""
        return np.array([o.lt_terminal - o.lt_at_switch for o in self.switched])

    def reentry_fraction(self) -> float:
        """Share of switched paths that stepped onto or across y, away from their theta side."""
        switched = self.switched
        if not switched:
            return math.nan
        return sum(o.reentries > 0 for o in switched) / len(switched)

    def observed(self, t: float) -> np.ndarray:
        """X_t of paths still running at t."""
        values = np.array([o.path.observations.get(t, math.nan) for o in self.outcomes])
        return values[np.isfinite(values)]

    def observed_local_time(self, t: float) -> np.ndarray:
        values = np.array([o.path.lt_observations.get(t, {}).get(self.y, math.nan) for o in self.outcomes])
        return values[np.isfinite(values)]

    def lifetimes(self) -> np.ndarray:
        """Killing times censored at the horizon."""
        return np.array([min(o.path.lifetime, self.horizon) for o in self.outcomes])

    def records(self) -> list[dict]:
        return [o.to_record() for o in self.outcomes]

    def summary(self) -> dict:
        errors = self.pinning_errors()
        ones, n = self.theta_count()
        sides = [o.exit_side for o in self.outcomes]
        return {
            "n_paths": n,
            "y": self.y,
            "eps": self.eps,
            "horizon": self.horizon,
            "switched_fraction": self.switched_fraction,
            "theta_one_fraction": ones / n if n else math.nan,
            "median_pinning_error": float(np.median(errors)) if len(errors) else None,
            "reentry_fraction": self.reentry_fraction() if self.switched else None,
            "median_post_switch_local_time": float(np.median(self.post_switch_local_time())) if self.switched else None,
            "killed_fraction": sum(o.path.killed for o in self.outcomes) / n if n else math.nan,
            "exit_sides": {side: sides.count(side) for side in ("left", "right", "none")},
        }
