import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ltbridge.common.errors import ConfigError, DomainError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.classify_boundary import boundary_kinds
from ltbridge.diffusion.potential import Side, check_side
from ltbridge.simulation.euler_engine import BatchDrift, Domain

TransformKind = Literal["recurrent", "bessel_low", "bessel_high", "cond_exit_low", "cond_exit_high"]

# stands in for the infinite push exactly at a singular level; the engine caps it
_SINGULAR_PUSH = 1e300


def _coefficients(scale: ScaleTable, x: np.ndarray):
    spec = scale.spec
    with np.errstate(all="ignore"):
        b = np.asarray(spec.drift(x), dtype=float) * np.ones_like(x)
        sig = np.asarray(spec.sigma(x), dtype=float) * np.ones_like(x)
        s = np.asarray(scale.s(x), dtype=float) * np.ones_like(x)
        ds = np.asarray(scale.ds(x), dtype=float) * np.ones_like(x)
    return b, sig * sig, s, ds


def recurrent_drift_array(scale: ScaleTable, y: float, x: np.ndarray) -> np.ndarray:
    """b + sigma^2 u_x(x, y) / u(x, y), u_x taken from the left at x = y."""
    x = np.asarray(x, dtype=float)
    b, var, s, ds = _coefficients(scale, x)
    below = x <= y
    with np.errstate(all="ignore"):
        up = var * ds / s
        down = -var * ds / (1.0 - s)
    match scale.case:
        case "both_finite":
            extra = np.where(below, up, down)
        case "left_finite":
            extra = np.where(below, up, 0.0)
        case "right_finite":
            extra = np.where(below, 0.0, down)
    return b + extra


def bessel_drift_array(scale: ScaleTable, y: float, side: Side, x: np.ndarray) -> np.ndarray:
    """Drift of the Bessel-type motion on one side of y; pushes away from y."""
    x = np.asarray(x, dtype=float)
    b, var, s, ds = _coefficients(scale, x)
    gap = (s - scale.value(y)) if side == "high" else (scale.value(y) - s)
    with np.errstate(all="ignore"):
        push = np.where(gap > 0, ds * var / gap, _SINGULAR_PUSH)
    return b + push if side == "high" else b - push


def cond_exit_drift_array(scale: ScaleTable, side: Side, x: np.ndarray) -> np.ndarray:
    """h-transform drift of the process conditioned to converge to y from one side."""
    x = np.asarray(x, dtype=float)
    b, var, s, ds = _coefficients(scale, x)
    with np.errstate(all="ignore"):
        if side == "low":
            return b + var * ds / s
        return b - var * ds / (1.0 - s)


def recurrent_drift(scale: ScaleTable, y: float, x: float) -> float:
    scale.spec.check_inside(x)
    scale.spec.check_inside(y, "y")
    return float(recurrent_drift_array(scale, y, np.asarray([x]))[0])


def bessel_drift(scale: ScaleTable, y: float, side: Side, x: float) -> float:
    check_side(scale, y, side, x)
    scale.spec.check_inside(x)
    return float(bessel_drift_array(scale, y, side, np.asarray([x]))[0])


def _check_cond_exit_side(scale: ScaleTable, side: Side) -> None:
    if side == "low" and not math.isfinite(scale.s_l):
        raise ConfigError("conditioning to exit at y from below needs s(l+) finite")
    if side == "high" and not math.isfinite(scale.s_r):
        raise ConfigError("conditioning to exit at y from above needs s(r-) finite")


def cond_exit_drift(scale: ScaleTable, y: float, side: Side, x: float) -> float:
    _check_cond_exit_side(scale, side)
    spec = scale.spec
    if not (spec.left <= y <= spec.right):
        raise DomainError(f"y={y} outside [{spec.left}, {spec.right}]")
    spec.check_inside(x)
    if (side == "low" and not x < y) or (side == "high" and not x > y):
        raise DomainError(f"x={x} is not on the {side} side of y={y}")
    return float(cond_exit_drift_array(scale, side, np.asarray([x]))[0])


@dataclass(frozen=True)
class TransformedSpec:
    """A base diffusion with one of the drift transformations at level y."""

    scale: ScaleTable
    kind: TransformKind
    y: float

    def __post_init__(self):
        spec = self.scale.spec
        if self.kind.startswith("cond_exit"):
            _check_cond_exit_side(self.scale, self.side)
            if not (spec.left <= self.y <= spec.right):
                raise DomainError(f"y={self.y} outside [{spec.left}, {spec.right}]")
        else:
            spec.check_inside(self.y, "y")

    @property
    def base(self):
        return self.scale.spec

    @property
    def side(self) -> Side:
        return "low" if self.kind.endswith("low") else "high"

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "recurrent":
            return self.base.left, self.base.right
        return (self.base.left, self.y) if self.side == "low" else (self.y, self.base.right)

    def drift(self, x: np.ndarray) -> np.ndarray:
        match self.kind:
            case "recurrent":
                return recurrent_drift_array(self.scale, self.y, x)
            case "bessel_low" | "bessel_high":
                return bessel_drift_array(self.scale, self.y, self.side, x)
            case _:
                return cond_exit_drift_array(self.scale, self.side, x)

    def batch_drift(self) -> BatchDrift:
        return lambda x, idx: self.drift(x)

    def engine_domain(self) -> Domain:
        """Reflect where the transformed process cannot go; kill where it leaves for good."""
        kinds = boundary_kinds(self.base, self.scale)
        base_kill_lo = math.isfinite(self.base.left) and kinds[0] in ("regular", "exit")
        base_kill_hi = math.isfinite(self.base.right) and kinds[1] in ("regular", "exit")
        lo, hi = self.domain
        match self.kind:
            case "recurrent":
                return Domain(lo, hi, kill_lo=False, kill_hi=False)
            case "bessel_low":
                return Domain(lo, hi, kill_lo=base_kill_lo, kill_hi=False)
            case "bessel_high":
                return Domain(lo, hi, kill_lo=False, kill_hi=base_kill_hi)
            case "cond_exit_low":
                return Domain(lo, hi, kill_lo=False, kill_hi=True)
            case "cond_exit_high":
                return Domain(lo, hi, kill_lo=True, kill_hi=False)
