import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ltbridge.common.errors import ConfigError, DomainError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.quadrature import integrate
from ltbridge.diffusion.speed_measure import speed_density

Side = Literal["low", "high"]


def _s(scale: ScaleTable, x: float) -> float:
    scale.spec.check_inside(x)
    return scale.value(x)


def hitting_prob(scale: ScaleTable, x: float, y: float) -> float:
    """psi(x, y) = P^x(T_y < inf)."""
    sx, sy = _s(scale, x), _s(scale, y)
    if x == y:
        return 1.0
    if y > x:
        return sx / sy if math.isfinite(scale.s_l) else 1.0
    return (1.0 - sx) / (1.0 - sy) if math.isfinite(scale.s_r) else 1.0


def potential_density(scale: ScaleTable, x: float, y: float) -> float:
    """u(x, y), the Green density of the transient diffusion with respect to its speed measure."""
    lo, hi = _s(scale, min(x, y)), _s(scale, max(x, y))
    match scale.case:
        case "both_finite":
            return lo * (1.0 - hi)
        case "left_finite":
            return lo
        case "right_finite":
            return 1.0 - hi


def potential_dx(scale: ScaleTable, x: float, y: float) -> float:
    """Left partial derivative of u(., y) at x."""
    sx, sy, dsx = _s(scale, x), _s(scale, y), scale.derivative(x)
    below = x <= y
    match scale.case:
        case "both_finite":
            return dsx * (1.0 - sy) if below else -sy * dsx
        case "left_finite":
            return dsx if below else 0.0
        case "right_finite":
            return 0.0 if below else -dsx


def rho(scale: ScaleTable, y: float) -> float:
    """P^y(X_inf = r)."""
    sy = _s(scale, y)
    match scale.case:
        case "both_finite":
            return sy
        case "left_finite":
            return 0.0
        case "right_finite":
            return 1.0


def terminal_lt_rate(scale: ScaleTable, y: float) -> float:
    """lambda(y) = s'(y) / (2 u(y, y)); L^y_inf is exponential with this rate under P^y."""
    return scale.derivative(y) / (2.0 * potential_density(scale, y, y))


def diffusion_local_time(scale: ScaleTable, y: float, semimartingale_lt: float) -> float:
    return scale.derivative(y) * semimartingale_lt / 2.0


@dataclass(frozen=True)
class MixedLaw:
    """Atom at ``atom_location`` plus an exponential density on (atom_location, inf)."""

    atom_location: float
    atom_mass: float
    rate: float

    def density(self, a):
        a = np.asarray(a, dtype=float)
        tail = (1.0 - self.atom_mass) * self.rate * np.exp(-self.rate * (a - self.atom_location))
        return np.where(a > self.atom_location, tail, 0.0)

    def cdf(self, a):
        a = np.asarray(a, dtype=float)
        inside = 1.0 - (1.0 - self.atom_mass) * np.exp(-self.rate * (a - self.atom_location))
        return np.where(a >= self.atom_location, inside, 0.0)

    def ppf(self, u):
        """Inverse CDF; uniforms below the atom mass land on the atom."""
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = self.atom_location - np.log((1.0 - u) / (1.0 - self.atom_mass)) / self.rate
        return np.where(u < self.atom_mass, self.atom_location, tail)

    def total_mass(self) -> float:
        return self.atom_mass + integrate(lambda a: float(self.density(a)), self.atom_location, math.inf)


def conditional_terminal_lt_law(scale: ScaleTable, x_now: float, y: float, l_now: float) -> MixedLaw:
    """Law of L^y_inf given X_t = x_now and L^y_t = l_now."""
    if l_now < 0:
        raise DomainError(f"Invalid current local time {l_now}")
    psi = hitting_prob(scale, x_now, y)
    return MixedLaw(atom_location=l_now, atom_mass=1.0 - psi, rate=terminal_lt_rate(scale, y))


def exit_conditioned_lt_tail(scale: ScaleTable, x: float, y: float, t: float, side: Literal["left", "right"] = "right") -> float:
    """P^x(L^y_inf > t | X_inf = side) for a scale finite at both ends."""
    if scale.case != "both_finite":
        raise ConfigError("exit-conditioned local time needs both scale endpoints finite")
    sx, sy = _s(scale, x), _s(scale, y)
    if side == "right":
        reach = 1.0 if x <= y else (1.0 - sx) * sy / ((1.0 - sy) * sx)
    else:
        reach = 1.0 if x >= y else sx * (1.0 - sy) / (sy * (1.0 - sx))
    return reach * math.exp(-terminal_lt_rate(scale, y) * t)


def recurrent_scale(scale: ScaleTable, y: float, x: float) -> float:
    """Scale of the recurrent transform: int_y^x s'(z) / u(z, y)^2 dz, in closed form."""
    sx, sy = _s(scale, x), _s(scale, y)
    match scale.case:
        case "both_finite":
            if x <= y:
                return (1.0 / sy - 1.0 / sx) / (1.0 - sy) ** 2
            return (1.0 / (1.0 - sx) - 1.0 / (1.0 - sy)) / sy**2
        case "left_finite":
            return 1.0 / sy - 1.0 / sx if x <= y else (sx - sy) / sy**2
        case "right_finite":
            return (sx - sy) / (1.0 - sy) ** 2 if x <= y else 1.0 / (1.0 - sx) - 1.0 / (1.0 - sy)


def check_side(scale: ScaleTable, y: float, side: Side, x: float) -> None:
    scale.spec.check_inside(y, "y")
    if side == "low" and not x < y:
        raise DomainError(f"x={x} is not on the low side of y={y}")
    if side == "high" and not x > y:
        raise DomainError(f"x={x} is not on the high side of y={y}")
    if side not in ("low", "high"):
        raise DomainError(f"Invalid side {side!r}")


def side_scale(scale: ScaleTable, y: float, side: Side, x: float) -> float:
    """Increasing scale of the Bessel-type motion on one side of y; it diverges at y."""
    check_side(scale, y, side, x)
    gap = _s(scale, y) - _s(scale, x)
    return 1.0 / gap


def side_speed_density(scale: ScaleTable, y: float, side: Side, x: float) -> float:
    check_side(scale, y, side, x)
    return (_s(scale, y) - _s(scale, x)) ** 2 * speed_density(scale.spec, scale, x)
