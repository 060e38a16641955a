import math

import numpy as np

from ltbridge.common.config import QUAD_TOL
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.diffusion_spec import DiffusionSpec
from ltbridge.diffusion.quadrature import integrate, integrate_to_endpoint


def speed_density(spec: DiffusionSpec, scale: ScaleTable, x: float) -> float:
    """m(dx)/dx = 2 / (s'(x) sigma(x)^2)."""
    spec.check_inside(x)
    sig = float(spec.sigma(np.asarray(x, dtype=float)))
    return 2.0 / (scale.derivative(x) * sig * sig)


def speed_measure(spec: DiffusionSpec, scale: ScaleTable, a: float, b: float, tol: float = QUAD_TOL) -> float:
    """m((a, b)); an end at a boundary of the state space is integrated as an improper limit.

    Returns inf when the measure of the interval is infinite.
    """
    lo, hi = max(min(a, b), spec.left), min(max(a, b), spec.right)
    if lo >= hi:
        return 0.0

    def density(z: float) -> float:
        return speed_density(spec, scale, z)

    lo_open = lo == spec.left
    hi_open = hi == spec.right
    if not lo_open and not hi_open:
        return integrate(density, lo, hi, tol)
    if lo_open and hi_open:
        mid = spec.anchor
    elif lo_open:
        mid = hi
    else:
        mid = lo
    total = 0.0
    if lo_open:
        left = integrate_to_endpoint(density, mid, lo, tol)
        total -= left.value
    if hi_open:
        right = integrate_to_endpoint(density, mid, hi, tol)
        total += right.value
    return total
