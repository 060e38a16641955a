import math
from typing import Literal

import numpy as np
import structlog

from ltbridge.common.errors import IndeterminateClassificationError, NumericError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.diffusion_spec import BoundaryKindName, DiffusionSpec
from ltbridge.diffusion.quadrature import integrate_to_endpoint
from ltbridge.diffusion.speed_measure import speed_density, speed_measure

logger = structlog.get_logger()

CLASSIFY_TOL = 1e-9


def classify_boundary(
    spec: DiffusionSpec, scale: ScaleTable, which: Literal["left", "right"], tol: float = CLASSIFY_TOL
) -> BoundaryKindName:
    """Feller classification of an endpoint.

    Two improper integrals near the endpoint e, taken from an interior point z:

    - exit test: int m((z, a)) |s'(a)| da, finite iff e is reached from inside;
    - entrance test: int |s(a) - s(z)| m(da), finite iff the process can start at e.

    Both finite gives regular, only the first exit, only the second entrance,
    neither natural.

    Raises:
        IndeterminateClassificationError: if either integral fails numerically.
    """
    if which not in ("left", "right"):
        raise ValueError(f"Invalid boundary {which!r}")
    end = spec.left if which == "left" else spec.right
    z = spec.anchor
    s_z = scale.value(z)
    log = logger.bind(model=spec.name, boundary=which)

    def exit_integrand(a: float) -> float:
        return abs(speed_measure(spec, scale, z, a, tol)) * scale.derivative(a)

    def entrance_integrand(a: float) -> float:
        return abs(scale.value(a) - s_z) * speed_density(spec, scale, a)

    partial: dict = {"endpoint": which}
    try:
        with np.errstate(all="ignore"):
            exit_result = integrate_to_endpoint(exit_integrand, z, end, tol)
            partial["exit_integral"] = abs(exit_result.value)
            entrance_result = integrate_to_endpoint(entrance_integrand, z, end, tol)
            partial["entrance_integral"] = abs(entrance_result.value)
    except (NumericError, ZeroDivisionError, OverflowError) as e:
        raise IndeterminateClassificationError(f"boundary integrals did not converge: {e}", partial=partial)

    match (exit_result.converged, entrance_result.converged):
        case (True, True):
            kind = "regular"
        case (True, False):
            kind = "exit"
        case (False, True):
            kind = "entrance"
        case _:
            kind = "natural"
    log.debug("boundary classified", kind=kind, **partial)
    return kind


def boundary_kinds(spec: DiffusionSpec, scale: ScaleTable) -> tuple[BoundaryKindName, BoundaryKindName]:
    """Declared kinds when the spec carries them, otherwise the integral tests."""
    if spec.boundary_kinds is not None:
        return spec.boundary_kinds
    return classify_boundary(spec, scale, "left"), classify_boundary(spec, scale, "right")
