import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from ltbridge.common.config import MAX_HALVINGS, QUAD_TOL
from ltbridge.common.errors import NumericError


@dataclass(frozen=True)
class EndpointIntegral:
    """Signed value of an improper integral from an interior point towards an endpoint."""

    value: float
    converged: bool
    steps: int


def integrate(f: Callable[[float], float], a: float, b: float, tol: float = QUAD_TOL) -> float:
    """Adaptive Gauss-Kronrod on [a, b]; any quadrature warning is turned into a NumericError."""
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
        except (IntegrationWarning, ZeroDivisionError, OverflowError) as e:
            raise NumericError(f"quadrature failed on [{a}, {b}]: {e}", location=b)
    if not math.isfinite(value):
        raise NumericError(f"non-finite integral on [{a}, {b}]", location=b)
    return value


def _substep_point(start: float, endpoint: float, k: int) -> float:
    if math.isfinite(endpoint):
        return endpoint - (endpoint - start) * 2.0**-k
    width = max(1.0, abs(start))
    return start + math.copysign(width * (2.0**k - 1.0), endpoint)


def integrate_to_endpoint(
    f: Callable[[float], float],
    start: float,
    endpoint: float,
    tol: float = QUAD_TOL,
    max_halvings: int = MAX_HALVINGS,
) -> EndpointIntegral:
    """Integrate f from start towards endpoint by geometric substepping.

    Pieces shrink geometrically for convergent tails; once their ratio settles the
    remaining tail is summed in closed form. Pieces that stop shrinking for
    max_halvings steps, overflow, or fail to integrate mark the integral divergent.
    """
    total = 0.0
    prev = start
    pieces: list[float] = []
    small = 0
    k = 0
    for k in range(1, max_halvings + 1):
        nxt = _substep_point(start, endpoint, k)
        if nxt == prev:
            break
        try:
            piece = integrate(f, prev, nxt, tol)
        except NumericError:
            return EndpointIntegral(math.copysign(math.inf, total or (endpoint - start)), False, k)
        total += piece
        pieces.append(piece)
        prev = nxt
        if abs(piece) <= max(tol, 1e-13 * abs(total)):
            small += 1
            if small >= 3:
                return EndpointIntegral(total, True, k)
            continue
        small = 0
        if len(pieces) >= 6 and all(p != 0.0 for p in pieces[-6:]):
            ratios = np.array(pieces[-5:]) / np.array(pieces[-6:-1])
            q = ratios[-1]
            if 0.0 < q < 0.99 and np.ptp(ratios[-3:]) < 1e-6:
                return EndpointIntegral(total + piece * q / (1.0 - q), True, k)
    return EndpointIntegral(math.copysign(math.inf, total or (endpoint - start)), False, k)
