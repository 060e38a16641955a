import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
import structlog
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from ltbridge.common.config import QUAD_TOL, SCALE_CHECK_TOL
from ltbridge.common.errors import InvalidSpecError, InversionError, NotTransientError, NumericError
from ltbridge.diffusion.diffusion_spec import Coefficient, DiffusionSpec
from ltbridge.diffusion.quadrature import integrate, integrate_to_endpoint

logger = structlog.get_logger()

ScaleCase = Literal["both_finite", "left_finite", "right_finite"]


@dataclass(frozen=True)
class ScaleTable:
    """Normalized scale of a transient diffusion.

    s(l+) = 0 whenever finite and s(r-) = 1 whenever finite. ``shift`` and
    ``factor`` map the anchor-based raw scale onto the normalized one:
    s = (s_raw - shift) * factor.
    """

    spec: DiffusionSpec
    s: Coefficient
    ds: Coefficient
    s_l: float
    s_r: float
    inverse: Coefficient
    shift: float = 0.0
    factor: float = 1.0
    source: Literal["closed_form", "quadrature"] = "closed_form"

    @property
    def case(self) -> ScaleCase:
        if math.isfinite(self.s_l) and math.isfinite(self.s_r):
            return "both_finite"
        if math.isfinite(self.s_l):
            return "left_finite"
        return "right_finite"

    def value(self, x: float) -> float:
        return float(self.s(np.asarray(x, dtype=float)))

    def derivative(self, x: float) -> float:
        return float(self.ds(np.asarray(x, dtype=float)))

    def invert(self, v: float) -> float:
        if not self.s_l < v < self.s_r:
            raise InversionError("scale value outside (s_l, s_r)", bracket=(self.s_l, self.s_r), target=v)
        x = float(self.inverse(np.asarray(v, dtype=float)))
        if not math.isfinite(x):
            raise InversionError("inverse scale is not finite", bracket=(self.s_l, self.s_r), target=v)
        return x


class QuadratureScale:
    """Raw scale built from the coefficients: s_raw'(z) = exp(-2 int_c^z b/sigma^2), s_raw(c) = 0."""

    def __init__(self, spec: DiffusionSpec, tol: float = QUAD_TOL):
        self.spec = spec
        self.tol = tol
        self.anchor = spec.anchor
        self._cached_ds = lru_cache(maxsize=65536)(self.ds)

    def _ratio(self, u: float) -> float:
        sig = float(self.spec.sigma(np.asarray(u)))
        return float(self.spec.drift(np.asarray(u))) / (sig * sig)

    def log_ds(self, z: float, base: float | None = None, base_log: float = 0.0) -> float:
        start = self.anchor if base is None else base
        try:
            return base_log - 2.0 * integrate(self._ratio, start, z, self.tol)
        except NumericError as e:
            raise InvalidSpecError("drift/sigma^2 is not locally integrable", location=e.location)

    def ds(self, z: float) -> float:
        return math.exp(self.log_ds(z))

    def s(self, x: float) -> float:
        try:
            return integrate(self._cached_ds, self.anchor, x, self.tol)
        except NumericError as e:
            raise InvalidSpecError("scale integral diverges at an interior point", location=e.location)

    def endpoint(self, which: Literal["left", "right"]) -> float:
        end = self.spec.left if which == "left" else self.spec.right
        result = integrate_to_endpoint(self._cached_ds, self.anchor, end, self.tol)
        if not result.converged:
            return -math.inf if which == "left" else math.inf
        return result.value


def check_local_integrability(spec: DiffusionSpec, points: np.ndarray, tol: float = QUAD_TOL) -> None:
    """(1 + |b|)/sigma^2 must be integrable on a small neighbourhood of every probe point."""

    def integrand(u):
        sig = float(spec.sigma(np.asarray(u)))
        return (1.0 + abs(float(spec.drift(np.asarray(u))))) / (sig * sig)

    for x in points:
        h = 1e-3 * max(1.0, abs(x))
        lo, hi = x - h, x + h
        if math.isfinite(spec.left):
            lo = max(lo, 0.5 * (x + spec.left))
        if math.isfinite(spec.right):
            hi = min(hi, 0.5 * (x + spec.right))
        try:
            integrate(integrand, lo, hi, tol)
        except NumericError:
            raise InvalidSpecError("(1+|b|)/sigma^2 is not locally integrable", location=float(x))


def _normalization(raw_l: float, raw_r: float) -> tuple[float, float]:
    if math.isfinite(raw_l) and math.isfinite(raw_r):
        return raw_l, 1.0 / (raw_r - raw_l)
    if math.isfinite(raw_l):
        return raw_l, 1.0
    if math.isfinite(raw_r):
        return raw_r - 1.0, 1.0
    raise NotTransientError("both s(l+) and s(r-) are infinite: the diffusion is recurrent")


def _working_nodes(spec: DiffusionSpec, n: int) -> np.ndarray:
    c = spec.anchor
    sides = []
    for end in (spec.left, spec.right):
        if math.isfinite(end):
            depth = (end - c) * (1.0 - np.geomspace(1.0, 1e-9, n // 2))
        else:
            reach = math.copysign(50.0 * max(1.0, abs(c)), end)
            depth = reach * np.linspace(0.0, 1.0, n // 2) ** 2
        sides.append(c + depth[1:])
    return np.concatenate([sides[0][::-1], [c], sides[1]])


def tabulate_quadrature_scale(raw: QuadratureScale, shift: float, factor: float, n: int = 2001) -> ScaleTable:
    """Monotone interpolants of s, log s' and s^-1 on a node set refined towards finite ends."""
    spec = raw.spec
    nodes = _working_nodes(spec, n)
    c_idx = int(np.searchsorted(nodes, spec.anchor))
    log_ds = np.zeros_like(nodes)
    s_raw = np.zeros_like(nodes)
    for direction in (1, -1):
        idx = range(c_idx + direction, len(nodes) if direction > 0 else -1, direction)
        prev = c_idx
        for i in idx:
            log_ds[i] = raw.log_ds(nodes[i], base=nodes[prev], base_log=log_ds[prev])
            base, base_log = nodes[prev], log_ds[prev]
            piece = integrate(lambda z: math.exp(raw.log_ds(z, base=base, base_log=base_log)), base, nodes[i], raw.tol)
            s_raw[i] = s_raw[prev] + piece
            prev = i
    s_nodes = (s_raw - shift) * factor
    log_ds_nodes = log_ds + math.log(factor)
    s_interp = PchipInterpolator(nodes, s_nodes, extrapolate=True)
    log_ds_interp = PchipInterpolator(nodes, log_ds_nodes, extrapolate=True)
    inv_interp = PchipInterpolator(s_nodes, nodes, extrapolate=False)
    s_l = (raw.endpoint("left") - shift) * factor
    s_r = (raw.endpoint("right") - shift) * factor

    def s(x):
        return np.clip(s_interp(np.asarray(x, dtype=float)), s_l, s_r)

    def ds(x):
        return np.exp(log_ds_interp(np.asarray(x, dtype=float)))

    def inverse(v):
        out = np.asarray(inv_interp(np.asarray(v, dtype=float)), dtype=float)
        return np.where(np.isnan(out), np.where(np.asarray(v) < s_nodes[0], nodes[0], nodes[-1]), out)

    return ScaleTable(
        spec=spec,
        s=s,
        ds=ds,
        s_l=s_l,
        s_r=s_r,
        inverse=inverse,
        shift=shift,
        factor=factor,
        source="quadrature",
    )


def numeric_scale_on(spec: DiffusionSpec, points: np.ndarray, tol: float = QUAD_TOL, match_ds_at_anchor: float | None = None) -> np.ndarray:
    """Normalized quadrature scale at the given points.

    When only one endpoint has finite scale the affine factor is free; passing
    ``match_ds_at_anchor`` fixes it so that s'(anchor) equals that value.
    """
    raw = QuadratureScale(spec, tol)
    raw_l, raw_r = raw.endpoint("left"), raw.endpoint("right")
    shift, factor = _normalization(raw_l, raw_r)
    if match_ds_at_anchor is not None and not (math.isfinite(raw_l) and math.isfinite(raw_r)):
        factor = match_ds_at_anchor
        shift = raw_l if math.isfinite(raw_l) else raw_r - 1.0 / factor
    return np.array([(raw.s(float(x)) - shift) * factor for x in points])


def compare_with_closed_form(spec: DiffusionSpec, points: np.ndarray, tol: float = QUAD_TOL) -> float:
    """Max abs difference between the quadrature scale and the closed form on ``points``."""
    closed = spec.closed_form_scale
    if closed is None:
        raise InvalidSpecError(f"{spec.name} has no closed-form scale")
    numeric = numeric_scale_on(spec, points, tol, match_ds_at_anchor=float(closed.ds(np.asarray(spec.anchor))))
    return float(np.max(np.abs(numeric - closed.s(np.asarray(points, dtype=float)))))


def build_scale(spec: DiffusionSpec, tol: float = QUAD_TOL, verify: bool = True, n_probe: int = 21) -> ScaleTable:
    """Normalized scale of ``spec``, from its closed form when declared, else by quadrature.

    Args:
        spec: validated diffusion spec.
        tol: absolute quadrature tolerance.
        verify: when a closed form exists, cross-check it against quadrature on ``n_probe`` points.

    Returns:
        ScaleTable with s(l+) = 0 and s(r-) = 1 whenever those are finite.
    """
    if tol <= 0:
        raise InvalidSpecError(f"Invalid quadrature tolerance {tol}")
    log = logger.bind(model=spec.name)
    probes = spec.probe_grid(n_probe)
    check_local_integrability(spec, probes, tol)
    closed = spec.closed_form_scale
    if closed is not None:
        _normalization(closed.s_l, closed.s_r)
        if verify:
            error = compare_with_closed_form(spec, probes, tol)
            if error > max(SCALE_CHECK_TOL, 100 * tol):
                raise InvalidSpecError(f"closed-form scale disagrees with quadrature by {error:.3e}")
            log.debug("closed-form scale verified", max_error=error)
        inverse = closed.inverse
        if inverse is None:
            inverse = _bisection_inverse(closed.s, spec, closed.s_l, closed.s_r)
        return ScaleTable(spec=spec, s=closed.s, ds=closed.ds, s_l=closed.s_l, s_r=closed.s_r, inverse=inverse)

    raw = QuadratureScale(spec, tol)
    raw_l, raw_r = raw.endpoint("left"), raw.endpoint("right")
    shift, factor = _normalization(raw_l, raw_r)
    log.info("scale built by quadrature", s_l=(raw_l - shift) * factor, s_r=(raw_r - shift) * factor)
    return tabulate_quadrature_scale(raw, shift, factor)


def _bisection_inverse(s: Coefficient, spec: DiffusionSpec, s_l: float, s_r: float) -> Coefficient:
    def bracket(v: float) -> tuple[float, float]:
        lo, hi = spec.anchor - 1.0, spec.anchor + 1.0
        for _ in range(200):
            lo_ok = lo <= spec.left or float(s(np.asarray(lo))) <= v
            hi_ok = hi >= spec.right or float(s(np.asarray(hi))) >= v
            if lo_ok and hi_ok:
                break
            lo = 0.5 * (lo + spec.left) if math.isfinite(spec.left) else spec.anchor - 2.0 * (spec.anchor - lo)
            hi = 0.5 * (hi + spec.right) if math.isfinite(spec.right) else spec.anchor + 2.0 * (hi - spec.anchor)
        return max(lo, math.nextafter(spec.left, math.inf)), min(hi, math.nextafter(spec.right, -math.inf))

    def invert_one(v: float) -> float:
        lo, hi = bracket(v)
        try:
            return brentq(lambda x: float(s(np.asarray(x))) - v, lo, hi, xtol=1e-14)
        except ValueError:
            raise InversionError("scale root not bracketed", bracket=(lo, hi), target=v)

    return np.vectorize(invert_one, otypes=[float])
