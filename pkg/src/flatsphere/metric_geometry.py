"""The flat conformal metric |f(w)|^(-2/n) |dw|^2 on the Riemann sphere.

Two charts cover the sphere: the standard coordinate ``w`` and the
coordinate ``zeta = 1/w`` around infinity, where the metric reads
|f_inf(zeta)|^(-2/n) |d zeta|^2 with f_inf(zeta) = zeta^(2n) f(1/zeta).
Everything here is evaluated numerically: curvature through finite
difference Laplacians, cone angles and path lengths through quadrature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .polynomial import Poly, roots
from .quotient_algebra import f_polynomial

#: |w| above which the infinity chart is used
CHART_SWITCH = 1.2
#: coordinate radius excluded around zeros on grids
EXCLUSION_RADIUS = 0.05
DEFAULT_H = 1e-3


class SingularPointError(ValueError):
    """The conformal factor diverges at (or a stencil reaches) a zero of f."""


class SegmentObstructionError(ValueError):
    pass


class Chart(str, enum.Enum):
    STANDARD = "standard"
    INFINITY = "infinity"


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    w: complex

    def __post_init__(self):
        object.__setattr__(self, "chart", Chart(self.chart))
        object.__setattr__(self, "w", complex(self.w))

    @classmethod
    def at(cls, w: complex) -> "ChartPoint":
        """Sphere point ``w`` (``math.inf`` for infinity) in its preferred chart."""
        if w == math.inf or abs(w) == math.inf:
            return cls(Chart.INFINITY, 0j)
        w = complex(w)
        if abs(w) <= CHART_SWITCH:
            return cls(Chart.STANDARD, w)
        return cls(Chart.INFINITY, 1 / w)

    @property
    def sphere(self) -> complex | float:
        """Standard coordinate of the point, ``math.inf`` for infinity."""
        if self.chart is Chart.STANDARD:
            return self.w
        return math.inf if self.w == 0 else 1 / self.w

    def in_chart(self, chart: Chart) -> "ChartPoint":
        chart = Chart(chart)
        if chart is self.chart:
            return self
        if self.w == 0:
            raise ValueError(f"{self} has no coordinate in the {chart.value} chart")
        return ChartPoint(chart, 1 / self.w)


PointLike = Union[ChartPoint, complex, float]


def _as_point(pt: PointLike) -> ChartPoint:
    return pt if isinstance(pt, ChartPoint) else ChartPoint(Chart.STANDARD, complex(pt))


@dataclass(frozen=True)
class SingularPoint:
    """Zero of order ``order`` of the chart representative of f; a cone point."""

    location: ChartPoint
    order: int
    n: int

    @property
    def cone_angle(self) -> float:
        return 2 * math.pi * (1 - self.order / self.n)

    @property
    def defect(self) -> float:
        return 2 * math.pi * self.order / self.n

    @property
    def is_cusp(self) -> bool:
        """Order at least n: the cone angle closes up and the end is at infinite distance."""
        return self.order >= self.n


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    f: Poly
    n: int
    normalization: complex = 1.0
    f_inf: Poly = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("degree n must be positive")
        if self.f.is_zero() or self.f.degree > 2 * self.n:
            raise ValueError("f must be nonzero with degree <= 2n")
        object.__setattr__(self, "f_inf", Poly(self.f.padded(2 * self.n + 1)[::-1]))

    @classmethod
    def from_polynomial(cls, p: Poly) -> "ConformalMetric":
        if p.degree < 1:
            raise ValueError("need a polynomial of degree >= 1")
        return cls(f_polynomial(p), p.degree, p.leading)

    def rep(self, chart: Chart) -> Poly:
        return self.f if Chart(chart) is Chart.STANDARD else self.f_inf

    @cached_property
    def singular_points(self) -> tuple[SingularPoint, ...]:
        return tuple(singular_points(self))

    def chart_zeros(self, chart: Chart) -> list[tuple[complex, int]]:
        """Zeros of the chart representative with their orders."""
        out = []
        for s in self.singular_points:
            if s.location.chart is Chart(chart):
                out.append((s.location.w, s.order))
            elif s.location.w != 0:
                out.append((1 / s.location.w, s.order))
        return out

    def abs_rep_factored(self, chart: Chart, w, skip: complex | None = None):
        """|f_chart(w)| from the factored form; the factor at ``skip`` is omitted.

        Accurate right next to zeros, where Horner evaluation loses digits.
        """
        w = np.asarray(w, dtype=complex)
        out = abs(self.rep(chart).leading) * np.ones(w.shape)
        for z, k in self.chart_zeros(chart):
            if skip is not None and z == skip:
                continue
            out = out * np.abs(w - z) ** k
        return out


def _zero_scale(poly: Poly, w: complex) -> float:
    return 1e-14 * max(poly.scale(w), np.finfo(float).tiny)


def _check_clear(m: ConformalMetric, pt: ChartPoint, radius: float) -> None:
    for z, _ in m.chart_zeros(pt.chart):
        if abs(pt.w - z) <= radius:
            raise SingularPointError(
                f"{pt.chart.value} chart point {pt.w} is within {radius:g} of a zero of f")


def round_metric_factor(w):
    """Conformal factor 4 / (1 + |w|^2)^2 of the curvature-one sphere (either chart)."""
    return 4.0 / (1.0 + np.abs(w) ** 2) ** 2


def conformal_factor(m: ConformalMetric, pt: PointLike) -> float:
    pt = _as_point(pt)
    rep = m.rep(pt.chart)
    v = abs(rep(pt.w))
    if v <= _zero_scale(rep, pt.w):
        raise SingularPointError(f"conformal factor diverges at {pt}")
    return v ** (-2.0 / m.n)


def chart_consistency(m: ConformalMetric, w: complex) -> float:
    """Relative mismatch of the two chart expressions of the line element at ``w``.

    With zeta = 1/w, |d zeta| = |dw| / |w|^2, so the factors must satisfy
    lambda_std(w) = lambda_inf(1/w) / |w|^4.
    """
    w = complex(w)
    if w == 0:
        raise ValueError("w = 0 is outside the chart overlap")
    lam_std = conformal_factor(m, ChartPoint(Chart.STANDARD, w))
    lam_inf = conformal_factor(m, ChartPoint(Chart.INFINITY, 1 / w))
    return abs(lam_std - lam_inf / abs(w) ** 4) / lam_std


def five_point_laplacian(func: Callable, w: complex, h: float) -> float:
    w = complex(w)
    pts = np.array([w + h, w - h, w + 1j * h, w - 1j * h])
    return float((np.sum(func(pts)) - 4 * func(np.array([w]))[0]) / (h * h))


def laplacian(func: Callable, w: complex, h: float) -> float:
    """Five-point Laplacian with one Richardson step (spacings h and h/2).

    ``func`` must accept complex arrays. Cancels the h^2 error term; for
    harmonic functions the h^4 term vanishes as well.
    """
    coarse = five_point_laplacian(func, w, h)
    fine = five_point_laplacian(func, w, h / 2)
    return (4 * fine - coarse) / 3


def _log_abs(poly: Poly) -> Callable:
    return lambda z: np.log(np.abs(poly(z)))


def log_factor_laplacian(m: ConformalMetric, pt: PointLike, h: float = DEFAULT_H) -> float:
    """Laplacian of log|f_chart| at ``pt``; zero wherever f has no zero (harmonicity)."""
    pt = _as_point(pt)
    _check_clear(m, pt, 2 * h)
    return laplacian(_log_abs(m.rep(pt.chart)), pt.w, h)


def curvature_of_factor(lam: Callable, w: complex, h: float = DEFAULT_H) -> float:
    """Gaussian curvature of lam(w)|dw|^2: K = -Laplacian(log lam) / (2 lam)."""
    return -laplacian(lambda z: np.log(lam(z)), w, h) / (2 * float(lam(np.array([complex(w)]))[0]))


def gaussian_curvature(m: ConformalMetric, pt: PointLike, h: float = DEFAULT_H) -> float:
    """K = (1/n) |f|^(2/n) Laplacian(log|f|) in the chart of ``pt``."""
    pt = _as_point(pt)
    lap = log_factor_laplacian(m, pt, h)
    return abs(m.rep(pt.chart)(pt.w)) ** (2.0 / m.n) * lap / m.n


def singular_points(m: ConformalMetric) -> list[SingularPoint]:
    """All zeros of f on the sphere; infinity carries order 2n - deg f."""
    out = []
    if m.f.degree >= 1:
        for r in roots(m.f):
            out.append(SingularPoint(ChartPoint.at(r.location), r.multiplicity, m.n))
    k_inf = 2 * m.n - m.f.degree
    if k_inf > 0:
        out.append(SingularPoint(ChartPoint(Chart.INFINITY, 0j), k_inf, m.n))
    return out


def adaptive_simpson(g: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 40) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) * (fa + 4 * fm + fb) / 6

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = g(lm), g(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb, fm = g(a), g(b), g((a + b) / 2)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def _leading_local_coeff(rep: Poly, w0: complex, k: int) -> float:
    """|rep^(k)(w0) / k!|, the modulus of the leading Taylor coefficient at a k-fold zero."""
    d = rep
    for _ in range(k):
        d = d.derivative()
    return abs(d(w0)) / math.factorial(k)


def local_length_model(m: ConformalMetric, s: SingularPoint, R: float) -> float:
    """Closed-form length n/(n-k) |a|^(-1/n) R^((n-k)/n) of a ray of coordinate length R
    ending at a zero f ~ a (w - w0)^k."""
    n, k = m.n, s.order
    a = _leading_local_coeff(m.rep(s.location.chart), s.location.w, k)
    return n / (n - k) * a ** (-1.0 / n) * R ** ((n - k) / n)


def _radial_length(m: ConformalMetric, chart: Chart, w0: complex, k: int,
                   direction: complex, R: float, tol: float = 1e-12) -> float:
    """Metric length of the ray w0 + r*direction, 0 <= r <= R, toward a zero of order k < n.

    Substituting r = t^(n/(n-k)) removes the r^(-k/n) endpoint singularity;
    the remaining factor is evaluated in factored form without the (w - w0)^k term.
    """
    n = m.n
    if R == 0:
        return 0.0
    if k == 0:
        return adaptive_simpson(
            lambda r: float(m.abs_rep_factored(chart, w0 + r * direction)) ** (-1.0 / n),
            0.0, R, tol)
    beta = (n - k) / n
    skip = w0

    def integrand(t: float) -> float:
        r = t ** (1 / beta)
        rest = float(m.abs_rep_factored(chart, w0 + r * direction, skip=skip))
        return rest ** (-1.0 / n) / beta

    return adaptive_simpson(integrand, 0.0, R ** beta, tol)


def _log_radial_length(m: ConformalMetric, chart: Chart, w0: complex, k: int,
                       direction: complex, r0: float, R: float) -> float:
    """Length from coordinate radius r0 to R along the ray, integrating in log r."""
    n = m.n

    def integrand(s: float) -> float:
        r = math.exp(s)
        rest = float(m.abs_rep_factored(chart, w0 + r * direction, skip=w0))
        return rest ** (-1.0 / n) * r ** (1 - k / n)

    return adaptive_simpson(integrand, math.log(r0), math.log(R), 1e-12)


def _other_zeros(m: ConformalMetric, s: SingularPoint | ChartPoint):
    loc = s.location if isinstance(s, SingularPoint) else s
    return [(z, k) for z, k in m.chart_zeros(loc.chart) if z != loc.w or isinstance(s, ChartPoint)]


@dataclass(frozen=True)
class DistanceResult:
    finite: bool
    length: float
    verdict: str
    last_segment: float = math.nan
    last_segment_model: float = math.nan
    growth: float = math.nan

    @property
    def model_ratio(self) -> float:
        return self.last_segment / self.last_segment_model


#: coordinate length of the final stretch compared against the local model
LAST_SEGMENT = 1e-2


def distance_to_singularity(m: ConformalMetric, start: PointLike, s: SingularPoint) -> DistanceResult:
    """Length of the straight coordinate segment from ``start`` into the cone point ``s``.

    Finite exactly when the order is below n. For cusp ends the partial
    lengths from coordinate radii 1e-3 and 1e-6 are compared; growth by at
    least 0.9 * log(1e3) times the local scale gives the verdict "infinite".
    """
    chart = s.location.chart
    start = _as_point(start).in_chart(chart)
    w0 = s.location.w
    R = abs(start.w - w0)
    if R == 0:
        return DistanceResult(True, 0.0, "finite")
    direction = (start.w - w0) / R
    for z, _ in _other_zeros(m, s):
        # distance from z to the segment
        t = ((z - w0) * direction.conjugate()).real
        t = min(max(t, 0.0), R)
        if abs(w0 + t * direction - z) <= 1e-9 * (1 + R):
            raise SegmentObstructionError(f"segment to {s.location} passes through zero {z}")
    n, k = m.n, s.order
    if k < n:
        total = _radial_length(m, chart, w0, k, direction, R)
        last = min(LAST_SEGMENT, R)
        seg = _radial_length(m, chart, w0, k, direction, last)
        return DistanceResult(True, total, "finite", seg, float(local_length_model(m, s, last)))
    scale = _leading_local_coeff(m.rep(chart), w0, k) ** (-1.0 / n)
    r_hi, r_lo = min(1e-3, R / 2), min(1e-6, R / 2e3)
    far = _log_radial_length(m, chart, w0, k, direction, r_hi, R)
    near = _log_radial_length(m, chart, w0, k, direction, r_lo, R)
    growth = near - far
    if growth >= 0.9 * math.log(r_hi / r_lo) * scale:
        return DistanceResult(False, math.inf, "infinite - cusp end", growth=growth)
    return DistanceResult(True, near, "finite", growth=growth)


def cone_angle_numeric(m: ConformalMetric, s: SingularPoint | ChartPoint, r: float,
                       samples: int = 64) -> float:
    """Circumference / radius of the metric circle around ``s`` of coordinate radius ``r``.

    The radius is averaged over ``samples`` rays. A plain ChartPoint is treated
    as a smooth point (order 0). Cusps return 0.
    """
    if isinstance(s, SingularPoint):
        loc, k = s.location, s.order
    else:
        loc, k = s, 0
    for z, _ in _other_zeros(m, s):
        if abs(z - loc.w) <= r:
            raise SingularPointError(f"disk of radius {r} around {loc} contains another zero {z}")
    if k >= m.n:
        return 0.0
    theta = 2 * np.pi * np.arange(4 * samples) / (4 * samples)
    circle = loc.w + r * np.exp(1j * theta)
    skip = loc.w if k else None
    rest = m.abs_rep_factored(loc.chart, circle, skip=skip)
    circumference = float(np.mean(rest ** (-1.0 / m.n))) * 2 * np.pi * r ** (1 - k / m.n)
    rays = np.exp(1j * 2 * np.pi * (np.arange(samples) + 0.5) / samples)
    radius = float(np.mean([_radial_length(m, loc.chart, loc.w, k, e, r) for e in rays]))
    return circumference / radius


def conformal_deviation_u(m: ConformalMetric, pt: PointLike) -> float:
    """u with g = e^(2u) g0: u = log(lambda / lambda0) / 2."""
    pt = _as_point(pt)
    lam = conformal_factor(m, pt)
    return 0.5 * math.log(lam / round_metric_factor(pt.w))


def _u_func(m: ConformalMetric, chart: Chart) -> Callable:
    rep = m.rep(chart)
    return lambda z: -np.log(np.abs(rep(z))) / m.n - 0.5 * np.log(round_metric_factor(z))


def laplace_beltrami_u(m: ConformalMetric, pt: PointLike, h: float = DEFAULT_H) -> float:
    """Round-sphere Laplacian of u: flat stencil Laplacian divided by lambda0."""
    pt = _as_point(pt)
    _check_clear(m, pt, 2 * h)
    return laplacian(_u_func(m, pt.chart), pt.w, h) / float(round_metric_factor(pt.w))


@dataclass(frozen=True)
class GridRow:
    chart: Chart
    w: complex
    lam: float | None = None
    K: float | None = None
    harmonicity: float | None = None
    u: float | None = None
    delta0_u: float | None = None

    @property
    def excluded(self) -> bool:
        return self.lam is None


def grid_points(extent: float, resolution: int) -> np.ndarray:
    xs = np.linspace(-extent, extent, resolution)
    return (xs[None, :] + 1j * xs[:, None]).ravel()


def grid_sweep(m: ConformalMetric, extent: float = 3.0, resolution: int = 41,
               h: float = DEFAULT_H, exclusion: float = EXCLUSION_RADIUS) -> list[GridRow]:
    """Evaluate lambda, K, Laplacian(log|f|), u and Delta0 u on a square grid.

    Each point is handled in its preferred chart; points within ``exclusion``
    (chart coordinates) of a zero keep their row with empty values.
    """
    rows = []
    for w in grid_points(extent, resolution):
        pt = ChartPoint.at(w)
        if any(abs(pt.w - z) <= exclusion for z, _ in m.chart_zeros(pt.chart)):
            rows.append(GridRow(pt.chart, w))
            continue
        harm = log_factor_laplacian(m, pt, h)
        K = abs(m.rep(pt.chart)(pt.w)) ** (2.0 / m.n) * harm / m.n
        rows.append(GridRow(pt.chart, w, conformal_factor(m, pt), K, harm,
                            conformal_deviation_u(m, pt), laplace_beltrami_u(m, pt, h)))
    return rows
