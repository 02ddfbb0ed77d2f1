"""Quantitative versions of the three obstructions to a flat metric on the
sphere, and recovery of the roots of p from the zeros of f."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .metric_geometry import (
    DEFAULT_H,
    Chart,
    ChartPoint,
    ConformalMetric,
    DistanceResult,
    GridRow,
    SingularPoint,
    SingularPointError,
    conformal_deviation_u,
    distance_to_singularity,
    grid_sweep,
)
from .polynomial import Poly, RootFindingError, count_zeros_in_disk, evaluate
from .quotient_algebra import StructureAlgebra, minimal_polynomial

FOUR_PI = 4 * math.pi
U_SAMPLE_RADII = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class GaussBonnetLedger:
    entries: tuple[tuple[SingularPoint, float], ...]
    total_defect: float
    target: float = FOUR_PI

    @property
    def error(self) -> float:
        return abs(self.total_defect - self.target)


def build_ledger(m: ConformalMetric) -> GaussBonnetLedger:
    """Cone defects 2 pi k / n at every zero of f; they carry all the curvature."""
    pts = m.singular_points
    entries = tuple((s, s.defect) for s in pts)
    orders = sum(s.order for s in pts)
    # integer orders: the total is an exact rational multiple of pi
    return GaussBonnetLedger(entries, 2 * math.pi * (orders / m.n))


def isolating_radius(m: ConformalMetric, loc: ChartPoint, cap: float = 0.3) -> float:
    """Half the chart distance from ``loc`` to the nearest other zero, at most ``cap``."""
    others = [abs(z - loc.w) for z, _ in m.chart_zeros(loc.chart) if z != loc.w]
    return min([cap] + [d / 2 for d in others])


def defect_flux_numeric(m: ConformalMetric, s: SingularPoint | ChartPoint, r: float,
                        tol: float = 1e-12, max_samples: int = 1 << 16) -> float:
    """Outward flux of grad log|f_chart| through the circle of radius ``r`` around ``s``.

    Equals 2 pi times the number of zeros enclosed, without using the root
    multiplicities.
    """
    loc = s.location if isinstance(s, SingularPoint) else s
    for z, _ in m.chart_zeros(loc.chart):
        if z != loc.w and abs(z - loc.w) <= r:
            raise SingularPointError(f"circle of radius {r} around {loc} is not isolating")
    rep = m.rep(loc.chart)
    drep = rep.derivative()
    prev = None
    n = 32
    while n <= max_samples:
        e = np.exp(2j * np.pi * np.arange(n) / n)
        w = loc.w + r * e
        flux = float(np.mean((evaluate(drep, w) / evaluate(rep, w) * e).real)) * 2 * np.pi * r
        if prev is not None and abs(flux - prev) <= tol:
            return flux
        prev = flux
        n *= 2
    return prev


@dataclass(frozen=True)
class Witness:
    singular_point: SingularPoint
    start: ChartPoint
    distance: DistanceResult


@dataclass(frozen=True)
class CompletenessReport:
    witnesses: tuple[Witness, ...]
    cusp_ends: tuple[Witness, ...]

    @property
    def incomplete(self) -> bool:
        return any(w.distance.finite for w in self.witnesses)

    @property
    def verdict(self) -> str:
        if self.incomplete:
            return "incomplete"
        return "no incompleteness witness; obstruction carried by Gauss-Bonnet ledger instead"


def completeness_probe(m: ConformalMetric) -> CompletenessReport:
    """Straight paths into every cone point: finite length below order n, divergent otherwise."""
    finite, cusps = [], []
    for s in m.singular_points:
        R = isolating_radius(m, s.location, cap=0.5)
        start = ChartPoint(s.location.chart, s.location.w + R)
        d = distance_to_singularity(m, start, s)
        (finite if d.finite else cusps).append(Witness(s, start, d))
    return CompletenessReport(tuple(finite), tuple(cusps))


@dataclass(frozen=True)
class UDivergence:
    singular_point: SingularPoint
    radii: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def monotone(self) -> bool:
        return all(b > a for a, b in zip(self.values, self.values[1:]))


@dataclass(frozen=True)
class MaximumPrincipleReport:
    max_deviation: float
    smooth_points: int
    u_min: float
    u_max: float
    divergence: tuple[UDivergence, ...]

    @property
    def u_range(self) -> float:
        return self.u_max - self.u_min

    @property
    def diverges(self) -> bool:
        return bool(self.divergence) and all(d.monotone for d in self.divergence)


def maximum_principle_probe(m: ConformalMetric, rows: list[GridRow] | None = None,
                            extent: float = 3.0, resolution: int = 41,
                            h: float = DEFAULT_H) -> MaximumPrincipleReport:
    """Residual of Delta0 u = 1 on the smooth grid, and the blow-up of u at each zero."""
    if rows is None:
        rows = grid_sweep(m, extent, resolution, h)
    smooth = [r for r in rows if not r.excluded]
    dev = max((abs(r.delta0_u - 1) for r in smooth), default=0.0)
    us = [r.u for r in smooth]
    div = []
    for s in m.singular_points:
        shrink = min(1.0, isolating_radius(m, s.location, cap=0.5) / U_SAMPLE_RADII[0])
        radii = tuple(r * shrink for r in U_SAMPLE_RADII)
        vals = tuple(conformal_deviation_u(m, ChartPoint(s.location.chart, s.location.w + r))
                     for r in radii)
        div.append(UDivergence(s, radii, vals))
        us.extend(vals)
    return MaximumPrincipleReport(dev, len(smooth), min(us), max(us), tuple(div))


@dataclass(frozen=True)
class FlatnessReport:
    max_harmonicity: float
    max_curvature: float
    smooth_points: int
    excluded_points: int


def flatness_report(rows: list[GridRow]) -> FlatnessReport:
    smooth = [r for r in rows if not r.excluded]
    return FlatnessReport(
        max((abs(r.harmonicity) for r in smooth), default=0.0),
        max((abs(r.K) for r in smooth), default=0.0),
        len(smooth), len(rows) - len(smooth))


@dataclass(frozen=True)
class RecoveredRoot:
    root: complex
    multiplicity: int
    residual: float
    relative_residual: float


@dataclass(frozen=True)
class Attribution:
    """Split of the order of a finite zero of f = p * p^* between the two factors."""

    location: complex
    order: int
    p_order: int
    p_star_order: int


@dataclass(frozen=True)
class RootRecovery:
    roots: tuple[RecoveredRoot, ...]
    attributions: tuple[Attribution, ...]
    reciprocal_mismatch: float

    def multiset(self) -> np.ndarray:
        return np.array([r.root for r in self.roots for _ in range(r.multiplicity)], dtype=complex)


def _newton(p: Poly, z: complex, steps: int = 4) -> complex:
    dp = p.derivative()
    best, val = z, abs(p(z))
    for _ in range(steps):
        d = dp(best)
        if d == 0:
            break
        cand = best - p(best) / d
        cv = abs(p(cand))
        if not cv < val:
            break
        best, val = cand, cv
    return best


def recover_roots(p: Poly, m: ConformalMetric) -> RootRecovery:
    """Roots of p read off the zero set of f.

    Each finite zero of f is split between the factors p and p^* by
    counting the zeros of p in an isolating disk (argument principle);
    the p-share gives roots directly. Zeros owned by p^* must be the
    reciprocals of recovered roots, which is cross-checked.
    """
    q = p.monic()
    finite = [(s.location.sphere, s.order) for s in m.singular_points
              if s.location.sphere != math.inf]
    roots_out, attrs = [], []
    for i, (w0, k) in enumerate(finite):
        others = [abs(w0 - w) for j, (w, _) in enumerate(finite) if j != i]
        radius = min([0.1 * (1 + abs(w0))] + [d / 2 for d in others])
        kp = min(count_zeros_in_disk(q, w0, radius), k)
        attrs.append(Attribution(complex(w0), k, kp, k - kp))
        if kp:
            z = _newton(q, w0) if kp == 1 else complex(w0)
            res = abs(q(z))
            roots_out.append(RecoveredRoot(complex(z), kp, res, res / max(q.scale(z), 1e-300)))
    mismatch = 0.0
    rec = np.array([r.root for r in roots_out], dtype=complex)
    for a in attrs:
        if a.p_star_order and a.location != 0 and len(rec):
            mismatch = max(mismatch, float(np.min(np.abs(rec - 1 / a.location))))
    return RootRecovery(tuple(roots_out), tuple(attrs), mismatch)


class Conclusion(str, enum.Enum):
    DEGREE_ONE_NO_OBSTRUCTION = "degree_one_no_obstruction"
    ROOTS_FOUND_METRIC_SINGULAR = "roots_found_metric_singular"


@dataclass(frozen=True)
class ContradictionReport:
    p: Poly
    metric: ConformalMetric
    flatness: FlatnessReport
    completeness: CompletenessReport
    maximum_principle: MaximumPrincipleReport
    gauss_bonnet: GaussBonnetLedger
    recovery: RootRecovery
    grid: list[GridRow] = field(repr=False, default_factory=list)

    @property
    def recovered_roots(self) -> tuple[RecoveredRoot, ...]:
        return self.recovery.roots

    def obstructions_fired(self, tol_flat: float = 1e-4) -> dict[str, bool]:
        return {
            "completeness": self.completeness.incomplete,
            "maximum_principle": self.maximum_principle.diverges,
            "gauss_bonnet": self.gauss_bonnet.total_defect > 0
            and self.flatness.max_curvature <= tol_flat,
        }


@dataclass(frozen=True)
class Verdict:
    degree: int
    conclusion: Conclusion
    narrative: str
    report: ContradictionReport | None = None
    minimal_polynomial: Poly | None = None
    failure: str | None = None


_NARRATIVE = {
    "completeness": "cone points of order below n lie at finite distance, so the metric is incomplete",
    "maximum_principle": "u solves Delta0 u = 1 off the zeros and blows up at them, so it is not a smooth function on the sphere",
    "gauss_bonnet": "the metric is flat off the zeros and its cone defects sum to 4 pi",
}


def _narrative(n: int, fired: dict[str, bool], nroots: int) -> str:
    parts = [f"f = det M(w) vanishes at {nroots} root(s) of p and their reciprocals"]
    parts += [_NARRATIVE[k] for k in ("completeness", "maximum_principle", "gauss_bonnet") if fired[k]]
    if n == 1:
        parts.append("degree one: no contradiction with the fundamental theorem of algebra arises")
    else:
        parts.append("the smooth flat metric required for an irreducible p of degree > 1 does not exist")
    return "; ".join(parts) + "."


def fta_verdict(p: Poly, extent: float = 3.0, resolution: int = 41, h: float = DEFAULT_H,
                tol_flat: float = 1e-4) -> Verdict:
    """Run the whole pipeline on ``p``: f, singular points, the three probes, root recovery."""
    if p.degree < 1:
        raise ValueError("need a polynomial of degree >= 1")
    n = p.degree
    try:
        m = ConformalMetric.from_polynomial(p)
        m.singular_points
    except RootFindingError as exc:
        return Verdict(n, Conclusion.ROOTS_FOUND_METRIC_SINGULAR,
                       "root finding failed; partial report only.", failure=str(exc))
    rows = grid_sweep(m, extent, resolution, h)
    report = ContradictionReport(
        p=p,
        metric=m,
        flatness=flatness_report(rows),
        completeness=completeness_probe(m),
        maximum_principle=maximum_principle_probe(m, rows),
        gauss_bonnet=build_ledger(m),
        recovery=recover_roots(p, m),
        grid=rows,
    )
    fired = report.obstructions_fired(tol_flat)
    return Verdict(n, Conclusion.ROOTS_FOUND_METRIC_SINGULAR,
                   _narrative(n, fired, len(report.recovered_roots)), report)


def _scalar_text(c: complex) -> str:
    c = complex(c)
    return f"{c.real:.6g}" if c.imag == 0 else f"{c:.6g}"


def algebra_verdict(A: StructureAlgebra, x, **kwargs) -> Verdict:
    """Reduce an element of a commutative algebra to its minimal polynomial and run the pipeline.

    Degree one means x is a scalar multiple of the unit: nothing to obstruct.
    """
    q = minimal_polynomial(A, x)
    if q.degree == 1:
        return Verdict(1, Conclusion.DEGREE_ONE_NO_OBSTRUCTION,
                       f"x satisfies a degree-one polynomial: x = {_scalar_text(-q.coeffs[0])} times the unit.",
                       minimal_polynomial=q)
    v = fta_verdict(q, **kwargs)
    return Verdict(v.degree, v.conclusion, v.narrative, v.report, q, v.failure)
