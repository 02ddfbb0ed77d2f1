import math

import numpy as np
import pytest

from flatsphere.corpus import BUNDLED, random_monic
from flatsphere.metric_geometry import (
    Chart,
    ChartPoint,
    ConformalMetric,
    SegmentObstructionError,
    SingularPoint,
    SingularPointError,
    chart_consistency,
    conformal_deviation_u,
    conformal_factor,
    cone_angle_numeric,
    curvature_of_factor,
    distance_to_singularity,
    five_point_laplacian,
    gaussian_curvature,
    grid_points,
    grid_sweep,
    laplace_beltrami_u,
    local_length_model,
    log_factor_laplacian,
    round_metric_factor,
    singular_points,
)
from flatsphere.polynomial import Poly


@pytest.fixture(scope="module")
def m_z2p1():
    return ConformalMetric.from_polynomial(Poly([1, 0, 1]))


@pytest.fixture(scope="module")
def m_z2m2():
    return ConformalMetric.from_polynomial(Poly([-2, 0, 1]))


def constant_metric(c=2.0):
    return ConformalMetric(Poly([c]), 1)


def _singular_near(m, w):
    for s in m.singular_points:
        if s.location.sphere != math.inf and abs(s.location.sphere - w) < 1e-8:
            return s
    raise AssertionError(f"no singular point near {w}")


def test_chart_point_overlap():
    pt = ChartPoint.at(2 + 1j)
    assert pt.chart is Chart.INFINITY
    assert pt.sphere == pytest.approx(2 + 1j)
    assert pt.in_chart(Chart.STANDARD).w == pytest.approx(2 + 1j)
    assert ChartPoint.at(math.inf) == ChartPoint(Chart.INFINITY, 0)
    assert ChartPoint.at(1.1).chart is Chart.STANDARD


def test_f_inf_is_reversed_padded(m_z2m2):
    n = m_z2m2.n
    np.testing.assert_array_equal(m_z2m2.f_inf.padded(2 * n + 1), m_z2m2.f.padded(2 * n + 1)[::-1])


def test_conformal_factor_examples(m_z2p1):
    assert conformal_factor(m_z2p1, 0) == pytest.approx(1, abs=1e-14)
    assert conformal_factor(m_z2p1, 1) == pytest.approx(0.25, abs=1e-14)
    with pytest.raises(SingularPointError):
        conformal_factor(m_z2p1, ChartPoint(Chart.STANDARD, 1j))


def test_chart_consistency_examples(m_z2p1):
    assert chart_consistency(m_z2p1, 2) <= 1e-12
    for t in np.linspace(0.1, 6, 7):
        assert chart_consistency(m_z2p1, np.exp(1j * t)) <= 1e-12 or abs(np.exp(1j * t) ** 2 + 1) < 1e-3
    rng = np.random.default_rng(7)
    m = ConformalMetric.from_polynomial(random_monic(3, rng))
    for t in rng.uniform(0, 2 * np.pi, 10):
        assert chart_consistency(m, 1.5 * np.exp(1j * t)) <= 1e-10


def test_chart_consistency_random_overlap():
    rng = np.random.default_rng(11)
    for _ in range(10):
        m = ConformalMetric.from_polynomial(random_monic(int(rng.integers(1, 7)), rng))
        w = np.exp(rng.uniform(-0.5, 0.5, 10)) * np.exp(2j * np.pi * rng.uniform(size=10))
        assert max(chart_consistency(m, x) for x in w) <= 1e-10


def test_log_factor_laplacian(m_z2p1):
    assert abs(log_factor_laplacian(m_z2p1, 1 + 1j, 1e-3)) <= 1e-5
    # 10h from the zero at i: compare against the size of the second derivatives, k / d^2
    d, k = 1e-2, 2
    assert abs(log_factor_laplacian(m_z2p1, 1j + d, 1e-3)) * d * d / k <= 1e-3
    assert log_factor_laplacian(constant_metric(), 0.3 + 0.1j) == 0.0
    with pytest.raises(SingularPointError):
        log_factor_laplacian(m_z2p1, 1j + 1e-3, 1e-3)


def test_plain_five_point_has_h2_error_near_zeros(m_z2p1):
    # documents why the Richardson step is needed
    func = lambda z: np.log(np.abs(m_z2p1.f(z)))
    assert abs(five_point_laplacian(func, 1.1j, 1e-3)) > 1e-3
    assert abs(log_factor_laplacian(m_z2p1, 1.1j, 1e-3)) < 1e-6


def test_gaussian_curvature(m_z2p1):
    assert abs(gaussian_curvature(m_z2p1, 0.5)) <= 1e-4
    assert abs(gaussian_curvature(m_z2p1, ChartPoint(Chart.INFINITY, 0.5))) <= 1e-4


@pytest.mark.parametrize("w", [0, 0.5, 1 + 1j, -2.5 + 0.3j, 3])
def test_round_metric_stencil_control(w):
    assert curvature_of_factor(round_metric_factor, w) == pytest.approx(1, abs=1e-3)


def test_round_metric_factor():
    assert round_metric_factor(0) == 4
    assert round_metric_factor(1) == 1
    # polar quadrature of the area out to radius 100 approaches 4 pi
    r = np.linspace(0, 100, 400001)
    area = np.trapezoid(round_metric_factor(r) * 2 * np.pi * r, r)
    assert area == pytest.approx(4 * np.pi, rel=1e-2)


def test_singular_points_examples(m_z2p1, m_z2m2):
    sp = m_z2p1.singular_points
    assert sorted(s.order for s in sp) == [2, 2]
    assert sorted(round(s.location.sphere.imag, 9) for s in sp) == [-1, 1]
    sp2 = m_z2m2.singular_points
    assert [s.order for s in sp2] == [1] * 4
    locs = sorted(s.location.sphere.real for s in sp2)
    np.testing.assert_allclose(locs, [-math.sqrt(2), -1 / math.sqrt(2), 1 / math.sqrt(2), math.sqrt(2)],
                               atol=1e-12)
    m = ConformalMetric.from_polynomial(Poly([0, 1]))
    pts = sorted(singular_points(m), key=lambda s: abs(s.location.sphere))
    assert [s.order for s in pts] == [1, 1]
    assert abs(pts[0].location.sphere) <= 1e-14 and pts[1].location.sphere == math.inf


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_orders_sum_to_2n(name):
    m = ConformalMetric.from_polynomial(BUNDLED[name])
    assert sum(s.order for s in m.singular_points) == 2 * m.n


def test_singular_point_angles():
    s = SingularPoint(ChartPoint.at(0), 1, 3)
    assert s.cone_angle + s.defect == pytest.approx(2 * math.pi)


def test_cone_angle_simple_zero(m_z2m2):
    s = _singular_near(m_z2m2, math.sqrt(2))
    coarse = cone_angle_numeric(m_z2m2, s, 1e-1)
    fine = cone_angle_numeric(m_z2m2, s, 1e-2)
    assert fine == pytest.approx(math.pi, rel=0.02)
    assert abs(fine - s.cone_angle) <= abs(coarse - s.cone_angle)


def test_cone_angle_cusp_and_smooth(m_z2p1, m_z2m2):
    assert cone_angle_numeric(m_z2p1, _singular_near(m_z2p1, 1j), 1e-2) == 0.0
    assert cone_angle_numeric(m_z2m2, ChartPoint.at(0.2 + 0.3j), 1e-2) == pytest.approx(2 * math.pi, rel=1e-3)


def test_cone_angle_rejects_second_zero(m_z2m2):
    with pytest.raises(SingularPointError):
        cone_angle_numeric(m_z2m2, _singular_near(m_z2m2, math.sqrt(2)), 1.0)


def test_distance_simple_zero_matches_local_model(m_z2m2):
    s = _singular_near(m_z2m2, math.sqrt(2))
    d = distance_to_singularity(m_z2m2, 1.3, s)
    assert d.finite and 0 < d.length < math.inf
    assert d.model_ratio == pytest.approx(1, rel=0.05)


def test_local_model_closed_form(m_z2m2):
    # f = -2 (w^2 - 2)(w^2 - 1/2); |f'(sqrt 2)| = 2 * 2 sqrt2 * 3/2
    s = _singular_near(m_z2m2, math.sqrt(2))
    fprime = 6 * math.sqrt(2)
    chart_scale = 1.0
    if s.location.chart is Chart.INFINITY:
        # f_inf(zeta) = zeta^4 f(1/zeta): |f_inf'(1/sqrt2)| = |f'(sqrt2)| * |zeta|^4 / |zeta|^2
        chart_scale = 0.5
    expected = 2 * (fprime * chart_scale) ** -0.5 * 1e-2 ** 0.5
    assert local_length_model(m_z2m2, s, 1e-2) == pytest.approx(expected, rel=1e-9)


def test_distance_cusp_diverges(m_z2p1):
    for s in m_z2p1.singular_points:
        d = distance_to_singularity(m_z2p1, ChartPoint.at(s.location.w + 0.5), s)
        assert not d.finite and d.length == math.inf
        assert "infinite" in d.verdict


def test_distance_from_singular_point_is_zero(m_z2m2):
    s = _singular_near(m_z2m2, math.sqrt(2))
    assert distance_to_singularity(m_z2m2, s.location, s).length == 0


def test_distance_segment_obstruction(m_z2m2):
    s = _singular_near(m_z2m2, 1 / math.sqrt(2))
    with pytest.raises(SegmentObstructionError):
        distance_to_singularity(m_z2m2, ChartPoint(Chart.STANDARD, -1.0), s)


def test_conformal_deviation_u(m_z2p1):
    assert conformal_deviation_u(m_z2p1, 0) == pytest.approx(0.5 * math.log(0.25), abs=1e-14)
    assert conformal_deviation_u(m_z2p1, 1) == pytest.approx(0.5 * math.log(0.25), abs=1e-14)
    m = constant_metric(3.0)
    # lambda = 1/9 everywhere; u differs from log of the round factor only
    u0 = conformal_deviation_u(m, 0)
    assert u0 == pytest.approx(0.5 * math.log((1 / 9) / 4))


def test_u_constant_for_homothety():
    # a metric proportional to the round one has constant u
    lam = lambda w: 7 * round_metric_factor(w)
    us = [0.5 * math.log(lam(w) / round_metric_factor(w)) for w in (0, 1j, 2 + 3j)]
    assert max(us) - min(us) < 1e-14


def test_laplace_beltrami_u(m_z2p1, m_z2m2):
    assert laplace_beltrami_u(m_z2p1, 0.5) == pytest.approx(1, abs=1e-3)
    assert laplace_beltrami_u(m_z2m2, 3j) == pytest.approx(1, abs=1e-3)
    assert laplace_beltrami_u(m_z2m2, ChartPoint.at(3j)) == pytest.approx(1, abs=1e-3)


def test_grid_sweep_shape_and_exclusions(m_z2m2):
    rows = grid_sweep(m_z2m2, 3.0, 11)
    assert len(rows) == 121
    np.testing.assert_array_equal([r.w for r in rows], grid_points(3.0, 11))
    for r in rows:
        assert r.chart is (Chart.STANDARD if abs(r.w) <= 1.2 else Chart.INFINITY)
    smooth = [r for r in rows if not r.excluded]
    assert max(abs(r.delta0_u - 1) for r in smooth) <= 1e-3
