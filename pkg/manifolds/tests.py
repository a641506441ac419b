import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

import riemann_hj.testing  # noqa: F401
from rest_framework import serializers as drf_serializers

from .catalog import get_manifold, lorentz_inner
from .exceptions import (
    BasePointMismatchError, CoordinateShapeError, GeometryError, NonDifferentiableError, OutOfRadiusError,
    UnknownManifoldError,
)
from .geometry import (
    covector_gap, covector_transport, distance, distance_partials, exp_batch, exp_map, geodesic_eval,
    log_batch, log_map, measure_distance, metric_eval, normal_chart, parallel_transport, transport_batch,
)
from .integrators import integrate_geodesic, ode_exp
from .serializers import ManifoldSpecSerializer
from .types import CotangentVector, Geodesic, Point, TangentVector

NORTH = np.array([0.0, 0.0, 1.0])


def random_tangents(manifold, X, rng, max_norm):
    """Tangent vectors at the rows of X with g-norm uniform in (0, max_norm]."""
    B = manifold.tangent_basis(X)
    c = rng.standard_normal((X.shape[0], manifold.dim))
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    c *= rng.uniform(0.05, 1.0, size=(X.shape[0], 1)) * max_norm
    return np.einsum('mai,mi->ma', B, c)


class MetricTests(SimpleTestCase):
    def test_euclidean_orthonormal_frame(self):
        M = get_manifold('euclidean', dim=2)
        p = Point(M, [0.3, 0.4])
        self.assertEqual(metric_eval(p, TangentVector(p, [1, 0]), TangentVector(p, [0, 1])), 0.0)
        self.assertEqual(metric_eval(p, TangentVector(p, [0, 0]), TangentVector(p, [0, 0])), 0.0)

    def test_sphere_round_metric(self):
        M = get_manifold('sphere')
        theta, phi = 0.7, 1.9
        p = Point(M, [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        d_phi = TangentVector(p, [-math.sin(theta) * math.sin(phi), math.sin(theta) * math.cos(phi), 0.0])
        d_theta = TangentVector(p, [math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
        self.assertAlmostEqual(metric_eval(p, d_phi, d_phi), math.sin(theta) ** 2, places=12)
        self.assertAlmostEqual(metric_eval(p, d_theta, d_theta), 1.0, places=12)
        self.assertAlmostEqual(metric_eval(p, d_theta, d_phi), 0.0, places=12)

    def test_mismatched_base_points(self):
        M = get_manifold('euclidean', dim=2)
        p, q = Point(M, [0.0, 0.0]), Point(M, [1.0, 0.0])
        with self.assertRaises(BasePointMismatchError):
            metric_eval(p, TangentVector(q, [1, 0]), TangentVector(p, [1, 0]))

    def test_wrong_coordinate_count_is_a_geometry_error(self):
        with self.assertRaises(CoordinateShapeError) as ctx:
            Point(get_manifold('sphere'), [0.0, 1.0])
        self.assertIsInstance(ctx.exception, GeometryError)

    @given(st.sampled_from(['euclidean', 'torus', 'sphere', 'hyperbolic', 'cusp', 'funnel']), st.integers(0, 10_000))
    def test_metric_positive_definite(self, name, seed):
        M = get_manifold(name)
        X = M.sample_points(20, np.random.default_rng(seed))
        B = M.tangent_basis(X)
        gram = np.einsum('mai,mab,mbj->mij', B, M.metric_matrix(X), B)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(M.dim), gram.shape), atol=1e-10)

    def test_radius_constants_consistent(self):
        for name in ('euclidean', 'torus', 'sphere', 'hyperbolic', 'funnel'):
            M = get_manifold(name)
            self.assertLessEqual(M.r_M, min(M.injectivity_radius, M.convexity_radius), name)


class ExpLogTests(SimpleTestCase):
    def test_exp_of_zero_and_euclidean(self):
        M = get_manifold('euclidean', dim=2)
        p = Point(M, [0.2, 0.1])
        self.assertTrue(exp_map(p, TangentVector(p, [0, 0])).same_as(p))
        np.testing.assert_allclose(exp_map(p, TangentVector(p, [1.0, -2.0])).coords, [1.2, -1.9])
        np.testing.assert_allclose(log_map(p, Point(M, [3.0, 4.0])).components, [2.8, 3.9])

    def test_sphere_quarter_turn_reaches_equator(self):
        M = get_manifold('sphere')
        p = Point(M, NORTH)
        q = exp_map(p, TangentVector(p, [math.pi / 2, 0.0, 0.0]))
        np.testing.assert_allclose(q.coords, [1.0, 0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(log_map(p, Point(M, [0.0, 1.0, 0.0])).norm(), math.pi / 2, places=12)

    def test_sphere_antipode_is_out_of_radius(self):
        M = get_manifold('sphere')
        with self.assertRaises(OutOfRadiusError) as ctx:
            log_map(Point(M, NORTH), Point(M, -NORTH))
        self.assertAlmostEqual(ctx.exception.distance, math.pi)

    @given(st.sampled_from(['euclidean', 'torus', 'sphere', 'hyperbolic']), st.integers(0, 10_000))
    def test_round_trip_closed_form(self, name, seed):
        M = get_manifold(name)
        rng = np.random.default_rng(seed)
        X = M.sample_points(200, rng)
        V = random_tangents(M, X, rng, 0.9 * min(M.r_M, 3.0))
        back = log_batch(M, X, exp_batch(M, X, V))
        np.testing.assert_allclose(back, V, atol=1e-6)

    def test_round_trip_by_shooting(self):
        for name in ('cusp', 'funnel'):
            M = get_manifold(name)
            rng = np.random.default_rng(3)
            X = M.sample_points(8, rng)
            V = random_tangents(M, X, rng, 0.3)
            back = log_batch(M, X, exp_batch(M, X, V))
            np.testing.assert_allclose(back, V, atol=1e-6, err_msg=name)

    def test_closed_form_matches_ode(self):
        for name in ('sphere', 'hyperbolic'):
            M = get_manifold(name)
            rng = np.random.default_rng(11)
            X = M.sample_points(50, rng)
            V = random_tangents(M, X, rng, 0.9 * min(M.r_M, 2.0))
            np.testing.assert_allclose(ode_exp(M, X, V), M.exp_closed(X, V), atol=1e-6, err_msg=name)

    def test_log_norm_is_distance(self):
        M = get_manifold('hyperbolic')
        X = M.sample_points(30, np.random.default_rng(5))
        Y = M.sample_points(30, np.random.default_rng(6))
        d = M.distance_closed(X, Y)
        keep = d < M.r_M
        V = log_batch(M, X[keep], Y[keep])
        np.testing.assert_allclose(np.sqrt(lorentz_inner(V, V)), d[keep], atol=1e-8)


class SurfaceConnectionTests(SimpleTestCase):
    def test_closed_christoffel_matches_metric_differences(self):
        for name in ('cusp', 'funnel'):
            M = get_manifold(name)
            rng = np.random.default_rng(2)
            X = M.sample_points(40, rng)
            X = X[np.linalg.norm(X, axis=-1) > 1.1]
            U, W = rng.standard_normal(X.shape), rng.standard_normal(X.shape)
            closed = M.christoffel(X, U, W)
            numeric = M.christoffel_from_metric(X, U, W)
            scale = 1.0 + np.max(np.abs(closed))
            np.testing.assert_allclose(numeric, closed, atol=1e-5 * scale, err_msg=name)

    def test_geodesic_leaving_domain_raises(self):
        from .exceptions import DomainExitError
        M = get_manifold('cusp')
        with self.assertRaises(DomainExitError):
            integrate_geodesic(M, [[1.0, 0.0]], [[-50.0, 0.0]])

    def test_cusp_radius_shrinks_toward_neck(self):
        M = get_manifold('cusp')
        radii = M.radius_at(np.array([[0.3, 0.0], [0.5, 0.0], [2.0, 0.0]]))
        self.assertTrue(radii[0] < radii[1] <= radii[2] == M.r_M)


class GeodesicTests(SimpleTestCase):
    def test_meridian_reaches_equator(self):
        M = get_manifold('sphere')
        p = Point(M, NORTH)
        gamma = Geodesic(p, TangentVector(p, [2.0, 0.0, 0.0]), length=math.pi / 2)
        start, v0 = geodesic_eval(gamma, 0.0)
        self.assertTrue(start.same_as(p))
        np.testing.assert_allclose(v0.components, [1.0, 0.0, 0.0])
        q, v = geodesic_eval(gamma, math.pi / 2)
        np.testing.assert_allclose(q.coords, [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(v.components, [0.0, 0.0, -1.0], atol=1e-12)

    def test_meridian_through_antipode(self):
        M = get_manifold('sphere')
        p = Point(M, NORTH)
        gamma = Geodesic(p, TangentVector(p, [1.0, 0.0, 0.0]), length=4.0)
        q, v = geodesic_eval(gamma, math.pi)
        self.assertTrue(np.all(np.isfinite(v.components)))
        np.testing.assert_allclose(q.coords, [0.0, 0.0, -1.0], atol=1e-12)
        np.testing.assert_allclose(v.components, [-1.0, 0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(v.norm(), 1.0, places=12)

    def test_hyperbolic_velocity_is_unit_and_tangent(self):
        M = get_manifold('hyperbolic')
        p = Point(M, [1.0, 0.0, 0.0])
        gamma = Geodesic(p, TangentVector(p, [0.0, 1.0, 0.0]), length=3.0)
        q, v = geodesic_eval(gamma, 2.5)
        np.testing.assert_allclose(q.coords, [math.cosh(2.5), math.sinh(2.5), 0.0], rtol=1e-10)
        np.testing.assert_allclose(v.components, [math.sinh(2.5), math.cosh(2.5), 0.0], rtol=1e-10)
        self.assertAlmostEqual(float(lorentz_inner(q.coords[None], v.components[None])[0]), 0.0, delta=1e-9)

    def test_euclidean_line(self):
        M = get_manifold('euclidean', dim=2)
        p = Point(M, [0.0, 0.0])
        q, v = geodesic_eval(Geodesic(p, TangentVector(p, [0.6, 0.8]), length=2.0), 1.0)
        np.testing.assert_allclose(q.coords, [0.6, 0.8])

    def test_unit_speed_on_ode_surface(self):
        M = get_manifold('funnel')
        p = Point(M, [2.0, 0.5])
        gamma = Geodesic(p, TangentVector(p, [0.3, 1.0]), length=0.5)
        for t in (0.1, 0.3, 0.5):
            _, v = geodesic_eval(gamma, t)
            self.assertAlmostEqual(v.norm(), 1.0, delta=1e-8)

    def test_t_out_of_range(self):
        M = get_manifold('euclidean', dim=1)
        p = Point(M, [0.0])
        with self.assertRaises(ValueError):
            geodesic_eval(Geodesic(p, TangentVector(p, [1.0]), length=1.0), 1.5)


class DistanceTests(SimpleTestCase):
    def test_euclidean_and_diagonal(self):
        M = get_manifold('euclidean', dim=2)
        self.assertAlmostEqual(distance(Point(M, [0, 0]), Point(M, [3, 4])), 5.0)
        self.assertEqual(distance(Point(M, [1, 1]), Point(M, [1, 1])), 0.0)

    def test_hyperbolic_matches_minkowski_pairing(self):
        M = get_manifold('hyperbolic')
        X = M.sample_points(2, np.random.default_rng(9))
        expected = math.acosh(-lorentz_inner(X[0], X[1]))
        self.assertAlmostEqual(distance(Point(M, X[0]), Point(M, X[1])), expected, places=9)

    def test_beyond_working_radius_is_flagged(self):
        M = get_manifold('cusp')
        result = measure_distance(Point(M, [1.0, 0.0]), Point(M, [2.5, 0.0]))
        self.assertTrue(result.upper_bound)
        self.assertEqual(result.method, "chain")
        self.assertGreater(result.value, 1.5)


class TransportTests(SimpleTestCase):
    def test_euclidean_identity_and_zero(self):
        M = get_manifold('euclidean', dim=2)
        p, q = Point(M, [0.0, 0.0]), Point(M, [0.5, 0.5])
        np.testing.assert_allclose(parallel_transport(TangentVector(p, [1.0, 2.0]), q).components, [1.0, 2.0])
        np.testing.assert_allclose(parallel_transport(TangentVector(p, [0.0, 0.0]), q).components, [0.0, 0.0])

    @given(st.sampled_from(['sphere', 'hyperbolic', 'torus']), st.integers(0, 10_000))
    def test_transport_isometry_and_covector_round_trip(self, name, seed):
        M = get_manifold(name)
        rng = np.random.default_rng(seed)
        X = M.sample_points(100, rng)
        Y = exp_batch(M, X, random_tangents(M, X, rng, 0.8 * min(M.r_M, 2.0)))
        W = random_tangents(M, X, rng, 1.0)
        moved = transport_batch(M, X, W, Y)
        np.testing.assert_allclose(np.sqrt(M.inner(Y, moved, moved)), np.sqrt(M.inner(X, W, W)), atol=1e-8)
        for i in range(5):
            x, y = Point(M, X[i]), Point(M, Y[i])
            xi = CotangentVector(y, M.metric_matrix(Y[i:i + 1])[0] @ random_tangents(M, Y[i:i + 1], rng, 1.0)[0])
            there = covector_transport(xi, x)
            self.assertAlmostEqual(there.norm(), xi.norm(), delta=1e-8)
            np.testing.assert_allclose(covector_transport(there, y).components, xi.components, atol=1e-8)

    def test_octant_holonomy_quarter_turn(self):
        M = get_manifold('sphere')
        s = math.sqrt(0.5)
        loop = np.array([
            NORTH, [s, 0.0, s], [1.0, 0.0, 0.0], [s, s, 0.0], [0.0, 1.0, 0.0], [0.0, s, s], NORTH,
        ])
        w_closed = np.array([[1.0, 0.0, 0.0]])
        w_ode = w_closed.copy()
        for a, b in zip(loop[:-1], loop[1:]):
            w_closed = transport_batch(M, a[None], w_closed, b[None])
            V = M.log_closed(a[None], b[None])
            _, _, w_ode = integrate_geodesic(M, a[None], V, W=w_ode)
        angle = math.acos(np.clip(w_closed[0] @ [1.0, 0.0, 0.0], -1.0, 1.0))
        self.assertAlmostEqual(angle, math.pi / 2, delta=1e-3)
        np.testing.assert_allclose(w_closed, w_ode, atol=1e-6)

    def test_covector_gap_cases(self):
        M = get_manifold('sphere')
        x = Point(M, NORTH)
        y = Point(M, [math.sin(0.8), 0.0, math.cos(0.8)])
        zeta = CotangentVector(x, [0.3, -0.4, 0.0])
        self.assertAlmostEqual(covector_gap(zeta, CotangentVector(x, [0.0, 0.0, 0.0])), 0.5)
        xi = covector_transport(zeta, y)
        self.assertAlmostEqual(covector_gap(zeta, xi), 0.0, delta=1e-10)
        other = CotangentVector(y, [0.1, 0.9, 0.1 * -math.tan(0.8)])
        self.assertAlmostEqual(covector_gap(zeta, other), covector_gap(other, zeta), delta=1e-8)


class DistancePartialsTests(SimpleTestCase):
    def test_euclidean_partial(self):
        M = get_manifold('euclidean', dim=2)
        dx, dy = distance_partials(Point(M, [0.0, 0.0]), Point(M, [3.0, 4.0]))
        np.testing.assert_allclose(dx.components, [-0.6, -0.8], atol=1e-8)
        np.testing.assert_allclose(dy.components, [0.6, 0.8], atol=1e-8)

    def test_diagonal_is_not_differentiable(self):
        M = get_manifold('sphere')
        with self.assertRaises(NonDifferentiableError):
            distance_partials(Point(M, NORTH), Point(M, NORTH))

    @given(st.sampled_from(['sphere', 'hyperbolic', 'torus']), st.integers(0, 10_000))
    def test_antisymmetry(self, name, seed):
        M = get_manifold(name)
        rng = np.random.default_rng(seed)
        X = M.sample_points(5, rng)
        Y = exp_batch(M, X, random_tangents(M, X, rng, 0.8 * min(M.r_M, 2.0)))
        for i in range(5):
            x, y = Point(M, X[i]), Point(M, Y[i])
            dx, dy = distance_partials(x, y)
            self.assertAlmostEqual(dx.norm(), 1.0, delta=1e-6)
            self.assertAlmostEqual(dy.norm(), 1.0, delta=1e-6)
            residual = (covector_transport(dy, x) + dx).norm()
            self.assertLessEqual(residual, 1e-5)

    def test_antisymmetry_by_first_variation(self):
        M = get_manifold('funnel')
        x, y = Point(M, [2.0, 0.0]), Point(M, [2.1, 0.2])
        dx, dy = distance_partials(x, y)
        self.assertAlmostEqual(dx.norm(), 1.0, delta=1e-6)
        self.assertLessEqual((covector_transport(dy, x) + dx).norm(), 1e-5)


class NormalChartTests(SimpleTestCase):
    def test_origin_and_euclidean_offsets(self):
        M = get_manifold('euclidean', dim=2)
        p = Point(M, [0.5, 0.5])
        chart = normal_chart(p)
        np.testing.assert_allclose(chart.to_chart(p), [0.0, 0.0])
        np.testing.assert_allclose(chart.to_chart(Point(M, [0.7, 0.1])), [0.2, -0.4], atol=1e-12)
        self.assertAlmostEqual(chart.lipschitz_eps, 0.0, delta=1e-9)

    def test_sphere_differential_is_identity(self):
        M = get_manifold('sphere')
        p = Point(M, M.sample_points(1, np.random.default_rng(4))[0])
        chart = normal_chart(p)
        self.assertLessEqual(chart.radius, 0.9 * M.r_M)
        rng = np.random.default_rng(8)
        for _ in range(10):
            w = rng.standard_normal(2)
            w /= np.linalg.norm(w)
            self.assertLessEqual(np.linalg.norm(chart.differential_at_origin(w) - chart.frame @ w), 1e-5)
        self.assertTrue(0.0 <= chart.lipschitz_eps < 0.2)


class CatalogTests(SimpleTestCase):
    def test_unknown_manifold(self):
        with self.assertRaises(UnknownManifoldError):
            get_manifold('klein_bottle')

    def test_spec_serializer_builds_manifold(self):
        serializer = ManifoldSpecSerializer(data={'name': 'Torus', 'dim': 1})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        manifold = serializer.build()
        self.assertEqual(manifold.dim, 1)
        self.assertEqual(ManifoldSpecSerializer(manifold).data['i_M'], math.pi)

    def test_spec_serializer_rejects_bad_input(self):
        self.assertFalse(ManifoldSpecSerializer(data={'name': 'moebius'}).is_valid())
        bad_dim = ManifoldSpecSerializer(data={'name': 'sphere', 'dim': 3})
        self.assertFalse(bad_dim.is_valid())
        self.assertIn('dim', bad_dim.errors)
        with self.assertRaises(drf_serializers.ValidationError):
            ManifoldSpecSerializer(data={'name': 'euclidean', 'params': {'dim': 7}}).is_valid(raise_exception=True)

    def test_describe_reports_infinite_radii(self):
        spec = get_manifold('hyperbolic').describe()
        self.assertEqual(spec['i_M'], "inf")
        self.assertEqual(spec['r_M'], 5.0)
