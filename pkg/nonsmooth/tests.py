import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

import riemann_hj.testing  # noqa: F401
from discretize.fields import DiscreteField
from discretize.graphs import build_graph
from discretize.regions import get_region, partition
from discretize.sampling import PointCloud, grid, sample
from manifolds.catalog import get_manifold
from manifolds.types import Point, TangentVector

from .bumps import STANDARD_PROFILE, ball_samples, bump, fd_gradient_sup, product_bump
from .calculus import calculus_suite, fuzzy_sum_search, get_map
from .estimates import (
    density_probe, differentiability_probe, discrete_subdifferential_nonempty, estimate_subdifferential,
    estimate_superdifferential, gradient_chart,
)
from .exceptions import (
    EmptyFanError, ExtendedRealError, FieldDomainError, HypothesisError, NegativeFactorError, NonsmoothError,
    PreconditionError,
)
from .extended import ext_add, ext_scale, ext_sub
from .fields import SumField, get_field, negate
from .meanvalue import convexity_check, deville_lipschitz_check, godefroy_check
from .probes import (
    DEFAULT_MARGIN, as_covector, default_radii, dini_inf_quotient, generalized_directional, reevaluate_witness,
    test_subgradient, test_supergradient, unit_directions,
)
from .variational import dgz_perturb, ekeland_search, rolle_search, verify_ekeland

NORTH = np.array([0.0, 0.0, 1.0])


def line(lo=-1.0, hi=1.0):
    return get_manifold('euclidean', dim=1, lo=lo, hi=hi)


def line_graph(M, m):
    """Path graph on a 1-D grid: every vertex joined to its grid neighbors."""
    return build_graph(grid(M, m), k=2)


def plane_grid(m=7):
    return build_graph(grid(get_manifold('euclidean', dim=2), m), k=4)


def covector(p, *chart):
    return as_covector(p, np.array(chart, dtype=float))


class ExtendedRealTests(SimpleTestCase):
    def test_infinity_absorbs_sums(self):
        self.assertEqual(float(ext_add(math.inf, 2.0)), math.inf)
        self.assertEqual(float(ext_scale(0.0, math.inf)), 0.0)

    def test_undefined_operations(self):
        with self.assertRaises(ExtendedRealError):
            ext_sub(math.inf, math.inf)
        with self.assertRaises(ExtendedRealError):
            ext_scale(-1.0, 1.0)
        with self.assertRaises(ExtendedRealError):
            ext_add(-math.inf, 0.0)

    def test_unknown_field(self):
        with self.assertRaises(NonsmoothError):
            get_field('no-such-field', line())


class DirectionalQuotientTests(SimpleTestCase):
    def test_dini_quotient_of_abs(self):
        M = line()
        p = Point(M, [0.0])
        self.assertAlmostEqual(dini_inf_quotient(get_field('abs', M), p, TangentVector(p, [1.0])), 1.0)

    def test_dini_quotient_of_linear(self):
        M = get_manifold('euclidean', dim=2)
        f = get_field('linear', M, a=[1.0, 2.0], b=0.5)
        p = Point(M, [0.3, 0.1])
        v = TangentVector(p, [0.6, 0.8])
        for t_grid in ([0.5], [1.0, 0.1, 0.01], None):
            self.assertAlmostEqual(dini_inf_quotient(f, p, v, t_grid), 2.2, places=9)

    def test_dini_quotient_at_minimum_of_hyperbolic_square_distance(self):
        M = get_manifold('hyperbolic')
        f = get_field('sq_distance', M)
        p = Point(M, [1.0, 0.0, 0.0])
        value = dini_inf_quotient(f, p, TangentVector(p, [0.0, 1.0, 0.0]), np.geomspace(1e-2, 1e-7, 6))
        self.assertLess(abs(value), 1e-6)

    def test_generalized_directional(self):
        M = line()
        p = Point(M, [0.0])
        v = TangentVector(p, [1.0])
        self.assertAlmostEqual(generalized_directional(get_field('abs', M), p, v), 1.0, places=9)
        self.assertAlmostEqual(generalized_directional(get_field('neg_abs', M), p, v), 1.0, places=9)

    def test_generalized_directional_of_smooth_field(self):
        M = get_manifold('euclidean', dim=2)
        f = get_field('sine', M)
        p = Point(M, [0.3, 0.4])
        v = TangentVector(p, [1.0, 0.0])
        value = generalized_directional(f, p, v, shrink_schedule=[0.01, 0.005, 0.001])
        self.assertAlmostEqual(value, math.cos(0.3), delta=0.01)

    def test_empty_fan(self):
        with self.assertRaises(EmptyFanError):
            unit_directions(2, count=0)


class SubgradientTests(SimpleTestCase):
    def setUp(self):
        self.M = line()
        self.p = Point(self.M, [0.0])
        self.abs = get_field('abs', self.M)

    def test_inside_subdifferential(self):
        self.assertTrue(test_subgradient(self.abs, self.p, covector(self.p, 0.5)).consistent)

    def test_outside_subdifferential_with_witness(self):
        verdict = test_subgradient(self.abs, self.p, covector(self.p, 1.5))
        self.assertTrue(verdict.violated)
        # The increment 1 - 1.5·v/|v| is negative on the positive side.
        self.assertGreater(verdict.witness_chart[0], 0.0)
        self.assertLess(reevaluate_witness(self.abs, self.p, verdict), -DEFAULT_MARGIN)
        self.assertAlmostEqual(reevaluate_witness(self.abs, self.p, verdict), verdict.increment, places=9)

    def test_covectors_just_outside_are_violated(self):
        for zeta in (1.05, -1.05, 1.001):
            verdict = test_subgradient(self.abs, self.p, covector(self.p, zeta))
            self.assertTrue(verdict.violated, zeta)
            self.assertAlmostEqual(verdict.increment, 1.0 - abs(zeta), places=9)
            self.assertEqual(np.sign(verdict.witness_chart[0]), np.sign(zeta))
        self.assertTrue(test_subgradient(self.abs, self.p, covector(self.p, 0.999)).consistent)

    def test_concave_curvature_is_not_a_violation(self):
        f = get_field('quadratic', self.M, Q=[[-1.0]])
        verdict = test_subgradient(f, self.p, covector(self.p, 0.0))
        self.assertTrue(verdict.consistent)
        # Every raw increment is -ρ, far below -margin on the radius schedule.
        self.assertLess(verdict.increment, -DEFAULT_MARGIN)
        self.assertTrue(test_subgradient(f, self.p, covector(self.p, 1e-4)).violated)
        self.assertTrue(test_supergradient(f, self.p, covector(self.p, 0.0)).consistent)

    def test_single_radius_uses_the_increment_rule(self):
        f = get_field('quadratic', self.M, Q=[[-1.0]])
        self.assertTrue(test_subgradient(f, self.p, covector(self.p, 0.0), radii_schedule=[0.1]).violated)

    def test_negative_abs_has_no_subgradient(self):
        f = get_field('neg_abs', self.M)
        for zeta in (-2.0, -0.5, 0.0, 0.5, 2.0):
            self.assertTrue(test_subgradient(f, self.p, covector(self.p, zeta)).violated, zeta)

    def test_supergradients(self):
        self.assertTrue(test_supergradient(get_field('neg_abs', self.M), self.p, covector(self.p, 0.0)).consistent)
        for zeta in (-1.0, 0.0, 1.0):
            self.assertTrue(test_supergradient(self.abs, self.p, covector(self.p, zeta)).violated, zeta)

    def test_smooth_gradient_is_sub_and_super(self):
        M = get_manifold('euclidean', dim=2)
        f = get_field('sine', M)
        p = Point(M, [0.3, 0.4])
        zeta = as_covector(p, gradient_chart(f, p))
        radii = default_radii(M, p.coords, levels=12)
        self.assertTrue(test_subgradient(f, p, zeta, radii_schedule=radii).consistent)
        self.assertTrue(test_supergradient(f, p, zeta, radii_schedule=radii).consistent)

    def test_gradient_on_sphere(self):
        M = get_manifold('sphere')
        f = get_field('height_z', M)
        p = Point(M, [math.sin(0.8), 0.0, math.cos(0.8)])
        zeta = as_covector(p, gradient_chart(f, p))
        self.assertAlmostEqual(zeta.norm(), math.sin(0.8), places=9)
        self.assertTrue(test_subgradient(f, p, zeta).consistent)
        self.assertTrue(test_supergradient(f, p, zeta).consistent)

    @given(st.floats(-3.0, 3.0), st.sampled_from(['abs', 'neg_abs', 'sine']))
    def test_sub_and_super_verdicts_are_antisymmetric(self, zeta, name):
        f = get_field(name, self.M)
        c = covector(self.p, zeta)
        self.assertEqual(test_subgradient(f, self.p, c).status, test_supergradient(negate(f), self.p, -c).status)

    @given(st.floats(-3.0, 3.0))
    def test_deeper_schedule_never_clears_a_violation(self, zeta):
        f = get_field('abs', self.M)
        c = covector(self.p, zeta)
        shallow = test_subgradient(f, self.p, c, radii_schedule=default_radii(self.M, self.p.coords, levels=4))
        deep = test_subgradient(f, self.p, c, radii_schedule=default_radii(self.M, self.p.coords, levels=10))
        if shallow.violated:
            self.assertTrue(deep.violated)

    def test_infinite_base_value(self):
        graph = line_graph(self.M, 5)
        field = DiscreteField(graph, [0.0, 1.0, math.inf, 1.0, 0.0])
        with self.assertRaises(FieldDomainError):
            test_subgradient(field, graph.point(2), covector(graph.point(2), 0.0))

    @given(st.integers(0, 10_000))
    def test_zero_is_a_subgradient_at_a_graph_minimum(self, seed):
        graph = plane_grid(6)
        values = np.random.default_rng(seed).standard_normal(graph.n)
        field = DiscreteField(graph, values)
        i = int(np.argmin(values))
        p = graph.point(i)
        self.assertTrue(test_subgradient(field, p, covector(p, 0.0, 0.0)).consistent)


class EstimateTests(SimpleTestCase):
    def test_abs_interval(self):
        M = line()
        est = estimate_subdifferential(get_field('abs', M), Point(M, [0.0]))
        self.assertEqual(est.mode, 'convex')
        self.assertAlmostEqual(est.vertices.min(), -1.0, delta=0.02)
        self.assertAlmostEqual(est.vertices.max(), 1.0, delta=0.02)
        self.assertTrue(est.nonempty)
        self.assertTrue(est.inner_within_outer())

    def test_general_mode_matches_the_verdicts(self):
        M = line()
        p = Point(M, [0.0])
        f = get_field('abs', M)
        est = estimate_subdifferential(f, p, mode='general')
        self.assertAlmostEqual(est.vertices.min(), -1.0, delta=1e-5)
        self.assertAlmostEqual(est.vertices.max(), 1.0, delta=1e-5)
        self.assertFalse(est.contains(np.array([1.05]))[0])
        self.assertTrue(test_subgradient(f, p, covector(p, 1.05)).violated)

    def test_smooth_field_singleton(self):
        M = get_manifold('euclidean', dim=2)
        f = get_field('sine', M)
        p = Point(M, [0.3, 0.4])
        est = estimate_subdifferential(f, p, radii_schedule=default_radii(M, p.coords, levels=12))
        grad = gradient_chart(f, p)
        self.assertTrue(est.nonempty)
        self.assertLess(np.max(np.linalg.norm(est.vertices - grad, axis=1)), 0.01)

    def test_minimum_of_hyperbolic_square_distance(self):
        M = get_manifold('hyperbolic')
        est = estimate_subdifferential(get_field('sq_distance', M), Point(M, [1.0, 0.0, 0.0]))
        self.assertTrue(est.contains(np.zeros(2))[0])
        self.assertLess(est.diameter(), 0.05)

    def test_support_function_of_abs_linear_converges(self):
        M = get_manifold('euclidean', dim=2)
        a = np.array([0.6, 0.8])
        f = get_field('abs_linear', M, a=a)
        p = Point(M, [0.0, 0.0])
        segment = np.linspace(-1.0, 1.0, 2001)[:, None] * a[None]
        coarse = estimate_subdifferential(f, p, direction_fan=unit_directions(2, 32))
        fine = estimate_subdifferential(f, p, direction_fan=unit_directions(2, 512))
        self.assertLess(fine.hausdorff_to(segment), 0.02)
        self.assertLessEqual(fine.hausdorff_to(segment), coarse.hausdorff_to(segment))

    def test_superdifferential_of_negative_abs(self):
        M = line()
        est = estimate_superdifferential(get_field('neg_abs', M), Point(M, [0.0]))
        self.assertTrue(est.nonempty)
        self.assertAlmostEqual(est.vertices.min(), -1.0, delta=0.1)
        self.assertAlmostEqual(est.vertices.max(), 1.0, delta=0.1)

    @given(st.integers(0, 10_000), st.sampled_from(['sine', 'abs', 'neg_abs', 'quadratic']))
    def test_inner_within_outer(self, seed, name):
        M = get_manifold('euclidean', dim=2)
        params = {'Q': [[1.0, 0.3], [0.3, -0.5]]} if name == 'quadratic' else {}
        f = get_field(name, M, **params)
        p = Point(M, M.sample_points(1, np.random.default_rng(seed))[0])
        est = estimate_subdifferential(f, p)
        self.assertTrue(est.inner_within_outer())
        for c in est.inner[:5]:
            self.assertTrue(test_subgradient(f, p, as_covector(p, c)).consistent)


class DifferentiabilityTests(SimpleTestCase):
    def test_smooth_field(self):
        M = get_manifold('euclidean', dim=2)
        f = get_field('sine', M)
        p = Point(M, [0.3, 0.4])
        zeta = differentiability_probe(f, p)
        self.assertIsNotNone(zeta)
        np.testing.assert_allclose(zeta.chart_components(), gradient_chart(f, p), atol=0.01)

    def test_abs_at_kink_and_away(self):
        M = line()
        f = get_field('abs', M)
        self.assertIsNone(differentiability_probe(f, Point(M, [0.0])))
        zeta = differentiability_probe(f, Point(M, [1.0]))
        self.assertAlmostEqual(zeta.chart_components()[0], 1.0, delta=0.01)


class DensityTests(SimpleTestCase):
    def test_smooth_field(self):
        M = get_manifold('euclidean', dim=2)
        graph = plane_grid(5)
        self.assertEqual(density_probe(get_field('sine', M), graph).fraction, 1.0)

    def test_convex_field_on_hyperbolic_plane(self):
        M = get_manifold('hyperbolic')
        rows = [[1.0, 0.0, 0.0]]
        for rho in (0.3, 0.8, 1.3):
            for phi in np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False):
                rows.append([math.cosh(rho), math.sinh(rho) * math.cos(phi), math.sinh(rho) * math.sin(phi)])
        graph = build_graph(PointCloud(M, np.array(rows), method='grid'), k=len(rows) - 1)
        self.assertEqual(density_probe(get_field('sq_distance', M), graph).fraction, 1.0)

    def test_negative_abs_fails_only_at_the_kink(self):
        M = line()
        graph = line_graph(M, 21)
        field = get_field('neg_abs', M).on_graph(graph)
        report = density_probe(field, graph)
        self.assertAlmostEqual(report.fraction, 20 / 21)
        self.assertEqual(report.failed.tolist(), [10])

    def test_jumps_are_never_subdifferentiable(self):
        M = line(lo=-1.0, hi=2.0)
        graph = line_graph(M, 31)
        field = get_field('step', M).on_graph(graph)
        jumps = 0
        for i in range(graph.n):
            nbrs, _ = graph.neighbors(i)
            if np.any(field.values[nbrs] < field.values[i] - 0.5):
                jumps += 1
                self.assertFalse(discrete_subdifferential_nonempty(field, i), i)
            elif np.all(field.values[nbrs] == field.values[i]):
                self.assertTrue(discrete_subdifferential_nonempty(field, i), i)
        self.assertEqual(jumps, 2)

    def test_empty_domain(self):
        graph = line_graph(line(), 4)
        with self.assertRaises(FieldDomainError):
            density_probe(DiscreteField(graph, [math.inf] * 4), graph)


class BumpTests(SimpleTestCase):
    def setUp(self):
        self.M = get_manifold('sphere')
        self.p = Point(self.M, NORTH)
        self.delta = 0.5

    def test_profile(self):
        self.assertEqual(float(STANDARD_PROFILE(0.2)), 1.0)
        self.assertEqual(float(STANDARD_PROFILE(1.0)), 0.0)
        s = np.linspace(0.0, 1.2, 500)
        self.assertTrue(np.all(np.diff(STANDARD_PROFILE(s)) <= 1e-15))
        self.assertGreater(STANDARD_PROFILE.lipschitz, 1.0)

    def test_bump_values(self):
        b = bump(self.p, self.delta)
        self.assertEqual(b(self.p), 1.0)
        far = 1.1 * self.delta
        y = Point(self.M, [math.sin(far), 0.0, math.cos(far)])
        self.assertEqual(b(y), 0.0)

    def test_gradient_bound(self):
        b = bump(self.p, self.delta)
        samples = ball_samples(self.p, 1.2 * self.delta, 10_000, seed=4)
        self.assertLessEqual(fd_gradient_sup(b, samples), 1.05 * b.lipschitz_bound)

    def test_radius_must_be_below_working_radius(self):
        with self.assertRaises(PreconditionError):
            bump(self.p, 2.0)
        with self.assertRaises(PreconditionError):
            bump(self.p, 0.0)

    def test_product_bump(self):
        q = Point(self.M, [math.sin(0.3), 0.0, math.cos(0.3)])
        pb = product_bump(self.p, q, self.delta)
        self.assertEqual(float(pb.values_at(self.p.coords[None], q.coords[None])[0]), 1.0)
        self.assertEqual(pb.support_radius, 2 * self.delta)
        self.assertAlmostEqual(pb.lipschitz_bound, 2 * math.sqrt(2) * STANDARD_PROFILE.lipschitz / self.delta)


class EkelandTests(SimpleTestCase):
    def test_constant_field_stays_put(self):
        graph = line_graph(line(), 11)
        result = ekeland_search(DiscreteField(graph, np.zeros(graph.n)), 3, 1.0, 0.5)
        self.assertEqual(result.z, 3)
        self.assertEqual(result.steps, 0)

    def test_unique_maximum_is_reached(self):
        M = line()
        graph = line_graph(M, 21)
        values = -np.abs(graph.points[:, 0] - 0.3)
        field = DiscreteField(graph, values)
        result = ekeland_search(field, 0, 10.0, 0.5)
        self.assertEqual(result.z, int(np.argmax(values)))
        self.assertEqual(verify_ekeland(field, result), {'i': True, 'ii': True, 'iii': True, 'violators': []})

    @given(st.integers(0, 10_000), st.floats(0.1, 3.0))
    def test_conclusions_hold_exactly(self, seed, lam):
        graph = plane_grid(7)
        rng = np.random.default_rng(seed)
        values = rng.standard_normal(graph.n)
        x0 = int(rng.integers(graph.n))
        eps = float(values.max() - values[x0]) + 0.1
        field = DiscreteField(graph, values)
        checks = verify_ekeland(field, ekeland_search(field, x0, eps, lam))
        self.assertTrue(checks['i'] and checks['ii'] and checks['iii'], checks)

    def test_preconditions(self):
        graph = line_graph(line(), 5)
        field = DiscreteField(graph, [0.0, 1.0, 5.0, 1.0, 0.0])
        with self.assertRaises(PreconditionError):
            ekeland_search(field, 0, 1.0, 0.5)
        with self.assertRaises(PreconditionError):
            ekeland_search(field, 2, 1.0, 0.0)


class RolleTests(SimpleTestCase):
    def setUp(self):
        self.M = line()
        self.graph = line_graph(self.M, 201)
        self.region = partition(self.graph, get_region('interval', self.M, a=-1.0, b=1.0))

    def test_zero_field(self):
        result = rolle_search(get_field('constant', self.M), self.region, 0.5, eps=1.0, R=1.0, p0=100)
        self.assertTrue(result.interior)
        self.assertEqual(result.gradient_norm, 0.0)

    def test_linear_field_attains_the_sharp_bound(self):
        result = rolle_search(get_field('linear', self.M), self.region, 0.5, eps=1.0, R=1.0, p0=100)
        self.assertEqual(result.case, '3.2')
        self.assertAlmostEqual(result.gradient_norm, 1.0, places=12)
        self.assertAlmostEqual(result.bound, 1.0)

    def test_case_three_needs_its_data(self):
        with self.assertRaises(HypothesisError):
            rolle_search(get_field('linear', self.M), self.region, 0.5)
        with self.assertRaises(HypothesisError):
            rolle_search(get_field('linear', self.M), self.region, 0.5, eps=0.5, R=1.0, p0=100)

    def test_cap_on_sphere(self):
        S = get_manifold('sphere')
        graph = build_graph(sample(S, 800, seed=2), k=8)
        region = partition(graph, get_region('geodesic_ball', S, center=NORTH, radius=1.0))
        result = rolle_search(get_field('cap', S), region, 0.5)
        self.assertEqual(result.case, '1')
        self.assertTrue(result.interior)
        self.assertLessEqual(result.gradient_norm, result.lam + 3 * graph.h)
        self.assertLess(S.distance_closed(graph.points[result.q:result.q + 1], NORTH[None])[0], 0.3)


class DGZTests(SimpleTestCase):
    def setUp(self):
        self.M = get_manifold('euclidean', dim=2)
        self.graph = build_graph(grid(self.M, 11), k=4)

    def test_strict_minimum_is_kept(self):
        center = np.array([0.5, 0.5])
        values = np.sum((self.graph.points - center) ** 2, axis=1)
        field = DiscreteField(self.graph, values)
        result = dgz_perturb(field, 0.1, bump_radius=0.2)
        self.assertEqual(result.p, int(np.argmin(values)))
        self.assertGreater(result.margin, 0.0)
        self.assertLess(result.phi_sup, 0.1)
        self.assertLess(result.phi_gradient_sup, 0.1)

    def test_linear_field_minimum_on_the_rim(self):
        field = get_field('linear', self.M, a=[1.0, 2.0]).on_graph(self.graph)
        result = dgz_perturb(field, 0.2, bump_radius=0.3)
        rim = self.graph.points[int(np.argmin(field.values))]
        self.assertLessEqual(np.linalg.norm(self.graph.points[result.p] - rim), result.delta_b)

    @given(st.integers(0, 10_000), st.floats(0.01, 1.0))
    def test_perturbation_bounds(self, seed, delta):
        values = np.random.default_rng(seed).standard_normal(self.graph.n)
        result = dgz_perturb(DiscreteField(self.graph, values), delta, bump_radius=0.3, fd_samples=500, seed=seed)
        self.assertLess(result.phi_sup, delta)
        self.assertLess(result.phi_gradient_sup, delta)
        self.assertGreater(result.margin, 0.0)

    def test_infinite_field(self):
        with self.assertRaises(FieldDomainError):
            dgz_perturb(DiscreteField(self.graph, np.full(self.graph.n, math.inf)), 0.1)


class ConvexityTests(SimpleTestCase):
    def test_linear_field_passes(self):
        M = get_manifold('euclidean', dim=2)
        self.assertTrue(convexity_check(get_field('linear', M, a=[1.0, -2.0])).passed)

    def test_hyperbolic_square_distance_passes(self):
        M = get_manifold('hyperbolic')
        report = convexity_check(get_field('sq_distance', M), seed=3)
        self.assertTrue(report.passed)
        self.assertGreater(report.details['local_lipschitz'], 0.0)

    def test_sphere_square_distance_fails_on_long_geodesics(self):
        S = get_manifold('sphere')
        report = convexity_check(get_field('sq_distance', S), length=3.0, seed=1)
        self.assertEqual(report.status, 'witness')
        self.assertGreater(report.details['gap'], 1e-9)


class MeanValueTests(SimpleTestCase):
    def test_deville_constant_field(self):
        M = get_manifold('euclidean', dim=2)
        self.assertTrue(deville_lipschitz_check(get_field('constant', M, value=2.0), 0.0, plane_grid()).passed)

    def test_deville_height_on_sphere(self):
        S = get_manifold('sphere')
        graph = build_graph(sample(S, 300, seed=1), k=8)
        self.assertTrue(deville_lipschitz_check(get_field('height_z', S), 1.0, graph).passed)

    def test_deville_doubled_distance_breaks_the_conclusion(self):
        M = get_manifold('euclidean', dim=2)
        report = deville_lipschitz_check(get_field('distance', M, scale=2.0), 1.0, plane_grid())
        self.assertEqual(report.status, 'conclusion_violated')
        self.assertGreater(max(c['quotient'] for c in report.details['conclusion']), 1.0)

    def test_godefroy_constant(self):
        M = get_manifold('euclidean', dim=2)
        path = np.stack([np.linspace(0.0, 1.0, 50), np.linspace(0.0, 0.5, 50)], axis=1)
        report = godefroy_check(get_field('constant', M), path)
        self.assertTrue(report.passed)
        self.assertEqual(report.details['measure'], 0.0)

    def test_godefroy_identity(self):
        M = line()
        report = godefroy_check(get_field('linear', M), np.linspace(0.0, 1.0, 201)[:, None])
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.details['measure'], 1.0, places=12)
        self.assertAlmostEqual(report.details['integral'], 1.0, places=9)

    def test_godefroy_radial_distance_on_sphere(self):
        S = get_manifold('sphere')
        t = np.linspace(0.1, 1.1, 101)
        path = np.stack([np.sin(t), np.zeros_like(t), np.cos(t)], axis=1)
        report = godefroy_check(get_field('distance', S), path)
        self.assertTrue(report.passed, report.details)
        self.assertAlmostEqual(report.details['measure'], 1.0, places=9)
        self.assertAlmostEqual(report.details['integral'], 1.0, places=6)


class CalculusTests(SimpleTestCase):
    def test_sum_of_abs(self):
        M = line()
        p = Point(M, [0.0])
        f = get_field('abs', M)
        report = calculus_suite(f, f, None, p)
        self.assertEqual(report['status'], 'ok')
        self.assertGreater(report['sum']['checked'], 0)
        self.assertTrue(test_subgradient(SumField(f, f), p, covector(p, 1.0)).consistent)

    def test_chain_inclusion_is_strict(self):
        M = line()
        p = Point(M, [0.0])
        f = get_field('power', M, exponent=0.5)
        g = get_map('power', M, exponent=1.5)
        radii = np.geomspace(0.05, 0.05 / 128, 8)
        report = calculus_suite(f, f, g, p, radii_schedule=radii, extra_chain_covectors=[[2.0]])
        self.assertEqual(report['status'], 'ok')
        np.testing.assert_allclose(report['chain']['image'], 0.0)
        self.assertEqual(report['chain']['strict'], [[2.0]])

    def test_smooth_sum_and_identity_chain(self):
        M = get_manifold('euclidean', dim=2)
        p = Point(M, [0.3, 0.4])
        f1, f2 = get_field('sine', M, axis=0), get_field('sine', M, axis=1)
        report = calculus_suite(f1, f2, get_map('identity', M), p, include_product=False)
        self.assertEqual(report['status'], 'ok')
        grad = gradient_chart(f1, p) + gradient_chart(f2, p)
        self.assertTrue(test_subgradient(SumField(f1, f2), p, as_covector(p, grad)).consistent)

    def test_product_needs_nonnegative_factors(self):
        M = line()
        with self.assertRaises(NegativeFactorError):
            calculus_suite(get_field('neg_abs', M), get_field('abs', M), None, Point(M, [0.5]))

    def test_fuzzy_sum_search(self):
        M = line()
        graph = line_graph(M, 41)
        p = graph.point(20)
        f = get_field('abs', M)
        result = fuzzy_sum_search(f, f, p, covector(p, 0.0), graph, 0.2)
        self.assertEqual(result.status, 'found')
        self.assertLess(result.gap, 0.2)
        with self.assertRaises(PreconditionError):
            fuzzy_sum_search(f, f, p, covector(p, 3.0), graph, 0.2)
        with self.assertRaises(PreconditionError):
            fuzzy_sum_search(f, f, Point(M, [0.0123]), covector(p, 0.0), graph, 0.2)
